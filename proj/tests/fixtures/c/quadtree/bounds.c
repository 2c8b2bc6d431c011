#include <float.h>
#include <math.h>

#include "quadtree.h"

/* Recomputes the cached extent after a corner moves. */
static void
bounds_refresh(quadtree_bounds_t *bounds) {
  bounds->width = fabs(bounds->nw->x - bounds->se->x);
  bounds->height = fabs(bounds->nw->y - bounds->se->y);
}

void
quadtree_bounds_extend(quadtree_bounds_t *bounds, double x, double y) {
  bounds->nw->x = fmin(x, bounds->nw->x);
  bounds->nw->y = fmax(y, bounds->nw->y);
  bounds->se->x = fmax(x, bounds->se->x);
  bounds->se->y = fmin(y, bounds->se->y);
  bounds_refresh(bounds);
}

void
quadtree_bounds_free(quadtree_bounds_t *bounds) {
  quadtree_point_free(bounds->nw);
  quadtree_point_free(bounds->se);
  free(bounds);
}

quadtree_bounds_t *
quadtree_bounds_new(void) {
  quadtree_bounds_t *bounds;
  if ((bounds = malloc(sizeof(*bounds))) == NULL) return NULL;
  bounds->nw = quadtree_point_new(INFINITY, -INFINITY);
  bounds->se = quadtree_point_new(-INFINITY, INFINITY);
  if (bounds->nw == NULL || bounds->se == NULL) {
    quadtree_point_free(bounds->nw);
    quadtree_point_free(bounds->se);
    free(bounds);
    return NULL;
  }
  bounds->width = 0;
  bounds->height = 0;
  return bounds;
}

int
quadtree_bounds_contains(const quadtree_bounds_t *bounds, double x, double y) {
  return bounds->nw->x <= x + QT_EPSILON &&
         bounds->nw->y >= y - QT_EPSILON &&
         bounds->se->x >= x - QT_EPSILON &&
         bounds->se->y <= y + QT_EPSILON;
}
