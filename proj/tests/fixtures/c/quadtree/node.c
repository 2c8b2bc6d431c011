#include "quadtree.h"

/* A pointer node has children; a leaf carries a point; empty has neither. */

int
quadtree_node_ispointer(const quadtree_node_t *node) {
  return node->nw != NULL
      && node->ne != NULL
      && node->sw != NULL
      && node->se != NULL
      && !quadtree_node_isleaf(node);
}

int
quadtree_node_isempty(const quadtree_node_t *node) {
  return node->nw == NULL
      && node->ne == NULL
      && node->sw == NULL
      && node->se == NULL
      && !quadtree_node_isleaf(node);
}

int
quadtree_node_isleaf(const quadtree_node_t *node) {
  return node->point != NULL;
}

void
quadtree_node_reset(quadtree_node_t *node, void (*key_free)(void *)) {
  quadtree_point_free(node->point);
  node->point = NULL;
  if (key_free != NULL) key_free(node->key);
  node->key = NULL;
}

quadtree_node_t *
quadtree_node_new(void) {
  quadtree_node_t *node;
  if (!(node = malloc(sizeof(*node))))
    return NULL;
  node->ne = NULL;
  node->nw = NULL;
  node->se = NULL;
  node->sw = NULL;
  node->point = NULL;
  node->bounds = NULL;
  node->key = NULL;
  return node;
}

quadtree_node_t *
quadtree_node_with_bounds(double minx, double miny, double maxx, double maxy) {
  quadtree_node_t *node;
  if (!(node = quadtree_node_new())) return NULL;
  if (!(node->bounds = quadtree_bounds_new())) {
    free(node);
    return NULL;
  }
  quadtree_bounds_extend(node->bounds, maxx, maxy);
  quadtree_bounds_extend(node->bounds, minx, miny);
  return node;
}

void
quadtree_node_free(quadtree_node_t *node, void (*key_free)(void *)) {
  if (node == NULL) return;
  quadtree_node_free(node->nw, key_free);
  quadtree_node_free(node->ne, key_free);
  quadtree_node_free(node->sw, key_free);
  quadtree_node_free(node->se, key_free);

  if (node->bounds != NULL) quadtree_bounds_free(node->bounds);
  quadtree_node_reset(node, key_free);
  free(node);
}
