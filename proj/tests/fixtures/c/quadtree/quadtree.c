#include <stdio.h>

#include "quadtree.h"

static void
node_contains_(quadtree_node_t *outer, quadtree_point_t *it, int *out) {
  *out = outer->bounds != NULL &&
         quadtree_bounds_contains(outer->bounds, it->x, it->y);
}

static quadtree_node_t *
get_quadrant_(quadtree_node_t *root, quadtree_point_t *point) {
  int inside = 0;
  node_contains_(root->nw, point, &inside);
  if (inside) return root->nw;
  node_contains_(root->ne, point, &inside);
  if (inside) return root->ne;
  node_contains_(root->sw, point, &inside);
  if (inside) return root->sw;
  node_contains_(root->se, point, &inside);
  if (inside) return root->se;
  return NULL;
}

static int split_node_(quadtree_t *tree, quadtree_node_t *node);

/* 0 = failed, 1 = inserted, 2 = replaced an existing point. */
static int
insert_(quadtree_t *tree, quadtree_node_t *root, quadtree_point_t *point, void *key, int depth) {
  if (depth > QT_MAX_DEPTH) return 0;

  if (quadtree_node_isempty(root)) {
    root->point = point;
    root->key = key;
    return 1;
  }

  if (quadtree_node_isleaf(root)) {
    if (root->point->x == point->x && root->point->y == point->y) {
      quadtree_node_reset(root, tree->key_free);
      root->point = point;
      root->key = key;
      return 2;
    }
    if (!split_node_(tree, root)) return 0;
    return insert_(tree, root, point, key, depth + 1);
  }

  if (quadtree_node_ispointer(root)) {
    quadtree_node_t *quadrant = get_quadrant_(root, point);
    return quadrant == NULL ? 0
                            : insert_(tree, quadrant, point, key, depth + 1);
  }
  return 0;
}

static int
split_node_(quadtree_t *tree, quadtree_node_t *node) {
  quadtree_node_t *nw;
  quadtree_node_t *ne;
  quadtree_node_t *sw;
  quadtree_node_t *se;
  quadtree_point_t *old;
  void *key;

  double x = node->bounds->nw->x;
  double y = node->bounds->nw->y;
  double hw = node->bounds->width / 2;
  double hh = node->bounds->height / 2;

  if (!(nw = quadtree_node_with_bounds(x, y - hh, x + hw, y))) return 0;
  if (!(ne = quadtree_node_with_bounds(x + hw, y - hh, x + hw * 2, y))) return 0;
  if (!(sw = quadtree_node_with_bounds(x, y - hh * 2, x + hw, y - hh))) return 0;
  if (!(se = quadtree_node_with_bounds(x + hw, y - hh * 2, x + hw * 2, y - hh))) return 0;

  node->nw = nw;
  node->ne = ne;
  node->sw = sw;
  node->se = se;

  old = node->point;
  key = node->key;
  node->point = NULL;
  node->key = NULL;

  return insert_(tree, node, old, key, 0) != 0;
}

static quadtree_point_t *
find_(quadtree_node_t *node, double x, double y) {
  if (node == NULL) return NULL;
  if (quadtree_node_isleaf(node)) {
    if (node->point->x == x && node->point->y == y) return node->point;
    return NULL;
  }
  if (quadtree_node_ispointer(node)) {
    quadtree_point_t test;
    test.x = x;
    test.y = y;
    return find_(get_quadrant_(node, &test), x, y);
  }
  return NULL;
}

quadtree_t *
quadtree_new(double minx, double miny, double maxx, double maxy) {
  quadtree_t *tree;
  if (!(tree = malloc(sizeof(*tree)))) return NULL;
  tree->root = quadtree_node_with_bounds(minx, miny, maxx, maxy);
  if (!(tree->root)) {
    free(tree);
    return NULL;
  }
  tree->key_free = NULL;
  tree->length = 0;
  return tree;
}

int
quadtree_insert(quadtree_t *tree, double x, double y, void *key) {
  quadtree_point_t *point;
  int status;

  if (!(point = quadtree_point_new(x, y))) return 0;
  if (!quadtree_bounds_contains(tree->root->bounds, x, y)) {
    quadtree_point_free(point);
    return 0;
  }
  status = insert_(tree, tree->root, point, key, 0);
  if (status == 0) {
    quadtree_point_free(point);
    return 0;
  }
  if (status == 1) tree->length++;
  return status;
}

quadtree_point_t *
quadtree_search(quadtree_t *tree, double x, double y) {
  return find_(tree->root, x, y);
}

void
quadtree_walk(quadtree_node_t *root,
              void (*descent)(quadtree_node_t *node),
              void (*ascent)(quadtree_node_t *node)) {
  (*descent)(root);
  if (root->nw != NULL) quadtree_walk(root->nw, descent, ascent);
  if (root->ne != NULL) quadtree_walk(root->ne, descent, ascent);
  if (root->sw != NULL) quadtree_walk(root->sw, descent, ascent);
  if (root->se != NULL) quadtree_walk(root->se, descent, ascent);
  (*ascent)(root);
}

void
quadtree_free(quadtree_t *tree) {
  if (tree->key_free != NULL) {
    quadtree_node_free(tree->root, tree->key_free);
  } else {
    quadtree_node_free(tree->root, NULL);
  }
  free(tree);
}
