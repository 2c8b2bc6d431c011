#include <stdio.h>
#include <stdlib.h>
#include <time.h>

#include "quadtree.h"

#define BENCH_POINTS 100000

typedef struct bench_result {
  const char *name;
  double seconds;
  unsigned long ops;
} bench_result_t;

static double
now(void) {
  struct timespec ts;
  clock_gettime(CLOCK_MONOTONIC, &ts);
  return (double)ts.tv_sec + (double)ts.tv_nsec / 1e9;
}

static void
report(const bench_result_t *r) {
  printf("%-10s %8lu ops %10.6f s %12.1f ops/s\n", r->name, r->ops, r->seconds,
         r->seconds > 0 ? (double)r->ops / r->seconds : 0.0);
}

static void
visit(quadtree_node_t *node) {
  (void)node;
}

int
main(void) {
  bench_result_t result;
  quadtree_t *tree = quadtree_new(0, 0, 1000, 1000);
  double start;
  unsigned long i;
  unsigned long found = 0;

  if (tree == NULL) {
    fprintf(stderr, "quadtree_new failed\n");
    return 1;
  }
  srand(42);

  start = now();
  for (i = 0; i < BENCH_POINTS; i++) {
    double x = (double)(rand() % 100000) / 100.0;
    double y = (double)(rand() % 100000) / 100.0;
    quadtree_insert(tree, x, y, NULL);
  }
  result.name = "insert";
  result.ops = BENCH_POINTS;
  result.seconds = now() - start;
  report(&result);

  start = now();
  for (i = 0; i < BENCH_POINTS; i++) {
    double x = (double)(rand() % 100000) / 100.0;
    double y = (double)(rand() % 100000) / 100.0;
    if (quadtree_search(tree, x, y) != NULL) found++;
  }
  result.name = "search";
  result.ops = BENCH_POINTS;
  result.seconds = now() - start;
  report(&result);

  start = now();
  quadtree_walk(tree->root, visit, visit);
  result.name = "walk";
  result.ops = tree->length;
  result.seconds = now() - start;
  report(&result);

  printf("points %u, hits %lu\n", tree->length, found);
  quadtree_free(tree);
  return 0;
}
