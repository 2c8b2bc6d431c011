#ifndef NODE_H
#define NODE_H

#include "point.h"

#define NODE_CAPACITY 4

typedef struct {
    Point items[NODE_CAPACITY];
    int count;
} Node;

void node_init(Node *n);
int node_push(Node *n, Point p);
#ifdef QT_BOUNDS
int node_clamp(int v, int lo, int hi);
#endif

#endif
