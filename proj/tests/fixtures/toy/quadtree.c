#include "quadtree.h"

void qt_init(Quadtree *t, int limit)
{
    node_init(&t->root);
    t->size = 0;
    t->limit = limit;
}

int qt_size(const Quadtree *t)
{
    return t->size;
}

/* coordinates are clamped into [0, limit] before insertion */
int qt_insert(Quadtree *t, int x, int y)
{
    Point p = point_make(node_clamp(x, 0, t->limit), node_clamp(y, 0, t->limit));
    if (!node_push(&t->root, p))
        return 0;
    t->size = qt_size(t) + 1;
    return 1;
}
