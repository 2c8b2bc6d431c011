#include "point.h"

Point point_make(int x, int y)
{
    Point p;
    p.x = x;
    p.y = y;
    return p;
}

/* squared distance, no sqrt needed for comparisons */
int point_dist2(Point a, Point b)
{
    int dx = a.x - b.x;
    int dy = a.y - b.y;
    return dx * dx + dy * dy;
}

/* component-wise sum; no overflow check */
Point point_add(Point a, Point b)
{
    Point p;
    p.x = a.x + b.x;
    p.y = a.y + b.y;
    return p;
}
