#include <stdio.h>

int f4(int n);
int f6(int n);

int f5(int n)
{
    /* f4 and f5 recurse into each other. */
    return n <= 0 ? 0 : f4(n - 1);
}

int f4(int n)
{
    return n <= 0 ? 1 : f5(n - 1);
}

int f2(int n) { return f4(n) + 1; }

int f3(int n)
{
    const char *label = "f2(";  /* f1( in a comment */
    printf("%s\n", label);
    return f4(n);
}

int f1(int n)
{
    return f2(n) + f3(n);
}

int f8(int n) { return n > 100 ? n : f6(n + 1); }

int f7(int n) { return f8(n * 3); }

int f6(int n) { return f7(n + 2); }

int f9(int n)
{
    int (*cb)(int) = f6;
    return cb(n) * 2;
}

int f10(int n)
{
    return f1(n) + f9(n);
}
