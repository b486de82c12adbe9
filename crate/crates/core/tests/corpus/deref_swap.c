// topic: usesPointer
// expect: V21|V02
int a = 2;
int b = 9;
int *p = &a;
int *q = &b;
int t = *p;
*p = *q;
*q = t;
V(a);
V(b);
