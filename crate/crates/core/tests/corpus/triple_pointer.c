// topic: usesDoubleIndirection
// expect: V00|P0|V20|D0
int x = 0;
int *p = &x;
int **pp = &p;
int ***ppp = &pp;
V(***ppp);
P(0);
***ppp = 8;
V(x);
D(0);
