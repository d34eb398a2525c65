#include <cstdio>
int main() { std::puts("kirv"); return 0; }
