#include <cstdio>
long long g(long long x, long long y) { return y ? g(y, x % y) : x; }
int main() {
	long long xs, res;
	scanf("%lld %lld", &xs, &res);
	long long d = g(xs, res);
	printf("%lld %lld\n", d, xs / d * res);
}
