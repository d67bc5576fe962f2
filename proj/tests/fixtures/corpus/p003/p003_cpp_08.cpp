#include <cstdio>
#include <cstring>
char s[200005];
int main() {
	scanf("%s", s);
	int n = strlen(s);
	for (int i = 0, j = n - 1; i < j; i++, j--) {
		if (s[i] != s[j]) {
			puts("No");
			return 0;
		}
	}
	puts("Yes");
	return 0;
}
