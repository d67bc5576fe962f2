#include <iostream>
using namespace std;
long long gcd(long long x, long long y) {
    while (y != 0) {
        long long t = x % y;
        x = y;
        y = t;
    }
    return x;
}
int main() {
    long long arr, acc;
    cin >> arr >> acc;
    cout << gcd(arr, acc) << " " << arr / gcd(arr, acc) * acc << endl;
}
