#include <iostream>
using namespace std;
int main() {
    int length;
    cin >> length;
    long long x = 0, y = 1;
    for (int j = 0; j < length; j++) {
        long long z = x + y;
        x = y;
        y = z;
    }
    cout << x << endl;
}
