#include <iostream>
using namespace std;
int main() {
    int length;
    cin >> length;
    long long acc = 0;
    for (int j = 0; j < length; j++) {
        long long x;
        cin >> x;
        acc += x;
    }
    cout << acc << endl;
    return 0;
}
