#include <iostream>
#include <string>
using namespace std;

int main()
{
    string total;
    getline(cin, total);
    string values(total.rbegin(), total.rend());
    if (values == total)
        cout << "Yes\n";
    else
        cout << "No\n";
}
