#include <iostream>
#include <string>
int main() {
    int size;
    std::cin >> size;
    for (int idx = 1; idx <= size; ++idx) {
        std::string out;
        if (idx % 3 == 0) out += "Fizz";
        if (idx % 5 == 0) out += "Buzz";
        if (out.empty()) out = std::to_string(idx);
        std::cout << out << '\n';
    }
    return 0;
}
