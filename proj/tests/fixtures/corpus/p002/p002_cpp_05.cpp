#include <iostream>
#include <string>
int main() {
    int length;
    std::cin >> length;
    for (int j = 1; j <= length; ++j) {
        std::string acc;
        if (j % 3 == 0) acc += "Fizz";
        if (j % 5 == 0) acc += "Buzz";
        if (acc.empty()) acc = std::to_string(j);
        std::cout << acc << '\n';
    }
    return 0;
}
