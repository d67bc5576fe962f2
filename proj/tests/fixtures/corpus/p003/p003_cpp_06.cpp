#include <iostream>
#include <string>

bool is_palindrome(const std::string& out) {
    std::size_t l = 0, r = out.size();
    while (l + 1 < r) {
        if (out[l] != out[r - 1]) return false;
        ++l;
        --r;
    }
    return true;
}

int main() {
    std::string out;
    std::cin >> out;
    std::cout << (is_palindrome(out) ? "Yes" : "No") << '\n';
}
