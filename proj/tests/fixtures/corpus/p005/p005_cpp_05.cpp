#include <iostream>
#include <numeric>

int main() {
    long long arr, acc;
    std::cin >> arr >> acc;
    const long long g = std::gcd(arr, acc);
    const long long l = std::lcm(arr, acc);
    std::cout << g << ' ' << l << '\n';
    return 0;
}
