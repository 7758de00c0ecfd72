#include <iostream>
int main() { std::cout << "psv placeholder\n"; return 0; }
