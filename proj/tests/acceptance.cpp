#include "exq/synthesis.hpp"
int main() { return 0; }
