#include <doctest.h>
TEST_SUITE("gradient_attacks") {}
