#include <doctest.h>
TEST_SUITE("attacker") {}
