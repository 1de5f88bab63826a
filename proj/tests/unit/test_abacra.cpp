#include <doctest.h>
TEST_SUITE("abacra") {}
