#include <doctest.h>
TEST_SUITE("robust_train") {}
