#include <doctest.h>
TEST_SUITE("classifiers") {}
