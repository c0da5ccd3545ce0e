#include <doctest.h>

TEST_SUITE("acceptance") {}
