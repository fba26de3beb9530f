#include <doctest.h>

TEST_SUITE("linalg") {}
