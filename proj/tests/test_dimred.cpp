#include <doctest.h>

TEST_SUITE("dimred") {}
