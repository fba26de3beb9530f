#include <doctest.h>

TEST_SUITE("episodes") {}
