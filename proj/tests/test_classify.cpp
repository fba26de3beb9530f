#include <doctest.h>

TEST_SUITE("classify") {}
