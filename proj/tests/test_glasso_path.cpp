#include <doctest.h>

TEST_SUITE("glasso_path") {}
