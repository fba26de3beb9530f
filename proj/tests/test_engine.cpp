#include <doctest.h>

TEST_SUITE("engine") {}
