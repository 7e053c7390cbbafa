#include <doctest.h>

TEST_SUITE_BEGIN("sde");

TEST_SUITE_END();
