#include <doctest.h>

TEST_SUITE_BEGIN("geometry");

TEST_SUITE_END();
