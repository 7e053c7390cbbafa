#include <doctest.h>

TEST_SUITE_BEGIN("bouncing");

TEST_SUITE_END();
