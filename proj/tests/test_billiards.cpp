#include <doctest.h>

TEST_SUITE_BEGIN("billiards");

TEST_SUITE_END();
