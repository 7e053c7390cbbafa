#include <doctest.h>

TEST_SUITE_BEGIN("pingpong");

TEST_SUITE_END();
