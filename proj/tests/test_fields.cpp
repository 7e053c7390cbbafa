#include <doctest.h>

TEST_SUITE_BEGIN("fields");

TEST_SUITE_END();
