#include <doctest.h>

TEST_SUITE_BEGIN("mllt");

TEST_SUITE_END();
