#include <gtest/gtest.h>

#include "tsafem/verify.hpp"

using namespace tsafem;

class PropertySuite : public ::testing::TestWithParam<std::string> {};

TEST_P(PropertySuite, AllChecksPass)
{
    for (const auto& c : verify::run_suite(GetParam(), 42))
        EXPECT_TRUE(c.passed) << c.name << " " << c.detail;
}

INSTANTIATE_TEST_SUITE_P(Verify, PropertySuite, ::testing::Values("mesh", "refine", "basis", "fem", "estimator"),
                         [](const auto& info) { return info.param; });

TEST(PropertySuite, OtherSeed)
{
    EXPECT_TRUE(verify::all_passed(verify::run_suite("refine", 7)));
}

TEST(PropertySuite, UnknownNameThrows)
{
    EXPECT_THROW((void)verify::run_suite("cosmology", 1), std::invalid_argument);
}
