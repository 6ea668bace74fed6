#include <gtest/gtest.h>

#include "dynbound/report_json.hpp"
#include "test_support.hpp"

using namespace dynbound;

TEST(ReportJson, RefutationKeys) {
  const auto f = test::shipped("equilibrium.sys");
  const auto r = refute_nonexistence(f, *certify_component(f, 3), std::vector<double>{0, 0, 0}, 10.0);
  const auto j = to_json(r);
  for (const char* key : {"verdict", "forward_holds", "backward_holds", "naive_backward_violated", "margins"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["verdict"], r.verdict_text());
  EXPECT_TRUE(j["falsified"].get<bool>());
  EXPECT_TRUE(j["margins"].contains("backward"));
  EXPECT_EQ(j["certificate"]["source"], "certified");
  EXPECT_EQ(j["equilibrium"]["point"], (std::vector<double>{0, 0, 0}));
  EXPECT_TRUE(j["closed_orbit"].is_null());
}

TEST(ReportJson, BoundReportAbsentMarginIsNull) {
  const auto f = parse_system("dz/dt = 1");
  const BoundCertificate cert{1, -1.0, BoundCertificate::Source::UserAsserted};
  const auto r = verify_bounds(integrate(f, std::vector<double>{0.0}, 0.0, 1.0), cert, 1e-6);
  const auto j = to_json(r);
  EXPECT_TRUE(j["margins"]["backward"].is_null());
  EXPECT_TRUE(j["margins"]["forward"].is_number());
  EXPECT_TRUE(j["forward_holds"].get<bool>());
}

TEST(ReportJson, OrbitAndCensus) {
  const auto f = test::shipped("stuart-landau.sys");
  const auto plane = SectionPlane::parse("0,0,0/0,1,0/positive");
  const auto c = census(f, plane, make_section_point(plane, Vec3{1, 0, 0}), 3, 1, 0.05);
  const auto j = census_to_json(c);
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), 1u);
  for (const char* key : {"k", "period", "section_point", "multipliers", "stability", "residual"}) {
    EXPECT_TRUE(j[0].contains(key)) << key;
  }
  EXPECT_EQ(j[0]["multipliers"].size(), 3u);
  EXPECT_EQ(j[0]["multipliers"][0].size(), 2u);
  EXPECT_EQ(j[0]["stability"], "stable");
  // full double precision survives the round trip through text
  const auto reparsed = nlohmann::json::parse(j.dump());
  EXPECT_EQ(reparsed[0]["period"].get<double>(), c.orbits[0].period);
}
