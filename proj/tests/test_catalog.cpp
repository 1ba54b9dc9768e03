#include <set>

#include "doctest.h"
#include "hydrocast/catalog.hpp"
#include "hydrocast/error.hpp"

using namespace hydrocast;

TEST_CASE("pressure levels map l1..l17 onto the millibar list") {
  CHECK(PressureLevel::from_index(1).millibars() == 1000);
  CHECK(PressureLevel::from_index(4).millibars() == 700);
  CHECK(PressureLevel::from_index(17).millibars() == 10);
  for (int i = 1; i <= 17; ++i) {
    CHECK(PressureLevel::from_millibars(PressureLevel::from_index(i).millibars()).index() == i);
  }
  CHECK_THROWS_AS(PressureLevel::from_index(18), Error);
  CHECK_THROWS_AS(PressureLevel::from_millibars(800), Error);
}

TEST_CASE("catalog covers 1..85 without gaps and round-trips names") {
  std::set<int> seen;
  std::set<std::string> names;
  for (int i = 1; i <= 85; ++i) {
    const auto id = FeatureId::from_catalog_index(i);
    CHECK(id.catalog_index() == i);
    seen.insert(id.catalog_index());
    const auto name = feature_name(id);
    names.insert(name);
    CHECK(parse_feature_name(name) == id);
  }
  CHECK(seen.size() == 85);
  CHECK(names.size() == 85);
  CHECK(feature_names().size() == kNumFeatures);
}

TEST_CASE("variable blocks follow the catalog table") {
  CHECK(feature_name(FeatureId::from_catalog_index(1)) == "air_l01");
  CHECK(feature_name(FeatureId::from_catalog_index(17)) == "air_l17");
  CHECK(feature_name(FeatureId::from_catalog_index(18)) == "hgt_l01");
  CHECK(feature_name(FeatureId::from_catalog_index(35)) == "rhum_l01");
  CHECK(feature_name(FeatureId::from_catalog_index(42)) == "rhum_l08");
  CHECK(feature_name(FeatureId::from_catalog_index(43)) == "shum_l01");
  CHECK(feature_name(FeatureId::from_catalog_index(51)) == "slp_l01");
  CHECK(feature_name(FeatureId::from_catalog_index(52)) == "uwnd_l01");
  CHECK(parse_feature_name("vwnd_l17").catalog_index() == 85);
  CHECK(FeatureId(Variable::kUwnd, PressureLevel::from_index(4)).catalog_index() == 55);
}

TEST_CASE("names outside the catalog are rejected") {
  for (const char* bad : {"rhum_l09", "shum_l09", "slp_l02", "air_l18", "air_l00", "air_1",
                          "wind_l01", "air_l1", "", "air_l01x"}) {
    CAPTURE(bad);
    try {
      parse_feature_name(bad);
      FAIL("expected UnknownName");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnknownName);
    }
  }
  CHECK_THROWS_AS(FeatureId(Variable::kSlp, PressureLevel::from_index(2)), Error);
  CHECK_THROWS_AS(FeatureId::from_catalog_index(0), Error);
  CHECK_THROWS_AS(FeatureId::from_catalog_index(86), Error);
}
