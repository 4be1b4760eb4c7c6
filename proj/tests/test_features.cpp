#include "doctest.h"

#include <cmath>

#include "crowdsight/features.hpp"
#include "testutil.hpp"

using namespace crowdsight;
using testutil::TempDir;

namespace {

FlowPolar polar_grid(int width, int height, const std::vector<double>& mags,
                     const std::vector<double>& oris) {
    FlowPolar p;
    p.width = width;
    p.height = height;
    p.magnitude = mags;
    p.orientation = oris;
    return p;
}

Region region_of(const std::vector<int>& pixels, int x, int y, int w, int h, int id = 0) {
    Region r;
    r.id = id;
    r.x = x;
    r.y = y;
    r.w = w;
    r.h = h;
    r.pixel_indices = pixels;
    return r;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("population statistics over member pixels") {
    // Magnitudes {1,2,3,4}: mean 2.5, population variance 1.25.
    FlowPolar p = polar_grid(2, 2, {1, 2, 3, 4}, {0.1, 0.2, 0.3, 0.4});
    Region r = region_of({0, 1, 2, 3}, 0, 0, 2, 2);
    FeatureVector f = region_features(p, r);
    CHECK(f.mu_m == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(f.var_m == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(f.sd_m == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
    CHECK(f.mu_r == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(f.var_r == doctest::Approx(0.0125).epsilon(1e-12));
    CHECK(f.sd_r == doctest::Approx(std::sqrt(0.0125)).epsilon(1e-12));
    CHECK(f.p == 4);
}

TEST_CASE("statistics cover only the region's pixels") {
    FlowPolar p = polar_grid(3, 1, {5, 100, 7}, {0, 0, 0});
    Region r = region_of({0, 2}, 0, 0, 3, 1);
    FeatureVector f = region_features(p, r);
    CHECK(f.mu_m == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(f.var_m == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f.p == 2);
}

TEST_CASE("constant region has zero variance") {
    FlowPolar p = polar_grid(2, 2, {3, 3, 3, 3}, {1.5, 1.5, 1.5, 1.5});
    FeatureVector f = region_features(p, region_of({0, 1, 2, 3}, 0, 0, 2, 2));
    CHECK(f.var_m == 0.0);
    CHECK(f.sd_m == 0.0);
    CHECK(f.var_r == 0.0);
}

TEST_CASE("empty or out-of-bounds regions throw") {
    FlowPolar p = polar_grid(2, 2, {1, 2, 3, 4}, {0, 0, 0, 0});
    CHECK_THROWS_AS(region_features(p, region_of({}, 0, 0, 1, 1)), DataError);
    CHECK_THROWS_AS(region_features(p, region_of({4}, 0, 0, 1, 1)), DataError);
    CHECK_THROWS_AS(region_features(p, region_of({-1}, 0, 0, 1, 1)), DataError);
}

TEST_CASE("to_row lays features out in the canonical order") {
    FeatureVector f;
    f.mu_m = 1;
    f.mu_r = 2;
    f.var_m = 3;
    f.var_r = 4;
    f.sd_m = 5;
    f.sd_r = 6;
    double row[FeatureVector::kDim];
    f.to_row(row);
    for (int i = 0; i < FeatureVector::kDim; ++i) CHECK(row[i] == i + 1);
}

TEST_CASE("batch_features orders rows by frame then region id") {
    std::vector<FlowPolar> polars;
    std::vector<std::vector<Region>> regions;
    for (int t = 0; t < 2; ++t) {
        polars.push_back(polar_grid(4, 1, {1, 2, 3, 4}, {0, 0, 0, 0}));
        regions.push_back({region_of({0}, 0, 0, 1, 1, 0), region_of({2}, 2, 0, 1, 1, 1)});
    }
    FeatureTable table = batch_features(polars, regions);
    REQUIRE(table.rows.size() == 4);
    CHECK(table.rows[0].frame == 0);
    CHECK(table.rows[0].region_id == 0);
    CHECK(table.rows[1].frame == 0);
    CHECK(table.rows[1].region_id == 1);
    CHECK(table.rows[2].frame == 1);
    for (const FeatureRow& r : table.rows) CHECK(r.label == -1);
    CHECK(table.class_names.empty());
}

TEST_CASE("box labels pick the best-iou ground truth at the threshold") {
    std::vector<FlowPolar> polars{polar_grid(8, 8, std::vector<double>(64, 1.0),
                                             std::vector<double>(64, 0.0))};
    // Region covering x 0..3, y 0..3.
    std::vector<int> px;
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) px.push_back(y * 8 + x);
    std::vector<std::vector<Region>> regions{{region_of(px, 0, 0, 4, 4)}};

    std::vector<std::vector<TruthBox>> truth(1);
    truth[0].push_back({0, 0, {0, 0, 4, 4}, "running"});   // iou 1.0
    truth[0].push_back({0, 1, {0, 0, 4, 8}, "standing"});  // iou 0.5

    FeatureTable t = batch_features(polars, regions, LabelSource::kBoxes, &truth);
    REQUIRE(t.rows.size() == 1);
    // Only assigned labels are interned; the losing class never appears.
    REQUIRE(t.class_names == std::vector<std::string>{"running"});
    CHECK(t.rows[0].label == 0);

    // Below the iou threshold the row stays unlabeled.
    std::vector<std::vector<TruthBox>> far(1);
    far[0].push_back({0, 0, {6, 6, 2, 2}, "running"});
    FeatureTable u = batch_features(polars, regions, LabelSource::kBoxes, &far);
    CHECK(u.rows[0].label == -1);
}

TEST_CASE("box label ties resolve to the lower ground-truth row") {
    std::vector<FlowPolar> polars{polar_grid(8, 8, std::vector<double>(64, 1.0),
                                             std::vector<double>(64, 0.0))};
    std::vector<int> px;
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) px.push_back(y * 8 + x);
    std::vector<std::vector<Region>> regions{{region_of(px, 0, 0, 4, 4)}};

    std::vector<std::vector<TruthBox>> truth(1);
    truth[0].push_back({0, 0, {0, 0, 4, 8}, "sitting"});  // iou 0.5
    truth[0].push_back({0, 1, {0, 0, 8, 4}, "running"});  // iou 0.5, tie
    FeatureTable t = batch_features(polars, regions, LabelSource::kBoxes, &truth);
    CHECK(t.rows[0].label == t.class_index("sitting"));
}

TEST_CASE("frame labels map to abnormal and normal") {
    std::vector<FlowPolar> polars;
    std::vector<std::vector<Region>> regions;
    for (int t = 0; t < 2; ++t) {
        polars.push_back(polar_grid(4, 1, {1, 2, 3, 4}, {0, 0, 0, 0}));
        regions.push_back({region_of({1}, 1, 0, 1, 1)});
    }
    std::vector<int> labels{1, 0};
    FeatureTable t =
        batch_features(polars, regions, LabelSource::kFrameLabels, nullptr, &labels);
    REQUIRE(t.class_names == std::vector<std::string>{"abnormal", "normal"});
    CHECK(t.rows[0].label == 0);
    CHECK(t.rows[1].label == 1);
}

TEST_CASE("feature csv round trip preserves rows and labels") {
    TempDir dir;
    FeatureTable t;
    t.class_names = {"abnormal", "normal"};
    FeatureRow r1;
    r1.frame = 3;
    r1.region_id = 1;
    r1.features.mu_m = 0.125;
    r1.features.mu_r = -1.5;
    r1.features.var_m = 2.25;
    r1.features.var_r = 0.0625;
    r1.features.sd_m = 1.5;
    r1.features.sd_r = 0.25;
    r1.features.p = 42;
    r1.label = 0;
    FeatureRow r2 = r1;
    r2.frame = 4;
    r2.label = 1;
    FeatureRow r3 = r1;
    r3.frame = 5;
    r3.label = -1;  // unlabeled round-trips too
    t.rows = {r1, r2, r3};

    write_feature_csv(t, dir / "f.csv");
    FeatureTable back = read_feature_csv(dir / "f.csv");
    REQUIRE(back.rows.size() == 3);
    CHECK(back.class_names == t.class_names);
    CHECK(back.rows[0].frame == 3);
    CHECK(back.rows[0].label == 0);
    CHECK(back.rows[0].features.mu_m == 0.125);
    CHECK(back.rows[0].features.p == 42);
    CHECK(back.rows[1].label == 1);
    CHECK(back.rows[2].label == -1);
}

TEST_CASE("class_index maps names and flags unknowns") {
    FeatureTable t;
    t.class_names = {"abnormal", "normal"};
    CHECK(t.class_index("abnormal") == 0);
    CHECK(t.class_index("normal") == 1);
    CHECK(t.class_index("nope") == -1);
}

}  // TEST_SUITE
