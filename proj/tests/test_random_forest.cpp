#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "crowdsight/random_forest.hpp"
#include "crowdsight/rng.hpp"
#include "oracles.hpp"

using namespace crowdsight;

namespace {

RfDataset dataset(int n_features, std::vector<double> values, std::vector<int> labels) {
    RfDataset d;
    d.n_features = n_features;
    d.values = std::move(values);
    d.labels = std::move(labels);
    return d;
}

int resolved_mtry(const RfParams& params, int d) {
    const int m = params.mtry == 0
                      ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))))
                      : params.mtry;
    return std::min(m, d);
}

// Node-exact equality between the trained forest and the reference build.
void check_against_reference(const RfDataset& data, RfParams params, std::uint64_t seed) {
    const RandomForestModel model = rf_train(data, params, seed);
    params.mtry = resolved_mtry(params, data.n_features);

    int n_classes = 0;
    for (int l : data.labels) n_classes = std::max(n_classes, l + 1);
    const std::vector<oracle::RefTree> want =
        oracle::ref_forest(data.values, data.labels, data.n_features, n_classes, params, seed);

    REQUIRE(model.trees.size() == want.size());
    for (std::size_t t = 0; t < want.size(); ++t) {
        const auto& got = model.trees[t].nodes;
        const auto& ref = want[t].nodes;
        REQUIRE(got.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(got[i].feature == ref[i].feature);
            CHECK(got[i].threshold == ref[i].threshold);
            CHECK(got[i].left == ref[i].left);
            CHECK(got[i].right == ref[i].right);
            if (ref[i].feature < 0) {
                REQUIRE(got[i].class_counts.size() == ref[i].counts.size());
                for (std::size_t c = 0; c < ref[i].counts.size(); ++c)
                    CHECK(got[i].class_counts[c] == ref[i].counts[c]);
            }
        }
    }
}

std::string serialized(const RandomForestModel& model) {
    std::ostringstream out(std::ios::binary);
    rf_save(model, out);
    return out.str();
}

// Well-separated class blobs: class c lives in [4c, 4c + 1]^d.
RfDataset blobs(int n_per_class, int n_classes, int d, std::uint64_t seed) {
    Rng rng(seed);
    RfDataset data;
    data.n_features = d;
    for (int c = 0; c < n_classes; ++c)
        for (int i = 0; i < n_per_class; ++i) {
            for (int f = 0; f < d; ++f) data.values.push_back(4.0 * c + rng.uniform());
            data.labels.push_back(c);
        }
    return data;
}

}  // namespace

TEST_SUITE("random_forest") {

TEST_CASE("params validate") {
    RfParams p;
    CHECK_NOTHROW(p.validate());
    p.n_trees = 0;
    CHECK_THROWS_AS(p.validate(), DataError);
    p = RfParams{};
    p.mtry = -1;
    CHECK_THROWS_AS(p.validate(), DataError);
    p = RfParams{};
    p.min_samples_leaf = 0;
    CHECK_THROWS_AS(p.validate(), DataError);
    p = RfParams{};
    p.max_depth = -1;
    CHECK_THROWS_AS(p.validate(), DataError);
}

TEST_CASE("training input validation") {
    RfParams p;
    p.n_trees = 1;
    CHECK_THROWS_AS(rf_train(dataset(1, {1.0}, {0}), p, 1), DataError);
    CHECK_THROWS_AS(rf_train(dataset(1, {1.0, 2.0}, {0, 0}), p, 1), DataError);
    CHECK_THROWS_AS(rf_train(dataset(1, {1.0, 2.0, 3.0}, {0, 1}), p, 1), DataError);
    CHECK_THROWS_AS(rf_train(dataset(1, {1.0, std::nan("")}, {0, 1}), p, 1), DataError);
    CHECK_THROWS_AS(rf_train(dataset(1, {1.0, 2.0}, {0, -1}), p, 1), DataError);
    RfDataset bad_ids = dataset(1, {1.0, 2.0}, {0, 1});
    bad_ids.row_ids = {7};
    CHECK_THROWS_AS(rf_train(bad_ids, p, 1), DataError);
    bad_ids.row_ids = {7, 7};
    CHECK_THROWS_AS(rf_train(bad_ids, p, 1), DataError);
}

TEST_CASE("curated micro-datasets match the reference builder") {
    RfParams p;
    p.n_trees = 3;

    SUBCASE("two rows, one feature") {
        p.mtry = 1;
        check_against_reference(dataset(1, {0.0, 1.0}, {0, 1}), p, 11);
    }

    SUBCASE("xor needs recursion") {
        // No single split separates; the tree must recurse.
        p.mtry = 2;
        check_against_reference(
            dataset(2, {0, 0, 0, 1, 1, 0, 1, 1}, {0, 1, 1, 0}), p, 5);
    }

    SUBCASE("three classes") {
        p.mtry = 2;
        check_against_reference(
            dataset(2, {0, 0, 0.5, 1, 1, 0, 2, 2, 2.5, 3, 3, 2}, {0, 0, 1, 1, 2, 2}), p, 7);
    }

    SUBCASE("duplicate values and a constant feature") {
        p.mtry = 3;
        check_against_reference(
            dataset(3,
                    {1, 5, 0, 1, 5, 0, 2, 5, 1, 2, 5, 1, 3, 5, 0, 3, 5, 1, 1, 5, 1, 2, 5, 0},
                    {0, 0, 1, 1, 0, 1, 1, 0}),
            p, 13);
    }

    SUBCASE("min_samples_leaf constrains boundaries") {
        p.mtry = 1;
        p.min_samples_leaf = 2;
        check_against_reference(dataset(1, {0, 1, 2, 3, 4}, {0, 0, 1, 1, 1}), p, 3);
    }

    SUBCASE("depth cap") {
        p.mtry = 2;
        p.max_depth = 1;
        check_against_reference(
            dataset(2, {0, 0, 0, 1, 1, 0, 1, 1}, {0, 1, 1, 0}), p, 9);
    }

    SUBCASE("feature subsampling consumes the documented draws") {
        p.mtry = 1;  // 1 of 3 features per node
        check_against_reference(
            dataset(3, {0, 9, 4, 1, 8, 4, 2, 7, 5, 3, 6, 5, 4, 5, 4, 5, 4, 5},
                    {0, 0, 0, 1, 1, 1}),
            p, 17);
    }

    SUBCASE("balanced weights with dyadic ratios") {
        // Counts 2 and 4 of 6 give weights 1.5 and 0.75, both exact binary
        // fractions, so reference arithmetic matches bit for bit.
        p.mtry = 1;
        p.balanced_class_weights = true;
        check_against_reference(dataset(1, {0, 1, 2, 3, 4, 5}, {0, 0, 1, 1, 1, 1}), p, 21);
    }
}

TEST_CASE("random micro-datasets match the reference builder") {
    Rng rng(4242);
    int built = 0;
    while (built < 40) {
        const int n = 2 + static_cast<int>(rng.uniform_int(7));  // 2..8 rows
        const int d = 1 + static_cast<int>(rng.uniform_int(3));
        const int n_classes = 2 + static_cast<int>(rng.uniform_int(2));
        RfDataset data;
        data.n_features = d;
        for (int i = 0; i < n; ++i) {
            // Coarse value grid forces ties across rows.
            for (int f = 0; f < d; ++f)
                data.values.push_back(0.5 * static_cast<double>(rng.uniform_int(8)));
            data.labels.push_back(static_cast<int>(rng.uniform_int(n_classes)));
        }
        std::set<int> present(data.labels.begin(), data.labels.end());
        if (present.size() < 2) continue;
        ++built;

        RfParams p;
        p.n_trees = 2;
        p.mtry = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(d)));
        p.min_samples_leaf = 1 + static_cast<int>(rng.uniform_int(2));
        check_against_reference(data, p, rng.next());
    }
}

TEST_CASE("exhaustive candidate set when mtry equals the feature count") {
    // With mtry = d the reference scans every feature and midpoint, so
    // equality means the trained split is the exhaustive optimum.
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        RfDataset data;
        data.n_features = 2;
        const int n = 4 + static_cast<int>(rng.uniform_int(5));
        for (int i = 0; i < n; ++i) {
            data.values.push_back(static_cast<double>(rng.uniform_int(6)));
            data.values.push_back(static_cast<double>(rng.uniform_int(6)));
            data.labels.push_back(static_cast<int>(rng.uniform_int(2)));
        }
        std::set<int> present(data.labels.begin(), data.labels.end());
        if (present.size() < 2) continue;
        RfParams p;
        p.n_trees = 1;
        p.mtry = 2;
        check_against_reference(data, p, rng.next());
    }
}

TEST_CASE("mtry resolution") {
    RfDataset data = blobs(5, 2, 6, 1);
    RfParams p;
    p.n_trees = 1;
    RandomForestModel m = rf_train(data, p, 1);
    CHECK(m.params.mtry == 3);  // ceil(sqrt(6))
    p.mtry = 100;
    m = rf_train(data, p, 1);
    CHECK(m.params.mtry == 6);  // capped at d
}

TEST_CASE("separable blobs classify held-out points perfectly") {
    double total_acc = 0;
    const int kSeeds = 5;
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
        RfDataset train = blobs(20, 3, 2, seed * 1000 + 1);
        RfDataset test = blobs(10, 3, 2, seed * 1000 + 2);
        RfParams p;
        p.n_trees = 30;
        RandomForestModel model = rf_train(train, p, seed);
        int correct = 0;
        for (std::size_t i = 0; i < test.n_rows(); ++i) {
            const RfPrediction pred = rf_predict(model, &test.values[i * 2]);
            correct += pred.class_id == test.labels[i];
        }
        total_acc += static_cast<double>(correct) / static_cast<double>(test.n_rows());
    }
    CHECK(total_acc / kSeeds >= 0.98);
}

TEST_CASE("same seed gives byte-identical serialization") {
    RfDataset data = blobs(10, 2, 3, 5);
    RfParams p;
    p.n_trees = 7;
    const std::string a = serialized(rf_train(data, p, 99));
    const std::string b = serialized(rf_train(data, p, 99));
    CHECK(a == b);
    const std::string c = serialized(rf_train(data, p, 100));
    CHECK(a != c);
}

TEST_CASE("training is invariant to row presentation order") {
    RfDataset data = blobs(8, 2, 2, 3);
    data.row_ids.resize(data.n_rows());
    std::iota(data.row_ids.begin(), data.row_ids.end(), 0);

    RfDataset shuffled;
    shuffled.n_features = data.n_features;
    std::vector<std::size_t> perm(data.n_rows());
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(1);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.uniform_int(i)]);
    for (std::size_t i : perm) {
        shuffled.values.insert(shuffled.values.end(), data.values.begin() + i * 2,
                               data.values.begin() + i * 2 + 2);
        shuffled.labels.push_back(data.labels[i]);
        shuffled.row_ids.push_back(data.row_ids[i]);
    }

    RfParams p;
    p.n_trees = 5;
    CHECK(serialized(rf_train(data, p, 7)) == serialized(rf_train(shuffled, p, 7)));
}

TEST_CASE("tree seeds are per-index, so forests share prefixes") {
    RfDataset data = blobs(8, 2, 2, 9);
    RfParams one;
    one.n_trees = 1;
    RfParams three;
    three.n_trees = 3;
    RandomForestModel a = rf_train(data, one, 55);
    RandomForestModel b = rf_train(data, three, 55);
    REQUIRE(a.trees.size() == 1);
    REQUIRE(b.trees.size() == 3);
    REQUIRE(a.trees[0].nodes.size() == b.trees[0].nodes.size());
    for (std::size_t i = 0; i < a.trees[0].nodes.size(); ++i) {
        CHECK(a.trees[0].nodes[i].feature == b.trees[0].nodes[i].feature);
        CHECK(a.trees[0].nodes[i].threshold == b.trees[0].nodes[i].threshold);
    }
}

TEST_CASE("prediction routes rows and averages leaf distributions") {
    // Hand-built stump: x0 <= 0.5 goes left to counts {3,1}, else {0,2}.
    RandomForestModel m;
    m.n_classes = 2;
    m.n_features = 1;
    DecisionTree t;
    t.nodes.resize(3);
    t.nodes[0].feature = 0;
    t.nodes[0].threshold = 0.5;
    t.nodes[0].left = 1;
    t.nodes[0].right = 2;
    t.nodes[1].class_counts = {3, 1};
    t.nodes[2].class_counts = {0, 2};
    m.trees.push_back(t);

    RfPrediction left = rf_predict(m, std::vector<double>{0.5});
    CHECK(left.class_id == 0);
    CHECK(left.proba[0] == doctest::Approx(0.75).epsilon(1e-15));
    RfPrediction right = rf_predict(m, std::vector<double>{0.6});
    CHECK(right.class_id == 1);
    CHECK(right.proba[1] == 1.0);

    CHECK_THROWS_AS(rf_predict(m, std::vector<double>{1, 2}), DataError);
    CHECK_THROWS_AS(rf_predict(m, std::vector<double>{std::nan("")}), DataError);
}

TEST_CASE("probability ties keep the lowest class id") {
    RandomForestModel m;
    m.n_classes = 3;
    m.n_features = 1;
    DecisionTree t;
    t.nodes.resize(1);
    t.nodes[0].class_counts = {1, 1, 1};
    m.trees.push_back(t);
    CHECK(rf_predict(m, std::vector<double>{0.0}).class_id == 0);
}

TEST_CASE("predicted probabilities sum to one") {
    RfDataset data = blobs(10, 3, 2, 8);
    RfParams p;
    p.n_trees = 9;
    RandomForestModel model = rf_train(data, p, 2);
    Rng rng(6);
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> row{rng.uniform(0, 12), rng.uniform(0, 12)};
        const RfPrediction pred = rf_predict(model, row);
        const double sum = std::accumulate(pred.proba.begin(), pred.proba.end(), 0.0);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("save/load round trip preserves the model") {
    RfDataset data = blobs(10, 2, 2, 4);
    RfParams p;
    p.n_trees = 4;
    p.min_samples_leaf = 2;
    p.balanced_class_weights = true;
    RandomForestModel model = rf_train(data, p, 77);

    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    rf_save(model, buf);
    RandomForestModel back = rf_load(buf);
    CHECK(back.n_classes == model.n_classes);
    CHECK(back.n_features == model.n_features);
    CHECK(back.seed == model.seed);
    CHECK(back.params.n_trees == model.params.n_trees);
    CHECK(back.params.mtry == model.params.mtry);
    CHECK(back.params.min_samples_leaf == model.params.min_samples_leaf);
    CHECK(back.params.balanced_class_weights == model.params.balanced_class_weights);
    CHECK(serialized(back) == serialized(model));

    Rng rng(12);
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> row{rng.uniform(0, 8), rng.uniform(0, 8)};
        CHECK(rf_predict(back, row).proba == rf_predict(model, row).proba);
    }
}

TEST_CASE("loader rejects corrupt blobs") {
    std::stringstream bad(std::ios::in | std::ios::out | std::ios::binary);
    bad << "NOTRF";
    CHECK_THROWS_AS(rf_load(bad), DataError);

    RfDataset data = blobs(5, 2, 1, 2);
    RfParams p;
    p.n_trees = 1;
    const std::string bytes = serialized(rf_train(data, p, 1));
    std::stringstream cut(std::ios::in | std::ios::out | std::ios::binary);
    cut << bytes.substr(0, bytes.size() - 7);
    CHECK_THROWS_AS(rf_load(cut), DataError);
}

TEST_CASE("roc scores equal the positive-class probabilities") {
    RfDataset data = blobs(10, 2, 2, 6);
    RfParams p;
    p.n_trees = 5;
    RandomForestModel model = rf_train(data, p, 3);
    RfDataset probe = blobs(4, 2, 2, 60);
    const std::vector<double> scores = rf_scores_for_roc(model, probe, 1);
    REQUIRE(scores.size() == probe.n_rows());
    for (std::size_t i = 0; i < scores.size(); ++i)
        CHECK(scores[i] == rf_predict(model, &probe.values[i * 2]).proba[1]);
    CHECK_THROWS_AS(rf_scores_for_roc(model, probe, 2), DataError);
}

}  // TEST_SUITE
