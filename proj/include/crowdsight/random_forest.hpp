#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "crowdsight/common.hpp"

namespace crowdsight {

struct RfParams {
    int n_trees = 100;
    int mtry = 0;  // 0 = ceil(sqrt(d))
    int min_samples_leaf = 1;
    int max_depth = 0;  // 0 = unlimited
    bool balanced_class_weights = false;
    void validate() const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    std::vector<double> class_counts;  // leaf only; weighted sample counts
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int max_depth_reached = 0;
};

struct RandomForestModel {
    int n_classes = 0;
    int n_features = 0;
    std::uint64_t seed = 0;
    RfParams params;  // params.mtry stored resolved
    std::vector<DecisionTree> trees;
};

// Row-major training data. row_ids give each row a stable identity so that
// training is invariant to presentation order; when empty, positional ids
// are assumed.
struct RfDataset {
    int n_features = 0;
    std::vector<double> values;  // n_rows x n_features
    std::vector<int> labels;     // class ids in [0, n_classes)
    std::vector<std::int64_t> row_ids;
    std::size_t n_rows() const { return labels.size(); }
};

// Tree t draws from an RNG seeded with derive_seed(seed, t): first the n
// bootstrap indices, then mtry feature draws per node in depth-first
// (left before right) build order.
RandomForestModel rf_train(const RfDataset& data, const RfParams& params,
                           std::uint64_t seed);

struct RfPrediction {
    int class_id = 0;
    std::vector<double> proba;
};

RfPrediction rf_predict(const RandomForestModel& model, const double* row);
RfPrediction rf_predict(const RandomForestModel& model, const std::vector<double>& row);

// proba[positive_class] per row, order-preserving.
std::vector<double> rf_scores_for_roc(const RandomForestModel& model,
                                      const RfDataset& rows, int positive_class);

void rf_save(const RandomForestModel& model, std::ostream& out);
void rf_save(const RandomForestModel& model, const std::filesystem::path& file);
RandomForestModel rf_load(std::istream& in);
RandomForestModel rf_load(const std::filesystem::path& file);

}  // namespace crowdsight
