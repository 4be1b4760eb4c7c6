#include "crowdsight/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>

#include "crowdsight/binary_io.hpp"
#include "crowdsight/rng.hpp"

namespace crowdsight {

void RfParams::validate() const {
    if (n_trees < 1) throw DataError("random forest: n_trees must be >= 1");
    if (mtry < 0) throw DataError("random forest: mtry must be >= 0");
    if (min_samples_leaf < 1) throw DataError("random forest: min_samples_leaf must be >= 1");
    if (max_depth < 0) throw DataError("random forest: max_depth must be >= 0");
}

namespace {

struct Split {
    double impurity = 0;  // weighted mean child Gini
    int feature = -1;
    double threshold = 0;
};

// Candidate splits compare lexicographically on (impurity, feature,
// threshold), so the winner does not depend on feature draw order.
bool better(const Split& a, const Split& b) {
    if (a.impurity != b.impurity) return a.impurity < b.impurity;
    if (a.feature != b.feature) return a.feature < b.feature;
    return a.threshold < b.threshold;
}

class TreeBuilder {
public:
    TreeBuilder(const std::vector<double>& x, const std::vector<int>& y, int d,
                int n_classes, const std::vector<double>& class_weights,
                const RfParams& params, Rng& rng)
        : x_(x), y_(y), d_(d), n_classes_(n_classes), weights_(class_weights),
          params_(params), rng_(rng) {}

    DecisionTree build(std::vector<int> rows) {
        tree_ = DecisionTree{};
        grow(std::move(rows), 0);
        return std::move(tree_);
    }

private:
    double value(int row, int f) const {
        return x_[static_cast<std::size_t>(row) * d_ + f];
    }

    int make_leaf(const std::vector<int>& rows) {
        TreeNode node;
        node.class_counts.assign(n_classes_, 0.0);
        for (int r : rows) node.class_counts[y_[r]] += weights_[y_[r]];
        tree_.nodes.push_back(std::move(node));
        return static_cast<int>(tree_.nodes.size()) - 1;
    }

    // mtry features without replacement via partial Fisher-Yates, then
    // sorted so the candidate set, not the draw order, is what matters.
    std::vector<int> draw_features() {
        std::vector<int> pool(d_);
        std::iota(pool.begin(), pool.end(), 0);
        const int m = params_.mtry;
        for (int i = 0; i < m; ++i) {
            const std::size_t j = i + rng_.uniform_int(d_ - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(m);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    bool find_split(const std::vector<int>& rows, const std::vector<int>& features,
                    Split& best) const {
        best = Split{};
        bool found = false;
        std::vector<std::pair<double, int>> column(rows.size());
        std::vector<double> left_w(n_classes_), right_w(n_classes_);
        for (int f : features) {
            for (std::size_t i = 0; i < rows.size(); ++i)
                column[i] = {value(rows[i], f), y_[rows[i]]};
            std::sort(column.begin(), column.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            std::fill(left_w.begin(), left_w.end(), 0.0);
            std::fill(right_w.begin(), right_w.end(), 0.0);
            for (const auto& [v, c] : column) right_w[c] += weights_[c];
            double wl = 0, wr = 0;
            for (double w : right_w) wr += w;

            std::size_t i = 0;
            while (i < column.size()) {
                const double v = column[i].first;
                while (i < column.size() && column[i].first == v) {
                    const int c = column[i].second;
                    left_w[c] += weights_[c];
                    right_w[c] -= weights_[c];
                    wl += weights_[c];
                    wr -= weights_[c];
                    ++i;
                }
                if (i == column.size()) break;
                const std::size_t n_left = i, n_right = column.size() - i;
                if (n_left < static_cast<std::size_t>(params_.min_samples_leaf) ||
                    n_right < static_cast<std::size_t>(params_.min_samples_leaf))
                    continue;
                double gl = 1.0, gr = 1.0;
                for (int c = 0; c < n_classes_; ++c) {
                    const double pl = left_w[c] / wl;
                    const double pr = right_w[c] / wr;
                    gl -= pl * pl;
                    gr -= pr * pr;
                }
                Split s;
                s.impurity = (wl * gl + wr * gr) / (wl + wr);
                s.feature = f;
                s.threshold = v / 2 + column[i].first / 2;  // midpoint
                if (!found || better(s, best)) {
                    best = s;
                    found = true;
                }
            }
        }
        return found;
    }

    int grow(std::vector<int> rows, int depth) {
        tree_.max_depth_reached = std::max(tree_.max_depth_reached, depth);
        bool pure = true;
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (y_[rows[i]] != y_[rows[0]]) {
                pure = false;
                break;
            }
        const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
        if (pure || depth_capped ||
            rows.size() < 2 * static_cast<std::size_t>(params_.min_samples_leaf))
            return make_leaf(rows);

        const std::vector<int> features = draw_features();
        Split split;
        if (!find_split(rows, features, split)) return make_leaf(rows);

        const int self = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        tree_.nodes[self].feature = split.feature;
        tree_.nodes[self].threshold = split.threshold;

        std::vector<int> left_rows, right_rows;
        for (int r : rows)
            (value(r, split.feature) <= split.threshold ? left_rows : right_rows)
                .push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const int left = grow(std::move(left_rows), depth + 1);
        const int right = grow(std::move(right_rows), depth + 1);
        tree_.nodes[self].left = left;
        tree_.nodes[self].right = right;
        return self;
    }

    const std::vector<double>& x_;
    const std::vector<int>& y_;
    int d_;
    int n_classes_;
    const std::vector<double>& weights_;
    const RfParams& params_;
    Rng& rng_;
    DecisionTree tree_;
};

}  // namespace

RandomForestModel rf_train(const RfDataset& data, const RfParams& params,
                           std::uint64_t seed) {
    params.validate();
    const std::size_t n = data.n_rows();
    if (n < 2) throw DataError("random forest: need at least 2 training rows");
    if (data.n_features < 1) throw DataError("random forest: need at least 1 feature");
    if (data.values.size() != n * static_cast<std::size_t>(data.n_features))
        throw DataError("random forest: value matrix does not match row count");
    for (double v : data.values)
        if (!std::isfinite(v)) throw DataError("random forest: non-finite feature value");

    int n_classes = 0;
    for (int label : data.labels) {
        if (label < 0) throw DataError("random forest: negative class id");
        n_classes = std::max(n_classes, label + 1);
    }
    {
        std::set<int> present(data.labels.begin(), data.labels.end());
        if (present.size() < 2)
            throw DataError("random forest: training data holds a single class");
    }

    // Canonical row order by stable id: training is invariant to how the
    // caller happened to order the rows.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (!data.row_ids.empty()) {
        if (data.row_ids.size() != n)
            throw DataError("random forest: row_ids do not match row count");
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return data.row_ids[a] < data.row_ids[b];
        });
        for (std::size_t i = 1; i < n; ++i)
            if (data.row_ids[order[i]] == data.row_ids[order[i - 1]])
                throw DataError("random forest: duplicate row id");
    }
    const int d = data.n_features;
    std::vector<double> x(n * static_cast<std::size_t>(d));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = data.labels[order[i]];
        std::memcpy(&x[i * d], &data.values[order[i] * d], sizeof(double) * d);
    }

    RandomForestModel model;
    model.n_classes = n_classes;
    model.n_features = d;
    model.seed = seed;
    model.params = params;
    if (model.params.mtry == 0)
        model.params.mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
    model.params.mtry = std::min(model.params.mtry, d);

    std::vector<double> weights(n_classes, 1.0);
    if (params.balanced_class_weights) {
        std::vector<std::size_t> counts(n_classes, 0);
        for (int label : y) counts[label] += 1;
        for (int c = 0; c < n_classes; ++c)
            weights[c] = counts[c] ? static_cast<double>(n) / (n_classes * counts[c]) : 0.0;
    }

    model.trees.reserve(params.n_trees);
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<int> bootstrap(n);
        for (std::size_t i = 0; i < n; ++i)
            bootstrap[i] = static_cast<int>(rng.uniform_int(n));
        TreeBuilder builder(x, y, d, n_classes, weights, model.params, rng);
        model.trees.push_back(builder.build(std::move(bootstrap)));
    }
    return model;
}

RfPrediction rf_predict(const RandomForestModel& model, const double* row) {
    for (int f = 0; f < model.n_features; ++f)
        if (!std::isfinite(row[f])) throw DataError("rf_predict: non-finite feature");

    RfPrediction pred;
    pred.proba.assign(model.n_classes, 0.0);
    for (const DecisionTree& tree : model.trees) {
        int i = 0;
        while (tree.nodes[i].feature >= 0)
            i = row[tree.nodes[i].feature] <= tree.nodes[i].threshold ? tree.nodes[i].left
                                                                      : tree.nodes[i].right;
        const std::vector<double>& counts = tree.nodes[i].class_counts;
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        for (int c = 0; c < model.n_classes; ++c) pred.proba[c] += counts[c] / total;
    }
    for (double& p : pred.proba) p /= model.trees.size();
    pred.class_id = 0;
    for (int c = 1; c < model.n_classes; ++c)
        if (pred.proba[c] > pred.proba[pred.class_id]) pred.class_id = c;
    return pred;
}

RfPrediction rf_predict(const RandomForestModel& model, const std::vector<double>& row) {
    if (row.size() != static_cast<std::size_t>(model.n_features))
        throw DataError("rf_predict: feature dimension mismatch");
    return rf_predict(model, row.data());
}

std::vector<double> rf_scores_for_roc(const RandomForestModel& model,
                                      const RfDataset& rows, int positive_class) {
    if (positive_class < 0 || positive_class >= model.n_classes)
        throw DataError("rf_scores_for_roc: invalid positive class");
    if (rows.n_features != model.n_features)
        throw DataError("rf_scores_for_roc: feature dimension mismatch");
    const std::size_t n =
        rows.values.size() / static_cast<std::size_t>(model.n_features);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i)
        scores[i] = rf_predict(model, &rows.values[i * model.n_features])
                        .proba[positive_class];
    return scores;
}

void rf_save(const RandomForestModel& model, std::ostream& out) {
    out.write("CSRF1", 5);
    bin::write_u32(out, static_cast<std::uint32_t>(model.n_classes));
    bin::write_u32(out, static_cast<std::uint32_t>(model.n_features));
    bin::write_u64(out, model.seed);
    bin::write_u32(out, static_cast<std::uint32_t>(model.params.n_trees));
    bin::write_u32(out, static_cast<std::uint32_t>(model.params.mtry));
    bin::write_u32(out, static_cast<std::uint32_t>(model.params.min_samples_leaf));
    bin::write_u32(out, static_cast<std::uint32_t>(model.params.max_depth));
    bin::write_u8(out, model.params.balanced_class_weights ? 1 : 0);
    bin::write_u32(out, static_cast<std::uint32_t>(model.trees.size()));
    for (const DecisionTree& tree : model.trees) {
        bin::write_u32(out, static_cast<std::uint32_t>(tree.nodes.size()));
        for (const TreeNode& node : tree.nodes) {
            bin::write_i32(out, node.feature);
            bin::write_f64(out, node.threshold);
            bin::write_i32(out, node.left);
            bin::write_i32(out, node.right);
            for (int c = 0; c < model.n_classes; ++c)
                bin::write_f64(out, node.feature < 0 ? node.class_counts[c] : 0.0);
        }
    }
}

void rf_save(const RandomForestModel& model, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    rf_save(model, out);
    if (!out) throw DataError("cannot write " + file.string());
}

RandomForestModel rf_load(std::istream& in) {
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "CSRF1", 5) != 0)
        throw DataError("not a CSRF1 forest blob");
    RandomForestModel model;
    model.n_classes = static_cast<int>(bin::read_u32(in));
    model.n_features = static_cast<int>(bin::read_u32(in));
    model.seed = bin::read_u64(in);
    model.params.n_trees = static_cast<int>(bin::read_u32(in));
    model.params.mtry = static_cast<int>(bin::read_u32(in));
    model.params.min_samples_leaf = static_cast<int>(bin::read_u32(in));
    model.params.max_depth = static_cast<int>(bin::read_u32(in));
    model.params.balanced_class_weights = bin::read_u8(in) != 0;
    if (model.n_classes < 2 || model.n_classes > 1 << 20 || model.n_features < 1 ||
        model.n_features > 1 << 20)
        throw DataError("corrupt forest header");
    const std::uint32_t n_trees = bin::read_u32(in);
    if (n_trees == 0 || n_trees > 1 << 20) throw DataError("corrupt forest header");
    model.trees.resize(n_trees);
    for (DecisionTree& tree : model.trees) {
        const std::uint32_t n_nodes = bin::read_u32(in);
        if (!in || n_nodes == 0 || n_nodes > 1 << 26)
            throw DataError("corrupt forest tree table");
        tree.nodes.resize(n_nodes);
        for (TreeNode& node : tree.nodes) {
            node.feature = bin::read_i32(in);
            node.threshold = bin::read_f64(in);
            node.left = bin::read_i32(in);
            node.right = bin::read_i32(in);
            node.class_counts.resize(model.n_classes);
            for (double& c : node.class_counts) c = bin::read_f64(in);
            if (node.feature >= model.n_features ||
                (node.feature >= 0 &&
                 (node.left < 0 || node.right < 0 ||
                  node.left >= static_cast<int>(n_nodes) ||
                  node.right >= static_cast<int>(n_nodes))))
                throw DataError("corrupt forest node");
        }
    }
    if (!in) throw DataError("truncated forest blob");
    return model;
}

RandomForestModel rf_load(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open " + file.string());
    try {
        return rf_load(in);
    } catch (const DataError& e) {
        throw DataError(file.string() + ": " + e.what());
    }
}

}  // namespace crowdsight
