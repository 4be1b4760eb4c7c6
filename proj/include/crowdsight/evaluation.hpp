#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "crowdsight/common.hpp"

namespace crowdsight {

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t total() const { return tp + tn + fp + fn; }
};

struct ClassificationMetrics {
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    // Set when the corresponding ratio was 0/0 and defined as 0.
    bool precision_degenerate = false;
    bool recall_degenerate = false;
    bool f1_degenerate = false;
};

// Throws DataError on all-zero counts.
ClassificationMetrics classification_metrics(const ConfusionCounts& c);

struct RocPoint {
    double threshold = 0;
    double fpr = 0;
    double tpr = 0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // fpr ascending, endpoints (0,0) and (1,1)
    double auc = 0;
};

// scores paired with binary labels (1 = positive). Throws DataError if only
// one class is present.
RocCurve roc_auc(const std::vector<std::pair<double, int>>& scored);

// Intersection over union of two axis-aligned boxes. Throws DataError on
// nonpositive extents.
double iou(const BBox& a, const BBox& b);

struct ScoredBox {
    BBox box;
    double confidence = 1.0;
};

struct MatchResult {
    ConfusionCounts counts;
    std::vector<std::pair<int, int>> pairs;  // (prediction index, ground-truth index)
};

// Greedy one-to-one matching in descending prediction confidence; equal
// confidences resolve to the lower prediction index. A pair counts as TP
// only when its IOU reaches the threshold.
MatchResult match_detections(const std::vector<ScoredBox>& preds,
                             const std::vector<BBox>& gts, double iou_threshold = 0.5);

// Per-pixel counts over a rasterized label grid. Matched pairs decide which
// prediction/ground-truth overlaps count as TP; pixel priority is
// TP > FP > FN, everything else TN.
ConfusionCounts pixel_accuracy(const std::vector<ScoredBox>& preds,
                               const std::vector<BBox>& gts,
                               const std::vector<std::pair<int, int>>& matched_pairs,
                               int width, int height);

// Convenience form: matches internally at the given IOU threshold.
ConfusionCounts pixel_accuracy(const std::vector<ScoredBox>& preds,
                               const std::vector<BBox>& gts, int width, int height,
                               double iou_threshold = 0.5);

enum class TrackCriterion { kIouHalf, kCenterInBox };

// Per-frame scoring of track boxes against ground-truth boxes. Each ground
// truth may be claimed once per frame; claims go to the best-overlapping
// track first.
ConfusionCounts track_assignment_metrics(
    const std::vector<std::vector<BBox>>& track_boxes_per_frame,
    const std::vector<std::vector<BBox>>& gt_boxes_per_frame,
    TrackCriterion criterion = TrackCriterion::kIouHalf);

// Same claiming discipline, reporting per-box outcomes: one flag per track
// box per frame, 1 when the box claimed a ground truth.
std::vector<std::vector<char>> track_assignment_flags(
    const std::vector<std::vector<BBox>>& track_boxes_per_frame,
    const std::vector<std::vector<BBox>>& gt_boxes_per_frame,
    TrackCriterion criterion = TrackCriterion::kIouHalf);

// Report writers. All output is deterministic: fixed column order, shortest
// round-trip float formatting, LF line endings.
void write_metrics_csv(const std::filesystem::path& file,
                       const std::vector<std::pair<std::string, std::string>>& rows);
void write_roc_csv(const std::filesystem::path& file, const RocCurve& curve);
void write_roc_svg(const std::filesystem::path& file, const RocCurve& curve);

}  // namespace crowdsight
