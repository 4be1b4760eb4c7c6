#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crowdsight/region.hpp"
#include "crowdsight/synth.hpp"

namespace crowdsight {

// The six per-region flow statistics plus the pixel count. Population
// formulas throughout: sums divided by p, no Bessel correction. Orientation
// is averaged as a plain real value (arithmetic mean of atan2 outputs).
struct FeatureVector {
    double mu_m = 0;
    double mu_r = 0;
    double var_m = 0;
    double var_r = 0;
    double sd_m = 0;
    double sd_r = 0;
    long long p = 0;

    static constexpr int kDim = 6;
    // Order used everywhere a row is fed to a classifier.
    void to_row(double out[kDim]) const {
        out[0] = mu_m;
        out[1] = mu_r;
        out[2] = var_m;
        out[3] = var_r;
        out[4] = sd_m;
        out[5] = sd_r;
    }
};

// Statistics over exactly the region's member pixels, accumulated in the
// region's pixel order. Throws on an empty region or out-of-bounds pixels.
FeatureVector region_features(const FlowPolar& polar, const Region& region);

struct FeatureRow {
    int frame = 0;
    int region_id = 0;
    FeatureVector features;
    int label = -1;  // index into FeatureTable::class_names, -1 = unlabeled
};

struct FeatureTable {
    std::vector<FeatureRow> rows;
    std::vector<std::string> class_names;  // sorted, unique

    int class_index(const std::string& name) const;
};

enum class LabelSource {
    kNone,         // leave rows unlabeled
    kBoxes,        // best-IOU >= threshold against ground-truth boxes
    kFrameLabels,  // every region inherits its frame's normal/abnormal label
};

// One row per (frame, region), ordered by (frame, region id). For kBoxes the
// label comes from the best-IOU ground-truth box when that IOU >= iou_threshold;
// ties go to the larger IOU, then the lower ground-truth row index. For
// kFrameLabels, rows are labeled "abnormal"/"normal" from frame_labels.
FeatureTable batch_features(const std::vector<FlowPolar>& polars,
                            const std::vector<std::vector<Region>>& regions,
                            LabelSource source = LabelSource::kNone,
                            const std::vector<std::vector<TruthBox>>* truth = nullptr,
                            const std::vector<int>* frame_labels = nullptr,
                            double iou_threshold = 0.5);

// CSV schema: frame,region_id,mu_m,mu_r,var_m,var_r,sd_m,sd_r,p,label
// with "-" for unlabeled rows.
void write_feature_csv(const FeatureTable& table, const std::filesystem::path& file);
FeatureTable read_feature_csv(const std::filesystem::path& file);

}  // namespace crowdsight
