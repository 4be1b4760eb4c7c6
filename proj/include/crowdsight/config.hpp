#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "crowdsight/common.hpp"
#include "crowdsight/optical_flow.hpp"
#include "crowdsight/random_forest.hpp"
#include "crowdsight/tracking.hpp"

namespace crowdsight {

// key = value lines; full-line # comments; blank lines ignored. Values keep
// interior whitespace (paths), outer whitespace trimmed.
class ConfigMap {
public:
    static ConfigMap from_file(const std::filesystem::path& file);
    static ConfigMap from_string(const std::string& text, const std::string& origin);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Keys present in the file but never read; used to reject typos.
    std::vector<std::string> unconsumed() const;
    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::string origin_ = "<config>";
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

struct PipelineConfig {
    std::string pipeline = "small_scale";  // or "large_scale"
    std::uint64_t seed = 1;

    // Inputs. Either a single sequence split by fraction, or explicit train
    // inputs alongside the test sequence.
    std::string frames_dir;
    std::string frames_pattern = "*";
    int crop_top = 0;
    std::string frame_labels;
    std::string annotations;  // ground-truth boxes for the test sequence
    std::string detections;   // ingested detections (large scale)
    std::string train_frames_dir;
    std::string train_frame_labels;
    std::string train_annotations;
    double split_fraction = 0.7;

    // Models: loaded when the file exists, otherwise trained and saved there.
    std::string gate_model;
    std::string rf_model;
    std::string classes;  // comma-separated, required when rf_model is loaded
    std::string out_dir = "report";

    HsParams flow;
    std::string mask_mode = "adaptive";  // or "fixed"
    double mask_threshold = 0;
    int mask_min_area = 8;

    int gate_bins = 16;
    double gate_threshold = 0.5;
    std::string region_labels = "frame_labels";  // or "boxes"

    RfParams rf;
    TrackerParams tracker;
    std::string track_criterion = "iou";  // or "center"

    static PipelineConfig from_map(const ConfigMap& map);
    static PipelineConfig from_file(const std::filesystem::path& file);
    void validate() const;

    // Every parameter with its final value, sorted by key; embedded in each
    // report bundle so results are traceable.
    std::string dump_resolved() const;
};

}  // namespace crowdsight
