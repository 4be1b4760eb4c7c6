#include "crowdsight/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "crowdsight/csv.hpp"

namespace crowdsight {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

ConfigMap ConfigMap::from_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), file.string());
}

ConfigMap ConfigMap::from_string(const std::string& text, const std::string& origin) {
    ConfigMap map;
    map.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw DataError(origin + ":" + format_int(line_no) +
                            ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw DataError(origin + ":" + format_int(line_no) + ": empty key");
        if (map.values_.count(key))
            throw DataError(origin + ":" + format_int(line_no) + ": duplicate key '" +
                            key + "'");
        map.values_[key] = value;
    }
    return map;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

bool ConfigMap::has(const std::string& key) const { return values_.count(key) != 0; }

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_number(it->second, origin_ + ": key '" + key + "'");
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return static_cast<int>(parse_integer(it->second, origin_ + ": key '" + key + "'"));
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& s = it->second;
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError(origin_ + ": key '" + key + "': invalid unsigned integer '" + s +
                        "'");
    return v;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw DataError(origin_ + ": key '" + key + "': expected true/false, got '" +
                    it->second + "'");
}

std::vector<std::string> ConfigMap::unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_)
        if (!consumed_.count(key)) out.push_back(key);
    return out;
}

PipelineConfig PipelineConfig::from_map(const ConfigMap& map) {
    PipelineConfig c;
    c.pipeline = map.get_string("pipeline", c.pipeline);
    c.seed = map.get_u64("seed", c.seed);

    c.frames_dir = map.get_string("frames_dir", c.frames_dir);
    c.frames_pattern = map.get_string("frames_pattern", c.frames_pattern);
    c.crop_top = map.get_int("crop_top", c.crop_top);
    c.frame_labels = map.get_string("frame_labels", c.frame_labels);
    c.annotations = map.get_string("annotations", c.annotations);
    c.detections = map.get_string("detections", c.detections);
    c.train_frames_dir = map.get_string("train_frames_dir", c.train_frames_dir);
    c.train_frame_labels = map.get_string("train_frame_labels", c.train_frame_labels);
    c.train_annotations = map.get_string("train_annotations", c.train_annotations);
    c.split_fraction = map.get_double("split_fraction", c.split_fraction);

    c.gate_model = map.get_string("gate_model", c.gate_model);
    c.rf_model = map.get_string("rf_model", c.rf_model);
    c.classes = map.get_string("classes", c.classes);
    c.out_dir = map.get_string("out_dir", c.out_dir);

    c.flow.alpha = map.get_double("flow.alpha", c.flow.alpha);
    c.flow.iterations = map.get_int("flow.iterations", c.flow.iterations);
    c.flow.presmooth_sigma = map.get_double("flow.presmooth_sigma", c.flow.presmooth_sigma);

    c.mask_mode = map.get_string("mask.mode", c.mask_mode);
    c.mask_threshold = map.get_double("mask.threshold", c.mask_threshold);
    c.mask_min_area = map.get_int("mask.min_area", c.mask_min_area);

    c.gate_bins = map.get_int("gate.bins", c.gate_bins);
    c.gate_threshold = map.get_double("gate.decision_threshold", c.gate_threshold);
    c.region_labels = map.get_string("region_labels", c.region_labels);

    c.rf.n_trees = map.get_int("rf.n_trees", c.rf.n_trees);
    c.rf.mtry = map.get_int("rf.mtry", c.rf.mtry);
    c.rf.min_samples_leaf = map.get_int("rf.min_samples_leaf", c.rf.min_samples_leaf);
    c.rf.max_depth = map.get_int("rf.max_depth", c.rf.max_depth);
    c.rf.balanced_class_weights =
        map.get_bool("rf.balanced_class_weights", c.rf.balanced_class_weights);

    c.tracker.confirm_hits = map.get_int("tracker.confirm_hits", c.tracker.confirm_hits);
    c.tracker.max_misses = map.get_int("tracker.max_misses", c.tracker.max_misses);
    c.tracker.gate = map.get_double("tracker.gate", c.tracker.gate);
    c.tracker.q_pos = map.get_double("tracker.q_pos", c.tracker.q_pos);
    c.tracker.q_vel = map.get_double("tracker.q_vel", c.tracker.q_vel);
    c.tracker.r_pos = map.get_double("tracker.r_pos", c.tracker.r_pos);
    c.tracker.init_pos_var = map.get_double("tracker.init_pos_var", c.tracker.init_pos_var);
    c.tracker.init_vel_var = map.get_double("tracker.init_vel_var", c.tracker.init_vel_var);
    c.tracker.extent_smoothing =
        map.get_double("tracker.extent_smoothing", c.tracker.extent_smoothing);
    c.track_criterion = map.get_string("track_criterion", c.track_criterion);

    const std::vector<std::string> stray = map.unconsumed();
    if (!stray.empty()) {
        std::string msg = "unknown config key(s):";
        for (const std::string& k : stray) msg += " " + k;
        throw DataError(msg);
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& file) {
    return from_map(ConfigMap::from_file(file));
}

void PipelineConfig::validate() const {
    if (pipeline != "small_scale" && pipeline != "large_scale")
        throw DataError("config: pipeline must be small_scale or large_scale");
    if (mask_mode != "adaptive" && mask_mode != "fixed")
        throw DataError("config: mask.mode must be adaptive or fixed");
    if (mask_mode == "fixed" && mask_threshold < 0)
        throw DataError("config: mask.threshold must be >= 0");
    if (mask_min_area < 1) throw DataError("config: mask.min_area must be >= 1");
    if (gate_bins < 1) throw DataError("config: gate.bins must be >= 1");
    if (gate_threshold < 0 || gate_threshold > 1)
        throw DataError("config: gate.decision_threshold must lie in [0,1]");
    if (region_labels != "frame_labels" && region_labels != "boxes")
        throw DataError("config: region_labels must be frame_labels or boxes");
    if (track_criterion != "iou" && track_criterion != "center")
        throw DataError("config: track_criterion must be iou or center");
    if (!(split_fraction > 0) || !(split_fraction < 1))
        throw DataError("config: split_fraction must lie in (0,1)");
    if (crop_top < 0) throw DataError("config: crop_top must be >= 0");
    flow.validate();
    rf.validate();
    tracker.validate();
    if (out_dir.empty()) throw DataError("config: out_dir must be set");
}

std::string PipelineConfig::dump_resolved() const {
    std::vector<std::pair<std::string, std::string>> kv = {
        {"annotations", annotations},
        {"classes", classes},
        {"crop_top", format_int(crop_top)},
        {"detections", detections},
        {"flow.alpha", format_double(flow.alpha)},
        {"flow.iterations", format_int(flow.iterations)},
        {"flow.presmooth_sigma", format_double(flow.presmooth_sigma)},
        {"frame_labels", frame_labels},
        {"frames_dir", frames_dir},
        {"frames_pattern", frames_pattern},
        {"gate.bins", format_int(gate_bins)},
        {"gate.decision_threshold", format_double(gate_threshold)},
        {"gate_model", gate_model},
        {"mask.min_area", format_int(mask_min_area)},
        {"mask.mode", mask_mode},
        {"mask.threshold", format_double(mask_threshold)},
        {"out_dir", out_dir},
        {"pipeline", pipeline},
        {"region_labels", region_labels},
        {"rf.balanced_class_weights", rf.balanced_class_weights ? "true" : "false"},
        {"rf.max_depth", format_int(rf.max_depth)},
        {"rf.min_samples_leaf", format_int(rf.min_samples_leaf)},
        {"rf.mtry", format_int(rf.mtry)},
        {"rf.n_trees", format_int(rf.n_trees)},
        {"rf_model", rf_model},
        {"seed", format_uint(seed)},
        {"split_fraction", format_double(split_fraction)},
        {"track_criterion", track_criterion},
        {"tracker.confirm_hits", format_int(tracker.confirm_hits)},
        {"tracker.extent_smoothing", format_double(tracker.extent_smoothing)},
        {"tracker.gate", format_double(tracker.gate)},
        {"tracker.init_pos_var", format_double(tracker.init_pos_var)},
        {"tracker.init_vel_var", format_double(tracker.init_vel_var)},
        {"tracker.max_misses", format_int(tracker.max_misses)},
        {"tracker.q_pos", format_double(tracker.q_pos)},
        {"tracker.q_vel", format_double(tracker.q_vel)},
        {"tracker.r_pos", format_double(tracker.r_pos)},
        {"train_annotations", train_annotations},
        {"train_frame_labels", train_frame_labels},
        {"train_frames_dir", train_frames_dir},
    };
    std::sort(kv.begin(), kv.end());
    std::string out;
    for (const auto& [key, value] : kv) out += key + " = " + value + "\n";
    return out;
}

}  // namespace crowdsight
