#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crowdsight/config.hpp"
#include "crowdsight/region.hpp"

namespace crowdsight {

struct RunResult {
    std::filesystem::path bundle_dir;
    std::vector<std::string> warnings;
};

// Executes the configured pipeline and writes the report bundle
// (metrics.csv, roc.csv, roc.svg, tracks.csv, config.resolved; the large
// path adds detections.csv and track_classes.csv). Output bytes depend only
// on the config and its inputs.
RunResult run_pipeline(const PipelineConfig& config);

// Pixels of a box clipped to the frame, as a Region usable for feature
// extraction. Membership follows pixel-center containment.
Region region_from_box(const BBox& box, int width, int height, int id = 0);

}  // namespace crowdsight
