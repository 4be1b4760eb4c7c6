#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crowdsight/common.hpp"

namespace crowdsight {

// Grayscale raster, row-major, luminance normalized to [0,1].
// Immutable by convention once it enters a sequence.
struct Frame {
    int width = 0;
    int height = 0;
    int index = 0;
    std::vector<double> data;

    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Throws DataError unless dimensions are >= 8, data length matches, and all
// values lie in [0,1].
void validate_frame(const Frame& frame);

Frame make_frame(int width, int height, int index = 0, double fill = 0.0);

struct VideoSequence {
    std::vector<Frame> frames;
    std::string source_id;
    // Empty, or one 0/1 entry per frame (1 = abnormal).
    std::vector<int> frame_labels;

    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    bool has_labels() const { return !frame_labels.empty(); }
};

// Shared width/height, indices 0..n-1, labels (if present) one per frame.
void validate_sequence(const VideoSequence& seq);

// Natural order: digit runs compare numerically, so frame2 < frame10.
bool natural_less(const std::string& a, const std::string& b);

// -------------------------------------------------------------------------
// Image I/O. PGM (P5/P2) and PNG inputs; PGM (P5, 8-bit) output.
// Color PNG is reduced to luminance with BT.601 weights.
// -------------------------------------------------------------------------

Frame read_image(const std::filesystem::path& file);
void write_pgm(const Frame& frame, const std::filesystem::path& file);

// Loads every file in `dir` matching the glob `pattern` (supports * and ?),
// natural-sorted by filename. `crop_top` drops that many rows from the top of
// every frame (description-banner removal).
// Errors: no matching decodable files, mixed resolutions, undecodable file;
// each message names the offending file.
VideoSequence load_sequence(const std::filesystem::path& dir,
                            const std::string& pattern = "*",
                            int crop_top = 0);

// Writes frames as frame_%06d.pgm under dir.
void save_sequence(const VideoSequence& seq, const std::filesystem::path& dir);

}  // namespace crowdsight
