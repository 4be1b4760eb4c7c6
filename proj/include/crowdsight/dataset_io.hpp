#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "crowdsight/common.hpp"

namespace crowdsight {

// Canonical behavior vocabulary, alphabetical. Class ids elsewhere follow
// this ordering when all seven classes are in play.
inline constexpr std::array<std::string_view, 7> kClassVocabulary = {
    "different_crowd_direction", "moving_in_opposite", "moving_non_human_object",
    "running",                   "sitting",            "sleeping",
    "standing"};

bool is_known_class(std::string_view label);

struct AnnotationRow {
    std::string video_id;
    int frame = 0;
    double x = 0, y = 0, w = 0, h = 0;
    std::string class_label;  // one of kClassVocabulary, or empty = unlabeled
};

// Header-tolerant CSV: video_id,frame,x,y,w,h,class_label. Errors carry the
// offending line number. allow_empty_label admits rows whose label column is
// empty (detection ingestion); annotation files keep it off.
std::vector<AnnotationRow> parse_annotations(const std::filesystem::path& file,
                                             bool allow_empty_label = false);
void write_annotations(const std::vector<AnnotationRow>& rows,
                       const std::filesystem::path& file);

// Frame-label CSV: frame,label with label in {0,1} (1 = abnormal). Frames
// absent from the file default to 0.
std::vector<int> read_frame_labels(const std::filesystem::path& file,
                                   int frame_count = -1);
void write_frame_labels(const std::vector<int>& labels,
                        const std::filesystem::path& file);

struct SplitSpec {
    enum class Mode { kFraction, kByFile } mode = Mode::kFraction;
    double fraction = 0.7;
    std::vector<int> train_frames;  // by_file mode
    std::vector<int> test_frames;
};

struct Split {
    std::vector<int> train;
    std::vector<int> test;
};

// Fraction mode takes the first ceil(fraction * n) frames as train; the
// temporal prefix keeps one event from straddling the split.
Split make_split(int n_frames, const SplitSpec& spec);

}  // namespace crowdsight
