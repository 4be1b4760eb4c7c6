#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "crowdsight/frame.hpp"
#include "crowdsight/optical_flow.hpp"
#include "crowdsight/random_forest.hpp"

namespace crowdsight {

struct FrameVerdict {
    int frame = 0;
    double abnormal_score = 0;  // [0,1]
    bool is_abnormal = false;   // abnormal_score >= decision threshold
};

struct Detection {
    int frame = 0;
    BBox box;
    double confidence = 1.0;
    std::string class_label;  // optional, one of kClassVocabulary when set
};

// Frame-level gate plus per-frame detector. Implementations that derive
// their answer from flow take it through `polar`; pass nullptr when a flow
// field is not available and the implementation does not need one.
class ClassifierInterface {
public:
    virtual ~ClassifierInterface() = default;
    virtual FrameVerdict score_frame(const Frame& frame, const FlowPolar* polar) const = 0;
    virtual std::vector<Detection> detect(const Frame& frame,
                                          const FlowPolar* polar) const = 0;
};

// Flow-statistics gate: per-frame feature vector is a `bins`-bin normalized
// histogram of flow magnitudes plus the global magnitude mean and standard
// deviation, classified by the forest. Class 0 is "abnormal".
class BaselineFrameModel : public ClassifierInterface {
public:
    int bins = 16;
    double hist_max = 1.0;  // histogram range frozen at training time
    double decision_threshold = 0.5;
    RandomForestModel forest;

    // detect() knobs; runtime configuration, not part of the model blob.
    double fixed_mask_threshold = -1;  // < 0 = adaptive (mean + sd)
    int detect_min_area = 8;

    FrameVerdict score_frame(const Frame& frame, const FlowPolar* polar) const override;
    std::vector<Detection> detect(const Frame& frame, const FlowPolar* polar) const override;
};

std::vector<double> frame_flow_features(const FlowPolar& polar, int bins, double hist_max);

// Trains the gate on labeled sequences; flow is computed internally over
// consecutive frame pairs (the last frame reuses the previous pair's flow).
BaselineFrameModel baseline_train(const std::vector<VideoSequence>& sequences,
                                  const HsParams& flow_params, int bins,
                                  const RfParams& rf_params, std::uint64_t seed);

// Same, with per-sequence flow rasters the caller already has.
BaselineFrameModel baseline_train(const std::vector<VideoSequence>& sequences,
                                  const std::vector<std::vector<FlowPolar>>& polars,
                                  int bins, const RfParams& rf_params,
                                  std::uint64_t seed);

// Flow for every frame of a sequence: frame i pairs with i+1; the last
// frame reuses the previous pair's flow.
std::vector<FlowPolar> sequence_polars(const VideoSequence& sequence,
                                       const HsParams& flow_params);

void save_gate(const BaselineFrameModel& model, const std::filesystem::path& file);
BaselineFrameModel load_gate(const std::filesystem::path& file);

// Detections read from an annotation-format CSV, grouped by frame.
class IngestedDetections : public ClassifierInterface {
public:
    std::vector<std::vector<Detection>> by_frame;
    std::vector<std::string> warnings;

    FrameVerdict score_frame(const Frame& frame, const FlowPolar* polar) const override;
    std::vector<Detection> detect(const Frame& frame, const FlowPolar* polar) const override;
};

// Boxes are validated against the frame bounds: out-of-bounds boxes are
// clipped (warning recorded); boxes entirely outside are dropped (warning).
IngestedDetections ingest_detections(const std::filesystem::path& file, int frame_width,
                                     int frame_height);

}  // namespace crowdsight
