#include "crowdsight/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "crowdsight/binary_io.hpp"
#include "crowdsight/dataset_io.hpp"
#include "crowdsight/region.hpp"

namespace crowdsight {

std::vector<double> frame_flow_features(const FlowPolar& polar, int bins, double hist_max) {
    if (bins < 1) throw DataError("frame_flow_features: bins must be >= 1");
    const std::size_t n = polar.magnitude.size();
    if (n == 0) throw DataError("frame_flow_features: empty flow raster");
    const double range = hist_max > 0 ? hist_max : 1.0;

    std::vector<double> features(static_cast<std::size_t>(bins) + 2, 0.0);
    double sum = 0;
    for (double m : polar.magnitude) {
        int bin = static_cast<int>(m / range * bins);
        bin = std::clamp(bin, 0, bins - 1);  // overflow lands in the last bin
        features[bin] += 1.0;
        sum += m;
    }
    for (int b = 0; b < bins; ++b) features[b] /= static_cast<double>(n);
    const double mu = sum / static_cast<double>(n);
    double sq = 0;
    for (double m : polar.magnitude) sq += (m - mu) * (m - mu);
    features[bins] = mu;
    features[bins + 1] = std::sqrt(sq / static_cast<double>(n));
    return features;
}

FrameVerdict BaselineFrameModel::score_frame(const Frame& frame,
                                             const FlowPolar* polar) const {
    if (polar == nullptr)
        throw DataError("baseline gate: flow field required to score a frame");
    if (polar->width != frame.width || polar->height != frame.height)
        throw DataError("baseline gate: flow raster does not match frame size");
    const std::vector<double> features = frame_flow_features(*polar, bins, hist_max);
    const RfPrediction pred = rf_predict(forest, features);
    FrameVerdict verdict;
    verdict.frame = frame.index;
    verdict.abnormal_score = pred.proba[0];
    verdict.is_abnormal = verdict.abnormal_score >= decision_threshold;
    return verdict;
}

std::vector<Detection> BaselineFrameModel::detect(const Frame& frame,
                                                  const FlowPolar* polar) const {
    if (polar == nullptr)
        throw DataError("baseline detector: flow field required");
    const double threshold =
        fixed_mask_threshold >= 0 ? fixed_mask_threshold : adaptive_threshold(*polar);
    const BinaryMask mask = magnitude_mask(*polar, threshold);
    std::vector<Detection> detections;
    for (const Region& region : connected_components(mask, detect_min_area)) {
        double mean = 0;
        for (int k : region.pixel_indices) mean += polar->magnitude[k];
        mean /= static_cast<double>(region.area());
        Detection det;
        det.frame = frame.index;
        det.box = region.bbox();
        det.confidence = std::clamp(mean / (hist_max > 0 ? hist_max : 1.0), 0.0, 1.0);
        detections.push_back(std::move(det));
    }
    return detections;
}

std::vector<FlowPolar> sequence_polars(const VideoSequence& sequence,
                                       const HsParams& flow_params) {
    if (sequence.frames.size() < 2)
        throw DataError("sequence_polars: sequence '" + sequence.source_id +
                        "' needs at least 2 frames");
    std::vector<FlowPolar> polars;
    polars.reserve(sequence.frames.size());
    for (std::size_t i = 0; i + 1 < sequence.frames.size(); ++i)
        polars.push_back(
            to_polar(horn_schunck(sequence.frames[i], sequence.frames[i + 1], flow_params)));
    polars.push_back(polars.back());
    return polars;
}

BaselineFrameModel baseline_train(const std::vector<VideoSequence>& sequences,
                                  const HsParams& flow_params, int bins,
                                  const RfParams& rf_params, std::uint64_t seed) {
    std::vector<std::vector<FlowPolar>> polars;
    polars.reserve(sequences.size());
    for (const VideoSequence& seq : sequences)
        polars.push_back(sequence_polars(seq, flow_params));
    return baseline_train(sequences, polars, bins, rf_params, seed);
}

BaselineFrameModel baseline_train(const std::vector<VideoSequence>& sequences,
                                  const std::vector<std::vector<FlowPolar>>& polars,
                                  int bins, const RfParams& rf_params,
                                  std::uint64_t seed) {
    if (bins < 1) throw DataError("baseline_train: bins must be >= 1");
    if (sequences.empty()) throw DataError("baseline_train: no training sequences");
    if (polars.size() != sequences.size())
        throw DataError("baseline_train: flow rasters do not match sequences");

    // The histogram range is frozen over the whole training set.
    double hist_max = 0;
    bool any_abnormal = false, any_normal = false;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        const VideoSequence& seq = sequences[s];
        if (!seq.has_labels() || seq.frame_labels.size() != seq.frames.size())
            throw DataError("baseline_train: sequence '" + seq.source_id +
                            "' lacks frame labels");
        if (polars[s].size() != seq.frames.size())
            throw DataError("baseline_train: sequence '" + seq.source_id +
                            "' has mismatched flow rasters");
        for (int label : seq.frame_labels) (label ? any_abnormal : any_normal) = true;
        for (const FlowPolar& p : polars[s])
            for (double m : p.magnitude) hist_max = std::max(hist_max, m);
    }
    if (!any_abnormal || !any_normal)
        throw DataError("baseline_train: training frames hold a single class; "
                        "the gate needs both normal and abnormal examples");

    BaselineFrameModel model;
    model.bins = bins;
    model.hist_max = hist_max;

    RfDataset data;
    data.n_features = bins + 2;
    std::int64_t row_id = 0;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        for (std::size_t i = 0; i < polars[s].size(); ++i) {
            const std::vector<double> row = frame_flow_features(polars[s][i], bins, hist_max);
            data.values.insert(data.values.end(), row.begin(), row.end());
            // Class ids follow sorted label names: abnormal=0, normal=1.
            data.labels.push_back(sequences[s].frame_labels[i] ? 0 : 1);
            data.row_ids.push_back(row_id++);
        }
    }
    model.forest = rf_train(data, rf_params, seed);
    return model;
}

void save_gate(const BaselineFrameModel& model, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    out.write("CSSP1", 5);
    bin::write_u32(out, static_cast<std::uint32_t>(model.bins));
    bin::write_f64(out, model.hist_max);
    bin::write_f64(out, model.decision_threshold);
    rf_save(model.forest, out);
    if (!out) throw DataError("cannot write " + file.string());
}

BaselineFrameModel load_gate(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open " + file.string());
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "CSSP1", 5) != 0)
        throw DataError(file.string() + ": not a CSSP1 gate model");
    BaselineFrameModel model;
    model.bins = static_cast<int>(bin::read_u32(in));
    model.hist_max = bin::read_f64(in);
    model.decision_threshold = bin::read_f64(in);
    if (model.bins < 1 || model.bins > 1 << 16 || !std::isfinite(model.hist_max) ||
        !std::isfinite(model.decision_threshold))
        throw DataError(file.string() + ": corrupt gate header");
    try {
        model.forest = rf_load(in);
    } catch (const DataError& e) {
        throw DataError(file.string() + ": " + e.what());
    }
    if (model.forest.n_features != model.bins + 2)
        throw DataError(file.string() + ": forest dimension does not match bins");
    return model;
}

FrameVerdict IngestedDetections::score_frame(const Frame& frame,
                                             const FlowPolar*) const {
    const bool any = frame.index >= 0 &&
                     static_cast<std::size_t>(frame.index) < by_frame.size() &&
                     !by_frame[frame.index].empty();
    return {frame.index, any ? 1.0 : 0.0, any};
}

std::vector<Detection> IngestedDetections::detect(const Frame& frame,
                                                  const FlowPolar*) const {
    if (frame.index < 0 || static_cast<std::size_t>(frame.index) >= by_frame.size())
        return {};
    return by_frame[frame.index];
}

IngestedDetections ingest_detections(const std::filesystem::path& file, int frame_width,
                                     int frame_height) {
    if (frame_width < 1 || frame_height < 1)
        throw DataError("ingest_detections: invalid frame bounds");
    IngestedDetections result;
    for (const AnnotationRow& row : parse_annotations(file, /*allow_empty_label=*/true)) {
        Detection det;
        det.frame = row.frame;
        det.box = {row.x, row.y, row.w, row.h};
        det.class_label = row.class_label;

        const double x1 = std::min(row.x + row.w, static_cast<double>(frame_width));
        const double y1 = std::min(row.y + row.h, static_cast<double>(frame_height));
        const double x0 = std::max(row.x, 0.0);
        const double y0 = std::max(row.y, 0.0);
        if (x1 <= x0 || y1 <= y0) {
            result.warnings.push_back("frame " + format_int(row.frame) +
                                      ": box entirely outside frame bounds, dropped");
            continue;
        }
        if (x0 != row.x || y0 != row.y || x1 != row.x + row.w || y1 != row.y + row.h) {
            result.warnings.push_back("frame " + format_int(row.frame) +
                                      ": box clipped to frame bounds");
            det.box = {x0, y0, x1 - x0, y1 - y0};
        }
        if (static_cast<std::size_t>(row.frame) >= result.by_frame.size())
            result.by_frame.resize(row.frame + 1);
        result.by_frame[row.frame].push_back(std::move(det));
    }
    return result;
}

}  // namespace crowdsight
