#include "crowdsight/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "crowdsight/classifier.hpp"
#include "crowdsight/dataset_io.hpp"
#include "crowdsight/evaluation.hpp"
#include "crowdsight/features.hpp"
#include "crowdsight/rng.hpp"
#include "crowdsight/tracking.hpp"

namespace crowdsight {

Region region_from_box(const BBox& box, int width, int height, int id) {
    if (!(box.w > 0) || !(box.h > 0)) throw DataError("region_from_box: degenerate box");
    const int x0 = std::max(0, static_cast<int>(std::ceil(box.x - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(box.y - 0.5)));
    const int x1 = std::min(width, static_cast<int>(std::ceil(box.x + box.w - 0.5)));
    const int y1 = std::min(height, static_cast<int>(std::ceil(box.y + box.h - 0.5)));
    if (x0 >= x1 || y0 >= y1)
        throw DataError("region_from_box: box lies outside the frame");
    Region region;
    region.id = id;
    region.x = x0;
    region.y = y0;
    region.w = x1 - x0;
    region.h = y1 - y0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) region.pixel_indices.push_back(y * width + x);
    return region;
}

namespace {

using MetricRows = std::vector<std::pair<std::string, std::string>>;

std::string fmt_flag(bool value) { return value ? "1" : "0"; }

double mask_threshold_for(const FlowPolar& polar, const PipelineConfig& c) {
    return c.mask_mode == "fixed" ? c.mask_threshold : adaptive_threshold(polar);
}

std::vector<Region> frame_regions(const FlowPolar& polar, const PipelineConfig& c) {
    const BinaryMask mask = magnitude_mask(polar, mask_threshold_for(polar, c));
    return connected_components(mask, c.mask_min_area);
}

RfDataset dataset_from_table(const FeatureTable& table) {
    RfDataset data;
    data.n_features = FeatureVector::kDim;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const FeatureRow& row = table.rows[i];
        if (row.label < 0) continue;
        double buf[FeatureVector::kDim];
        row.features.to_row(buf);
        data.values.insert(data.values.end(), buf, buf + FeatureVector::kDim);
        data.labels.push_back(row.label);
        data.row_ids.push_back(static_cast<std::int64_t>(i));
    }
    return data;
}

VideoSequence load_labeled_sequence(const std::string& dir, const std::string& pattern,
                                    int crop_top, const std::string& labels_path,
                                    const std::string& stage) {
    VideoSequence seq = load_sequence(dir, pattern, crop_top);
    if (!labels_path.empty()) {
        seq.frame_labels =
            read_frame_labels(labels_path, static_cast<int>(seq.frames.size()));
        seq.frame_labels.resize(seq.frames.size(), 0);
    }
    if (seq.frame_labels.empty())
        throw DataError(stage + ": frame labels required for '" + dir + "'");
    validate_sequence(seq);
    return seq;
}

// Ground-truth boxes per frame index, plus the per-row class label.
struct GroundTruth {
    std::vector<std::vector<BBox>> boxes;        // by frame
    std::vector<std::vector<std::string>> labels;  // aligned with boxes
};

GroundTruth ground_truth_by_frame(const std::vector<AnnotationRow>& rows, int n_frames) {
    GroundTruth gt;
    gt.boxes.resize(n_frames);
    gt.labels.resize(n_frames);
    for (const AnnotationRow& row : rows) {
        if (row.frame >= n_frames)
            throw DataError("annotation frame " + format_int(row.frame) +
                            " beyond sequence length " + format_int(n_frames));
        gt.boxes[row.frame].push_back({row.x, row.y, row.w, row.h});
        gt.labels[row.frame].push_back(row.class_label);
    }
    return gt;
}

void append_classification_rows(MetricRows& rows, const std::string& prefix,
                                const ConfusionCounts& counts) {
    rows.emplace_back(prefix + "_tp", format_int(counts.tp));
    rows.emplace_back(prefix + "_tn", format_int(counts.tn));
    rows.emplace_back(prefix + "_fp", format_int(counts.fp));
    rows.emplace_back(prefix + "_fn", format_int(counts.fn));
    const ClassificationMetrics m = classification_metrics(counts);
    rows.emplace_back(prefix + "_accuracy", format_double(m.accuracy));
    rows.emplace_back(prefix + "_precision", format_double(m.precision));
    rows.emplace_back(prefix + "_recall", format_double(m.recall));
    rows.emplace_back(prefix + "_f1", format_double(m.f1));
    rows.emplace_back(prefix + "_precision_degenerate", fmt_flag(m.precision_degenerate));
    rows.emplace_back(prefix + "_recall_degenerate", fmt_flag(m.recall_degenerate));
    rows.emplace_back(prefix + "_f1_degenerate", fmt_flag(m.f1_degenerate));
}

void write_bundle_base(const PipelineConfig& c, const RocCurve& curve,
                       bool roc_valid, const MetricRows& metrics,
                       const std::vector<TrackRecord>& records) {
    const std::filesystem::path dir(c.out_dir);
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "config.resolved");
        if (!out) throw DataError("cannot write " + (dir / "config.resolved").string());
        out << c.dump_resolved();
    }
    write_metrics_csv(dir / "metrics.csv", metrics);
    if (roc_valid) {
        write_roc_csv(dir / "roc.csv", curve);
        write_roc_svg(dir / "roc.svg", curve);
    } else {
        write_roc_csv(dir / "roc.csv", RocCurve{});
        write_roc_svg(dir / "roc.svg", RocCurve{});
    }
    write_tracks_csv(records, dir / "tracks.csv");
}

// ---------------------------------------------------------------- small ---

RunResult run_small_scale(const PipelineConfig& c) {
    RunResult result;
    result.bundle_dir = c.out_dir;
    if (c.frames_dir.empty()) throw DataError("small_scale: frames_dir is required");

    // Train/test resolution: explicit train inputs, or a temporal-prefix
    // split of the single labeled sequence.
    VideoSequence train, test;
    std::vector<int> test_orig;  // original frame index of each test frame
    if (!c.train_frames_dir.empty()) {
        train = load_labeled_sequence(c.train_frames_dir, c.frames_pattern, c.crop_top,
                                      c.train_frame_labels, "small_scale/train");
        test = load_labeled_sequence(c.frames_dir, c.frames_pattern, c.crop_top,
                                     c.frame_labels, "small_scale/test");
        test_orig.resize(test.frames.size());
        std::iota(test_orig.begin(), test_orig.end(), 0);
    } else {
        const VideoSequence full =
            load_labeled_sequence(c.frames_dir, c.frames_pattern, c.crop_top,
                                  c.frame_labels, "small_scale/test");
        SplitSpec spec;
        spec.fraction = c.split_fraction;
        const Split split = make_split(static_cast<int>(full.frames.size()), spec);
        auto subset = [&](const std::vector<int>& idx, VideoSequence& dst) {
            dst.source_id = full.source_id;
            for (int i : idx) {
                Frame f = full.frames[i];
                f.index = static_cast<int>(dst.frames.size());
                dst.frames.push_back(std::move(f));
                dst.frame_labels.push_back(full.frame_labels[i]);
            }
        };
        subset(split.train, train);
        subset(split.test, test);
        test_orig = split.test;
    }

    const bool gate_preloaded =
        !c.gate_model.empty() && std::filesystem::exists(c.gate_model);
    const bool rf_preloaded = !c.rf_model.empty() && std::filesystem::exists(c.rf_model);
    const bool need_training = !gate_preloaded || !rf_preloaded;

    std::vector<FlowPolar> train_polars;
    if (need_training) train_polars = sequence_polars(train, c.flow);

    // Spatial gate.
    BaselineFrameModel gate;
    if (gate_preloaded) {
        gate = load_gate(c.gate_model);
    } else {
        gate = baseline_train({train}, {train_polars}, c.gate_bins, c.rf,
                              derive_seed(c.seed, 1));
        if (!c.gate_model.empty()) save_gate(gate, c.gate_model);
    }
    gate.decision_threshold = c.gate_threshold;

    // Region forest: binary abnormal/normal over region statistics, labels
    // transferred from frame labels (every region in an abnormal frame
    // counts abnormal) or from ground-truth boxes.
    RandomForestModel region_forest;
    std::vector<std::string> region_classes;
    if (rf_preloaded) {
        region_forest = rf_load(c.rf_model);
        region_classes = {"abnormal", "normal"};
        if (region_forest.n_classes != 2)
            throw DataError("small_scale: region model must be binary");
    } else {
        std::vector<std::vector<Region>> train_regions;
        train_regions.reserve(train_polars.size());
        for (const FlowPolar& polar : train_polars)
            train_regions.push_back(frame_regions(polar, c));
        FeatureTable table;
        if (c.region_labels == "boxes") {
            if (c.train_annotations.empty())
                throw DataError("small_scale: region_labels=boxes needs train_annotations");
            const auto rows = parse_annotations(c.train_annotations);
            std::vector<std::vector<TruthBox>> truth(train_polars.size());
            for (const AnnotationRow& r : rows) {
                if (r.frame >= static_cast<int>(truth.size()))
                    throw DataError("small_scale: annotation frame out of range");
                truth[r.frame].push_back({r.frame, 0, {r.x, r.y, r.w, r.h}, r.class_label});
            }
            table = batch_features(train_polars, train_regions, LabelSource::kBoxes,
                                   &truth, nullptr);
        } else {
            table = batch_features(train_polars, train_regions, LabelSource::kFrameLabels,
                                   nullptr, &train.frame_labels);
        }
        const RfDataset data = dataset_from_table(table);
        if (data.labels.empty())
            throw DataError("small_scale: no labeled training regions");
        region_forest = rf_train(data, c.rf, derive_seed(c.seed, 2));
        region_classes = table.class_names;
        if (!c.rf_model.empty()) rf_save(region_forest, c.rf_model);
    }
    const int abnormal_class = [&] {
        const auto it =
            std::find(region_classes.begin(), region_classes.end(), "abnormal");
        return it == region_classes.end()
                   ? 0
                   : static_cast<int>(it - region_classes.begin());
    }();

    // Test pass: gate every frame, extract regions only behind the gate.
    const std::vector<FlowPolar> test_polars = sequence_polars(test, c.flow);
    const int n_test = static_cast<int>(test.frames.size());
    std::vector<std::pair<double, int>> scored;
    ConfusionCounts frame_counts;
    std::vector<char> gated(n_test, 0);
    for (int t = 0; t < n_test; ++t) {
        const FrameVerdict v = gate.score_frame(test.frames[t], &test_polars[t]);
        const int label = test.frame_labels[t];
        scored.emplace_back(v.abnormal_score, label);
        if (v.is_abnormal && label) frame_counts.tp += 1;
        if (v.is_abnormal && !label) frame_counts.fp += 1;
        if (!v.is_abnormal && label) frame_counts.fn += 1;
        if (!v.is_abnormal && !label) frame_counts.tn += 1;
        gated[t] = v.is_abnormal ? 1 : 0;
    }

    std::vector<std::vector<Region>> test_regions(n_test);
    std::int64_t regions_total = 0, pred_abnormal = 0;
    for (int t = 0; t < n_test; ++t) {
        if (!gated[t]) continue;
        test_regions[t] = frame_regions(test_polars[t], c);
        for (const Region& region : test_regions[t]) {
            const FeatureVector f = region_features(test_polars[t], region);
            double buf[FeatureVector::kDim];
            f.to_row(buf);
            const RfPrediction pred = rf_predict(region_forest, buf);
            regions_total += 1;
            if (pred.class_id == abnormal_class) pred_abnormal += 1;
        }
    }

    // Frame-level ROC.
    RocCurve curve;
    bool roc_valid = true;
    try {
        curve = roc_auc(scored);
    } catch (const DataError&) {
        roc_valid = false;
    }

    MetricRows metrics;
    metrics.emplace_back("pipeline", "small_scale");
    metrics.emplace_back("train_frames", format_int(static_cast<long long>(train.frames.size())));
    metrics.emplace_back("test_frames", format_int(n_test));
    metrics.emplace_back("gate_trained", fmt_flag(!gate_preloaded));
    metrics.emplace_back("region_forest_trained", fmt_flag(!rf_preloaded));
    append_classification_rows(metrics, "frame", frame_counts);
    metrics.emplace_back("frame_auc", roc_valid ? format_double(curve.auc) : "nan");
    metrics.emplace_back("frame_roc_degenerate", fmt_flag(!roc_valid));
    std::int64_t gated_frames = 0;
    for (char g : gated) gated_frames += g ? 1 : 0;
    metrics.emplace_back("gated_frames", format_int(gated_frames));
    metrics.emplace_back("regions_total", format_int(regions_total));
    metrics.emplace_back("regions_pred_abnormal", format_int(pred_abnormal));
    metrics.emplace_back("regions_pred_normal", format_int(regions_total - pred_abnormal));

    // Localization against ground-truth boxes, over all test frames; regions
    // exist only behind the gate, so missed gates surface as detection FNs.
    if (!c.annotations.empty()) {
        const GroundTruth gt = ground_truth_by_frame(
            parse_annotations(c.annotations),
            static_cast<int>(test_orig.empty() ? 0 : test_orig.back() + 1));
        ConfusionCounts det_counts, pixel_counts;
        for (int t = 0; t < n_test; ++t) {
            const int orig = test_orig[t];
            const std::vector<BBox>& gts = orig < static_cast<int>(gt.boxes.size())
                                               ? gt.boxes[orig]
                                               : std::vector<BBox>{};
            std::vector<ScoredBox> preds;
            for (const Region& region : test_regions[t])
                preds.push_back({region.bbox(), 1.0});
            const MatchResult match = match_detections(preds, gts, 0.5);
            det_counts.tp += match.counts.tp;
            det_counts.fp += match.counts.fp;
            det_counts.fn += match.counts.fn;
            const ConfusionCounts px =
                pixel_accuracy(preds, gts, match.pairs, test.width(), test.height());
            pixel_counts.tp += px.tp;
            pixel_counts.fp += px.fp;
            pixel_counts.fn += px.fn;
            pixel_counts.tn += px.tn;
        }
        append_classification_rows(metrics, "detection", det_counts);
        append_classification_rows(metrics, "pixel", pixel_counts);
    }

    write_bundle_base(c, curve, roc_valid, metrics, {});
    return result;
}

// ---------------------------------------------------------------- large ---

struct DetRecord {
    int frame = 0;
    BBox box;
    double confidence = 1.0;
    int pred_class = 0;
    std::vector<double> proba;
    int gt_class = -1;  // index into the model's class list, -1 = unmatched
};

RunResult run_large_scale(const PipelineConfig& c) {
    RunResult result;
    result.bundle_dir = c.out_dir;
    if (c.frames_dir.empty()) throw DataError("large_scale: frames_dir is required");
    VideoSequence test = load_sequence(c.frames_dir, c.frames_pattern, c.crop_top);
    const int n_test = static_cast<int>(test.frames.size());
    const std::vector<FlowPolar> polars = sequence_polars(test, c.flow);

    // Behavior forest over region statistics.
    RandomForestModel forest;
    std::vector<std::string> classes;
    const bool rf_preloaded = !c.rf_model.empty() && std::filesystem::exists(c.rf_model);
    if (rf_preloaded) {
        forest = rf_load(c.rf_model);
        if (c.classes.empty())
            throw DataError("large_scale: 'classes' is required with a preloaded model");
        std::string token;
        for (char ch : c.classes + ",") {
            if (ch == ',') {
                if (!token.empty()) classes.push_back(token);
                token.clear();
            } else {
                token += ch;
            }
        }
        if (static_cast<int>(classes.size()) != forest.n_classes)
            throw DataError("large_scale: 'classes' lists " +
                            format_int(static_cast<long long>(classes.size())) +
                            " names but the model has " + format_int(forest.n_classes) +
                            " classes");
        if (!std::is_sorted(classes.begin(), classes.end()))
            throw DataError("large_scale: 'classes' must be sorted (class ids follow "
                            "sorted names)");
    } else {
        if (c.train_frames_dir.empty() || c.train_annotations.empty())
            throw DataError(
                "large_scale: rf_model or train_frames_dir + train_annotations required");
        const VideoSequence train =
            load_sequence(c.train_frames_dir, c.frames_pattern, c.crop_top);
        const std::vector<FlowPolar> train_polars = sequence_polars(train, c.flow);
        const auto rows = parse_annotations(c.train_annotations);
        std::set<std::string> names;
        for (const AnnotationRow& row : rows) names.insert(row.class_label);
        classes.assign(names.begin(), names.end());
        if (classes.size() < 2)
            throw DataError("large_scale: training annotations hold a single class");

        RfDataset data;
        data.n_features = FeatureVector::kDim;
        std::int64_t row_id = 0;
        for (const AnnotationRow& row : rows) {
            if (row.frame >= static_cast<int>(train_polars.size()))
                throw DataError("large_scale: annotation frame " + format_int(row.frame) +
                                " beyond training sequence");
            const Region region = region_from_box({row.x, row.y, row.w, row.h},
                                                  train.width(), train.height());
            const FeatureVector f = region_features(train_polars[row.frame], region);
            double buf[FeatureVector::kDim];
            f.to_row(buf);
            data.values.insert(data.values.end(), buf, buf + FeatureVector::kDim);
            data.labels.push_back(static_cast<int>(
                std::find(classes.begin(), classes.end(), row.class_label) -
                classes.begin()));
            data.row_ids.push_back(row_id++);
        }
        forest = rf_train(data, c.rf, derive_seed(c.seed, 3));
        if (!c.rf_model.empty()) rf_save(forest, c.rf_model);
    }

    // Detections: ingested, or the flow-mask baseline detector.
    std::vector<std::vector<Detection>> detections(n_test);
    if (!c.detections.empty()) {
        IngestedDetections ingested =
            ingest_detections(c.detections, test.width(), test.height());
        for (const std::string& w : ingested.warnings)
            result.warnings.push_back("detections: " + w);
        if (static_cast<int>(ingested.by_frame.size()) > n_test)
            throw DataError("large_scale: ingested detections reference frame beyond "
                            "sequence length");
        for (std::size_t t = 0; t < ingested.by_frame.size(); ++t)
            detections[t] = std::move(ingested.by_frame[t]);
    } else {
        for (int t = 0; t < n_test; ++t) {
            for (const Region& region : frame_regions(polars[t], c)) {
                Detection det;
                det.frame = t;
                det.box = region.bbox();
                detections[t].push_back(std::move(det));
            }
        }
    }

    // Ground truth, when provided.
    GroundTruth gt;
    const bool have_gt = !c.annotations.empty();
    if (have_gt) {
        const auto rows = parse_annotations(c.annotations);
        for (const AnnotationRow& row : rows)
            if (std::find(classes.begin(), classes.end(), row.class_label) == classes.end())
                throw DataError("large_scale: test annotation class '" + row.class_label +
                                "' is not among the model classes");
        gt = ground_truth_by_frame(rows, n_test);
    }

    // Classify every detection; the ingested class label, if any, is
    // deliberately ignored here so recognition stays with the forest.
    std::vector<DetRecord> records;
    std::vector<int> det_offset(n_test + 1, 0);
    for (int t = 0; t < n_test; ++t) {
        det_offset[t] = static_cast<int>(records.size());
        for (const Detection& det : detections[t]) {
            const Region region = region_from_box(det.box, test.width(), test.height());
            const FeatureVector f = region_features(polars[t], region);
            double buf[FeatureVector::kDim];
            f.to_row(buf);
            const RfPrediction pred = rf_predict(forest, buf);
            DetRecord r;
            r.frame = t;
            r.box = det.box;
            r.confidence = det.confidence;
            r.pred_class = pred.class_id;
            r.proba = pred.proba;
            records.push_back(std::move(r));
        }
    }
    det_offset[n_test] = static_cast<int>(records.size());
    const std::int64_t total_dets = static_cast<std::int64_t>(records.size());

    // Track everything the detector produced.
    MultiObjectTracker tracker(test.width(), test.height(), c.tracker);
    for (int t = 0; t < n_test; ++t) tracker.step(t, detections[t]);

    // Detection-level matching and per-class scores.
    ConfusionCounts det_counts, pixel_counts;
    std::vector<std::int64_t> gt_total(classes.size(), 0);
    std::vector<std::int64_t> gt_correct(classes.size(), 0);
    if (have_gt) {
        for (int t = 0; t < n_test; ++t) {
            std::vector<ScoredBox> preds;
            for (int k = det_offset[t]; k < det_offset[t + 1]; ++k)
                preds.push_back({records[k].box, records[k].confidence});
            const MatchResult match = match_detections(preds, gt.boxes[t], 0.5);
            det_counts.tp += match.counts.tp;
            det_counts.fp += match.counts.fp;
            det_counts.fn += match.counts.fn;
            const ConfusionCounts px = pixel_accuracy(preds, gt.boxes[t], match.pairs,
                                                      test.width(), test.height());
            pixel_counts.tp += px.tp;
            pixel_counts.fp += px.fp;
            pixel_counts.fn += px.fn;
            pixel_counts.tn += px.tn;
            for (const auto& [pi, gi] : match.pairs) {
                DetRecord& r = records[det_offset[t] + pi];
                r.gt_class = static_cast<int>(
                    std::find(classes.begin(), classes.end(), gt.labels[t][gi]) -
                    classes.begin());
            }
            for (std::size_t g = 0; g < gt.labels[t].size(); ++g) {
                const int cid = static_cast<int>(
                    std::find(classes.begin(), classes.end(), gt.labels[t][g]) -
                    classes.begin());
                gt_total[cid] += 1;
            }
            for (const auto& [pi, gi] : match.pairs) {
                const DetRecord& r = records[det_offset[t] + pi];
                if (r.pred_class == r.gt_class) gt_correct[r.gt_class] += 1;
            }
        }
    }

    // One-vs-rest AUC per class over matched detections.
    std::vector<double> class_auc(classes.size(),
                                  std::numeric_limits<double>::quiet_NaN());
    RocCurve roc;
    bool roc_valid = false;
    std::string roc_class = "-";
    if (have_gt) {
        for (std::size_t cid = 0; cid < classes.size(); ++cid) {
            std::vector<std::pair<double, int>> scored;
            for (const DetRecord& r : records)
                if (r.gt_class >= 0)
                    scored.emplace_back(r.proba[cid],
                                        r.gt_class == static_cast<int>(cid) ? 1 : 0);
            try {
                const RocCurve curve = roc_auc(scored);
                class_auc[cid] = curve.auc;
                if (!roc_valid) {
                    roc = curve;
                    roc_valid = true;
                    roc_class = classes[cid];
                }
            } catch (const DataError&) {
            }
        }
    }

    // Track assignment per frame, and per track in isolation.
    std::vector<std::vector<BBox>> track_boxes(n_test);
    std::vector<std::vector<int>> track_ids(n_test);
    for (const TrackRecord& r : tracker.records()) {
        track_boxes[r.frame].push_back({r.cx - r.w / 2, r.cy - r.h / 2, r.w, r.h});
        track_ids[r.frame].push_back(r.track_id);
    }
    const TrackCriterion criterion = c.track_criterion == "center"
                                         ? TrackCriterion::kCenterInBox
                                         : TrackCriterion::kIouHalf;
    ConfusionCounts track_counts;
    std::int64_t tracks_matched = 0;
    if (have_gt) {
        const auto flags = track_assignment_flags(track_boxes, gt.boxes, criterion);
        for (std::size_t f = 0; f < flags.size(); ++f) {
            std::int64_t tp = 0;
            for (char hit : flags[f]) tp += hit ? 1 : 0;
            track_counts.tp += tp;
            track_counts.fp += static_cast<std::int64_t>(flags[f].size()) - tp;
            track_counts.fn += static_cast<std::int64_t>(gt.boxes[f].size()) - tp;
        }
        // A track counts as matched when at least half of its frames hit.
        std::map<int, std::pair<std::int64_t, std::int64_t>> per_track;  // id -> (hits, n)
        for (int t = 0; t < n_test; ++t)
            for (std::size_t k = 0; k < track_ids[t].size(); ++k) {
                auto& [hits, n] = per_track[track_ids[t][k]];
                hits += flags[t][k] ? 1 : 0;
                n += 1;
            }
        for (const auto& [id, hn] : per_track)
            if (2 * hn.first >= hn.second) tracks_matched += 1;
    }

    // Per-track majority class.
    struct TrackClass {
        int track_id;
        TrackStatus status;
        std::int64_t detections;
        std::string majority;
    };
    std::vector<TrackClass> track_classes;
    for (const Track& track : tracker.tracks()) {
        std::vector<std::int64_t> votes(classes.size(), 0);
        for (int det_id : track.detection_ids) votes[records[det_id].pred_class] += 1;
        int best = 0;
        for (std::size_t cid = 1; cid < votes.size(); ++cid)
            if (votes[cid] > votes[best]) best = static_cast<int>(cid);
        track_classes.push_back({track.id, track.status,
                                 static_cast<std::int64_t>(track.detection_ids.size()),
                                 classes[best]});
    }

    // Reports.
    MetricRows metrics;
    metrics.emplace_back("pipeline", "large_scale");
    metrics.emplace_back("test_frames", format_int(n_test));
    metrics.emplace_back("detections_total", format_int(total_dets));
    metrics.emplace_back("degenerate_run", fmt_flag(total_dets == 0));
    {
        std::string joined;
        for (const std::string& name : classes) {
            if (!joined.empty()) joined += ';';
            joined += name;
        }
        metrics.emplace_back("classes", joined);
    }
    std::int64_t confirmed = 0;
    for (const Track& track : tracker.tracks())
        if (track.status == TrackStatus::kConfirmed) confirmed += 1;
    metrics.emplace_back("tracks_total",
                         format_int(static_cast<long long>(tracker.tracks().size())));
    metrics.emplace_back("tracks_confirmed", format_int(confirmed));
    if (have_gt) {
        append_classification_rows(metrics, "detection", det_counts);
        append_classification_rows(metrics, "pixel", pixel_counts);
        for (std::size_t cid = 0; cid < classes.size(); ++cid) {
            const std::string value =
                gt_total[cid] ? format_double(static_cast<double>(gt_correct[cid]) /
                                              static_cast<double>(gt_total[cid]))
                              : "nan";
            metrics.emplace_back("recall_" + classes[cid], value);
        }
        double auc_sum = 0;
        int auc_n = 0;
        for (std::size_t cid = 0; cid < classes.size(); ++cid) {
            metrics.emplace_back("auc_" + classes[cid],
                                 std::isnan(class_auc[cid]) ? "nan"
                                                            : format_double(class_auc[cid]));
            if (!std::isnan(class_auc[cid])) {
                auc_sum += class_auc[cid];
                auc_n += 1;
            }
        }
        metrics.emplace_back("macro_ovr_auc",
                             auc_n ? format_double(auc_sum / auc_n) : "nan");
        metrics.emplace_back("track_criterion", c.track_criterion);
        append_classification_rows(metrics, "track", track_counts);
        metrics.emplace_back("track_level_matched", format_int(tracks_matched));
        metrics.emplace_back("track_level_total",
                             format_int(static_cast<long long>(tracker.tracks().size())));
        metrics.emplace_back(
            "track_level_precision",
            tracker.tracks().empty()
                ? "nan"
                : format_double(static_cast<double>(tracks_matched) /
                                static_cast<double>(tracker.tracks().size())));
    }
    metrics.emplace_back("roc_class", roc_class);

    write_bundle_base(c, roc, roc_valid, metrics, tracker.records());

    const std::filesystem::path dir(c.out_dir);
    {
        std::ofstream out(dir / "detections.csv");
        if (!out) throw DataError("cannot write " + (dir / "detections.csv").string());
        out << "frame,x,y,w,h,confidence,predicted_class,score,gt_class\n";
        for (const DetRecord& r : records)
            out << r.frame << ',' << format_double(r.box.x) << ',' << format_double(r.box.y)
                << ',' << format_double(r.box.w) << ',' << format_double(r.box.h) << ','
                << format_double(r.confidence) << ',' << classes[r.pred_class] << ','
                << format_double(r.proba[r.pred_class]) << ','
                << (r.gt_class >= 0 ? classes[r.gt_class] : "-") << '\n';
    }
    {
        std::ofstream out(dir / "track_classes.csv");
        if (!out)
            throw DataError("cannot write " + (dir / "track_classes.csv").string());
        out << "track_id,status,detections,majority_class\n";
        for (const TrackClass& t : track_classes)
            out << t.track_id << ',' << to_string(t.status) << ',' << t.detections << ','
                << t.majority << '\n';
    }
    return result;
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& config) {
    config.validate();
    return config.pipeline == "large_scale" ? run_large_scale(config)
                                            : run_small_scale(config);
}

}  // namespace crowdsight
