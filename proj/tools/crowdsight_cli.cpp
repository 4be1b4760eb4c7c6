// crowdsight command-line front end. Every subcommand is a thin wrapper over
// the library; all real behavior lives in crowdsight/*.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crowdsight/classifier.hpp"
#include "crowdsight/config.hpp"
#include "crowdsight/dataset_io.hpp"
#include "crowdsight/evaluation.hpp"
#include "crowdsight/features.hpp"
#include "crowdsight/pipeline.hpp"
#include "crowdsight/rng.hpp"
#include "crowdsight/synth.hpp"
#include "crowdsight/tracking.hpp"

namespace fs = std::filesystem;
using namespace crowdsight;

namespace {

std::string pair_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "pair_%06d.flow", index);
    return buf;
}

void cmd_synth(const std::string& preset, std::uint64_t seed, const std::string& out,
               int frame_count) {
    SynthSpec spec = preset == "large_scale" ? large_scale_scenario(seed)
                                             : small_scale_scenario(seed);
    if (frame_count > 0) spec.frame_count = frame_count;
    const SynthResult result = generate_synthetic(spec);
    for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";

    const fs::path dir(out);
    fs::create_directories(dir / "frames");
    save_sequence(result.sequence, dir / "frames");
    write_frame_labels(result.sequence.frame_labels, dir / "frame_labels.csv");

    // Truth boxes for actors with a vocabulary behavior; background crowd
    // actors ("normal") carry no class row.
    std::vector<AnnotationRow> rows;
    for (const auto& frame_truth : result.truth)
        for (const TruthBox& tb : frame_truth)
            if (is_known_class(tb.behavior))
                rows.push_back({preset, tb.frame, tb.box.x, tb.box.y, tb.box.w, tb.box.h,
                                tb.behavior});
    write_annotations(rows, dir / "annotations.csv");
    std::cout << "synth: " << result.sequence.frames.size() << " frames, "
              << rows.size() << " annotation rows -> " << out << "\n";
}

void cmd_flow(const std::string& frames, const std::string& pattern, int crop_top,
              const HsParams& params, const std::string& out) {
    const VideoSequence seq = load_sequence(frames, pattern, crop_top);
    if (seq.frames.size() < 2) throw DataError("flow: need at least two frames");
    fs::create_directories(out);
    for (std::size_t i = 0; i + 1 < seq.frames.size(); ++i) {
        const FlowField flow = horn_schunck(seq.frames[i], seq.frames[i + 1], params);
        write_flow(flow, fs::path(out) / pair_name(static_cast<int>(i)));
    }
    std::cout << "flow: " << seq.frames.size() - 1 << " pair fields -> " << out << "\n";
}

void cmd_mask(const std::string& flow_file, double threshold, const std::string& out) {
    const FlowPolar polar = to_polar(read_flow(flow_file));
    const double t = threshold >= 0 ? threshold : adaptive_threshold(polar);
    write_mask_pgm(magnitude_mask(polar, t), out);
    std::cout << "mask: threshold " << format_double(t) << " -> " << out << "\n";
}

void cmd_detect(const std::string& flow_file, double threshold, int min_area, int frame,
                const std::string& out) {
    const FlowPolar polar = to_polar(read_flow(flow_file));
    const double t = threshold >= 0 ? threshold : adaptive_threshold(polar);
    const std::vector<Region> regions =
        connected_components(magnitude_mask(polar, t), min_area);
    std::ofstream file(out);
    if (!file) throw DataError("cannot write " + out);
    file << "video_id,frame,x,y,w,h,class_label\n";
    for (const Region& region : regions)
        file << "detect," << frame << ',' << region.x << ',' << region.y << ','
             << region.w << ',' << region.h << ",\n";
    std::cout << "detect: " << regions.size() << " regions -> " << out << "\n";
}

void cmd_features(const std::string& frames, const std::string& pattern, int crop_top,
                  const HsParams& params, double threshold, int min_area,
                  const std::string& labels, const std::string& annotations,
                  const std::string& out) {
    VideoSequence seq = load_sequence(frames, pattern, crop_top);
    const std::vector<FlowPolar> polars = sequence_polars(seq, params);
    std::vector<std::vector<Region>> regions;
    regions.reserve(polars.size());
    for (const FlowPolar& polar : polars) {
        const double t = threshold >= 0 ? threshold : adaptive_threshold(polar);
        regions.push_back(connected_components(magnitude_mask(polar, t), min_area));
    }
    FeatureTable table;
    if (!labels.empty()) {
        const std::vector<int> frame_labels =
            read_frame_labels(labels, static_cast<int>(seq.frames.size()));
        table = batch_features(polars, regions, LabelSource::kFrameLabels, nullptr,
                               &frame_labels);
    } else if (!annotations.empty()) {
        std::vector<std::vector<TruthBox>> truth(polars.size());
        for (const AnnotationRow& row : parse_annotations(annotations)) {
            if (row.frame >= static_cast<int>(truth.size()))
                throw DataError("features: annotation frame out of range");
            truth[row.frame].push_back(
                {row.frame, 0, {row.x, row.y, row.w, row.h}, row.class_label});
        }
        table = batch_features(polars, regions, LabelSource::kBoxes, &truth, nullptr);
    } else {
        table = batch_features(polars, regions);
    }
    write_feature_csv(table, out);
    std::cout << "features: " << table.rows.size() << " rows -> " << out << "\n";
}

void cmd_track(const std::string& detections, int width, int height,
               const TrackerParams& params, const std::string& out) {
    IngestedDetections ingested = ingest_detections(detections, width, height);
    for (const std::string& w : ingested.warnings) std::cerr << "warning: " << w << "\n";
    MultiObjectTracker tracker(width, height, params);
    for (std::size_t t = 0; t < ingested.by_frame.size(); ++t)
        tracker.step(static_cast<int>(t), ingested.by_frame[t]);
    write_tracks_csv(tracker.records(), out);
    std::cout << "track: " << tracker.tracks().size() << " tracks, "
              << tracker.records().size() << " records -> " << out << "\n";
}

void cmd_train_gate(const std::string& frames, const std::string& pattern, int crop_top,
                    const std::string& labels, const HsParams& flow, int bins,
                    const RfParams& rf, std::uint64_t seed, const std::string& out) {
    VideoSequence seq = load_sequence(frames, pattern, crop_top);
    seq.frame_labels = read_frame_labels(labels, static_cast<int>(seq.frames.size()));
    seq.frame_labels.resize(seq.frames.size(), 0);
    const BaselineFrameModel model = baseline_train({seq}, flow, bins, rf, seed);
    save_gate(model, out);
    std::cout << "train-gate: " << model.forest.trees.size() << " trees -> " << out
              << "\n";
}

void cmd_train_rf(const std::string& features, const RfParams& rf, std::uint64_t seed,
                  const std::string& out) {
    const FeatureTable table = read_feature_csv(features);
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
    if (data.labels.empty()) throw DataError("train-rf: no labeled rows in " + features);
    const RandomForestModel model = rf_train(data, rf, seed);
    rf_save(model, out);
    std::string names;
    for (const std::string& name : table.class_names) {
        if (!names.empty()) names += ',';
        names += name;
    }
    std::cout << "train-rf: " << data.labels.size() << " rows, classes " << names
              << " -> " << out << "\n";
}

void cmd_run(const std::string& config_file, const std::string& pipeline,
             std::uint64_t seed, bool seed_set, const std::string& out) {
    PipelineConfig config = PipelineConfig::from_file(config_file);
    if (!pipeline.empty()) config.pipeline = pipeline;
    if (seed_set) config.seed = seed;
    if (!out.empty()) config.out_dir = out;
    const RunResult result = run_pipeline(config);
    for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "run: report bundle -> " << result.bundle_dir << "\n";
}

void cmd_eval(const std::string& pred_file, const std::string& gt_file, double iou_thr,
              int width, int height, const std::string& out) {
    const auto preds = parse_annotations(pred_file, true);
    const auto gts = parse_annotations(gt_file);
    int n_frames = 0;
    for (const AnnotationRow& r : preds) n_frames = std::max(n_frames, r.frame + 1);
    for (const AnnotationRow& r : gts) n_frames = std::max(n_frames, r.frame + 1);
    std::vector<std::vector<ScoredBox>> p(n_frames);
    std::vector<std::vector<BBox>> g(n_frames);
    for (const AnnotationRow& r : preds) p[r.frame].push_back({{r.x, r.y, r.w, r.h}, 1.0});
    for (const AnnotationRow& r : gts) g[r.frame].push_back({r.x, r.y, r.w, r.h});

    ConfusionCounts det, px;
    for (int t = 0; t < n_frames; ++t) {
        const MatchResult match = match_detections(p[t], g[t], iou_thr);
        det.tp += match.counts.tp;
        det.fp += match.counts.fp;
        det.fn += match.counts.fn;
        if (width > 0 && height > 0) {
            const ConfusionCounts c = pixel_accuracy(p[t], g[t], match.pairs, width, height);
            px.tp += c.tp;
            px.fp += c.fp;
            px.fn += c.fn;
            px.tn += c.tn;
        }
    }
    std::vector<std::pair<std::string, std::string>> rows;
    auto push = [&rows](const std::string& prefix, const ConfusionCounts& counts) {
        const ClassificationMetrics m = classification_metrics(counts);
        rows.emplace_back(prefix + "_tp", format_int(counts.tp));
        rows.emplace_back(prefix + "_tn", format_int(counts.tn));
        rows.emplace_back(prefix + "_fp", format_int(counts.fp));
        rows.emplace_back(prefix + "_fn", format_int(counts.fn));
        rows.emplace_back(prefix + "_precision", format_double(m.precision));
        rows.emplace_back(prefix + "_recall", format_double(m.recall));
        rows.emplace_back(prefix + "_f1", format_double(m.f1));
    };
    push("detection", det);
    if (width > 0 && height > 0) push("pixel", px);
    if (out.empty()) {
        std::cout << "metric,value\n";
        for (const auto& [k, v] : rows) std::cout << k << ',' << v << "\n";
    } else {
        write_metrics_csv(out, rows);
        std::cout << "eval: metrics -> " << out << "\n";
    }
}

void cmd_plot_roc(const std::string& scores_file, const std::string& out,
                  const std::string& csv) {
    std::ifstream in(scores_file);
    if (!in) throw DataError("cannot open " + scores_file);
    std::vector<std::pair<double, int>> scored;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no += 1;
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("score", 0) == 0) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError(scores_file + ":" + format_int(line_no) +
                            ": expected score,label");
        try {
            scored.emplace_back(std::stod(line.substr(0, comma)),
                                std::stoi(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw DataError(scores_file + ":" + format_int(line_no) + ": bad number");
        }
    }
    const RocCurve curve = roc_auc(scored);
    write_roc_svg(out, curve);
    if (!csv.empty()) write_roc_csv(csv, curve);
    std::cout << "plot-roc: AUC " << format_double(curve.auc) << " -> " << out << "\n";
}

void add_flow_options(CLI::App* cmd, HsParams& params) {
    cmd->add_option("--alpha", params.alpha, "Smoothness weight");
    cmd->add_option("--iterations", params.iterations, "Fixed-point iterations");
    cmd->add_option("--sigma", params.presmooth_sigma, "Pre-smoothing Gaussian sigma");
}

void add_rf_options(CLI::App* cmd, RfParams& params) {
    cmd->add_option("--trees", params.n_trees, "Number of trees");
    cmd->add_option("--mtry", params.mtry, "Features per split (0 = ceil(sqrt(d)))");
    cmd->add_option("--min-leaf", params.min_samples_leaf, "Minimum samples per leaf");
    cmd->add_option("--max-depth", params.max_depth, "Depth cap (0 = unlimited)");
    cmd->add_flag("--balanced", params.balanced_class_weights, "Balanced class weights");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crowdsight: spatio-temporal crowd anomaly analysis"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a bundled synthetic scenario");
    std::string synth_preset = "small_scale";
    std::uint64_t synth_seed = 1;
    std::string synth_out = "synth";
    int synth_frames = 0;
    synth->add_option("--preset", synth_preset, "Scenario preset")
        ->check(CLI::IsMember({"small_scale", "large_scale"}));
    synth->add_option("--seed", synth_seed, "Master seed");
    synth->add_option("--out", synth_out, "Output directory");
    synth->add_option("--frames", synth_frames, "Override frame count");

    // flow
    auto* flow = app.add_subcommand("flow", "Optical flow over consecutive frame pairs");
    std::string flow_frames, flow_pattern = "*", flow_out = "flow";
    int flow_crop = 0;
    HsParams flow_params;
    flow->add_option("--frames", flow_frames, "Frame directory")->required();
    flow->add_option("--pattern", flow_pattern, "Filename glob");
    flow->add_option("--crop-top", flow_crop, "Rows to drop from the top");
    add_flow_options(flow, flow_params);
    flow->add_option("--out", flow_out, "Output directory");

    // mask
    auto* mask = app.add_subcommand("mask", "Binary magnitude mask from a flow field");
    std::string mask_flow, mask_out = "mask.pgm";
    double mask_threshold = -1;
    mask->add_option("--flow", mask_flow, "Flow field file")->required();
    mask->add_option("--threshold", mask_threshold,
                     "Magnitude threshold (omit for adaptive mean + sd)");
    mask->add_option("--out", mask_out, "Output PGM");

    // detect
    auto* detect = app.add_subcommand("detect", "Connected regions of the magnitude mask");
    std::string detect_flow, detect_out = "detections.csv";
    double detect_threshold = -1;
    int detect_min_area = 8, detect_frame = 0;
    detect->add_option("--flow", detect_flow, "Flow field file")->required();
    detect->add_option("--threshold", detect_threshold,
                       "Magnitude threshold (omit for adaptive)");
    detect->add_option("--min-area", detect_min_area, "Minimum component area");
    detect->add_option("--frame", detect_frame, "Frame index for the output rows");
    detect->add_option("--out", detect_out, "Output CSV");

    // features
    auto* features = app.add_subcommand("features", "Per-region flow statistics");
    std::string feat_frames, feat_pattern = "*", feat_labels, feat_annotations;
    std::string feat_out = "features.csv";
    int feat_crop = 0, feat_min_area = 8;
    double feat_threshold = -1;
    HsParams feat_params;
    features->add_option("--frames", feat_frames, "Frame directory")->required();
    features->add_option("--pattern", feat_pattern, "Filename glob");
    features->add_option("--crop-top", feat_crop, "Rows to drop from the top");
    add_flow_options(features, feat_params);
    features->add_option("--threshold", feat_threshold,
                         "Magnitude threshold (omit for adaptive)");
    features->add_option("--min-area", feat_min_area, "Minimum component area");
    features->add_option("--labels", feat_labels, "Frame-label CSV (label rows by frame)");
    features->add_option("--annotations", feat_annotations,
                         "Annotation CSV (label rows by best-IOU box)");
    features->add_option("--out", feat_out, "Output CSV");

    // track
    auto* track = app.add_subcommand("track", "Kalman multi-object tracking");
    std::string track_dets, track_out = "tracks.csv";
    int track_w = 0, track_h = 0;
    TrackerParams track_params;
    track->add_option("--detections", track_dets, "Detection CSV")->required();
    track->add_option("--width", track_w, "Frame width")->required();
    track->add_option("--height", track_h, "Frame height")->required();
    track->add_option("--confirm-hits", track_params.confirm_hits, "Hits to confirm");
    track->add_option("--max-misses", track_params.max_misses, "Misses to kill");
    track->add_option("--gate", track_params.gate,
                      "Association gate, px (0 = frame-diagonal default)");
    track->add_option("--out", track_out, "Output CSV");

    // train-gate
    auto* tgate = app.add_subcommand("train-gate", "Train the frame-level gate");
    std::string tg_frames, tg_pattern = "*", tg_labels, tg_out = "gate.bin";
    int tg_crop = 0, tg_bins = 16;
    std::uint64_t tg_seed = 1;
    HsParams tg_flow;
    RfParams tg_rf;
    tgate->add_option("--frames", tg_frames, "Frame directory")->required();
    tgate->add_option("--pattern", tg_pattern, "Filename glob");
    tgate->add_option("--crop-top", tg_crop, "Rows to drop from the top");
    tgate->add_option("--labels", tg_labels, "Frame-label CSV")->required();
    add_flow_options(tgate, tg_flow);
    tgate->add_option("--bins", tg_bins, "Histogram bins");
    add_rf_options(tgate, tg_rf);
    tgate->add_option("--seed", tg_seed, "Training seed");
    tgate->add_option("--out", tg_out, "Output model file");

    // train-rf
    auto* trf = app.add_subcommand("train-rf", "Train a forest on a feature CSV");
    std::string trf_features, trf_out = "forest.bin";
    std::uint64_t trf_seed = 1;
    RfParams trf_rf;
    trf->add_option("--features", trf_features, "Feature CSV with labels")->required();
    add_rf_options(trf, trf_rf);
    trf->add_option("--seed", trf_seed, "Training seed");
    trf->add_option("--out", trf_out, "Output model file");

    // run
    auto* run = app.add_subcommand("run", "Run a configured pipeline end to end");
    std::string run_config, run_pipeline_name, run_out;
    std::uint64_t run_seed = 0;
    run->add_option("--config", run_config, "Pipeline config file")->required();
    run->add_option("--pipeline", run_pipeline_name, "Override the configured pipeline")
        ->check(CLI::IsMember({"small_scale", "large_scale"}));
    auto* run_seed_opt = run->add_option("--seed", run_seed, "Override the seed");
    run->add_option("--out", run_out, "Override the report directory");

    // eval
    auto* eval = app.add_subcommand("eval", "Detection metrics for predictions vs truth");
    std::string eval_pred, eval_gt, eval_out;
    double eval_iou = 0.5;
    int eval_w = 0, eval_h = 0;
    eval->add_option("--pred", eval_pred, "Predicted boxes CSV")->required();
    eval->add_option("--gt", eval_gt, "Ground-truth boxes CSV")->required();
    eval->add_option("--iou", eval_iou, "IOU match threshold");
    eval->add_option("--width", eval_w, "Frame width (enables pixel metrics)");
    eval->add_option("--height", eval_h, "Frame height (enables pixel metrics)");
    eval->add_option("--out", eval_out, "Output CSV (default stdout)");

    // plot-roc
    auto* plot = app.add_subcommand("plot-roc", "ROC curve SVG from a score,label CSV");
    std::string plot_scores, plot_out = "roc.svg", plot_csv;
    plot->add_option("--scores", plot_scores, "score,label CSV")->required();
    plot->add_option("--out", plot_out, "Output SVG");
    plot->add_option("--csv", plot_csv, "Also write the curve points as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*synth) cmd_synth(synth_preset, synth_seed, synth_out, synth_frames);
        if (*flow) cmd_flow(flow_frames, flow_pattern, flow_crop, flow_params, flow_out);
        if (*mask) cmd_mask(mask_flow, mask_threshold, mask_out);
        if (*detect)
            cmd_detect(detect_flow, detect_threshold, detect_min_area, detect_frame,
                       detect_out);
        if (*features)
            cmd_features(feat_frames, feat_pattern, feat_crop, feat_params, feat_threshold,
                         feat_min_area, feat_labels, feat_annotations, feat_out);
        if (*track) cmd_track(track_dets, track_w, track_h, track_params, track_out);
        if (*tgate)
            cmd_train_gate(tg_frames, tg_pattern, tg_crop, tg_labels, tg_flow, tg_bins,
                           tg_rf, tg_seed, tg_out);
        if (*trf) cmd_train_rf(trf_features, trf_rf, trf_seed, trf_out);
        if (*run)
            cmd_run(run_config, run_pipeline_name, run_seed, run_seed_opt->count() > 0,
                    run_out);
        if (*eval) cmd_eval(eval_pred, eval_gt, eval_iou, eval_w, eval_h, eval_out);
        if (*plot) cmd_plot_roc(plot_scores, plot_out, plot_csv);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
