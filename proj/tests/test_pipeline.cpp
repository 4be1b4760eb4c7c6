#include "doctest.h"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "crowdsight/csv.hpp"
#include "crowdsight/dataset_io.hpp"
#include "crowdsight/pipeline.hpp"
#include "crowdsight/synth.hpp"
#include "testutil.hpp"

using namespace crowdsight;
using testutil::TempDir;
using testutil::slurp;

namespace {

std::map<std::string, std::string> metrics_map(const std::filesystem::path& file) {
    std::map<std::string, std::string> out;
    const std::string text = slurp(file);
    std::size_t pos = text.find('\n') + 1;  // skip the header
    while (pos < text.size()) {
        const std::size_t eol = text.find('\n', pos);
        const std::string line = text.substr(pos, eol - pos);
        const std::size_t comma = line.find(',');
        out[line.substr(0, comma)] = line.substr(comma + 1);
        pos = eol + 1;
    }
    return out;
}

// Tiny two-actor clip: a drifter throughout, a 3x runner over the labeled
// interval. Small canvas keeps the flow solver cheap in unit tests.
SynthSpec tiny_scene(std::uint64_t seed) {
    SynthSpec spec;
    spec.width = 48;
    spec.height = 48;
    spec.frame_count = 14;
    spec.seed = seed;
    spec.background_amplitude = 0.45;
    spec.abnormal_intervals = {{6, 12}};
    ActorSpec drifter;
    drifter.x0 = 2;
    drifter.y0 = 6;
    drifter.vx = 1;
    drifter.w = 12;
    drifter.h = 12;
    drifter.behavior = "normal";
    spec.actors.push_back(drifter);
    ActorSpec runner;
    runner.x0 = 2;
    runner.y0 = 30;
    runner.vx = 3;
    runner.w = 12;
    runner.h = 12;
    runner.behavior = "running";
    runner.first_frame = 6;
    runner.last_frame = 13;
    spec.actors.push_back(runner);
    return spec;
}

void materialize(const SynthSpec& spec, const std::filesystem::path& dir,
                 bool with_labels) {
    const SynthResult r = generate_synthetic(spec);
    std::filesystem::create_directories(dir);
    save_sequence(r.sequence, dir);
    if (with_labels) write_frame_labels(r.sequence.frame_labels, dir / "labels.csv");
}

PipelineConfig small_config(const std::filesystem::path& train_dir,
                            const std::filesystem::path& test_dir,
                            const std::filesystem::path& out_dir) {
    PipelineConfig c;
    c.pipeline = "small_scale";
    c.seed = 5;
    c.frames_dir = test_dir.string();
    c.frames_pattern = "*.pgm";
    c.frame_labels = (test_dir / "labels.csv").string();
    c.train_frames_dir = train_dir.string();
    c.train_frame_labels = (train_dir / "labels.csv").string();
    c.out_dir = out_dir.string();
    c.flow.alpha = 0.25;
    c.flow.iterations = 40;
    c.mask_mode = "fixed";
    c.mask_threshold = 0.25;
    c.gate_bins = 8;
    c.rf.n_trees = 25;
    return c;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("region_from_box rasterizes pixel centers") {
    const Region r = region_from_box({1.2, 2.6, 2, 1}, 16, 16, 3);
    CHECK(r.id == 3);
    CHECK(r.x == 1);
    CHECK(r.y == 3);
    CHECK(r.w == 2);
    CHECK(r.h == 1);
    CHECK(r.pixel_indices == std::vector<int>{3 * 16 + 1, 3 * 16 + 2});

    const Region clipped = region_from_box({-2, 0, 6, 1}, 16, 16);
    CHECK(clipped.x == 0);
    CHECK(clipped.w == 4);

    CHECK_THROWS_AS(region_from_box({0, 0, 0, 5}, 16, 16), DataError);
    CHECK_THROWS_AS(region_from_box({20, 0, 2, 2}, 16, 16), DataError);
}

TEST_CASE("small scale run writes a complete deterministic bundle") {
    TempDir dir;
    materialize(tiny_scene(301), dir / "train", true);
    materialize(tiny_scene(302), dir / "test", true);
    const PipelineConfig c = small_config(dir / "train", dir / "test", dir / "out");

    const RunResult res = run_pipeline(c);
    CHECK(res.bundle_dir == std::filesystem::path(dir / "out"));
    for (const char* name :
         {"config.resolved", "metrics.csv", "roc.csv", "roc.svg", "tracks.csv"})
        CHECK(std::filesystem::exists(dir / "out" / name));

    const auto m = metrics_map(dir / "out" / "metrics.csv");
    CHECK(m.at("pipeline") == "small_scale");
    CHECK(m.at("train_frames") == "14");
    CHECK(m.at("test_frames") == "14");
    CHECK(m.at("gate_trained") == "1");
    CHECK(m.at("region_forest_trained") == "1");
    CHECK(m.count("frame_auc") == 1);
    CHECK(m.count("frame_accuracy") == 1);
    CHECK(m.count("gated_frames") == 1);
    // No annotations were given, so no localization section.
    CHECK(m.count("detection_tp") == 0);

    // The resolved config echoes the effective settings.
    const std::string resolved = slurp(dir / "out" / "config.resolved");
    CHECK(resolved.find("pipeline = small_scale\n") != std::string::npos);
    CHECK(resolved.find("flow.alpha = 0.25\n") != std::string::npos);

    // Identical config and inputs reproduce every bundle byte.
    std::map<std::string, std::string> before;
    for (const auto& entry : std::filesystem::directory_iterator(dir / "out"))
        before[entry.path().filename().string()] = slurp(entry.path());
    std::filesystem::remove_all(dir / "out");
    run_pipeline(c);
    for (const auto& [name, bytes] : before)
        CHECK(slurp(dir / "out" / name) == bytes);
}

TEST_CASE("small scale localization section appears with annotations") {
    TempDir dir;
    materialize(tiny_scene(301), dir / "train", true);
    const SynthSpec test_spec = tiny_scene(302);
    const SynthResult test = generate_synthetic(test_spec);
    std::filesystem::create_directories(dir / "test");
    save_sequence(test.sequence, dir / "test");
    write_frame_labels(test.sequence.frame_labels, dir / "test" / "labels.csv");

    // Ground truth: the runner's boxes over the labeled interval.
    std::vector<AnnotationRow> rows;
    for (const auto& per_frame : test.truth)
        for (const TruthBox& tb : per_frame)
            if (tb.behavior == "running")
                rows.push_back({"t", tb.frame, tb.box.x, tb.box.y, tb.box.w, tb.box.h,
                                "running"});
    write_annotations(rows, dir / "gt.csv");

    PipelineConfig c = small_config(dir / "train", dir / "test", dir / "out");
    c.annotations = (dir / "gt.csv").string();
    run_pipeline(c);

    const auto m = metrics_map(dir / "out" / "metrics.csv");
    CHECK(m.count("detection_tp") == 1);
    CHECK(m.count("detection_recall") == 1);
    CHECK(m.count("pixel_accuracy") == 1);
    CHECK(m.count("pixel_tn") == 1);
}

TEST_CASE("small scale split mode partitions one sequence") {
    TempDir dir;
    SynthSpec spec = tiny_scene(305);
    spec.frame_count = 20;
    spec.abnormal_intervals = {{4, 16}};
    spec.actors[1].first_frame = 4;
    spec.actors[1].last_frame = 17;
    spec.actors[1].vx = 2;  // stays on canvas over the longer window
    materialize(spec, dir / "seq", true);

    PipelineConfig c = small_config(dir / "seq", dir / "seq", dir / "out");
    c.train_frames_dir.clear();
    c.train_frame_labels.clear();
    c.frame_labels = (dir / "seq" / "labels.csv").string();
    c.split_fraction = 0.7;
    run_pipeline(c);

    const auto m = metrics_map(dir / "out" / "metrics.csv");
    CHECK(m.at("train_frames") == "14");  // ceil(0.7 * 20)
    CHECK(m.at("test_frames") == "6");
}

TEST_CASE("large scale ingests detections and scores classes") {
    TempDir dir;
    // Two behaviors: a runner (2 px/frame) and a stander, both active the
    // whole clip so every frame carries one box of each class.
    auto scene = [](std::uint64_t seed) {
        SynthSpec spec;
        spec.width = 48;
        spec.height = 48;
        spec.frame_count = 12;
        spec.seed = seed;
        spec.background_amplitude = 0.45;
        spec.abnormal_intervals = {{0, 11}};
        ActorSpec runner;
        runner.x0 = 2;
        runner.y0 = 8;
        runner.vx = 2;
        runner.w = 12;
        runner.h = 12;
        runner.behavior = "running";
        spec.actors.push_back(runner);
        ActorSpec stander;
        stander.x0 = 10;
        stander.y0 = 30;
        stander.w = 12;
        stander.h = 12;
        stander.behavior = "standing";
        spec.actors.push_back(stander);
        return spec;
    };

    auto annotate = [](const SynthResult& r, const std::filesystem::path& file) {
        std::vector<AnnotationRow> rows;
        for (const auto& per_frame : r.truth)
            for (const TruthBox& tb : per_frame)
                rows.push_back({"v", tb.frame, tb.box.x, tb.box.y, tb.box.w, tb.box.h,
                                tb.behavior});
        write_annotations(rows, file);
    };

    const SynthResult train = generate_synthetic(scene(401));
    const SynthResult test = generate_synthetic(scene(402));
    std::filesystem::create_directories(dir / "train");
    std::filesystem::create_directories(dir / "test");
    save_sequence(train.sequence, dir / "train");
    save_sequence(test.sequence, dir / "test");
    annotate(train, dir / "train_gt.csv");
    annotate(test, dir / "test_gt.csv");

    PipelineConfig c;
    c.pipeline = "large_scale";
    c.seed = 5;
    c.frames_dir = (dir / "test").string();
    c.frames_pattern = "*.pgm";
    c.train_frames_dir = (dir / "train").string();
    c.train_annotations = (dir / "train_gt.csv").string();
    c.annotations = (dir / "test_gt.csv").string();
    c.detections = (dir / "test_gt.csv").string();  // perfect detections
    c.out_dir = (dir / "out").string();
    c.flow.alpha = 0.25;
    c.flow.iterations = 40;
    c.rf.n_trees = 25;
    const RunResult res = run_pipeline(c);
    CHECK(res.warnings.empty());

    for (const char* name :
         {"config.resolved", "metrics.csv", "roc.csv", "roc.svg", "tracks.csv",
          "detections.csv", "track_classes.csv"})
        CHECK(std::filesystem::exists(dir / "out" / name));

    const auto m = metrics_map(dir / "out" / "metrics.csv");
    CHECK(m.at("pipeline") == "large_scale");
    CHECK(m.at("test_frames") == "12");
    CHECK(m.at("classes") == "running;standing");
    CHECK(m.at("detections_total") == "24");  // 2 boxes x 12 frames
    CHECK(m.at("degenerate_run") == "0");
    CHECK(m.at("detection_recall") == "1");   // detections are the ground truth
    CHECK(m.at("detection_precision") == "1");
    CHECK(m.count("recall_running") == 1);
    CHECK(m.count("recall_standing") == 1);
    CHECK(m.count("auc_running") == 1);
    CHECK(m.count("macro_ovr_auc") == 1);
    CHECK(m.count("track_level_precision") == 1);
    CHECK(m.at("tracks_total") == "2");
    CHECK(m.at("tracks_confirmed") == "2");

    // Motion statistics separate the two behaviors on clean synthetic clips.
    CHECK(parse_number(m.at("recall_running"), "m") == 1.0);
    CHECK(parse_number(m.at("recall_standing"), "m") == 1.0);
    CHECK(parse_number(m.at("macro_ovr_auc"), "m") >= 0.95);

    // Every detection row carries a class column from the model vocabulary.
    const std::string dets = slurp(dir / "out" / "detections.csv");
    CHECK(dets.find("frame,x,y,w,h,confidence,predicted_class,score,gt_class\n") == 0);
    CHECK(dets.find("running") != std::string::npos);

    const std::string tks = slurp(dir / "out" / "track_classes.csv");
    CHECK(tks.find("track_id,status,detections,majority_class\n") == 0);
}

TEST_CASE("pipeline validation failures surface before any work") {
    PipelineConfig c;
    c.pipeline = "small_scale";
    CHECK_THROWS_AS(run_pipeline(c), DataError);  // frames_dir missing
    c.pipeline = "nope";
    CHECK_THROWS_AS(run_pipeline(c), DataError);
}

}  // TEST_SUITE
