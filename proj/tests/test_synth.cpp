#include "doctest.h"

#include <string>
#include <vector>

#include "crowdsight/synth.hpp"

using namespace crowdsight;

namespace {

SynthSpec one_actor_spec() {
    SynthSpec spec;
    spec.width = 64;
    spec.height = 64;
    spec.frame_count = 5;
    spec.seed = 9;
    ActorSpec a;
    a.x0 = 10;
    a.y0 = 10;
    a.vx = 2;
    a.vy = 1;
    a.w = 8;
    a.h = 6;
    a.behavior = "running";
    spec.actors.push_back(a);
    return spec;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("generation is deterministic") {
    const SynthSpec spec = small_scale_scenario(3);
    const SynthResult a = generate_synthetic(spec);
    const SynthResult b = generate_synthetic(spec);
    REQUIRE(a.sequence.frames.size() == b.sequence.frames.size());
    for (std::size_t i = 0; i < a.sequence.frames.size(); ++i)
        CHECK(a.sequence.frames[i].data == b.sequence.frames[i].data);
    CHECK(a.sequence.frame_labels == b.sequence.frame_labels);
    REQUIRE(a.truth.size() == b.truth.size());
    for (std::size_t t = 0; t < a.truth.size(); ++t) {
        REQUIRE(a.truth[t].size() == b.truth[t].size());
        for (std::size_t k = 0; k < a.truth[t].size(); ++k) {
            CHECK(a.truth[t][k].box.x == b.truth[t][k].box.x);
            CHECK(a.truth[t][k].behavior == b.truth[t][k].behavior);
        }
    }
}

TEST_CASE("truth boxes follow the motion model") {
    SynthSpec spec = one_actor_spec();
    spec.actors[0].first_frame = 1;
    spec.actors[0].last_frame = 3;
    spec.abnormal_intervals = {{1, 3}};
    const SynthResult r = generate_synthetic(spec);

    CHECK(r.sequence.frame_labels == std::vector<int>{0, 1, 1, 1, 0});
    CHECK(r.truth[0].empty());
    CHECK(r.truth[4].empty());
    for (int t = 1; t <= 3; ++t) {
        REQUIRE(r.truth[t].size() == 1);
        const TruthBox& tb = r.truth[t][0];
        CHECK(tb.frame == t);
        CHECK(tb.actor_id == 0);
        CHECK(tb.behavior == "running");
        // Position advances from the activation frame and rounds to pixels.
        CHECK(tb.box.x == 10.0 + 2.0 * (t - 1));
        CHECK(tb.box.y == 10.0 + 1.0 * (t - 1));
        CHECK(tb.box.w == 8.0);
        CHECK(tb.box.h == 6.0);
    }
}

TEST_CASE("fractional positions round to the nearest pixel") {
    SynthSpec spec = one_actor_spec();
    spec.actors[0].vx = 0.5;
    spec.actors[0].vy = 0;
    const SynthResult r = generate_synthetic(spec);
    CHECK(r.truth[0][0].box.x == 10.0);
    CHECK(r.truth[1][0].box.x == 11.0);  // llround(10.5) away from zero
    CHECK(r.truth[2][0].box.x == 11.0);
    CHECK(r.truth[3][0].box.x == 12.0);  // llround(11.5)
}

TEST_CASE("actors paint over the background inside their box only") {
    SynthSpec spec = one_actor_spec();
    SynthSpec empty = spec;
    empty.actors.clear();
    const SynthResult with = generate_synthetic(spec);
    const SynthResult without = generate_synthetic(empty);

    const Frame& fa = with.sequence.frames[0];
    const Frame& fb = without.sequence.frames[0];
    const TruthBox& tb = with.truth[0][0];
    int inside_diff = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const bool inside = x >= tb.box.x && x < tb.box.x + tb.box.w &&
                                y >= tb.box.y && y < tb.box.y + tb.box.h;
            if (inside)
                inside_diff += fa.at(x, y) != fb.at(x, y);
            else
                CHECK(fa.at(x, y) == fb.at(x, y));
        }
    CHECK(inside_diff > 20);  // plaid-textured patch, not a constant fill
}

TEST_CASE("an explicit background seed pins the backdrop across seeds") {
    SynthSpec a;
    a.width = 32;
    a.height = 32;
    a.frame_count = 1;
    a.seed = 1;
    a.background_seed = 77;
    SynthSpec b = a;
    b.seed = 2;
    CHECK(generate_synthetic(a).sequence.frames[0].data ==
          generate_synthetic(b).sequence.frames[0].data);
    b.background_seed = 78;
    CHECK(generate_synthetic(a).sequence.frames[0].data !=
          generate_synthetic(b).sequence.frames[0].data);
}

TEST_CASE("leaving the canvas clips the box and warns once") {
    SynthSpec spec;
    spec.width = 128;
    spec.height = 128;
    spec.frame_count = 8;
    spec.seed = 4;
    ActorSpec a;
    a.x0 = 110;
    a.y0 = 40;
    a.vx = 4;
    a.w = 14;
    a.h = 14;
    a.behavior = "running";
    spec.actors.push_back(a);
    const SynthResult r = generate_synthetic(spec);

    CHECK(r.truth[1][0].box.w == 14.0);  // 114 + 14 = 128 still fits exactly
    CHECK(r.truth[2][0].box.w == 10.0);  // 118 + 14 = 132 clips at the edge
    CHECK(r.truth[3][0].box.w == 6.0);
    CHECK(r.truth[3][0].box.x == 122.0);
    CHECK(r.truth[4][0].box.w == 2.0);
    CHECK(r.truth[5].empty());  // fully outside, no truth box
    CHECK(r.truth[7].empty());
    REQUIRE(r.warnings.size() == 1);  // repeated clipping reports once
    CHECK(r.warnings[0].find("clipped") != std::string::npos);
}

TEST_CASE("spec validation rejects malformed inputs") {
    SynthSpec spec = one_actor_spec();
    CHECK_NOTHROW(validate_spec(spec));
    spec.width = 7;
    CHECK_THROWS_AS(validate_spec(spec), DataError);
    spec = one_actor_spec();
    spec.frame_count = 0;
    CHECK_THROWS_AS(validate_spec(spec), DataError);
    spec = one_actor_spec();
    spec.background_amplitude = 0.1;
    CHECK_THROWS_AS(validate_spec(spec), DataError);
    spec.background_amplitude = 1.5;
    CHECK_THROWS_AS(validate_spec(spec), DataError);
    spec = one_actor_spec();
    spec.actors[0].w = 0;
    CHECK_THROWS_AS(validate_spec(spec), DataError);
    spec = one_actor_spec();
    spec.actors[0].x0 = 60;  // 60 + 8 > 64
    CHECK_THROWS_AS(validate_spec(spec), DataError);
    spec = one_actor_spec();
    spec.actors[0].first_frame = 3;
    spec.actors[0].last_frame = 1;
    CHECK_THROWS_AS(validate_spec(spec), DataError);
    spec = one_actor_spec();
    spec.abnormal_intervals = {{0, 5}};  // hi beyond the last frame
    CHECK_THROWS_AS(validate_spec(spec), DataError);
    spec.abnormal_intervals = {{-1, 2}};
    CHECK_THROWS_AS(validate_spec(spec), DataError);
}

TEST_CASE("textured frame translates exactly under integer shifts") {
    const Frame base = textured_frame(42, 64, 64);
    const Frame shifted = textured_frame(42, 64, 64, 3.0, 2.0);
    for (int y = 2; y < 64; ++y)
        for (int x = 3; x < 64; ++x) CHECK(shifted.at(x, y) == base.at(x - 3, y - 2));
    CHECK(textured_frame(42, 64, 64).data == base.data);
    CHECK(textured_frame(43, 64, 64).data != base.data);
    CHECK_NOTHROW(validate_frame(base));
}

TEST_CASE("bundled scenarios produce valid labeled sequences") {
    for (const SynthSpec& spec :
         {small_scale_scenario(7), large_scale_scenario(7)}) {
        CHECK_NOTHROW(validate_spec(spec));
        const SynthResult r = generate_synthetic(spec);
        CHECK(r.warnings.empty());  // scenario actors stay on canvas
        CHECK(r.sequence.frames.size() == static_cast<std::size_t>(spec.frame_count));
        CHECK(r.sequence.has_labels());
    }

    const SynthSpec small = small_scale_scenario(7);
    REQUIRE(small.actors.size() == 5);
    CHECK(small.actors[3].behavior == "moving_in_opposite");
    CHECK(small.actors[4].behavior == "running");
    CHECK(small.abnormal_intervals == std::vector<std::pair<int, int>>{{30, 60}});

    const SynthSpec large = large_scale_scenario(7);
    REQUIRE(large.actors.size() == 6);
    int running = 0, standing = 0, opposite = 0;
    for (const ActorSpec& a : large.actors) {
        running += a.behavior == "running";
        standing += a.behavior == "standing";
        opposite += a.behavior == "moving_in_opposite";
    }
    CHECK(running == 2);
    CHECK(standing == 2);
    CHECK(opposite == 2);

    // Seeding jitters start positions, so two seeds give distinct clips.
    const SynthSpec other = small_scale_scenario(8);
    bool any_moved = false;
    for (std::size_t i = 0; i < small.actors.size(); ++i)
        any_moved |= small.actors[i].x0 != other.actors[i].x0 ||
                     small.actors[i].y0 != other.actors[i].y0;
    CHECK(any_moved);
}

}  // TEST_SUITE
