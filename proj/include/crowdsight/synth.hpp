#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crowdsight/common.hpp"
#include "crowdsight/frame.hpp"

namespace crowdsight {

// One moving textured rectangle. Position advances by (vx, vy) per frame
// while the actor is active; the texture translates rigidly with it.
struct ActorSpec {
    double x0 = 0;
    double y0 = 0;
    double vx = 0;
    double vy = 0;
    int w = 12;
    int h = 12;
    std::string behavior = "normal";
    int first_frame = 0;
    int last_frame = -1;  // -1 = active to the end
};

struct SynthSpec {
    int width = 128;
    int height = 128;
    int frame_count = 30;
    std::uint64_t seed = 1;
    std::uint64_t background_seed = 0;  // 0 = derive from seed
    double background_amplitude = 0.3;  // peak-to-peak of the background texture
    std::vector<ActorSpec> actors;
    // Inclusive [first, last] frame ranges labeled abnormal.
    std::vector<std::pair<int, int>> abnormal_intervals;
};

// Exact per-frame ground truth for one actor.
struct TruthBox {
    int frame = 0;
    int actor_id = 0;
    BBox box;
    std::string behavior;
};

struct SynthResult {
    VideoSequence sequence;           // frame_labels filled from the intervals
    std::vector<std::vector<TruthBox>> truth;  // per frame, in actor order
    std::vector<std::string> warnings;         // e.g. actor clipped at canvas edge
};

void validate_spec(const SynthSpec& spec);

// Deterministic: a fixed spec generates byte-identical sequences.
SynthResult generate_synthetic(const SynthSpec& spec);

// Smooth seeded value-noise texture sampled at (x - shift_x, y - shift_y);
// shifting the sample point translates the image content exactly.
Frame textured_frame(std::uint64_t seed, int width, int height,
                     double shift_x = 0.0, double shift_y = 0.0);

// Bundled demo scenarios. Small scale: a crowd drifting (+1,0) throughout,
// plus one counter-mover and one 3x-speed runner active over an abnormal
// interval. Large scale: three behavior classes (running, standing,
// moving_in_opposite), two actors each, active over the whole clip.
SynthSpec small_scale_scenario(std::uint64_t seed);
SynthSpec large_scale_scenario(std::uint64_t seed);

}  // namespace crowdsight
