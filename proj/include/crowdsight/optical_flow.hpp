#pragma once

#include <filesystem>
#include <vector>

#include "crowdsight/frame.hpp"

namespace crowdsight {

// Horn-Schunck solver parameters. The smoothness weight alpha and the fixed
// iteration count are the classic reference settings; a fixed count keeps
// runtime and downstream masks deterministic.
struct HsParams {
    double alpha = 1.0;
    int iterations = 100;
    double presmooth_sigma = 1.0;

    void validate() const {
        if (!(alpha > 0)) throw DataError("alpha must be > 0");
        if (iterations < 1) throw DataError("iterations must be >= 1");
        if (presmooth_sigma < 0) throw DataError("presmooth_sigma must be >= 0");
    }
};

// Per-pixel displacement field, px/frame.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<double> u;
    std::vector<double> v;
};

// Magnitude/orientation view of a FlowField. Orientation is atan2(v, u) in
// (-pi, pi], defined as 0 at zero vectors.
struct FlowPolar {
    int width = 0;
    int height = 0;
    std::vector<double> magnitude;
    std::vector<double> orientation;
};

// Classic Horn-Schunck fixed-point iteration:
//   derivatives from the original 2x2x2 averaging stencils,
//   u <- ubar - Ix (Ix ubar + Iy vbar + It) / (alpha^2 + Ix^2 + Iy^2),
//   ubar/vbar = 3x3 weighted neighborhood means (1/6 edge, 1/12 diagonal),
//   u = v = 0 initialization, edge replication at the boundary.
// Throws on size mismatch or non-finite input.
FlowField horn_schunck(const Frame& prev, const Frame& next, const HsParams& params);

FlowPolar to_polar(const FlowField& flow);

// "CSFL1" container: magic, little-endian u32 width/height, then
// width*height f32 u-values followed by the v-values.
void write_flow(const FlowField& flow, const std::filesystem::path& file);
FlowField read_flow(const std::filesystem::path& file);

// Gaussian smoothing used for pre-smoothing; exposed for tests.
std::vector<double> gaussian_smooth(const std::vector<double>& src, int width,
                                    int height, double sigma);

}  // namespace crowdsight
