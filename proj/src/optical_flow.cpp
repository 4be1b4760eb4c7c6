#include "crowdsight/optical_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "crowdsight/binary_io.hpp"

namespace crowdsight {

namespace {

inline std::size_t clamp_index(int x, int y, int w, int h) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return static_cast<std::size_t>(y) * w + x;
}

// Derivatives from the original 2x2x2 averaging stencils over the frame pair.
void input_derivatives(const std::vector<double>& a, const std::vector<double>& b,
                       int w, int h, std::vector<double>& ix, std::vector<double>& iy,
                       std::vector<double>& it) {
    auto pa = [&](int x, int y) { return a[clamp_index(x, y, w, h)]; };
    auto pb = [&](int x, int y) { return b[clamp_index(x, y, w, h)]; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t k = static_cast<std::size_t>(y) * w + x;
            ix[k] = 0.25 * (pa(x + 1, y) - pa(x, y) + pa(x + 1, y + 1) - pa(x, y + 1) +
                            pb(x + 1, y) - pb(x, y) + pb(x + 1, y + 1) - pb(x, y + 1));
            iy[k] = 0.25 * (pa(x, y + 1) - pa(x, y) + pa(x + 1, y + 1) - pa(x + 1, y) +
                            pb(x, y + 1) - pb(x, y) + pb(x + 1, y + 1) - pb(x + 1, y));
            it[k] = 0.25 * (pb(x, y) - pa(x, y) + pb(x + 1, y) - pa(x + 1, y) +
                            pb(x, y + 1) - pa(x, y + 1) + pb(x + 1, y + 1) - pa(x + 1, y + 1));
        }
    }
}

// 3x3 weighted neighborhood mean: 1/6 for the 4-neighbors, 1/12 for diagonals.
void neighborhood_mean(const std::vector<double>& u, int w, int h,
                       std::vector<double>& ubar) {
    auto p = [&](int x, int y) { return u[clamp_index(x, y, w, h)]; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            ubar[static_cast<std::size_t>(y) * w + x] =
                (p(x - 1, y) + p(x + 1, y) + p(x, y - 1) + p(x, y + 1)) / 6.0 +
                (p(x - 1, y - 1) + p(x + 1, y - 1) + p(x - 1, y + 1) + p(x + 1, y + 1)) / 12.0;
        }
    }
}

}  // namespace

std::vector<double> gaussian_smooth(const std::vector<double>& src, int width,
                                    int height, double sigma) {
    if (sigma <= 0) return src;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    std::vector<double> tmp(src.size()), out(src.size());
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * src[clamp_index(x + i, y, width, height)];
            tmp[static_cast<std::size_t>(y) * width + x] = acc;
        }
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double acc = 0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp[clamp_index(x, y + i, width, height)];
            out[static_cast<std::size_t>(y) * width + x] = acc;
        }
    return out;
}

FlowField horn_schunck(const Frame& prev, const Frame& next, const HsParams& params) {
    params.validate();
    if (prev.width != next.width || prev.height != next.height)
        throw DataError("horn_schunck: frame sizes differ");
    for (double v : prev.data)
        if (!std::isfinite(v)) throw DataError("horn_schunck: non-finite input");
    for (double v : next.data)
        if (!std::isfinite(v)) throw DataError("horn_schunck: non-finite input");

    const int w = prev.width, h = prev.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    const std::vector<double> a = gaussian_smooth(prev.data, w, h, params.presmooth_sigma);
    const std::vector<double> b = gaussian_smooth(next.data, w, h, params.presmooth_sigma);

    std::vector<double> ix(n), iy(n), it(n);
    input_derivatives(a, b, w, h, ix, iy, it);

    FlowField flow;
    flow.width = w;
    flow.height = h;
    flow.u.assign(n, 0.0);
    flow.v.assign(n, 0.0);

    const double alpha2 = params.alpha * params.alpha;
    std::vector<double> ubar(n), vbar(n);
    for (int iter = 0; iter < params.iterations; ++iter) {
        neighborhood_mean(flow.u, w, h, ubar);
        neighborhood_mean(flow.v, w, h, vbar);
        for (std::size_t k = 0; k < n; ++k) {
            const double t =
                (ix[k] * ubar[k] + iy[k] * vbar[k] + it[k]) /
                (alpha2 + ix[k] * ix[k] + iy[k] * iy[k]);
            flow.u[k] = ubar[k] - ix[k] * t;
            flow.v[k] = vbar[k] - iy[k] * t;
        }
    }
    return flow;
}

FlowPolar to_polar(const FlowField& flow) {
    FlowPolar polar;
    polar.width = flow.width;
    polar.height = flow.height;
    const std::size_t n = flow.u.size();
    polar.magnitude.resize(n);
    polar.orientation.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = flow.u[k], v = flow.v[k];
        if (!std::isfinite(u) || !std::isfinite(v))
            throw DataError("to_polar: non-finite flow value");
        polar.magnitude[k] = std::hypot(u, v);
        polar.orientation[k] = (u == 0.0 && v == 0.0) ? 0.0 : std::atan2(v, u);
    }
    return polar;
}

void write_flow(const FlowField& flow, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    out.write("CSFL1", 5);
    bin::write_u32(out, static_cast<std::uint32_t>(flow.width));
    bin::write_u32(out, static_cast<std::uint32_t>(flow.height));
    for (double v : flow.u) bin::write_f32(out, static_cast<float>(v));
    for (double v : flow.v) bin::write_f32(out, static_cast<float>(v));
    if (!out) throw DataError("cannot write " + file.string());
}

FlowField read_flow(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open " + file.string());
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "CSFL1", 5) != 0)
        throw DataError(file.string() + ": not a CSFL1 flow file");
    FlowField flow;
    flow.width = static_cast<int>(bin::read_u32(in));
    flow.height = static_cast<int>(bin::read_u32(in));
    if (flow.width <= 0 || flow.height <= 0 || flow.width > 1 << 16 || flow.height > 1 << 16)
        throw DataError(file.string() + ": corrupt flow header");
    const std::size_t n = static_cast<std::size_t>(flow.width) * flow.height;
    flow.u.resize(n);
    flow.v.resize(n);
    for (auto* raster : {&flow.u, &flow.v})
        for (std::size_t k = 0; k < n; ++k) (*raster)[k] = bin::read_f32(in);
    if (!in) throw DataError(file.string() + ": truncated flow file");
    return flow;
}

}  // namespace crowdsight
