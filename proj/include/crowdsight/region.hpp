#pragma once

#include <filesystem>
#include <vector>

#include "crowdsight/common.hpp"
#include "crowdsight/optical_flow.hpp"

namespace crowdsight {

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
};

// Connected component of a mask; pixel_indices are linear (y*width + x)
// indices in scan order, bbox is their tight bound.
struct Region {
    int id = 0;
    int x = 0, y = 0, w = 0, h = 0;
    std::vector<int> pixel_indices;

    int area() const { return static_cast<int>(pixel_indices.size()); }
    BBox bbox() const {
        return {static_cast<double>(x), static_cast<double>(y), static_cast<double>(w),
                static_cast<double>(h)};
    }
};

// Bit set iff magnitude > threshold (strict).
BinaryMask magnitude_mask(const FlowPolar& polar, double threshold);

// Per-frame adaptive threshold: mean + stddev of the magnitude raster.
double adaptive_threshold(const FlowPolar& polar);

// 8-connected component labeling; components smaller than min_area are
// dropped; output ordered by (bbox.y, bbox.x) with ids 0..k-1.
std::vector<Region> connected_components(const BinaryMask& mask, int min_area);

// 0/255 PGM rendering for visual inspection.
void write_mask_pgm(const BinaryMask& mask, const std::filesystem::path& file);

}  // namespace crowdsight
