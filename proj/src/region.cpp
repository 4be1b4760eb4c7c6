#include "crowdsight/region.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace crowdsight {

BinaryMask magnitude_mask(const FlowPolar& polar, double threshold) {
    if (threshold < 0) throw DataError("mask threshold must be >= 0");
    BinaryMask mask;
    mask.width = polar.width;
    mask.height = polar.height;
    mask.bits.resize(polar.magnitude.size());
    for (std::size_t k = 0; k < mask.bits.size(); ++k)
        mask.bits[k] = polar.magnitude[k] > threshold ? 1 : 0;
    return mask;
}

double adaptive_threshold(const FlowPolar& polar) {
    const std::size_t n = polar.magnitude.size();
    if (n == 0) return 0.0;
    double sum = 0;
    for (double m : polar.magnitude) sum += m;
    const double mean = sum / static_cast<double>(n);
    double sq = 0;
    for (double m : polar.magnitude) sq += (m - mean) * (m - mean);
    return mean + std::sqrt(sq / static_cast<double>(n));
}

std::vector<Region> connected_components(const BinaryMask& mask, int min_area) {
    if (min_area < 1) throw DataError("min_area must be >= 1");
    const int w = mask.width, h = mask.height;
    std::vector<int> label(mask.bits.size(), -1);
    std::vector<Region> regions;
    std::vector<int> stack;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int start = y * w + x;
            if (!mask.bits[start] || label[start] >= 0) continue;

            Region r;
            r.x = x;
            r.y = y;
            int max_x = x, max_y = y;
            const int cur = static_cast<int>(regions.size());
            label[start] = cur;
            stack.assign(1, start);
            while (!stack.empty()) {
                const int k = stack.back();
                stack.pop_back();
                r.pixel_indices.push_back(k);
                const int px = k % w, py = k / w;
                r.x = std::min(r.x, px);
                r.y = std::min(r.y, py);
                max_x = std::max(max_x, px);
                max_y = std::max(max_y, py);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = px + dx, ny = py + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        const int nk = ny * w + nx;
                        if (mask.bits[nk] && label[nk] < 0) {
                            label[nk] = cur;
                            stack.push_back(nk);
                        }
                    }
            }
            r.w = max_x - r.x + 1;
            r.h = max_y - r.y + 1;
            std::sort(r.pixel_indices.begin(), r.pixel_indices.end());
            regions.push_back(std::move(r));
        }
    }

    std::erase_if(regions, [min_area](const Region& r) { return r.area() < min_area; });
    std::sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    for (std::size_t i = 0; i < regions.size(); ++i) regions[i].id = static_cast<int>(i);
    return regions;
}

void write_mask_pgm(const BinaryMask& mask, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    std::vector<unsigned char> raw(mask.bits.size());
    for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = mask.bits[k] ? 255 : 0;
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

}  // namespace crowdsight
