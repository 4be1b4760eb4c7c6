#include "crowdsight/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace crowdsight {

ClassificationMetrics classification_metrics(const ConfusionCounts& c) {
    if (c.tp < 0 || c.tn < 0 || c.fp < 0 || c.fn < 0)
        throw DataError("classification_metrics: negative count");
    if (c.total() == 0) throw DataError("classification_metrics: all counts zero");

    ClassificationMetrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fp == 0) {
        m.precision_degenerate = true;
    } else {
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    }
    if (c.tp + c.fn == 0) {
        m.recall_degenerate = true;
    } else {
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    }
    if (m.precision + m.recall == 0) {
        m.f1_degenerate = true;
    } else {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
}

RocCurve roc_auc(const std::vector<std::pair<double, int>>& scored) {
    std::int64_t n_pos = 0, n_neg = 0;
    for (const auto& [score, label] : scored) {
        if (!std::isfinite(score)) throw DataError("roc_auc: non-finite score");
        if (label != 0 && label != 1) throw DataError("roc_auc: labels must be 0 or 1");
        (label ? n_pos : n_neg) += 1;
    }
    if (n_pos == 0 || n_neg == 0)
        throw DataError("roc_auc: both classes must be present");

    std::vector<std::pair<double, int>> items(scored);
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < items.size()) {
        const double t = items[i].first;
        // Predict positive at score >= t; consume the whole tie group.
        while (i < items.size() && items[i].first == t) {
            (items[i].second ? tp : fp) += 1;
            ++i;
        }
        curve.points.push_back({t, static_cast<double>(fp) / static_cast<double>(n_neg),
                                static_cast<double>(tp) / static_cast<double>(n_pos)});
    }
    double auc = 0;
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const RocPoint& a = curve.points[k - 1];
        const RocPoint& b = curve.points[k];
        auc += (b.fpr - a.fpr) * (b.tpr + a.tpr) * 0.5;
    }
    curve.auc = auc;
    return curve;
}

double iou(const BBox& a, const BBox& b) {
    if (!(a.w > 0) || !(a.h > 0) || !(b.w > 0) || !(b.h > 0))
        throw DataError("iou: degenerate box");
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return inter / uni;
}

MatchResult match_detections(const std::vector<ScoredBox>& preds,
                             const std::vector<BBox>& gts, double iou_threshold) {
    std::vector<int> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return preds[a].confidence > preds[b].confidence;
    });

    MatchResult result;
    std::vector<char> claimed(gts.size(), 0);
    for (int pi : order) {
        double best_iou = 0;
        int best = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (claimed[g]) continue;
            const double ov = iou(preds[pi].box, gts[g]);
            if (ov > best_iou) {
                best_iou = ov;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0 && best_iou >= iou_threshold) {
            claimed[best] = 1;
            result.pairs.emplace_back(pi, best);
            result.counts.tp += 1;
        } else {
            result.counts.fp += 1;
        }
    }
    result.counts.fn = static_cast<std::int64_t>(gts.size()) - result.counts.tp;
    std::sort(result.pairs.begin(), result.pairs.end());
    return result;
}

namespace {

// Pixel grid membership by pixel-center containment: exact coverage for
// integer-aligned boxes.
void paint(std::vector<std::uint8_t>& grid, int width, int height, const BBox& box,
           std::uint8_t kind) {
    const int x0 = std::max(0, static_cast<int>(std::ceil(box.x - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(box.y - 0.5)));
    const int x1 = std::min(width, static_cast<int>(std::ceil(box.x + box.w - 0.5)));
    const int y1 = std::min(height, static_cast<int>(std::ceil(box.y + box.h - 0.5)));
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            std::uint8_t& cell = grid[static_cast<std::size_t>(y) * width + x];
            if (kind < cell) cell = kind;
        }
}

BBox intersection_box(const BBox& a, const BBox& b) {
    const double x0 = std::max(a.x, b.x);
    const double y0 = std::max(a.y, b.y);
    const double x1 = std::min(a.x + a.w, b.x + b.w);
    const double y1 = std::min(a.y + a.h, b.y + b.h);
    return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace

ConfusionCounts pixel_accuracy(const std::vector<ScoredBox>& preds,
                               const std::vector<BBox>& gts,
                               const std::vector<std::pair<int, int>>& matched_pairs,
                               int width, int height) {
    if (width < 1 || height < 1) throw DataError("pixel_accuracy: empty frame");
    // Cell values encode priority: 0=TP, 1=FP, 2=FN, 3=TN. paint() keeps the
    // strongest (lowest) label per pixel.
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(width) * height, 3);
    for (const auto& [pi, gi] : matched_pairs) {
        if (pi < 0 || static_cast<std::size_t>(pi) >= preds.size() || gi < 0 ||
            static_cast<std::size_t>(gi) >= gts.size())
            throw DataError("pixel_accuracy: matched pair index out of range");
        const BBox inter = intersection_box(preds[pi].box, gts[gi]);
        if (inter.w > 0 && inter.h > 0) paint(grid, width, height, inter, 0);
    }
    for (const ScoredBox& p : preds) paint(grid, width, height, p.box, 1);
    for (const BBox& g : gts) paint(grid, width, height, g, 2);

    ConfusionCounts c;
    for (std::uint8_t cell : grid) {
        switch (cell) {
            case 0: c.tp += 1; break;
            case 1: c.fp += 1; break;
            case 2: c.fn += 1; break;
            default: c.tn += 1; break;
        }
    }
    return c;
}

ConfusionCounts pixel_accuracy(const std::vector<ScoredBox>& preds,
                               const std::vector<BBox>& gts, int width, int height,
                               double iou_threshold) {
    const MatchResult m = match_detections(preds, gts, iou_threshold);
    return pixel_accuracy(preds, gts, m.pairs, width, height);
}

std::vector<std::vector<char>> track_assignment_flags(
    const std::vector<std::vector<BBox>>& track_boxes_per_frame,
    const std::vector<std::vector<BBox>>& gt_boxes_per_frame, TrackCriterion criterion) {
    const std::size_t n_frames =
        std::max(track_boxes_per_frame.size(), gt_boxes_per_frame.size());
    std::vector<std::vector<char>> flags(n_frames);
    static const std::vector<BBox> kEmpty;
    for (std::size_t f = 0; f < n_frames; ++f) {
        const auto& tracks =
            f < track_boxes_per_frame.size() ? track_boxes_per_frame[f] : kEmpty;
        const auto& gts = f < gt_boxes_per_frame.size() ? gt_boxes_per_frame[f] : kEmpty;
        flags[f].assign(tracks.size(), 0);

        struct Candidate {
            double score;
            int track;
            int gt;
        };
        std::vector<Candidate> candidates;
        for (std::size_t t = 0; t < tracks.size(); ++t) {
            for (std::size_t g = 0; g < gts.size(); ++g) {
                if (criterion == TrackCriterion::kIouHalf) {
                    const double ov = iou(tracks[t], gts[g]);
                    if (ov >= 0.5)
                        candidates.push_back({ov, static_cast<int>(t), static_cast<int>(g)});
                } else {
                    const double cx = tracks[t].x + tracks[t].w / 2;
                    const double cy = tracks[t].y + tracks[t].h / 2;
                    if (cx >= gts[g].x && cx < gts[g].x + gts[g].w && cy >= gts[g].y &&
                        cy < gts[g].y + gts[g].h) {
                        const double gcx = gts[g].x + gts[g].w / 2;
                        const double gcy = gts[g].y + gts[g].h / 2;
                        candidates.push_back({-std::hypot(cx - gcx, cy - gcy),
                                              static_cast<int>(t), static_cast<int>(g)});
                    }
                }
            }
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const Candidate& a, const Candidate& b) {
                      if (a.score != b.score) return a.score > b.score;
                      if (a.track != b.track) return a.track < b.track;
                      return a.gt < b.gt;
                  });
        std::vector<char> gt_used(gts.size(), 0);
        for (const Candidate& c : candidates) {
            if (flags[f][c.track] || gt_used[c.gt]) continue;
            flags[f][c.track] = 1;
            gt_used[c.gt] = 1;
        }
    }
    return flags;
}

ConfusionCounts track_assignment_metrics(
    const std::vector<std::vector<BBox>>& track_boxes_per_frame,
    const std::vector<std::vector<BBox>>& gt_boxes_per_frame, TrackCriterion criterion) {
    const std::vector<std::vector<char>> flags =
        track_assignment_flags(track_boxes_per_frame, gt_boxes_per_frame, criterion);
    ConfusionCounts total;
    for (std::size_t f = 0; f < flags.size(); ++f) {
        std::int64_t tp = 0;
        for (char hit : flags[f]) tp += hit ? 1 : 0;
        total.tp += tp;
        total.fp += static_cast<std::int64_t>(flags[f].size()) - tp;
        const std::size_t n_gt =
            f < gt_boxes_per_frame.size() ? gt_boxes_per_frame[f].size() : 0;
        total.fn += static_cast<std::int64_t>(n_gt) - tp;
    }
    return total;
}

void write_metrics_csv(const std::filesystem::path& file,
                       const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    out << "metric,value\n";
    for (const auto& [key, value] : rows) out << key << ',' << value << '\n';
    if (!out) throw DataError("cannot write " + file.string());
}

void write_roc_csv(const std::filesystem::path& file, const RocCurve& curve) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    out << "threshold,fpr,tpr\n";
    for (const RocPoint& p : curve.points)
        out << format_double(p.threshold) << ',' << format_double(p.fpr) << ','
            << format_double(p.tpr) << '\n';
    if (!out) throw DataError("cannot write " + file.string());
}

void write_roc_svg(const std::filesystem::path& file, const RocCurve& curve) {
    constexpr int kSize = 480;
    constexpr int kMargin = 48;
    constexpr int kPlot = kSize - 2 * kMargin;
    const auto px = [&](double fpr) { return kMargin + fpr * kPlot; };
    const auto py = [&](double tpr) { return kSize - kMargin - tpr * kPlot; };

    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\""
        << kSize << "\" viewBox=\"0 0 " << kSize << ' ' << kSize << "\">\n";
    out << "<rect width=\"" << kSize << "\" height=\"" << kSize << "\" fill=\"white\"/>\n";
    out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kPlot
        << "\" height=\"" << kPlot << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1)
        << "\" y2=\"" << py(1) << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        if (i) out << ' ';
        out << format_double(px(curve.points[i].fpr)) << ','
            << format_double(py(curve.points[i].tpr));
    }
    out << "\"/>\n";
    out << "<text x=\"" << kMargin << "\" y=\"" << kMargin - 12
        << "\" font-family=\"sans-serif\" font-size=\"14\">ROC (AUC = "
        << format_double(curve.auc) << ")</text>\n";
    out << "<text x=\"" << kSize / 2 << "\" y=\"" << kSize - 12
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
           "false positive rate</text>\n";
    out << "<text x=\"14\" y=\"" << kSize / 2
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 14 "
        << kSize / 2 << ")\">true positive rate</text>\n";
    out << "</svg>\n";
    if (!out) throw DataError("cannot write " + file.string());
}

}  // namespace crowdsight
