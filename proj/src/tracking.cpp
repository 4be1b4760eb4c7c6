#include "crowdsight/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "crowdsight/csv.hpp"

namespace crowdsight {

void TrackerParams::validate() const {
    if (confirm_hits < 1) throw DataError("tracker: confirm_hits must be >= 1");
    if (max_misses < 1) throw DataError("tracker: max_misses must be >= 1");
    if (gate < 0) throw DataError("tracker: gate must be >= 0");
    if (q_pos < 0 || q_vel < 0 || r_pos < 0 || init_pos_var < 0 || init_vel_var < 0)
        throw DataError("tracker: noise variances must be >= 0");
    if (extent_smoothing < 0 || extent_smoothing > 1)
        throw DataError("tracker: extent_smoothing must lie in [0,1]");
}

namespace {

// p := 0.5 (p + p^T); keeps round-off from breaking symmetry.
void symmetrize(std::array<double, 16>& p) {
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const double m = 0.5 * (p[i * 4 + j] + p[j * 4 + i]);
            p[i * 4 + j] = m;
            p[j * 4 + i] = m;
        }
}

}  // namespace

void kalman_predict(KalmanState& s, double q_pos, double q_vel) {
    // x = F x with F = [I, I; 0, I] (unit frame step).
    s.x[0] += s.x[2];
    s.x[1] += s.x[3];

    // P = F P F^T + Q, written out for the block structure.
    std::array<double, 16>& p = s.p;
    std::array<double, 16> n{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double v = p[i * 4 + j];
            if (i < 2) v += p[(i + 2) * 4 + j];
            if (j < 2) v += p[i * 4 + j + 2] + (i < 2 ? p[(i + 2) * 4 + j + 2] : 0.0);
            n[i * 4 + j] = v;
        }
    n[0] += q_pos;
    n[5] += q_pos;
    n[10] += q_vel;
    n[15] += q_vel;
    p = n;
    symmetrize(p);
}

void kalman_update(KalmanState& s, double zx, double zy, double r_pos) {
    std::array<double, 16>& p = s.p;
    // S = H P H^T + R with H selecting the position block.
    const double s00 = p[0] + r_pos, s01 = p[1];
    const double s10 = p[4], s11 = p[5] + r_pos;
    const double det = s00 * s11 - s01 * s10;
    if (det == 0 || !std::isfinite(det))
        throw DataError("kalman_update: singular innovation covariance");
    const double i00 = s11 / det, i01 = -s01 / det;
    const double i10 = -s10 / det, i11 = s00 / det;

    // K = P H^T S^{-1}, 4x2.
    double k[8];
    for (int i = 0; i < 4; ++i) {
        k[i * 2 + 0] = p[i * 4 + 0] * i00 + p[i * 4 + 1] * i10;
        k[i * 2 + 1] = p[i * 4 + 0] * i01 + p[i * 4 + 1] * i11;
    }

    const double rx = zx - s.x[0], ry = zy - s.x[1];
    for (int i = 0; i < 4; ++i) s.x[i] += k[i * 2] * rx + k[i * 2 + 1] * ry;

    // Joseph form: P = (I - K H) P (I - K H)^T + K R K^T.
    double a[16];  // I - K H (H zero past column 1)
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            a[i * 4 + j] = (i == j ? 1.0 : 0.0) - (j < 2 ? k[i * 2 + j] : 0.0);
    double ap[16];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double v = 0;
            for (int m = 0; m < 4; ++m) v += a[i * 4 + m] * p[m * 4 + j];
            ap[i * 4 + j] = v;
        }
    std::array<double, 16> out{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double v = 0;
            for (int m = 0; m < 4; ++m) v += ap[i * 4 + m] * a[j * 4 + m];
            v += r_pos * (k[i * 2] * k[j * 2] + k[i * 2 + 1] * k[j * 2 + 1]);
            out[i * 4 + j] = v;
        }
    p = out;
    symmetrize(p);
}

std::string to_string(TrackStatus status) {
    switch (status) {
        case TrackStatus::kTentative: return "tentative";
        case TrackStatus::kConfirmed: return "confirmed";
        default: return "dead";
    }
}

BBox Track::box() const {
    return {state.x[0] - state.w / 2, state.x[1] - state.h / 2, state.w, state.h};
}

BBox predict(Track& track, const TrackerParams& params) {
    if (track.status == TrackStatus::kDead)
        throw DataError("predict: track " + format_int(track.id) + " is dead");
    kalman_predict(track.state, params.q_pos, params.q_vel);
    return track.box();
}

std::vector<int> hungarian(const std::vector<double>& cost, int n_rows, int n_cols) {
    if (n_rows < 0 || n_cols < 0 ||
        cost.size() != static_cast<std::size_t>(n_rows) * n_cols)
        throw DataError("hungarian: cost matrix shape mismatch");
    if (n_rows == 0 || n_cols == 0) return std::vector<int>(n_rows, -1);

    // Square the matrix with zero-cost dummies; a dummy row or column costs
    // the same wherever it lands, so real pairs are still chosen optimally.
    const int n = std::max(n_rows, n_cols);
    const double kInf = std::numeric_limits<double>::infinity();
    auto at = [&](int r, int c) -> double {
        return (r < n_rows && c < n_cols) ? cost[static_cast<std::size_t>(r) * n_cols + c]
                                          : 0.0;
    };

    // Potentials method, O(n^3); p[j] holds the row assigned to column j.
    std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1, 0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> row_to_col(n_rows, -1);
    for (int j = 1; j <= n; ++j) {
        const int r = p[j] - 1;
        if (r < n_rows && j - 1 < n_cols) row_to_col[r] = j - 1;
    }
    return row_to_col;
}

Association associate(const std::vector<std::pair<double, double>>& track_centers,
                      const std::vector<std::pair<double, double>>& detection_centers,
                      double gate) {
    if (!(gate > 0)) throw DataError("associate: gate must be > 0");
    const int nt = static_cast<int>(track_centers.size());
    const int nd = static_cast<int>(detection_centers.size());

    std::vector<double> cost(static_cast<std::size_t>(nt) * nd);
    for (int t = 0; t < nt; ++t)
        for (int d = 0; d < nd; ++d)
            cost[static_cast<std::size_t>(t) * nd + d] =
                std::hypot(track_centers[t].first - detection_centers[d].first,
                           track_centers[t].second - detection_centers[d].second);

    const std::vector<int> row_to_col = hungarian(cost, nt, nd);
    Association out;
    std::vector<char> det_matched(nd, 0);
    for (int t = 0; t < nt; ++t) {
        const int d = row_to_col[t];
        if (d >= 0 && cost[static_cast<std::size_t>(t) * nd + d] <= gate) {
            out.matches.emplace_back(t, d);
            det_matched[d] = 1;
        } else {
            out.unmatched_tracks.push_back(t);
        }
    }
    for (int d = 0; d < nd; ++d)
        if (!det_matched[d]) out.unmatched_detections.push_back(d);
    return out;
}

MultiObjectTracker::MultiObjectTracker(int frame_width, int frame_height,
                                       TrackerParams params)
    : params_(params) {
    params_.validate();
    if (frame_width < 1 || frame_height < 1)
        throw DataError("tracker: invalid frame size");
    gate_ = params_.gate > 0
                ? params_.gate
                : 0.5 * std::hypot(static_cast<double>(frame_width),
                                   static_cast<double>(frame_height)) / 10.0;
}

void MultiObjectTracker::step(int frame_index, const std::vector<Detection>& detections) {
    if (frame_index <= last_frame_)
        throw DataError("tracker: frame " + format_int(frame_index) +
                        " out of order (last was " + format_int(last_frame_) + ")");
    last_frame_ = frame_index;

    std::vector<int> live;
    for (std::size_t i = 0; i < tracks_.size(); ++i)
        if (tracks_[i].status != TrackStatus::kDead) live.push_back(static_cast<int>(i));

    std::vector<std::pair<double, double>> track_centers;
    for (int i : live) {
        predict(tracks_[i], params_);
        track_centers.emplace_back(tracks_[i].state.x[0], tracks_[i].state.x[1]);
    }
    std::vector<std::pair<double, double>> det_centers;
    for (const Detection& d : detections)
        det_centers.emplace_back(d.box.x + d.box.w / 2, d.box.y + d.box.h / 2);

    const Association assoc = associate(track_centers, det_centers, gate_);

    const int first_detection_id = next_detection_id_;
    next_detection_id_ += static_cast<int>(detections.size());

    for (const auto& [ti, di] : assoc.matches) {
        Track& track = tracks_[live[ti]];
        const Detection& det = detections[di];
        kalman_update(track.state, det_centers[di].first, det_centers[di].second,
                      params_.r_pos);
        const double a = params_.extent_smoothing;
        track.state.w = a * det.box.w + (1 - a) * track.state.w;
        track.state.h = a * det.box.h + (1 - a) * track.state.h;
        track.detection_ids.push_back(first_detection_id + di);
        track.hits += 1;
        track.misses = 0;
        if (track.status == TrackStatus::kTentative && track.hits >= params_.confirm_hits)
            track.status = TrackStatus::kConfirmed;
    }
    for (int ti : assoc.unmatched_tracks) {
        Track& track = tracks_[live[ti]];
        track.misses += 1;
        track.hits = 0;
        if (track.misses >= params_.max_misses) track.status = TrackStatus::kDead;
    }
    for (int di : assoc.unmatched_detections) {
        const Detection& det = detections[di];
        Track track;
        track.id = next_track_id_++;
        track.state.x = {det_centers[di].first, det_centers[di].second, 0.0, 0.0};
        track.state.p = {};
        track.state.p[0] = params_.init_pos_var;
        track.state.p[5] = params_.init_pos_var;
        track.state.p[10] = params_.init_vel_var;
        track.state.p[15] = params_.init_vel_var;
        track.state.w = det.box.w;
        track.state.h = det.box.h;
        track.detection_ids.push_back(first_detection_id + di);
        track.hits = 1;
        track.misses = 0;
        if (track.hits >= params_.confirm_hits) track.status = TrackStatus::kConfirmed;
        tracks_.push_back(std::move(track));
    }

    for (const Track& track : tracks_) {
        if (track.status == TrackStatus::kDead) continue;
        records_.push_back({track.id, frame_index, track.state.x[0], track.state.x[1],
                            track.state.w, track.state.h, track.status});
    }
}

void write_tracks_csv(const std::vector<TrackRecord>& records,
                      const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    out << "track_id,frame,cx,cy,w,h,status\n";
    for (const TrackRecord& r : records)
        out << r.track_id << ',' << r.frame << ',' << format_double(r.cx) << ','
            << format_double(r.cy) << ',' << format_double(r.w) << ','
            << format_double(r.h) << ',' << to_string(r.status) << '\n';
    if (!out) throw DataError("cannot write " + file.string());
}

std::vector<TrackRecord> read_tracks_csv(const std::filesystem::path& file) {
    const std::vector<std::string> lines = read_lines(file);
    std::vector<TrackRecord> records;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split_csv_line(lines[i]);
        if (i == 0 && !fields.empty() && fields[0] == "track_id") continue;
        const std::string ctx = file.string() + ":" + format_int(static_cast<long long>(i + 1));
        if (fields.size() != 7) throw DataError(ctx + ": expected 7 fields");
        TrackRecord r;
        r.track_id = static_cast<int>(parse_integer(fields[0], ctx));
        r.frame = static_cast<int>(parse_integer(fields[1], ctx));
        r.cx = parse_number(fields[2], ctx);
        r.cy = parse_number(fields[3], ctx);
        r.w = parse_number(fields[4], ctx);
        r.h = parse_number(fields[5], ctx);
        if (fields[6] == "tentative") {
            r.status = TrackStatus::kTentative;
        } else if (fields[6] == "confirmed") {
            r.status = TrackStatus::kConfirmed;
        } else if (fields[6] == "dead") {
            r.status = TrackStatus::kDead;
        } else {
            throw DataError(ctx + ": unknown track status '" + fields[6] + "'");
        }
        records.push_back(r);
    }
    return records;
}

}  // namespace crowdsight
