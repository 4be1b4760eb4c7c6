#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "crowdsight/classifier.hpp"
#include "crowdsight/common.hpp"

namespace crowdsight {

struct TrackerParams {
    int confirm_hits = 3;  // tentative -> confirmed at this many consecutive hits
    int max_misses = 5;    // any -> dead at this many consecutive misses
    double gate = 0;       // association gate, px; 0 = 0.5 * frame diagonal / 10
    double q_pos = 1.0;    // process noise, position
    double q_vel = 0.25;   // process noise, velocity
    double r_pos = 4.0;    // measurement noise
    double init_pos_var = 4.0;
    double init_vel_var = 100.0;
    double extent_smoothing = 0.5;  // EMA weight of the incoming detection extent
    void validate() const;
};

// Constant-velocity state [cx, cy, vx, vy] with row-major 4x4 covariance;
// box extent carried alongside the filter.
struct KalmanState {
    std::array<double, 4> x{};
    std::array<double, 16> p{};
    double w = 0, h = 0;
};

void kalman_predict(KalmanState& s, double q_pos, double q_vel);
// Joseph-form update with measurement (zx, zy); keeps the covariance
// symmetric PSD.
void kalman_update(KalmanState& s, double zx, double zy, double r_pos);

enum class TrackStatus { kTentative, kConfirmed, kDead };
std::string to_string(TrackStatus status);

struct Track {
    int id = 0;
    KalmanState state;
    std::vector<int> detection_ids;
    int hits = 0;    // consecutive matches
    int misses = 0;  // consecutive misses
    TrackStatus status = TrackStatus::kTentative;
    BBox box() const;
};

// Advances the track one frame and returns the predicted box. Throws on a
// dead track.
BBox predict(Track& track, const TrackerParams& params);

// Exact minimum-cost assignment over an n_rows x n_cols matrix (row-major).
// Returns per-row column indices; when rows outnumber columns, unassigned
// rows get -1. Every row is assigned while columns remain.
std::vector<int> hungarian(const std::vector<double>& cost, int n_rows, int n_cols);

struct Association {
    std::vector<std::pair<int, int>> matches;  // (track index, detection index)
    std::vector<int> unmatched_tracks;
    std::vector<int> unmatched_detections;
};

// Optimal assignment on center distances, then pairs farther than the gate
// are released to the unmatched lists.
Association associate(const std::vector<std::pair<double, double>>& track_centers,
                      const std::vector<std::pair<double, double>>& detection_centers,
                      double gate);

struct TrackRecord {
    int track_id = 0;
    int frame = 0;
    double cx = 0, cy = 0, w = 0, h = 0;
    TrackStatus status = TrackStatus::kTentative;
};

class MultiObjectTracker {
public:
    MultiObjectTracker(int frame_width, int frame_height, TrackerParams params = {});

    // Frames must arrive in strictly increasing order.
    void step(int frame_index, const std::vector<Detection>& detections);

    const std::vector<Track>& tracks() const { return tracks_; }
    const std::vector<TrackRecord>& records() const { return records_; }
    double gate() const { return gate_; }

private:
    TrackerParams params_;
    double gate_ = 0;
    std::vector<Track> tracks_;
    std::vector<TrackRecord> records_;
    int next_track_id_ = 0;
    int next_detection_id_ = 0;
    int last_frame_ = -1;
};

void write_tracks_csv(const std::vector<TrackRecord>& records,
                      const std::filesystem::path& file);
std::vector<TrackRecord> read_tracks_csv(const std::filesystem::path& file);

}  // namespace crowdsight
