#pragma once

// Rule-based baseline imputers and masked evaluation metrics.

#include <span>
#include <string>
#include <vector>

#include "vista/ais.hpp"

namespace vista {

inline constexpr double kEarthRadiusKm = 6371.0;

double haversine_km(LatLon a, LatLon b);

/// Interior points of a straight-line interpolation over `offsets` (first 0,
/// last = span). Zero span -> DegenerateSpan.
std::vector<LatLon> lin_itp(LatLon start, LatLon end, std::span<const double> offsets);

struct KnownPoint {
    double t = 0.0;
    LatLon p;
};

/// Known positions of a sequence, in time order.
std::vector<KnownPoint> known_points(const VesselSequence& sequence);

struct BaselineResult {
    std::vector<LatLon> points;  // one per query time
    bool degraded = false;       // fell back to linear interpolation
};

/// Linear interpolation between the nearest known points around each query
/// time; linear extrapolation from the two nearest when one side is empty.
BaselineResult lin_itp_track(std::span<const KnownPoint> known, std::span<const double> times);

/// Akima spline over up to `window` known points on each side of the query
/// range. Fewer than three on either side degrades to lin_itp_track.
BaselineResult akima(std::span<const KnownPoint> known, std::span<const double> times, std::size_t window = 5);

struct KalmanOptions {
    double process_noise = 1e-6;  // deg/s^2
    double obs_noise = 1e-4;      // deg
    std::size_t window = 10;      // known points per side
};

/// Constant-velocity Kalman filter with Rauch-Tung-Striebel smoothing.
/// Fewer than two observations or non-increasing times -> InvalidParameter.
BaselineResult kalman(std::span<const KnownPoint> known, std::span<const double> times,
                      const KalmanOptions& options = {});

/// Imputed positions of one gap segment.
struct GapPoints {
    std::string vessel_id;
    std::size_t segment_index = 0;
    std::vector<LatLon> points;
    std::vector<Timestamp> times;
};

struct MetricReport {
    double mae_lat = 0.0, mae_lon = 0.0;
    double rmse_lat = 0.0, rmse_lon = 0.0;
    double mhd = 0.0;  // km
    std::size_t n = 0;
};

/// Accumulates error terms pairwise.
class MetricAccumulator {
public:
    void add(LatLon truth, LatLon estimate);
    MetricReport report() const;

private:
    double abs_lat_ = 0.0, abs_lon_ = 0.0, sq_lat_ = 0.0, sq_lon_ = 0.0, hav_ = 0.0;
    std::size_t n_ = 0;
};

/// Scores `gaps` on the records flagged by each mask's evaluation flags.
/// A flagged segment without a matching gap entry -> MissingOutcome.
MetricReport evaluate(const std::vector<VesselSequence>& truth, const std::vector<GapPoints>& gaps,
                      const std::vector<ObservationMask>& masks);

enum class Baseline { LinItp, Akima, Kalman };

struct BaselineOptions {
    std::size_t akima_window = 5;
    KalmanOptions kalman;
};

/// Runs a baseline on every flagged gap of the masked sequences.
std::vector<GapPoints> run_baseline(Baseline which, const std::vector<VesselSequence>& masked,
                                    const std::vector<ObservationMask>& masks, const BaselineOptions& options = {});

}  // namespace vista
