#include "vista/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_interp.h>

#include "vista/error.hpp"

namespace vista {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double hav(double x) {
    const double s = std::sin(x / 2.0);
    return s * s;
}

void require_increasing(std::span<const KnownPoint> known) {
    for (std::size_t i = 1; i < known.size(); ++i)
        if (!(known[i].t > known[i - 1].t)) fail(ErrorCode::InvalidParameter, "known points must have increasing times");
}

LatLon lerp(const KnownPoint& a, const KnownPoint& b, double t) {
    const double u = (t - a.t) / (b.t - a.t);
    return {a.p.lat * (1.0 - u) + b.p.lat * u, a.p.lon * (1.0 - u) + b.p.lon * u};
}

}  // namespace

double haversine_km(LatLon a, LatLon b) {
    const double p1 = a.lat * kDegToRad, p2 = b.lat * kDegToRad;
    const double h = hav(p2 - p1) + std::cos(p1) * std::cos(p2) * hav((b.lon - a.lon) * kDegToRad);
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

std::vector<LatLon> lin_itp(LatLon start, LatLon end, std::span<const double> offsets) {
    if (offsets.size() < 2) fail(ErrorCode::InvalidParameter, "need at least two offsets");
    if (offsets.front() != 0.0) fail(ErrorCode::InvalidParameter, "first offset must be 0");
    for (std::size_t i = 1; i < offsets.size(); ++i)
        if (!(offsets[i] > offsets[i - 1])) {
            if (offsets.back() == 0.0) fail(ErrorCode::DegenerateSpan, "zero time span");
            fail(ErrorCode::InvalidParameter, "offsets must be strictly increasing");
        }
    const double span = offsets.back();
    std::vector<LatLon> out;
    out.reserve(offsets.size() - 2);
    for (std::size_t i = 1; i + 1 < offsets.size(); ++i)
        out.push_back(lerp({0.0, start}, {span, end}, offsets[i]));
    return out;
}

std::vector<KnownPoint> known_points(const VesselSequence& sequence) {
    std::vector<KnownPoint> out;
    for (const auto& r : sequence.records)
        if (r.has_position()) out.push_back({static_cast<double>(r.timestamp), r.position()});
    return out;
}

BaselineResult lin_itp_track(std::span<const KnownPoint> known, std::span<const double> times) {
    if (known.empty()) fail(ErrorCode::InvalidParameter, "no known positions");
    require_increasing(known);
    BaselineResult res;
    res.points.reserve(times.size());
    for (double t : times) {
        auto it = std::lower_bound(known.begin(), known.end(), t,
                                   [](const KnownPoint& k, double v) { return k.t < v; });
        if (it != known.end() && it->t == t) {
            res.points.push_back(it->p);
        } else if (it != known.begin() && it != known.end()) {
            res.points.push_back(lerp(*(it - 1), *it, t));
        } else if (known.size() == 1) {
            res.points.push_back(known.front().p);
        } else if (it == known.begin()) {
            res.points.push_back(lerp(known[0], known[1], t));
        } else {
            res.points.push_back(lerp(known[known.size() - 2], known.back(), t));
        }
    }
    return res;
}

// --- akima -------------------------------------------------------------------

namespace {

struct GslInterp {
    gsl_interp* lat = nullptr;
    gsl_interp* lon = nullptr;
    gsl_interp_accel* acc = nullptr;
    std::vector<double> t, la, lo;

    explicit GslInterp(std::span<const KnownPoint> knots) {
        for (const auto& k : knots) {
            t.push_back(k.t);
            la.push_back(k.p.lat);
            lo.push_back(k.p.lon);
        }
        lat = gsl_interp_alloc(gsl_interp_akima, t.size());
        lon = gsl_interp_alloc(gsl_interp_akima, t.size());
        acc = gsl_interp_accel_alloc();
        if (gsl_interp_init(lat, t.data(), la.data(), t.size()) != GSL_SUCCESS ||
            gsl_interp_init(lon, t.data(), lo.data(), t.size()) != GSL_SUCCESS) {
            release();
            fail(ErrorCode::InvalidParameter, "akima initialisation failed");
        }
    }
    ~GslInterp() { release(); }
    GslInterp(const GslInterp&) = delete;
    GslInterp& operator=(const GslInterp&) = delete;

    void release() {
        if (lat) gsl_interp_free(lat);
        if (lon) gsl_interp_free(lon);
        if (acc) gsl_interp_accel_free(acc);
        lat = lon = nullptr;
        acc = nullptr;
    }
};

// GSL's default handler aborts; errors are reported through return codes.
struct GslHandlerOff {
    GslHandlerOff() { gsl_set_error_handler_off(); }
};
const GslHandlerOff gsl_handler_off;

}  // namespace

BaselineResult akima(std::span<const KnownPoint> known, std::span<const double> times, std::size_t window) {
    if (times.empty()) return {};
    require_increasing(known);
    const double first = *std::min_element(times.begin(), times.end());
    const double last = *std::max_element(times.begin(), times.end());
    auto lo = std::lower_bound(known.begin(), known.end(), first, [](const KnownPoint& k, double v) { return k.t < v; });
    auto hi = std::upper_bound(known.begin(), known.end(), last, [](double v, const KnownPoint& k) { return v < k.t; });
    const auto before = static_cast<std::size_t>(lo - known.begin());
    const auto after = static_cast<std::size_t>(known.end() - hi);
    if (before < 3 || after < 3 || window < 3) {
        auto res = lin_itp_track(known, times);
        res.degraded = true;
        return res;
    }
    std::vector<KnownPoint> knots(lo - static_cast<std::ptrdiff_t>(std::min(before, window)), lo);
    // Known points inside the query range stay knots.
    knots.insert(knots.end(), lo, hi);
    knots.insert(knots.end(), hi, hi + static_cast<std::ptrdiff_t>(std::min(after, window)));
    GslInterp s(knots);
    BaselineResult res;
    for (double t : times)
        res.points.push_back({gsl_interp_eval(s.lat, s.t.data(), s.la.data(), t, s.acc),
                              gsl_interp_eval(s.lon, s.t.data(), s.lo.data(), t, s.acc)});
    return res;
}

// --- kalman ------------------------------------------------------------------

BaselineResult kalman(std::span<const KnownPoint> known, std::span<const double> times, const KalmanOptions& opt) {
    require_increasing(known);
    if (!(opt.process_noise > 0.0) || !(opt.obs_noise > 0.0))
        fail(ErrorCode::InvalidParameter, "kalman noises must be positive");
    std::vector<KnownPoint> obs;
    if (times.empty()) {
        obs.assign(known.begin(), known.end());
    } else {
        const double first = *std::min_element(times.begin(), times.end());
        const double last = *std::max_element(times.begin(), times.end());
        auto lo = std::lower_bound(known.begin(), known.end(), first,
                                   [](const KnownPoint& k, double v) { return k.t < v; });
        auto hi = std::upper_bound(known.begin(), known.end(), last,
                                   [](double v, const KnownPoint& k) { return v < k.t; });
        const auto before = std::min<std::size_t>(static_cast<std::size_t>(lo - known.begin()), opt.window);
        const auto after = std::min<std::size_t>(static_cast<std::size_t>(known.end() - hi), opt.window);
        obs.assign(lo - static_cast<std::ptrdiff_t>(before), hi + static_cast<std::ptrdiff_t>(after));
    }
    if (obs.size() < 2) fail(ErrorCode::InvalidParameter, "kalman smoothing needs at least two observations");

    // Timeline: observation times merged with query times.
    std::vector<double> timeline;
    for (const auto& o : obs) timeline.push_back(o.t);
    timeline.insert(timeline.end(), times.begin(), times.end());
    std::sort(timeline.begin(), timeline.end());
    timeline.erase(std::unique(timeline.begin(), timeline.end()), timeline.end());

    using Vec4 = Eigen::Vector4d;
    using Mat4 = Eigen::Matrix4d;
    const double r = opt.obs_noise * opt.obs_noise;
    const double q = opt.process_noise * opt.process_noise;
    Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
    H(0, 0) = H(1, 1) = 1.0;
    const Eigen::Matrix2d R = Eigen::Matrix2d::Identity() * r;

    const std::size_t n = timeline.size();
    std::vector<Vec4> xp(n), xf(n);
    std::vector<Mat4> Pp(n), Pf(n), F(n);
    const double dt01 = obs[1].t - obs[0].t;
    Vec4 x;
    x << obs[0].p.lat, obs[0].p.lon, (obs[1].p.lat - obs[0].p.lat) / dt01, (obs[1].p.lon - obs[0].p.lon) / dt01;
    Mat4 P = Mat4::Zero();
    P(0, 0) = P(1, 1) = r;
    P(2, 2) = P(3, 3) = 2.0 * r / (dt01 * dt01);

    // Filter starts at the first observation; earlier query times are reached
    // by smoothing back through the model.
    std::size_t start = static_cast<std::size_t>(std::find(timeline.begin(), timeline.end(), obs[0].t) - timeline.begin());
    std::size_t oi = 0;
    for (std::size_t k = start; k < n; ++k) {
        if (k > start) {
            const double dt = timeline[k] - timeline[k - 1];
            Mat4 Fk = Mat4::Identity();
            Fk(0, 2) = Fk(1, 3) = dt;
            Mat4 Q = Mat4::Zero();
            Q(0, 0) = Q(1, 1) = q * dt * dt * dt / 3.0;
            Q(0, 2) = Q(2, 0) = Q(1, 3) = Q(3, 1) = q * dt * dt / 2.0;
            Q(2, 2) = Q(3, 3) = q * dt;
            F[k] = Fk;
            x = Fk * x;
            P = Fk * P * Fk.transpose() + Q;
        }
        xp[k] = x;
        Pp[k] = P;
        if (oi < obs.size() && obs[oi].t == timeline[k]) {
            const Eigen::Vector2d z(obs[oi].p.lat, obs[oi].p.lon);
            const Eigen::Matrix2d S = H * P * H.transpose() + R;
            const Eigen::Matrix<double, 4, 2> K = P * H.transpose() * S.inverse();
            x = x + K * (z - H * x);
            P = (Mat4::Identity() - K * H) * P;
            ++oi;
        }
        xf[k] = x;
        Pf[k] = P;
    }
    std::vector<Vec4> xs(n);
    xs[n - 1] = xf[n - 1];
    for (std::size_t k = n - 1; k-- > start;) {
        const Mat4 C = Pf[k] * F[k + 1].transpose() * Pp[k + 1].inverse();
        xs[k] = xf[k] + C * (xs[k + 1] - xp[k + 1]);
    }
    // Query times before the first observation: constant-velocity backcast.
    for (std::size_t k = start; k-- > 0;) {
        const double dt = timeline[k] - timeline[start];
        xs[k] = xs[start];
        xs[k](0) += xs[start](2) * dt;
        xs[k](1) += xs[start](3) * dt;
    }
    BaselineResult res;
    for (double t : times) {
        const auto k = static_cast<std::size_t>(std::lower_bound(timeline.begin(), timeline.end(), t) - timeline.begin());
        res.points.push_back({xs[k](0), xs[k](1)});
    }
    return res;
}

// --- metrics -----------------------------------------------------------------

void MetricAccumulator::add(LatLon truth, LatLon estimate) {
    const double dl = std::abs(estimate.lat - truth.lat);
    const double dn = std::abs(estimate.lon - truth.lon);
    abs_lat_ += dl;
    abs_lon_ += dn;
    sq_lat_ += dl * dl;
    sq_lon_ += dn * dn;
    hav_ += haversine_km(truth, estimate);
    ++n_;
}

MetricReport MetricAccumulator::report() const {
    MetricReport r;
    r.n = n_;
    if (n_ == 0) return r;
    const double n = static_cast<double>(n_);
    r.mae_lat = abs_lat_ / n;
    r.mae_lon = abs_lon_ / n;
    r.rmse_lat = std::sqrt(sq_lat_ / n);
    r.rmse_lon = std::sqrt(sq_lon_ / n);
    r.mhd = hav_ / n;
    return r;
}

MetricReport evaluate(const std::vector<VesselSequence>& truth, const std::vector<GapPoints>& gaps,
                      const std::vector<ObservationMask>& masks) {
    std::map<std::string, const VesselSequence*> by_vessel;
    for (const auto& s : truth) by_vessel[s.vessel_id] = &s;
    std::map<std::pair<std::string, std::size_t>, const GapPoints*> by_gap;
    for (const auto& g : gaps) by_gap[{g.vessel_id, g.segment_index}] = &g;

    MetricAccumulator acc;
    for (const auto& mask : masks) {
        const auto gap_ids = mask.gap_indices();
        if (gap_ids.empty()) continue;
        auto sit = by_vessel.find(mask.vessel_id);
        if (sit == by_vessel.end())
            fail(ErrorCode::MissingOutcome, "no ground truth for vessel " + mask.vessel_id);
        const auto& recs = sit->second->records;
        for (std::size_t k : gap_ids) {
            auto git = by_gap.find({mask.vessel_id, k});
            if (git == by_gap.end())
                fail(ErrorCode::MissingOutcome, fmt::format("no outcome for vessel {} segment {}", mask.vessel_id, k));
            const GapPoints& g = *git->second;
            if (g.points.size() != mask.m)
                fail(ErrorCode::MissingOutcome, fmt::format("outcome for vessel {} segment {} has {} points, expected {}",
                                                            mask.vessel_id, k, g.points.size(), mask.m));
            for (std::size_t j = 0; j < mask.m; ++j) {
                if (!mask.internal[k][j]) continue;
                const std::size_t idx = k * mask.m + j;
                if (idx >= recs.size() || !recs[idx].has_position())
                    fail(ErrorCode::EvaluationError,
                         fmt::format("ground truth lacks position for vessel {} record {}", mask.vessel_id, idx));
                if (!g.times.empty() && g.times[j] != recs[idx].timestamp)
                    fail(ErrorCode::MissingOutcome,
                         fmt::format("time grid mismatch for vessel {} segment {}", mask.vessel_id, k));
                acc.add(recs[idx].position(), g.points[j]);
            }
        }
    }
    return acc.report();
}

std::vector<GapPoints> run_baseline(Baseline which, const std::vector<VesselSequence>& masked,
                                    const std::vector<ObservationMask>& masks, const BaselineOptions& options) {
    std::map<std::string, const VesselSequence*> by_vessel;
    for (const auto& s : masked) by_vessel[s.vessel_id] = &s;
    std::vector<GapPoints> out;
    for (const auto& mask : masks) {
        const auto gap_ids = mask.gap_indices();
        if (gap_ids.empty()) continue;
        auto sit = by_vessel.find(mask.vessel_id);
        if (sit == by_vessel.end()) fail(ErrorCode::MissingOutcome, "no masked sequence for vessel " + mask.vessel_id);
        const auto known = known_points(*sit->second);
        for (std::size_t k : gap_ids) {
            GapPoints g;
            g.vessel_id = mask.vessel_id;
            g.segment_index = k;
            std::vector<double> t;
            for (std::size_t j = 0; j < mask.m; ++j) {
                const auto ts = sit->second->records.at(k * mask.m + j).timestamp;
                g.times.push_back(ts);
                t.push_back(static_cast<double>(ts));
            }
            switch (which) {
                case Baseline::LinItp: g.points = lin_itp_track(known, t).points; break;
                case Baseline::Akima: g.points = akima(known, t, options.akima_window).points; break;
                case Baseline::Kalman: g.points = kalman(known, t, options.kalman).points; break;
            }
            out.push_back(std::move(g));
        }
    }
    return out;
}

}  // namespace vista
