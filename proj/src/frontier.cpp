#include "tvlink/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "tvlink/errors.hpp"

namespace tvlink {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Smallest b in [x_min, x_max] whose slope is >= target. The slope functional
// is monotone non-decreasing in b (a step function for atomic distributions),
// -inf at the left edge and 0 at the right edge, so the bracket is always
// valid for negative targets.
template <typename SlopeFn>
double bisect_slope(double x_min, double x_max, double target, SlopeFn slope) {
    double lo = x_min, hi = x_max;
    for (int i = 0; i < 200 && (hi - lo) > 1e-13 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (slope(mid) >= target)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

struct StateCurveFns {
    const RatioDist* dist;
    double T;
    double mean_mu; // used by the lost-throughput variant only

    double slope(double b, bool lost) const {
        return lost ? dist->lost_slope(b, T, mean_mu) : dist->frontier_slope(b, T);
    }
    double x_of(double b) const { return dist->e_queue_given_load(b, T); }
    double y_of(double b, bool lost) const {
        return lost ? mean_mu * dist->e_lost_given_load(b) : dist->e_underutil_given_load(b);
    }
};

FrontierStateDetail solve_state(const StateCurveFns& fns, double target, bool lost) {
    const DistSummary s = fns.dist->summary();
    FrontierStateDetail d;
    if (target == -kInf || s.x_max <= s.x_min * (1.0 + 1e-12)) {
        // Degenerate support or the synthetic "steeper than everything"
        // corner target: pin to the left edge.
        d.b = s.x_min;
        d.x = 0.0;
        d.y = fns.y_of(s.x_min, lost);
        d.clamped_left = true;
        d.c_candidate = d.b;
        return d;
    }
    if (target >= 0.0) {
        d.b = s.x_max;
        d.x = fns.x_of(s.x_max);
        d.y = 0.0;
        d.clamped_right = true;
        d.c_candidate = d.b;
        return d;
    }
    const double b_star = bisect_slope(s.x_min, s.x_max, target,
                                       [&](double b) { return fns.slope(b, lost); });
    const double achieved = fns.slope(b_star, lost);
    const bool attained = std::isfinite(achieved) &&
                          std::abs(achieved - target) <= 1e-6 * std::max(1.0, std::abs(target));
    if (!attained && b_star <= s.x_min * (1.0 + 1e-9)) {
        d.b = s.x_min;
        d.x = 0.0;
        d.y = fns.y_of(s.x_min, lost);
        d.clamped_left = true;
    } else if (!attained && b_star >= s.x_max * (1.0 - 1e-9)) {
        d.b = s.x_max;
        d.x = fns.x_of(s.x_max);
        d.y = 0.0;
        d.clamped_right = true;
    } else {
        // Either an exact tangency or an interior kink of an atomic curve
        // whose supported slope range spans the target.
        d.b = b_star;
        d.x = fns.x_of(b_star);
        d.y = fns.y_of(b_star, lost);
    }
    d.c_candidate = d.b;
    return d;
}

// Representative attainable slope magnitudes for the target grid, measured a
// small geometric inset from each edge.
struct SlopeRange {
    double steep_mag = 0; // largest |slope| seen
    double shallow_mag = kInf;

    void absorb(double slope) {
        if (!std::isfinite(slope) || slope >= 0.0)
            return;
        steep_mag = std::max(steep_mag, -slope);
        shallow_mag = std::min(shallow_mag, -slope);
    }
    bool valid() const { return steep_mag > 0.0 && std::isfinite(shallow_mag); }
};

FrontierCurve smf_like_frontier(const SmfModel& model, double T, int num_points, bool lost) {
    model.validate();
    if (num_points < 2)
        throw ParamError("frontier needs at least two points");
    if (!(T > 0.0))
        throw ParamError("round duration T must be positive");
    if (lost && !model.has_mean_mu())
        throw ParamError("lost-throughput bound requires bin mean capacities");

    const int k = model.num_states();
    std::vector<StateCurveFns> fns(k);
    for (int i = 0; i < k; ++i)
        fns[i] = StateCurveFns{&model.per_state_ratio[i], T,
                               model.has_mean_mu() ? model.mean_mu_bps[i] : 0.0};

    // Target slope grid: the union of per-state attainable ranges, log-spaced
    // in |m|, bracketed by two synthetic corner targets (-inf and 0) that pin
    // every state to its matching edge.
    SlopeRange range;
    for (int i = 0; i < k; ++i) {
        const DistSummary s = model.per_state_ratio[i].summary();
        if (s.x_max <= s.x_min * (1.0 + 1e-12))
            continue;
        const double log_ratio = std::log(s.x_max / s.x_min);
        const double b_lo = s.x_min * std::exp(1e-4 * log_ratio);
        const double b_hi = s.x_min * std::exp((1.0 - 1e-4) * log_ratio);
        range.absorb(fns[i].slope(b_lo, lost));
        range.absorb(fns[i].slope(b_hi, lost));
    }

    std::vector<double> targets;
    targets.push_back(-kInf);
    if (range.valid() && num_points > 2) {
        const int interior = num_points - 2;
        const double lo_mag = std::min(range.shallow_mag, range.steep_mag);
        const double hi_mag = std::max(range.shallow_mag, range.steep_mag * (1.0 + 1e-9));
        for (int i = 0; i < interior; ++i) {
            const double f = interior == 1 ? 0.5 : static_cast<double>(i) / (interior - 1);
            // Steepest first so emitted x is non-decreasing.
            targets.push_back(-hi_mag * std::pow(lo_mag / hi_mag, f));
        }
    }
    targets.push_back(0.0);

    std::vector<FrontierPoint> points;
    std::vector<std::vector<FrontierStateDetail>> details;
    for (double target : targets) {
        FrontierPoint p;
        p.param = target;
        std::vector<FrontierStateDetail> row(k);
        for (int i = 0; i < k; ++i) {
            row[i] = solve_state(fns[i], target, lost);
            p.eq += model.lambda[i] * row[i].x;
            p.eu += model.lambda[i] * row[i].y;
        }
        points.push_back(p);
        details.push_back(std::move(row));
    }

    // Dedup nearly identical eq values, keeping the lower eu.
    std::vector<FrontierPoint> dedup;
    std::vector<std::vector<FrontierStateDetail>> dedup_details;
    for (size_t i = 0; i < points.size(); ++i) {
        if (!dedup.empty() && points[i].eq <= dedup.back().eq * (1.0 + 1e-9)) {
            if (points[i].eu < dedup.back().eu) {
                dedup.back() = points[i];
                dedup_details.back() = details[i];
            }
            continue;
        }
        dedup.push_back(points[i]);
        dedup_details.push_back(std::move(details[i]));
    }
    return FrontierCurve(lost ? FrontierCurve::Kind::LostThroughput : FrontierCurve::Kind::Smf,
                         std::move(dedup), std::move(dedup_details));
}

} // namespace

FrontierCurve::FrontierCurve(Kind kind, std::vector<FrontierPoint> points,
                             std::vector<std::vector<FrontierStateDetail>> per_state)
    : kind_(kind), points_(std::move(points)), per_state_(std::move(per_state)) {
    if (points_.empty())
        throw NumericalError("frontier curve has no points");
    if (!per_state_.empty() && per_state_.size() != points_.size())
        throw NumericalError("frontier per-state detail size mismatch");
    double y_scale = 1.0;
    for (const auto& p : points_)
        y_scale = std::max(y_scale, std::abs(p.eu));
    const bool dimensionless = kind_ != Kind::LostThroughput;
    for (size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        if (!(p.eq >= 0.0) || !std::isfinite(p.eq))
            throw NumericalError("frontier point has invalid queuing delay");
        if (!std::isfinite(p.eu) || p.eu < -1e-15 ||
            (dimensionless && p.eu > 1.0 + 1e-12))
            throw NumericalError("frontier point has invalid underutilization");
        if (i > 0) {
            if (!(p.eq > points_[i - 1].eq))
                throw NumericalError("frontier queuing delays must be strictly increasing");
            if (p.eu > points_[i - 1].eu + 1e-12 * y_scale)
                throw NumericalError("frontier underutilization must be non-increasing");
        }
    }
    // Discrete convexity: divided-difference slopes must be non-decreasing.
    for (size_t i = 2; i < points_.size(); ++i) {
        const double s1 = (points_[i - 1].eu - points_[i - 2].eu) /
                          (points_[i - 1].eq - points_[i - 2].eq);
        const double s2 =
            (points_[i].eu - points_[i - 1].eu) / (points_[i].eq - points_[i - 1].eq);
        if (s2 - s1 < -1e-9 * y_scale)
            throw NumericalError("frontier curve failed the convexity check");
    }
}

double FrontierCurve::bound_at(double eq) const {
    if (eq < 0.0)
        throw ParamError("queuing delay must be non-negative");
    const auto& pts = points_;
    if (pts.size() == 1)
        return eq <= pts[0].eq ? pts[0].eu : 0.0;
    if (eq <= pts.front().eq) {
        const double slope =
            (pts[1].eu - pts[0].eu) / (pts[1].eq - pts[0].eq);
        return pts[0].eu + slope * (eq - pts[0].eq);
    }
    if (eq >= pts.back().eq)
        return 0.0;
    const auto it = std::lower_bound(pts.begin(), pts.end(), eq,
                                     [](const FrontierPoint& p, double v) { return p.eq < v; });
    const size_t hi = it - pts.begin();
    const size_t lo = hi - 1;
    const double f = (eq - pts[lo].eq) / (pts[hi].eq - pts[lo].eq);
    return pts[lo].eu + f * (pts[hi].eu - pts[lo].eu);
}

FrontierCurve mif_frontier(const RatioDist& dist, double T, int num_points) {
    if (num_points < 2)
        throw ParamError("frontier needs at least two points");
    if (!(T > 0.0))
        throw ParamError("round duration T must be positive");
    const DistSummary s = dist.summary();

    std::vector<double> grid;
    if (s.x_max <= s.x_min * (1.0 + 1e-15)) {
        grid.push_back(s.x_min);
    } else {
        grid.reserve(num_points);
        grid.push_back(s.x_min);
        const double log_ratio = std::log(s.x_max / s.x_min);
        for (int i = 1; i + 1 < num_points; ++i)
            grid.push_back(s.x_min *
                           std::exp(log_ratio * static_cast<double>(i) / (num_points - 1)));
        grid.push_back(s.x_max);
    }

    std::vector<FrontierPoint> points;
    points.reserve(grid.size());
    for (double b : grid) {
        FrontierPoint p;
        p.param = b;
        p.eq = dist.e_queue_given_load(b, T);
        p.eu = dist.e_underutil_given_load(b);
        if (!points.empty() && p.eq <= points.back().eq) {
            if (p.eu < points.back().eu)
                points.back() = p;
            continue;
        }
        points.push_back(p);
    }
    return FrontierCurve(FrontierCurve::Kind::Mif, std::move(points));
}

std::optional<double> feasibility_max_c(const RatioDist& dist) {
    const double x_min = dist.summary().x_min;
    if (x_min >= 1.0)
        return std::nullopt;
    return x_min / (1.0 - x_min);
}

FrontierCurve smf_frontier(const SmfModel& model, double T, int num_points) {
    model.validate();
    if (model.num_states() == 1) {
        // Single state: the weighted average is the state's own curve, so use
        // the b-grid construction directly (identical values to mif_frontier).
        FrontierCurve base = mif_frontier(model.per_state_ratio[0], T, num_points);
        std::vector<std::vector<FrontierStateDetail>> details;
        details.reserve(base.points().size());
        for (const auto& p : base.points())
            details.push_back({FrontierStateDetail{p.param, p.eq, p.eu, p.param, false, false}});
        return FrontierCurve(FrontierCurve::Kind::Smf, base.points(), std::move(details));
    }
    return smf_like_frontier(model, T, num_points, /*lost=*/false);
}

FrontierCurve lost_throughput_frontier(const SmfModel& model, double T, int num_points) {
    return smf_like_frontier(model, T, num_points, /*lost=*/true);
}

bool point_dominated(const FrontierCurve& curve, double eq, double eu, double margin) {
    if (eq < 0.0)
        throw ParamError("queuing delay must be non-negative");
    return eu >= curve.bound_at(eq) - margin;
}

SlopeSolveResult solve_load_for_slope(const RatioDist& dist, double T, double target_slope) {
    if (!(target_slope < 0.0))
        throw ParamError("target slope must be negative");
    StateCurveFns fns{&dist, T, 0.0};
    const FrontierStateDetail d = solve_state(fns, target_slope, /*lost=*/false);
    return SlopeSolveResult{d.b, d.clamped_left, d.clamped_right};
}

void write_frontier_csv(const FrontierCurve& curve, std::ostream& out) {
    out << frontier_csv_string(curve);
}

std::string frontier_csv_string(const FrontierCurve& curve) {
    std::string out = "param,eq_seconds,eu";
    const bool smf_kind = !curve.per_state().empty();
    if (smf_kind) {
        const size_t k = curve.per_state().front().size();
        for (size_t i = 0; i < k; ++i) {
            const std::string n = std::to_string(i);
            out += ",b_k" + n + ",x_k" + n + ",y_k" + n;
        }
    }
    out += '\n';
    for (size_t row = 0; row < curve.points().size(); ++row) {
        const auto& p = curve.points()[row];
        out += fmt_double(p.param) + ',' + fmt_double(p.eq) + ',' + fmt_double(p.eu);
        if (smf_kind) {
            for (const auto& d : curve.per_state()[row])
                out += ',' + fmt_double(d.b) + ',' + fmt_double(d.x) + ',' + fmt_double(d.y);
        }
        out += '\n';
    }
    return out;
}

} // namespace tvlink
