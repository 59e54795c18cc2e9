#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tvlink/dist.hpp"
#include "tvlink/link_models.hpp"

namespace tvlink {

// One point of a performance-bound curve. param is the load b for MIF/PMIF
// curves and the common tangent slope for SMF-style curves (-inf / 0 mark the
// all-clamped corner points).
struct FrontierPoint {
    double param = 0;
    double eq = 0; // expected queuing delay, seconds
    double eu = 0; // expected underutilization (bits/s for lost-throughput curves)
};

// Per-state tangency detail behind one SMF curve point.
struct FrontierStateDetail {
    double b = 0;           // per-state load solving the slope equation
    double x = 0;           // per-state expected queuing delay
    double y = 0;           // per-state expected underutilization (or loss)
    double c_candidate = 0; // constant to run in this state to realize (x, y)
    bool clamped_left = false;
    bool clamped_right = false;
};

class FrontierCurve {
  public:
    enum class Kind { Mif, Pmif, Smf, LostThroughput };

    // Validates: eq strictly increasing, eu non-increasing, eu in [0,1] for
    // dimensionless kinds, discrete convexity of eu vs eq (second differences
    // of slopes >= -1e-9, scaled by the y magnitude).
    FrontierCurve(Kind kind, std::vector<FrontierPoint> points,
                  std::vector<std::vector<FrontierStateDetail>> per_state = {});

    Kind kind() const { return kind_; }
    const std::vector<FrontierPoint>& points() const { return points_; }
    const std::vector<std::vector<FrontierStateDetail>>& per_state() const { return per_state_; }

    // Piecewise-linear bound value at a queuing delay: extended left along the
    // initial slope, zero right of the last point.
    double bound_at(double eq) const;

  private:
    Kind kind_;
    std::vector<FrontierPoint> points_;
    std::vector<std::vector<FrontierStateDetail>> per_state_;
};

// Trade-off boundary for a single ratio distribution: (E[q|rho=b], E[U|rho=b])
// on a log-spaced b grid over [x_min, x_max] with exact endpoints.
FrontierCurve mif_frontier(const RatioDist& dist, double T, int num_points = 512);

// Largest constant C for which the fixed-load policy rho(t) = C never needs a
// negative rate: X_min / (1 - X_min). nullopt means unbounded (X_min >= 1).
std::optional<double> feasibility_max_c(const RatioDist& dist);

// Equal-slope weighted average of the per-state boundaries. Each of
// num_points tangent slopes is solved per state by bisection; states whose
// attainable slope range excludes the target are pinned to the matching edge
// (left edge: x = 0, right edge: y = 0) and flagged.
FrontierCurve smf_frontier(const SmfModel& model, double T, int num_points = 512);

// Same construction with the y-functional mean_mu(k) * E[(X-b)^+], i.e. the
// expected unused capacity in bits/s. d(loss)/db = -mean_mu * P(X > b), so the
// tangency equation uses lost_slope instead of frontier_slope.
FrontierCurve lost_throughput_frontier(const SmfModel& model, double T, int num_points = 512);

// True iff (eq, eu) is on or above the curve within margin.
bool point_dominated(const FrontierCurve& curve, double eq, double eu, double margin = 0.0);

struct SlopeSolveResult {
    double b = 0;
    bool clamped_left = false;
    bool clamped_right = false;
};

// Smallest load b whose trade-off slope reaches target_slope (< 0); b is the
// step-crossing point for atomic distributions and is pinned to a support
// edge (with a flag) when the target slope is not attainable.
SlopeSolveResult solve_load_for_slope(const RatioDist& dist, double T, double target_slope);

// Frontier CSV: "param,eq_seconds,eu"; SMF kinds append "b_k<i>,x_k<i>,y_k<i>"
// columns per state.
void write_frontier_csv(const FrontierCurve& curve, std::ostream& out);
std::string frontier_csv_string(const FrontierCurve& curve);

} // namespace tvlink
