#pragma once

#include <span>
#include <string>
#include <vector>

#include "tvlink/rng.hpp"

namespace tvlink {

struct DistSummary {
    double x_min = 0;   // infimum of the support
    double x_max = 0;   // supremum of the support
    double mean_log = 0; // E[ln X]
};

// Distribution of the multiplicative capacity ratio X (strictly positive support).
//
// Empirical distributions (sorted atoms with weights) are the canonical form;
// the analytic families exist for synthetic links and for validating the
// closed-form expectation functionals against quadrature.
class RatioDist {
  public:
    enum class Kind { Empirical, Uniform, LogUniform, PointMass };

    // Atoms must be strictly ascending and positive; weights non-negative,
    // summing to 1 within 1e-12.
    static RatioDist empirical(std::vector<double> atoms, std::vector<double> weights);
    // One atom per distinct sample value, weight = multiplicity / n.
    static RatioDist from_samples(std::span<const double> ratios);
    static RatioDist uniform(double lo, double hi);
    // X = exp(E) with E uniform on [e_lo, e_hi].
    static RatioDist log_uniform(double e_lo, double e_hi);
    static RatioDist point_mass(double v);

    Kind kind() const { return kind_; }
    DistSummary summary() const;

    // E[q(t) | rho(t)=b] = T * E[(b/X - 1)^+]. Zero whenever b <= x_min.
    double e_queue_given_load(double b, double T) const;
    // E[U(t) | rho(t)=b] = E[(1 - b/X)^+], in [0,1]. Zero whenever b >= x_max.
    double e_underutil_given_load(double b) const;
    // E[(X - b)^+], the mu-independent factor of the expected unused capacity.
    double e_lost_given_load(double b) const;
    // d(eu)/d(eq) along the trade-off curve at load b:
    //   -(integral of f(a)/a over a > b) / (T * integral of f(a)/a over a < b).
    // Returns -inf when b <= x_min (left edge, slope undefined), 0 when b >= x_max.
    double frontier_slope(double b, double T) const;
    // Equivalent slope when the y-functional is mean_mu * e_lost_given_load:
    //   -(mean_mu * P(X > b)) / (T * integral of f(a)/a over a < b).
    double lost_slope(double b, double T, double mean_mu) const;

    double sample(Rng& rng) const;

    // Equal-probability discretization used by the MDP solvers.  Empirical
    // distributions are returned as-is; analytic kinds are sampled at the
    // (i + 0.5)/n quantiles with weight 1/n each.
    RatioDist discretized(int n) const;

    const std::vector<double>& atoms() const { return atoms_; }     // empirical only
    const std::vector<double>& weights() const { return weights_; } // empirical only

    // {"atoms": [[a, p], ...]} with atoms ascending; weights must sum to 1
    // within 1e-9 or the input is rejected.
    static RatioDist from_json_text(const std::string& text);
    std::string to_json_text() const;

    bool operator==(const RatioDist& o) const;

  private:
    RatioDist() = default;

    Kind kind_ = Kind::PointMass;
    // Empirical payload plus Kahan-compensated prefix sums over sorted atoms:
    // csum_*[i] covers atoms [0, i).
    std::vector<double> atoms_;
    std::vector<double> weights_;
    std::vector<double> csum_p_;
    std::vector<double> csum_p_over_a_;
    std::vector<double> csum_p_times_a_;
    // Analytic parameters: uniform [lo, hi]; log-uniform exponent bounds;
    // point-mass value in param_lo_.
    double param_lo_ = 1.0;
    double param_hi_ = 1.0;

    void build_prefix_sums();
};

} // namespace tvlink
