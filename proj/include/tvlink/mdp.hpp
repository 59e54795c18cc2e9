#pragma once

#include <map>
#include <string>
#include <vector>

#include "tvlink/dist.hpp"
#include "tvlink/link_models.hpp"

namespace tvlink {

struct MdpConfig {
    double w = 1.0;       // queuing-delay weight in the per-round cost w*q + U
    double gamma = 0.95;  // discount, in (0, 1)
    double T = 0.1;       // round duration, seconds

    double q_max_s = -1.0; // q-grid upper end; < 0 selects 20*T
    int n_q = 400;         // uniform q grid
    double rho_min = 0.01;
    double rho_max = -1.0; // < 0 selects min(10, 2*x_max)
    int n_rho = 800;       // log-spaced rho grid
    double tol = 1e-8;     // sup-norm convergence threshold
    int max_iters = 5000;

    void validate() const;
};

struct MdpSolution {
    double c_star = 0;             // minimizer of the final W (smallest index on ties)
    std::vector<double> q_grid;
    std::vector<double> rho_grid;
    std::vector<double> v_on_grid; // V(q_i), non-decreasing and discretely convex
    std::vector<double> w_on_grid; // W(rho_j), discretely convex
    std::vector<double> policy_rho; // minimizing rho per q-grid node
    std::vector<double> residuals;  // sup-norm residual per iteration
    int iters = 0;
    bool converged = false;
    // Fraction of probability transitions that landed beyond q_max under the
    // computed policy, measured along the occupancy chain started at q = 0.
    double clamp_mass = 0;
    // False when the discounted expansion rate gamma * E[next_mul / X] is at
    // least 1: the unbounded value function diverges, the solve describes
    // only the q_max-truncated surrogate, and the V/W convexity guarantees do
    // not apply.
    bool value_exists = true;
    bool unreliable = false; // clamp_mass > 5% or value does not exist

    std::string to_json_text(const MdpConfig& cfg) const;
};

// Value iteration for the fixed-ratio link: the state is the queuing delay q,
// actions are the load rho >= q/T, the next state is T*(rho/X - 1)^+.
// Analytic distributions are pre-discretized to 512 equal-probability atoms.
MdpSolution solve_mif(const RatioDist& dist, const MdpConfig& cfg);

// Prediction variant: the state is Q/Pred, transitions go to
// T*(rho/a - 1)^+ * a/b with a drawn from the prediction-error ratio and b
// from the prediction drift. Analytic inputs are pre-discretized to 64 atoms
// each to keep the product kernel tractable.
MdpSolution solve_pmif(const RatioDist& pred_error, const RatioDist& pred_drift,
                       const MdpConfig& cfg);

struct SmfApproxResult {
    std::map<int, double> c_map;   // per-state constant
    std::map<int, bool> clamped;   // target slope outside the attainable range
};

// Slope-matched approximation of the per-state constants: solve
// frontier_slope(f^k, b, T) = -w per state by bisection, clamping to the
// support edges when -w is not attainable.
SmfApproxResult approx_c_smf(const SmfModel& model, double w, double T);

} // namespace tvlink
