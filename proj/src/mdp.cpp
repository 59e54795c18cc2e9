#include "tvlink/mdp.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "tvlink/errors.hpp"
#include "tvlink/frontier.hpp"

namespace tvlink {

namespace {

constexpr int kMifDiscretization = 512;
constexpr int kPmifDiscretization = 64;

struct Grids {
    std::vector<double> q;
    std::vector<double> rho;
};

Grids make_grids(const MdpConfig& cfg, double x_max) {
    Grids g;
    const double q_max = cfg.q_max_s > 0.0 ? cfg.q_max_s : 20.0 * cfg.T;
    g.q.resize(cfg.n_q);
    for (int i = 0; i < cfg.n_q; ++i)
        g.q[i] = q_max * static_cast<double>(i) / (cfg.n_q - 1);
    const double rho_max = cfg.rho_max > 0.0 ? cfg.rho_max : std::min(10.0, 2.0 * x_max);
    if (!(rho_max > cfg.rho_min))
        throw ParamError("rho grid is empty (rho_max <= rho_min)");
    const double log_span = std::log(rho_max / cfg.rho_min);
    g.rho.resize(cfg.n_rho);
    for (int i = 0; i < cfg.n_rho; ++i)
        g.rho[i] = cfg.rho_min * std::exp(log_span * static_cast<double>(i) / (cfg.n_rho - 1));
    g.rho.front() = cfg.rho_min;
    g.rho.back() = rho_max;
    return g;
}

// Linear interpolation on the uniform q grid, clamped at q_max. The clamp
// truncates the state space into a bounded MDP, which keeps the iteration a
// gamma-contraction even when the unbounded value function does not exist
// (discounted expansion rate >= 1); transitions that land beyond the grid are
// tallied separately as clamp_mass.
double interp_clamped(const std::vector<double>& q_grid, const std::vector<double>& v,
                      double q) {
    const double q_max = q_grid.back();
    if (q >= q_max)
        return v.back();
    if (q <= 0.0)
        return v.front();
    const double step = q_max / (q_grid.size() - 1);
    const double pos = q / step;
    const size_t lo = std::min(static_cast<size_t>(pos), q_grid.size() - 2);
    const double f = pos - static_cast<double>(lo);
    return v[lo] + f * (v[lo + 1] - v[lo]);
}

// One transition branch of the kernel: probability, the per-round cost it
// contributes at load rho, and the next-state queuing delay.
struct Branch {
    double prob;
    double inv_a;    // 1/a for the cost terms
    double next_mul; // next q = T*(rho*inv_a - 1)^+ * next_mul
};

class ValueIterator {
  public:
    ValueIterator(std::vector<Branch> branches, const MdpConfig& cfg, Grids grids)
        : branches_(std::move(branches)), cfg_(cfg), grids_(std::move(grids)) {}

    double action_value(double rho, const std::vector<double>& v) const {
        double total = 0.0;
        for (const Branch& br : branches_) {
            const double load = rho * br.inv_a;
            const double q_next_base = cfg_.T * std::max(0.0, load - 1.0);
            const double cost =
                cfg_.w * q_next_base + std::max(0.0, 1.0 - load);
            total += br.prob *
                     (cost + cfg_.gamma * interp_clamped(grids_.q, v, q_next_base * br.next_mul));
        }
        return total;
    }

    MdpSolution solve() const {
        const int n_q = static_cast<int>(grids_.q.size());
        const int n_rho = static_cast<int>(grids_.rho.size());
        std::vector<double> v(n_q, 0.0), v_next(n_q, 0.0);
        std::vector<double> w_vals(n_rho), suffix_min(n_rho);
        std::vector<int> suffix_arg(n_rho);
        std::vector<double> policy(n_q, 0.0);
        std::vector<double> residuals;

        bool converged = false;
        int iters = 0;
        int growth_streak = 0;
        while (iters < cfg_.max_iters) {
            ++iters;
            for (int r = 0; r < n_rho; ++r)
                w_vals[r] = action_value(grids_.rho[r], v);
            suffix_min[n_rho - 1] = w_vals[n_rho - 1];
            suffix_arg[n_rho - 1] = n_rho - 1;
            for (int r = n_rho - 2; r >= 0; --r) {
                // Ties keep the smaller rho.
                if (w_vals[r] <= suffix_min[r + 1]) {
                    suffix_min[r] = w_vals[r];
                    suffix_arg[r] = r;
                } else {
                    suffix_min[r] = suffix_min[r + 1];
                    suffix_arg[r] = suffix_arg[r + 1];
                }
            }
            for (int j = 0; j < n_q; ++j) {
                const double rho_floor = grids_.q[j] / cfg_.T;
                const BoundaryAction boundary = boundary_action(rho_floor, w_vals, v);
                double best = boundary.value;
                double best_rho = rho_floor;
                if (boundary.grid_index < n_rho && suffix_min[boundary.grid_index] < best) {
                    best = suffix_min[boundary.grid_index];
                    best_rho = grids_.rho[suffix_arg[boundary.grid_index]];
                }
                v_next[j] = best;
                policy[j] = best_rho;
            }
            double residual = 0.0;
            for (int j = 0; j < n_q; ++j)
                residual = std::max(residual, std::abs(v_next[j] - v[j]));
            residuals.push_back(residual);
            v.swap(v_next);
            if (residual < cfg_.tol) {
                converged = true;
                break;
            }
            if (residuals.size() >= 2 && residual > residuals[residuals.size() - 2]) {
                if (++growth_streak >= 50)
                    throw NumericalError("value function appears unbounded");
            } else {
                growth_streak = 0;
            }
        }

        MdpSolution sol;
        // Worst-case action (s = 0) expands the state by next_mul/a per unit
        // q; when the discounted expansion rate reaches 1, the unbounded
        // value function diverges and only the clamped surrogate exists. Its
        // convexity guarantees no longer apply.
        double expansion = 0.0;
        for (const Branch& br : branches_)
            expansion += br.prob * br.inv_a * br.next_mul;
        sol.value_exists = cfg_.gamma * expansion < 1.0;
        sol.q_grid = grids_.q;
        sol.rho_grid = grids_.rho;
        sol.v_on_grid = v;
        sol.w_on_grid.resize(n_rho);
        for (int r = 0; r < n_rho; ++r)
            sol.w_on_grid[r] = action_value(grids_.rho[r], v);
        int best_r = 0;
        for (int r = 1; r < n_rho; ++r)
            if (sol.w_on_grid[r] < sol.w_on_grid[best_r])
                best_r = r;
        sol.c_star = grids_.rho[best_r];
        sol.policy_rho = policy;
        sol.residuals = std::move(residuals);
        sol.iters = iters;
        sol.converged = converged;
        sol.clamp_mass = occupancy_clamp_mass(policy);
        sol.unreliable = sol.clamp_mass > 0.05 || !sol.value_exists;
        return sol;
    }

  private:
    struct BoundaryAction {
        double value;
        int grid_index; // first rho-grid index >= the floor
    };

    // Value of the zero-rate action rho = q/T. Inside the grid this reads the
    // piecewise-linear interpolation of W, so every state minimizes the same
    // convex envelope and V(q) = W~(max(q/T, rho*)) inherits monotonicity and
    // convexity exactly; beyond the grid the action is evaluated directly.
    BoundaryAction boundary_action(double rho_floor, const std::vector<double>& w_vals,
                                   const std::vector<double>& v) const {
        const int n_rho = static_cast<int>(grids_.rho.size());
        const int idx = static_cast<int>(
            std::lower_bound(grids_.rho.begin(), grids_.rho.end(), rho_floor) -
            grids_.rho.begin());
        if (idx == 0)
            return {action_value(rho_floor, v), 0};
        if (idx >= n_rho)
            return {action_value(rho_floor, v), n_rho};
        const double lo = grids_.rho[idx - 1], hi = grids_.rho[idx];
        const double f = (rho_floor - lo) / (hi - lo);
        return {w_vals[idx - 1] + f * (w_vals[idx] - w_vals[idx - 1]), idx};
    }

    // Push the state distribution through the policy's transition kernel from
    // the cold-start state q = 0 and record how much probability mass lands
    // beyond the grid each step.
    double occupancy_clamp_mass(const std::vector<double>& policy) const {
        const int n_q = static_cast<int>(grids_.q.size());
        const double q_max = grids_.q.back();
        const double step = q_max / (n_q - 1);
        std::vector<double> d(n_q, 0.0), d_next(n_q, 0.0);
        d[0] = 1.0;
        const int steps = 100;
        double clamped = 0.0;
        for (int s = 0; s < steps; ++s) {
            std::fill(d_next.begin(), d_next.end(), 0.0);
            for (int j = 0; j < n_q; ++j) {
                if (d[j] == 0.0)
                    continue;
                const double rho = policy[j];
                for (const Branch& br : branches_) {
                    const double q_next =
                        cfg_.T * std::max(0.0, rho * br.inv_a - 1.0) * br.next_mul;
                    const double mass = d[j] * br.prob;
                    if (q_next >= q_max) {
                        if (q_next > q_max)
                            clamped += mass;
                        d_next[n_q - 1] += mass;
                        continue;
                    }
                    const double pos = q_next / step;
                    const int lo = std::min(static_cast<int>(pos), n_q - 2);
                    const double f = pos - lo;
                    d_next[lo] += mass * (1.0 - f);
                    d_next[lo + 1] += mass * f;
                }
            }
            d.swap(d_next);
        }
        return clamped / steps;
    }

    std::vector<Branch> branches_;
    MdpConfig cfg_;
    Grids grids_;
};

} // namespace

void MdpConfig::validate() const {
    if (!(w > 0.0))
        throw ParamError("queuing-delay weight w must be positive");
    if (!(gamma > 0.0) || !(gamma < 1.0))
        throw ParamError("discount gamma must lie in (0, 1)");
    if (!(T > 0.0))
        throw ParamError("round duration T must be positive");
    if (n_q < 2 || n_rho < 2)
        throw ParamError("grids need at least two points");
    if (!(rho_min > 0.0))
        throw ParamError("rho_min must be positive");
    if (!(tol > 0.0))
        throw ParamError("convergence tolerance must be positive");
    if (max_iters < 1)
        throw ParamError("max_iters must be positive");
}

MdpSolution solve_mif(const RatioDist& dist, const MdpConfig& cfg) {
    cfg.validate();
    const RatioDist d = dist.discretized(kMifDiscretization);
    std::vector<Branch> branches;
    branches.reserve(d.atoms().size());
    for (size_t i = 0; i < d.atoms().size(); ++i)
        branches.push_back({d.weights()[i], 1.0 / d.atoms()[i], 1.0});
    return ValueIterator(std::move(branches), cfg, make_grids(cfg, dist.summary().x_max))
        .solve();
}

MdpSolution solve_pmif(const RatioDist& pred_error, const RatioDist& pred_drift,
                       const MdpConfig& cfg) {
    cfg.validate();
    const RatioDist err = pred_error.discretized(kPmifDiscretization);
    const RatioDist drift = pred_drift.discretized(kPmifDiscretization);
    std::vector<Branch> branches;
    branches.reserve(err.atoms().size() * drift.atoms().size());
    for (size_t i = 0; i < err.atoms().size(); ++i) {
        const double a = err.atoms()[i];
        for (size_t j = 0; j < drift.atoms().size(); ++j) {
            const double b = drift.atoms()[j];
            branches.push_back({err.weights()[i] * drift.weights()[j], 1.0 / a, a / b});
        }
    }
    return ValueIterator(std::move(branches), cfg, make_grids(cfg, pred_error.summary().x_max))
        .solve();
}

SmfApproxResult approx_c_smf(const SmfModel& model, double w, double T) {
    model.validate();
    if (!(w > 0.0))
        throw ParamError("queuing-delay weight w must be positive");
    if (!(T > 0.0))
        throw ParamError("round duration T must be positive");
    SmfApproxResult result;
    for (int k = 0; k < model.num_states(); ++k) {
        const SlopeSolveResult s = solve_load_for_slope(model.per_state_ratio[k], T, -w);
        result.c_map[k] = s.b;
        result.clamped[k] = s.clamped_left || s.clamped_right;
    }
    return result;
}

std::string MdpSolution::to_json_text(const MdpConfig& cfg) const {
    nlohmann::json j;
    j["c_star"] = c_star;
    j["converged"] = converged;
    j["iters"] = iters;
    j["clamp_mass"] = clamp_mass;
    j["value_exists"] = value_exists;
    j["unreliable"] = unreliable;
    j["grids"] = {{"q_max_s", q_grid.back()},
                  {"n_q", q_grid.size()},
                  {"rho_min", rho_grid.front()},
                  {"rho_max", rho_grid.back()},
                  {"n_rho", rho_grid.size()},
                  {"tol", cfg.tol},
                  {"gamma", cfg.gamma},
                  {"w", cfg.w},
                  {"T", cfg.T}};
    return j.dump(2);
}

} // namespace tvlink
