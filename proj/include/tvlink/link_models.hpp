#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tvlink/dist.hpp"
#include "tvlink/trace.hpp"

namespace tvlink {

// mu(t) = mu(t-1) * X_t with X_t i.i.d.
struct MifModel {
    RatioDist ratio;
};

// mu(t) = Pred(t-1) * Xp_t; the prediction itself drifts by Xpred_t.
struct PmifModel {
    RatioDist pred_error; // Xp
    RatioDist pred_drift; // Xpred
};

// State-binned link model: the ratio distribution depends on which capacity
// bin mu(t-1) fell in. lambda holds the stationary state weights (empirical
// visit frequencies when fitted from a trace).
struct SmfModel {
    std::vector<double> bin_edges;          // K-1 interior thresholds, ascending
    std::vector<RatioDist> per_state_ratio; // K entries, f^k
    std::vector<double> lambda;             // K entries, sums to 1 within 1e-12
    std::vector<double> mean_mu_bps;        // per-state bin means; empty unless trace-fitted
    std::optional<std::pair<double, double>> fitted_mu_range; // observed mu(t-1) range

    int num_states() const { return static_cast<int>(per_state_ratio.size()); }
    // Bin of a capacity value; bins are [edge_{k-1}, edge_k), the outer bins
    // extend to 0 and +inf, so every positive mu maps to a state.
    int state_of(double mu_bps) const;
    bool in_fitted_range(double mu_bps) const;
    bool has_mean_mu() const { return !mean_mu_bps.empty(); }

    void validate() const;

    // {"bin_edges": [...], "states": [{"lambda": p, "atoms": [[a, w], ...],
    //  "mean_mu_bps": m?}, ...]}; mean_mu_bps entries appear only for
    // trace-fitted models.
    static SmfModel from_json_text(const std::string& text);
    std::string to_json_text() const;
};

// Pred(t-1) values for rounds 1..len-1 of the trace they were generated for;
// pred_for_round(t) is the prediction available to the sender before round t.
struct PredictionSeries {
    std::vector<double> pred_bps; // pred_bps[t-1] = Pred(t-1) for round t

    size_t size() const { return pred_bps.size(); }
    double pred_for_round(size_t t) const { return pred_bps.at(t - 1); }
};

// Empirical distribution of consecutive capacity ratios mu(t)/mu(t-1).
MifModel fit_mif(const CapacityTrace& trace);

// Quantile bins over mu(t-1) with greedy merging of under-populated bins.
SmfModel fit_smf(const CapacityTrace& trace, int num_bins = 8, int min_samples_per_bin = 50);

CapacityTrace gen_mif(const MifModel& model, double mu0_bps, int n_rounds, double T,
                      uint64_t seed);

struct SmfGenResult {
    CapacityTrace trace;
    int state_clamps = 0; // rounds where mu left the fitted capacity range
};
SmfGenResult gen_smf(const SmfModel& model, double mu0_bps, int n_rounds, double T, uint64_t seed);

// Pred(t-1) = mu(t) / Xp for every round t >= 1.
PredictionSeries gen_predictions(const CapacityTrace& trace, const RatioDist& pred_error,
                                 uint64_t seed);

// Empirical distribution of pred(t)/pred(t-1); the drift input to the PMIF solver.
RatioDist fit_pred_drift(const PredictionSeries& preds);

} // namespace tvlink
