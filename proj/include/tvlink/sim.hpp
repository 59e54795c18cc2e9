#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tvlink/control_laws.hpp"
#include "tvlink/link_models.hpp"
#include "tvlink/trace.hpp"

namespace tvlink {

struct SimRecord {
    int t = 0;             // round index, starting at 1
    double s_bps = 0;      // sending rate chosen for the round
    double mu_bps = 0;     // realized capacity mu(t)
    double q_len_bits = 0; // Q(t)
    double q_delay_s = 0;  // q(t) = Q(t)/mu(t)
    double underutil = 0;  // U(t)
    double lost_bps = 0;   // L(t)
    double rho = 0;        // (Q(t-1)/T + s(t)) / mu(t-1)
};

struct SimSummary {
    double mean_q_s = 0;
    double mean_u = 0;
    double mean_lost_bps = 0;
    int rounds = 0;
    int clamp_count = 0; // rounds where the law's unclamped rate was negative
    double max_q_delay_s = 0;
};

struct RunOptions {
    double q0_bits = 0.0;
    // XCP's recurrence needs s(0); defaults to mu(0), a link-saturating start.
    std::optional<double> initial_rate_bps;
    const PredictionSeries* preds = nullptr; // required for optimal-pmif
    const SmfModel* smf = nullptr;           // supplies S(t-1) for optimal-smf
};

struct RunResult {
    std::vector<SimRecord> records; // rounds 1 .. len-1
    SimSummary summary;
};

// Replays the law over the trace: round 0 seeds the first observation, the
// recursion Q(t) = (Q(t-1) + s(t)*T - mu(t)*T)^+ advances with the realized
// capacity, and the summary averages rounds 1..end.
RunResult run(const CapacityTrace& trace, const LawConfig& law, const RunOptions& opts = {});

struct SweepEntry {
    LawConfig law;
    std::optional<SimSummary> summary; // empty when the config failed
    std::string error;
    size_t input_index = 0;
};

struct PerfCurve {
    std::vector<SweepEntry> entries; // valid entries sorted by mean_q, errors last
};

// Runs every config independently (optionally across jobs threads); a failing
// config becomes an error entry rather than failing the sweep.
PerfCurve sweep(const CapacityTrace& trace, const std::vector<LawConfig>& laws,
                const RunOptions& opts = {}, int jobs = 1);

struct MonteCarloResult {
    double mean_q_s = 0;
    double mean_u = 0;
    double stderr_q = 0; // standard error of the per-seed means
    double stderr_u = 0;
    std::vector<SimSummary> per_seed;
};

// Generates one trace per seed stream, runs the law, and averages the
// summaries. Seeds are split deterministically, so results do not depend on
// the parallelism degree.
MonteCarloResult monte_carlo(const MifModel& model, const LawConfig& law, int n_rounds,
                             int n_seeds, double mu0_bps, double T, uint64_t seed,
                             int jobs = 1);
MonteCarloResult monte_carlo(const SmfModel& model, const LawConfig& law, int n_rounds,
                             int n_seeds, double mu0_bps, double T, uint64_t seed,
                             int jobs = 1);

struct QueueBoundCheck {
    bool ok = true;
    long first_violation = -1; // round index of the first Q(t) > T*C*mu(t)
};

// Feasibility invariant of the fixed-load policy: Q(t) <= T * C * mu(t) at
// every recorded round, compared exactly.
QueueBoundCheck check_queue_bound(const std::vector<SimRecord>& records, double C,
                                  const CapacityTrace& trace);

// Run CSV: "t,s_bps,mu_bps,q_bits,q_delay_s,underutil,lost_bps,rho".
std::string run_csv_string(const std::vector<SimRecord>& records);
// Summary JSON with the law config and a provenance hash of the trace.
std::string summary_json_text(const SimSummary& summary, const LawConfig& law,
                              const CapacityTrace& trace);
// PerfCurve CSV: one row per swept config.
std::string perf_curve_csv_string(const PerfCurve& curve);

uint64_t fnv1a64(const std::string& bytes);

} // namespace tvlink
