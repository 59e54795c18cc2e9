#include "tvlink/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>

#include <json.hpp>

#include "tvlink/errors.hpp"

namespace tvlink {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename Fn>
void parallel_indexed(size_t count, int jobs, Fn fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> threads;
    const size_t workers = std::min<size_t>(jobs, count);
    for (size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w]() {
            for (size_t i = w; i < count; i += workers)
                fn(i);
        });
    }
    for (auto& t : threads)
        t.join();
}

template <typename Model>
MonteCarloResult monte_carlo_impl(const Model& model, const LawConfig& law, int n_rounds,
                                  int n_seeds, double mu0_bps, double T, uint64_t seed,
                                  int jobs) {
    if (n_seeds < 2)
        throw ParamError("monte carlo needs at least two seeds");
    MonteCarloResult result;
    result.per_seed.resize(n_seeds);
    parallel_indexed(static_cast<size_t>(n_seeds), jobs, [&](size_t i) {
        CapacityTrace trace;
        if constexpr (std::is_same_v<Model, MifModel>)
            trace = gen_mif(model, mu0_bps, n_rounds, T, Rng::stream(seed, i).state());
        else
            trace = gen_smf(model, mu0_bps, n_rounds, T, Rng::stream(seed, i).state()).trace;
        RunOptions opts;
        if constexpr (std::is_same_v<Model, SmfModel>)
            opts.smf = &model;
        result.per_seed[i] = run(trace, law, opts).summary;
    });
    double sum_q = 0, sum_u = 0;
    for (const auto& s : result.per_seed) {
        sum_q += s.mean_q_s;
        sum_u += s.mean_u;
    }
    result.mean_q_s = sum_q / n_seeds;
    result.mean_u = sum_u / n_seeds;
    double var_q = 0, var_u = 0;
    for (const auto& s : result.per_seed) {
        var_q += (s.mean_q_s - result.mean_q_s) * (s.mean_q_s - result.mean_q_s);
        var_u += (s.mean_u - result.mean_u) * (s.mean_u - result.mean_u);
    }
    const double denom = static_cast<double>(n_seeds) * (n_seeds - 1);
    result.stderr_q = std::sqrt(var_q / denom);
    result.stderr_u = std::sqrt(var_u / denom);
    return result;
}

} // namespace

RunResult run(const CapacityTrace& trace, const LawConfig& law, const RunOptions& opts) {
    validate_law(law);
    if (trace.rounds() < 2)
        throw ParamError("simulation requires a trace of at least two rounds");
    if (!(trace.round_duration_s > 0.0))
        throw ParamError("round duration T must be positive");
    for (double mu : trace.mu_bps)
        if (!(mu > 0.0) || !std::isfinite(mu))
            throw ParamError("trace capacities must be finite and positive");
    if (opts.q0_bits < 0.0)
        throw ParamError("initial queue must be non-negative");
    const bool is_pmif = std::holds_alternative<OptimalPmifLaw>(law);
    if (is_pmif && opts.preds == nullptr)
        throw ParamError("optimal-pmif simulation needs a prediction series");
    if (is_pmif && opts.preds->size() != trace.rounds() - 1)
        throw ParamError("prediction series length must be trace length - 1");
    const bool is_smf = std::holds_alternative<OptimalSmfLaw>(law);
    if (is_smf && opts.smf == nullptr)
        throw ParamError("optimal-smf simulation needs an SMF model for state lookup");

    const double T = trace.round_duration_s;
    RunResult result;
    result.records.reserve(trace.rounds() - 1);

    double q_prev = opts.q0_bits;
    double s_prev = opts.initial_rate_bps.value_or(trace.mu_bps[0]);

    double sum_q = 0, sum_u = 0, sum_lost = 0;
    for (size_t t = 1; t < trace.rounds(); ++t) {
        Observation obs;
        obs.mu_prev_bps = trace.mu_bps[t - 1];
        obs.q_len_prev_bits = q_prev;
        obs.rate_prev_bps = s_prev;
        obs.round_T_s = T;
        if (is_pmif)
            obs.pred_bps = opts.preds->pred_for_round(t);
        if (is_smf)
            obs.state_prev = opts.smf->state_of(trace.mu_bps[t - 1]);

        const double raw = raw_rate(law, obs);
        const double s = std::max(0.0, raw);
        if (raw < 0.0)
            ++result.summary.clamp_count;

        const double mu = trace.mu_bps[t];
        const double inflow = q_prev + s * T;
        const double q_len = std::max(0.0, inflow - mu * T);
        const double spare = std::max(0.0, mu * T - s * T - q_prev);

        SimRecord rec;
        rec.t = static_cast<int>(t);
        rec.s_bps = s;
        rec.mu_bps = mu;
        rec.q_len_bits = q_len;
        rec.q_delay_s = q_len / mu;
        rec.underutil = spare / (mu * T);
        rec.lost_bps = spare / T;
        rec.rho = rho_of(obs, s);
        result.records.push_back(rec);

        sum_q += rec.q_delay_s;
        sum_u += rec.underutil;
        sum_lost += rec.lost_bps;
        result.summary.max_q_delay_s = std::max(result.summary.max_q_delay_s, rec.q_delay_s);

        q_prev = q_len;
        s_prev = s;
    }
    const double n = static_cast<double>(result.records.size());
    result.summary.rounds = static_cast<int>(result.records.size());
    result.summary.mean_q_s = sum_q / n;
    result.summary.mean_u = sum_u / n;
    result.summary.mean_lost_bps = sum_lost / n;
    return result;
}

PerfCurve sweep(const CapacityTrace& trace, const std::vector<LawConfig>& laws,
                const RunOptions& opts, int jobs) {
    if (laws.empty())
        throw ParamError("sweep needs at least one law config");
    PerfCurve curve;
    curve.entries.resize(laws.size());
    parallel_indexed(laws.size(), jobs, [&](size_t i) {
        SweepEntry entry;
        entry.law = laws[i];
        entry.input_index = i;
        try {
            entry.summary = run(trace, laws[i], opts).summary;
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        curve.entries[i] = std::move(entry);
    });
    std::stable_sort(curve.entries.begin(), curve.entries.end(),
                     [](const SweepEntry& a, const SweepEntry& b) {
                         if (a.summary.has_value() != b.summary.has_value())
                             return a.summary.has_value();
                         if (!a.summary)
                             return a.input_index < b.input_index;
                         if (a.summary->mean_q_s != b.summary->mean_q_s)
                             return a.summary->mean_q_s < b.summary->mean_q_s;
                         return a.input_index < b.input_index;
                     });
    return curve;
}

MonteCarloResult monte_carlo(const MifModel& model, const LawConfig& law, int n_rounds,
                             int n_seeds, double mu0_bps, double T, uint64_t seed, int jobs) {
    return monte_carlo_impl(model, law, n_rounds, n_seeds, mu0_bps, T, seed, jobs);
}

MonteCarloResult monte_carlo(const SmfModel& model, const LawConfig& law, int n_rounds,
                             int n_seeds, double mu0_bps, double T, uint64_t seed, int jobs) {
    return monte_carlo_impl(model, law, n_rounds, n_seeds, mu0_bps, T, seed, jobs);
}

QueueBoundCheck check_queue_bound(const std::vector<SimRecord>& records, double C,
                                  const CapacityTrace& trace) {
    QueueBoundCheck check;
    const double T = trace.round_duration_s;
    for (const auto& rec : records) {
        if (rec.q_len_bits > T * C * rec.mu_bps) {
            check.ok = false;
            check.first_violation = rec.t;
            return check;
        }
    }
    return check;
}

std::string run_csv_string(const std::vector<SimRecord>& records) {
    std::string out = "t,s_bps,mu_bps,q_bits,q_delay_s,underutil,lost_bps,rho\n";
    for (const auto& r : records) {
        out += std::to_string(r.t);
        out += ',' + fmt_double(r.s_bps) + ',' + fmt_double(r.mu_bps) + ',' +
               fmt_double(r.q_len_bits) + ',' + fmt_double(r.q_delay_s) + ',' +
               fmt_double(r.underutil) + ',' + fmt_double(r.lost_bps) + ',' + fmt_double(r.rho) +
               '\n';
    }
    return out;
}

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string summary_json_text(const SimSummary& summary, const LawConfig& law,
                              const CapacityTrace& trace) {
    nlohmann::json j;
    j["mean_q_s"] = summary.mean_q_s;
    j["mean_u"] = summary.mean_u;
    j["mean_lost_bps"] = summary.mean_lost_bps;
    j["rounds"] = summary.rounds;
    j["clamp_count"] = summary.clamp_count;
    j["max_q_delay_s"] = summary.max_q_delay_s;
    j["law"] = nlohmann::json::parse(law_to_json_text(law));
    char hash[32];
    std::snprintf(hash, sizeof(hash), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(capacity_csv_string(trace))));
    j["trace_hash"] = hash;
    j["trace_origin"] = trace.origin;
    return j.dump(2);
}

std::string perf_curve_csv_string(const PerfCurve& curve) {
    std::string out = "index,law,mean_q_s,mean_u,mean_lost_bps,rounds,clamp_count,max_q_delay_s,"
                      "error\n";
    for (const auto& e : curve.entries) {
        std::string law_field = law_to_json_text(e.law);
        // CSV-quote the embedded JSON.
        std::string quoted = "\"";
        for (char c : law_field) {
            if (c == '"')
                quoted += "\"\"";
            else
                quoted += c;
        }
        quoted += '"';
        out += std::to_string(e.input_index) + ',' + quoted + ',';
        if (e.summary) {
            out += fmt_double(e.summary->mean_q_s) + ',' + fmt_double(e.summary->mean_u) + ',' +
                   fmt_double(e.summary->mean_lost_bps) + ',' +
                   std::to_string(e.summary->rounds) + ',' +
                   std::to_string(e.summary->clamp_count) + ',' +
                   fmt_double(e.summary->max_q_delay_s) + ',';
        } else {
            out += ",,,,,,";
        }
        out += e.error + '\n';
    }
    return out;
}

} // namespace tvlink
