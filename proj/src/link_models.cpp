#include "tvlink/link_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "tvlink/errors.hpp"

namespace tvlink {

int SmfModel::state_of(double mu_bps) const {
    const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), mu_bps);
    return static_cast<int>(it - bin_edges.begin());
}

bool SmfModel::in_fitted_range(double mu_bps) const {
    if (!fitted_mu_range)
        return true;
    return mu_bps >= fitted_mu_range->first && mu_bps <= fitted_mu_range->second;
}

void SmfModel::validate() const {
    const size_t k = per_state_ratio.size();
    if (k == 0)
        throw ParamError("SMF model needs at least one state");
    if (bin_edges.size() + 1 != k)
        throw ParamError("SMF model needs exactly K-1 bin edges for K states");
    if (!std::is_sorted(bin_edges.begin(), bin_edges.end()))
        throw ParamError("SMF bin edges must be ascending");
    if (lambda.size() != k)
        throw ParamError("SMF model needs one lambda per state");
    double total = 0.0;
    for (double l : lambda) {
        if (l < 0.0)
            throw ParamError("SMF lambda weights must be non-negative");
        total += l;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ParamError("SMF lambda weights must sum to 1 within 1e-12");
    if (!mean_mu_bps.empty() && mean_mu_bps.size() != k)
        throw ParamError("SMF model needs one bin mean per state when present");
}

MifModel fit_mif(const CapacityTrace& trace) {
    if (trace.rounds() < 2)
        throw ParamError("fitting requires a trace of at least two rounds");
    std::vector<double> ratios(trace.rounds() - 1);
    for (size_t t = 1; t < trace.rounds(); ++t)
        ratios[t - 1] = trace.mu_bps[t] / trace.mu_bps[t - 1];
    return MifModel{RatioDist::from_samples(ratios)};
}

SmfModel fit_smf(const CapacityTrace& trace, int num_bins, int min_samples_per_bin) {
    if (num_bins < 1)
        throw ParamError("SMF fit needs at least one bin");
    if (min_samples_per_bin < 1)
        throw ParamError("SMF fit needs a positive per-bin sample threshold");
    if (trace.rounds() < 2)
        throw ParamError("fitting requires a trace of at least two rounds");
    const size_t n = trace.rounds() - 1; // transitions; sources are mu[0..n-1]
    if (n < static_cast<size_t>(min_samples_per_bin))
        throw ParamError("trace has fewer transitions than min_samples_per_bin");

    // Quantile edges at the midpoint of adjacent order statistics, so a cut
    // landing between two distinct values separates them cleanly.
    std::vector<double> sorted(trace.mu_bps.begin(), trace.mu_bps.begin() + n);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (int j = 1; j < num_bins; ++j) {
        const double cut = static_cast<double>(j) * static_cast<double>(n) / num_bins;
        size_t k = static_cast<size_t>(std::llround(cut));
        k = std::min(std::max<size_t>(k, 1), n - 1);
        const double edge = 0.5 * (sorted[k - 1] + sorted[k]);
        if (edges.empty() || edge > edges.back())
            edges.push_back(edge);
    }

    auto bin_of = [&edges](double mu) {
        return static_cast<size_t>(std::upper_bound(edges.begin(), edges.end(), mu) -
                                   edges.begin());
    };

    // Per-bin transition samples (ratios keyed by the source round's bin).
    size_t k = edges.size() + 1;
    std::vector<std::vector<double>> samples(k);
    std::vector<std::vector<double>> sources(k);
    for (size_t t = 1; t < trace.rounds(); ++t) {
        const size_t bin = bin_of(trace.mu_bps[t - 1]);
        samples[bin].push_back(trace.mu_bps[t] / trace.mu_bps[t - 1]);
        sources[bin].push_back(trace.mu_bps[t - 1]);
    }

    // Merge under-populated bins, smallest offender first, into its
    // smaller-count neighbor, until every bin meets the threshold.
    while (k > 1) {
        size_t worst = k;
        for (size_t i = 0; i < k; ++i) {
            if (samples[i].size() < static_cast<size_t>(min_samples_per_bin) &&
                (worst == k || samples[i].size() < samples[worst].size()))
                worst = i;
        }
        if (worst == k)
            break;
        size_t neighbor;
        if (worst == 0)
            neighbor = 1;
        else if (worst == k - 1)
            neighbor = k - 2;
        else
            neighbor = samples[worst - 1].size() <= samples[worst + 1].size() ? worst - 1
                                                                              : worst + 1;
        const size_t lo = std::min(worst, neighbor), hi = std::max(worst, neighbor);
        samples[lo].insert(samples[lo].end(), samples[hi].begin(), samples[hi].end());
        sources[lo].insert(sources[lo].end(), sources[hi].begin(), sources[hi].end());
        samples.erase(samples.begin() + hi);
        sources.erase(sources.begin() + hi);
        edges.erase(edges.begin() + lo); // drop the threshold separating lo|hi
        --k;
    }

    SmfModel model;
    model.bin_edges = std::move(edges);
    for (size_t i = 0; i < k; ++i) {
        model.per_state_ratio.push_back(RatioDist::from_samples(samples[i]));
        model.lambda.push_back(static_cast<double>(samples[i].size()) / static_cast<double>(n));
        model.mean_mu_bps.push_back(
            std::accumulate(sources[i].begin(), sources[i].end(), 0.0) / sources[i].size());
    }
    model.fitted_mu_range = {sorted.front(), sorted.back()};
    model.validate();
    return model;
}

CapacityTrace gen_mif(const MifModel& model, double mu0_bps, int n_rounds, double T,
                      uint64_t seed) {
    if (!(mu0_bps > 0.0))
        throw ParamError("initial capacity must be positive");
    if (n_rounds < 2)
        throw ParamError("generated trace needs at least two rounds");
    if (!(T > 0.0))
        throw ParamError("round duration T must be positive");
    CapacityTrace trace;
    trace.round_duration_s = T;
    trace.origin = "synthetic-mif";
    trace.mu_bps.resize(n_rounds);
    trace.mu_bps[0] = mu0_bps;
    Rng rng = Rng::stream(seed, 0);
    for (int t = 1; t < n_rounds; ++t) {
        trace.mu_bps[t] = trace.mu_bps[t - 1] * model.ratio.sample(rng);
        if (!std::isfinite(trace.mu_bps[t]) || trace.mu_bps[t] <= 0.0)
            throw NumericalError("generated capacity left the double range at round " +
                                 std::to_string(t) + "; shorten the trace or re-center mu0");
    }
    return trace;
}

SmfGenResult gen_smf(const SmfModel& model, double mu0_bps, int n_rounds, double T,
                     uint64_t seed) {
    model.validate();
    if (!(mu0_bps > 0.0))
        throw ParamError("initial capacity must be positive");
    if (n_rounds < 2)
        throw ParamError("generated trace needs at least two rounds");
    if (!(T > 0.0))
        throw ParamError("round duration T must be positive");
    SmfGenResult result;
    result.trace.round_duration_s = T;
    result.trace.origin = "synthetic-smf";
    result.trace.mu_bps.resize(n_rounds);
    result.trace.mu_bps[0] = mu0_bps;
    Rng rng = Rng::stream(seed, 0);
    for (int t = 1; t < n_rounds; ++t) {
        const double prev = result.trace.mu_bps[t - 1];
        if (!model.in_fitted_range(prev))
            ++result.state_clamps;
        const int state = model.state_of(prev);
        result.trace.mu_bps[t] = prev * model.per_state_ratio[state].sample(rng);
        if (!std::isfinite(result.trace.mu_bps[t]) || result.trace.mu_bps[t] <= 0.0)
            throw NumericalError("generated capacity left the double range at round " +
                                 std::to_string(t) + "; shorten the trace or re-center mu0");
    }
    return result;
}

PredictionSeries gen_predictions(const CapacityTrace& trace, const RatioDist& pred_error,
                                 uint64_t seed) {
    if (trace.rounds() < 2)
        throw ParamError("predictions require a trace of at least two rounds");
    PredictionSeries preds;
    preds.pred_bps.resize(trace.rounds() - 1);
    Rng rng = Rng::stream(seed, 0);
    for (size_t t = 1; t < trace.rounds(); ++t)
        preds.pred_bps[t - 1] = trace.mu_bps[t] / pred_error.sample(rng);
    return preds;
}

RatioDist fit_pred_drift(const PredictionSeries& preds) {
    if (preds.size() < 2)
        throw ParamError("prediction drift needs at least two predictions");
    std::vector<double> ratios(preds.size() - 1);
    for (size_t i = 1; i < preds.size(); ++i)
        ratios[i - 1] = preds.pred_bps[i] / preds.pred_bps[i - 1];
    return RatioDist::from_samples(ratios);
}

SmfModel SmfModel::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("invalid SMF model JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("bin_edges") || !j.contains("states"))
        throw IoError("SMF model JSON must contain \"bin_edges\" and \"states\"");
    SmfModel model;
    for (const auto& e : j["bin_edges"])
        model.bin_edges.push_back(e.get<double>());
    bool any_mean = false;
    for (const auto& state : j["states"]) {
        if (!state.contains("lambda") || !state.contains("atoms"))
            throw IoError("each SMF state needs \"lambda\" and \"atoms\"");
        model.lambda.push_back(state["lambda"].get<double>());
        nlohmann::json dist_json;
        dist_json["atoms"] = state["atoms"];
        model.per_state_ratio.push_back(RatioDist::from_json_text(dist_json.dump()));
        if (state.contains("mean_mu_bps")) {
            any_mean = true;
            model.mean_mu_bps.push_back(state["mean_mu_bps"].get<double>());
        } else {
            model.mean_mu_bps.push_back(0.0);
        }
    }
    if (!any_mean)
        model.mean_mu_bps.clear();
    try {
        model.validate();
    } catch (const ParamError& e) {
        throw IoError(std::string("invalid SMF model JSON: ") + e.what());
    }
    return model;
}

std::string SmfModel::to_json_text() const {
    validate();
    nlohmann::json j;
    j["bin_edges"] = bin_edges;
    nlohmann::json states = nlohmann::json::array();
    for (size_t i = 0; i < per_state_ratio.size(); ++i) {
        nlohmann::json state;
        state["lambda"] = lambda[i];
        state["atoms"] = nlohmann::json::parse(per_state_ratio[i].to_json_text())["atoms"];
        if (has_mean_mu())
            state["mean_mu_bps"] = mean_mu_bps[i];
        states.push_back(std::move(state));
    }
    j["states"] = std::move(states);
    return j.dump();
}

} // namespace tvlink
