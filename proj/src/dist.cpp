#include "tvlink/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "tvlink/errors.hpp"

namespace tvlink {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Kahan-compensated running sum; keeps prefix arrays accurate to O(eps)
// independent of atom count.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        double y = x - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

} // namespace

RatioDist RatioDist::empirical(std::vector<double> atoms, std::vector<double> weights) {
    if (atoms.empty() || atoms.size() != weights.size())
        throw ParamError("empirical distribution needs matching non-empty atoms and weights");
    KahanSum total;
    for (size_t i = 0; i < atoms.size(); ++i) {
        if (!(atoms[i] > 0.0))
            throw ParamError("empirical atom must be positive");
        if (i > 0 && !(atoms[i] > atoms[i - 1]))
            throw ParamError("empirical atoms must be strictly ascending");
        if (weights[i] < 0.0)
            throw ParamError("empirical weight must be non-negative");
        total.add(weights[i]);
    }
    if (std::abs(total.sum - 1.0) > 1e-12)
        throw ParamError("empirical weights must sum to 1 within 1e-12");
    RatioDist d;
    d.kind_ = Kind::Empirical;
    d.atoms_ = std::move(atoms);
    d.weights_ = std::move(weights);
    d.build_prefix_sums();
    return d;
}

RatioDist RatioDist::from_samples(std::span<const double> ratios) {
    if (ratios.empty())
        throw ParamError("cannot fit a distribution from zero samples");
    std::map<double, size_t> counts;
    for (double r : ratios) {
        if (!(r > 0.0) || !std::isfinite(r))
            throw ParamError("cannot fit a distribution from non-positive samples");
        ++counts[r];
    }
    std::vector<double> atoms, weights;
    atoms.reserve(counts.size());
    weights.reserve(counts.size());
    const double n = static_cast<double>(ratios.size());
    for (const auto& [value, count] : counts) {
        atoms.push_back(value);
        weights.push_back(static_cast<double>(count) / n);
    }
    return empirical(std::move(atoms), std::move(weights));
}

RatioDist RatioDist::uniform(double lo, double hi) {
    if (!(lo > 0.0) || !(hi > lo))
        throw ParamError("uniform distribution needs 0 < lo < hi");
    RatioDist d;
    d.kind_ = Kind::Uniform;
    d.param_lo_ = lo;
    d.param_hi_ = hi;
    return d;
}

RatioDist RatioDist::log_uniform(double e_lo, double e_hi) {
    if (!(e_hi > e_lo))
        throw ParamError("log-uniform distribution needs e_lo < e_hi");
    RatioDist d;
    d.kind_ = Kind::LogUniform;
    d.param_lo_ = e_lo;
    d.param_hi_ = e_hi;
    return d;
}

RatioDist RatioDist::point_mass(double v) {
    if (!(v > 0.0))
        throw ParamError("point mass must be positive");
    RatioDist d;
    d.kind_ = Kind::PointMass;
    d.param_lo_ = v;
    d.param_hi_ = v;
    return d;
}

void RatioDist::build_prefix_sums() {
    const size_t n = atoms_.size();
    csum_p_.assign(n + 1, 0.0);
    csum_p_over_a_.assign(n + 1, 0.0);
    csum_p_times_a_.assign(n + 1, 0.0);
    KahanSum p, poa, pta;
    for (size_t i = 0; i < n; ++i) {
        p.add(weights_[i]);
        poa.add(weights_[i] / atoms_[i]);
        pta.add(weights_[i] * atoms_[i]);
        csum_p_[i + 1] = p.sum;
        csum_p_over_a_[i + 1] = poa.sum;
        csum_p_times_a_[i + 1] = pta.sum;
    }
}

DistSummary RatioDist::summary() const {
    DistSummary s;
    switch (kind_) {
    case Kind::Empirical: {
        s.x_min = atoms_.front();
        s.x_max = atoms_.back();
        KahanSum ml;
        for (size_t i = 0; i < atoms_.size(); ++i)
            ml.add(weights_[i] * std::log(atoms_[i]));
        s.mean_log = ml.sum;
        break;
    }
    case Kind::Uniform: {
        const double lo = param_lo_, hi = param_hi_;
        s.x_min = lo;
        s.x_max = hi;
        s.mean_log = (hi * (std::log(hi) - 1.0) - lo * (std::log(lo) - 1.0)) / (hi - lo);
        break;
    }
    case Kind::LogUniform:
        s.x_min = std::exp(param_lo_);
        s.x_max = std::exp(param_hi_);
        s.mean_log = 0.5 * (param_lo_ + param_hi_);
        break;
    case Kind::PointMass:
        s.x_min = s.x_max = param_lo_;
        s.mean_log = std::log(param_lo_);
        break;
    }
    return s;
}

double RatioDist::e_queue_given_load(double b, double T) const {
    if (b < 0.0)
        throw ParamError("load b must be non-negative");
    if (!(T > 0.0))
        throw ParamError("round duration T must be positive");
    switch (kind_) {
    case Kind::Empirical: {
        // Atoms at a == b contribute exactly zero, so the strict cut is exact.
        const size_t idx = std::lower_bound(atoms_.begin(), atoms_.end(), b) - atoms_.begin();
        const double v = T * (b * csum_p_over_a_[idx] - csum_p_[idx]);
        return std::max(0.0, v);
    }
    case Kind::Uniform: {
        const double lo = param_lo_, hi = param_hi_;
        if (b <= lo)
            return 0.0;
        const double u = std::min(b, hi);
        return T * (b * std::log(u / lo) - (u - lo)) / (hi - lo);
    }
    case Kind::LogUniform: {
        const double xmin = std::exp(param_lo_), xmax = std::exp(param_hi_);
        if (b <= xmin)
            return 0.0;
        const double u = std::min(b, xmax);
        const double range = param_hi_ - param_lo_;
        return T * (b * (1.0 / xmin - 1.0 / u) - std::log(u / xmin)) / range;
    }
    case Kind::PointMass:
        return T * std::max(0.0, b / param_lo_ - 1.0);
    }
    return 0.0;
}

double RatioDist::e_underutil_given_load(double b) const {
    if (b < 0.0)
        throw ParamError("load b must be non-negative");
    if (b == 0.0)
        return 1.0;
    switch (kind_) {
    case Kind::Empirical: {
        const size_t idx = std::upper_bound(atoms_.begin(), atoms_.end(), b) - atoms_.begin();
        const double p_tail = csum_p_.back() - csum_p_[idx];
        const double poa_tail = csum_p_over_a_.back() - csum_p_over_a_[idx];
        const double v = p_tail - b * poa_tail;
        return std::min(1.0, std::max(0.0, v));
    }
    case Kind::Uniform: {
        const double lo = param_lo_, hi = param_hi_;
        if (b >= hi)
            return 0.0;
        const double v = std::max(b, lo);
        return ((hi - v) - b * std::log(hi / v)) / (hi - lo);
    }
    case Kind::LogUniform: {
        const double xmin = std::exp(param_lo_), xmax = std::exp(param_hi_);
        if (b >= xmax)
            return 0.0;
        const double v = std::max(b, xmin);
        const double range = param_hi_ - param_lo_;
        return (std::log(xmax / v) - b * (1.0 / v - 1.0 / xmax)) / range;
    }
    case Kind::PointMass:
        return std::max(0.0, 1.0 - b / param_lo_);
    }
    return 0.0;
}

double RatioDist::e_lost_given_load(double b) const {
    if (b < 0.0)
        throw ParamError("load b must be non-negative");
    switch (kind_) {
    case Kind::Empirical: {
        const size_t idx = std::upper_bound(atoms_.begin(), atoms_.end(), b) - atoms_.begin();
        const double pa_tail = csum_p_times_a_.back() - csum_p_times_a_[idx];
        const double p_tail = csum_p_.back() - csum_p_[idx];
        return std::max(0.0, pa_tail - b * p_tail);
    }
    case Kind::Uniform: {
        const double lo = param_lo_, hi = param_hi_;
        if (b >= hi)
            return 0.0;
        const double v = std::max(b, lo);
        return (0.5 * (hi * hi - v * v) - b * (hi - v)) / (hi - lo);
    }
    case Kind::LogUniform: {
        const double xmin = std::exp(param_lo_), xmax = std::exp(param_hi_);
        if (b >= xmax)
            return 0.0;
        const double v = std::max(b, xmin);
        const double range = param_hi_ - param_lo_;
        return ((xmax - v) - b * std::log(xmax / v)) / range;
    }
    case Kind::PointMass:
        return std::max(0.0, param_lo_ - b);
    }
    return 0.0;
}

double RatioDist::frontier_slope(double b, double T) const {
    if (!(T > 0.0))
        throw ParamError("round duration T must be positive");
    double head = 0.0, tail = 0.0; // integrals of f(a)/a over a < b and a > b
    switch (kind_) {
    case Kind::Empirical: {
        const size_t lo_idx = std::lower_bound(atoms_.begin(), atoms_.end(), b) - atoms_.begin();
        const size_t hi_idx = std::upper_bound(atoms_.begin(), atoms_.end(), b) - atoms_.begin();
        head = csum_p_over_a_[lo_idx];
        tail = csum_p_over_a_.back() - csum_p_over_a_[hi_idx];
        break;
    }
    case Kind::Uniform: {
        const double lo = param_lo_, hi = param_hi_;
        if (b > lo)
            head = std::log(std::min(b, hi) / lo) / (hi - lo);
        if (b < hi)
            tail = std::log(hi / std::max(b, lo)) / (hi - lo);
        break;
    }
    case Kind::LogUniform: {
        const double xmin = std::exp(param_lo_), xmax = std::exp(param_hi_);
        const double range = param_hi_ - param_lo_;
        if (b > xmin)
            head = (1.0 / xmin - 1.0 / std::min(b, xmax)) / range;
        if (b < xmax)
            tail = (1.0 / std::max(b, xmin) - 1.0 / xmax) / range;
        break;
    }
    case Kind::PointMass: {
        if (b > param_lo_)
            head = 1.0 / param_lo_;
        else
            tail = 1.0 / param_lo_;
        break;
    }
    }
    if (head <= 0.0)
        return -kInf; // slope undefined at the left edge
    if (tail <= 0.0)
        return 0.0;
    return -tail / (T * head);
}

double RatioDist::lost_slope(double b, double T, double mean_mu) const {
    if (!(T > 0.0))
        throw ParamError("round duration T must be positive");
    double head = 0.0;   // integral of f(a)/a over a < b
    double p_tail = 0.0; // P(X > b)
    switch (kind_) {
    case Kind::Empirical: {
        const size_t lo_idx = std::lower_bound(atoms_.begin(), atoms_.end(), b) - atoms_.begin();
        const size_t hi_idx = std::upper_bound(atoms_.begin(), atoms_.end(), b) - atoms_.begin();
        head = csum_p_over_a_[lo_idx];
        p_tail = csum_p_.back() - csum_p_[hi_idx];
        break;
    }
    case Kind::Uniform: {
        const double lo = param_lo_, hi = param_hi_;
        if (b > lo)
            head = std::log(std::min(b, hi) / lo) / (hi - lo);
        if (b < hi)
            p_tail = (hi - std::max(b, lo)) / (hi - lo);
        break;
    }
    case Kind::LogUniform: {
        const double xmin = std::exp(param_lo_), xmax = std::exp(param_hi_);
        const double range = param_hi_ - param_lo_;
        if (b > xmin)
            head = (1.0 / xmin - 1.0 / std::min(b, xmax)) / range;
        if (b < xmax)
            p_tail = std::log(xmax / std::max(b, xmin)) / range;
        break;
    }
    case Kind::PointMass: {
        if (b > param_lo_)
            head = 1.0 / param_lo_;
        else
            p_tail = 1.0;
        break;
    }
    }
    if (head <= 0.0)
        return -kInf;
    if (p_tail <= 0.0)
        return 0.0;
    return -mean_mu * p_tail / (T * head);
}

double RatioDist::sample(Rng& rng) const {
    switch (kind_) {
    case Kind::Empirical: {
        // Inverse CDF over the cumulative weights.
        const double u = rng.next_unit();
        const size_t idx =
            std::upper_bound(csum_p_.begin() + 1, csum_p_.end(), u) - (csum_p_.begin() + 1);
        return atoms_[std::min(idx, atoms_.size() - 1)];
    }
    case Kind::Uniform:
        return param_lo_ + rng.next_unit() * (param_hi_ - param_lo_);
    case Kind::LogUniform:
        return std::exp(param_lo_ + rng.next_unit() * (param_hi_ - param_lo_));
    case Kind::PointMass:
        return param_lo_;
    }
    return param_lo_;
}

RatioDist RatioDist::discretized(int n) const {
    if (n < 1)
        throw ParamError("discretization needs at least one atom");
    switch (kind_) {
    case Kind::Empirical:
        return *this;
    case Kind::PointMass:
        return empirical({param_lo_}, {1.0});
    case Kind::Uniform:
    case Kind::LogUniform: {
        std::vector<double> atoms(n), weights(n, 1.0 / n);
        for (int i = 0; i < n; ++i) {
            const double q = (i + 0.5) / n;
            atoms[i] = kind_ == Kind::Uniform
                           ? param_lo_ + q * (param_hi_ - param_lo_)
                           : std::exp(param_lo_ + q * (param_hi_ - param_lo_));
        }
        return empirical(std::move(atoms), std::move(weights));
    }
    }
    return *this;
}

RatioDist RatioDist::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("invalid distribution JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("atoms") || !j["atoms"].is_array())
        throw IoError("distribution JSON must be an object with an \"atoms\" array");
    std::vector<double> atoms, weights;
    double total = 0.0;
    for (const auto& entry : j["atoms"]) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
            !entry[1].is_number())
            throw IoError("each atom must be a [value, weight] pair");
        atoms.push_back(entry[0].get<double>());
        weights.push_back(entry[1].get<double>());
        total += weights.back();
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw IoError("distribution weights must sum to 1 within 1e-9");
    if (std::abs(total - 1.0) > 1e-12) {
        // Absorb residual rounding so construction's tighter check passes.
        for (double& w : weights)
            w /= total;
    }
    try {
        return empirical(std::move(atoms), std::move(weights));
    } catch (const ParamError& e) {
        throw IoError(std::string("invalid distribution JSON: ") + e.what());
    }
}

std::string RatioDist::to_json_text() const {
    if (kind_ != Kind::Empirical)
        throw ParamError("only empirical distributions have a JSON form");
    nlohmann::json arr = nlohmann::json::array();
    for (size_t i = 0; i < atoms_.size(); ++i)
        arr.push_back({atoms_[i], weights_[i]});
    nlohmann::json j;
    j["atoms"] = std::move(arr);
    return j.dump();
}

bool RatioDist::operator==(const RatioDist& o) const {
    return kind_ == o.kind_ && atoms_ == o.atoms_ && weights_ == o.weights_ &&
           param_lo_ == o.param_lo_ && param_hi_ == o.param_hi_;
}

} // namespace tvlink
