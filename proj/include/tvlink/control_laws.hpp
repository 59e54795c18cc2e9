#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>

namespace tvlink {

// Everything a law may look at when picking the round-t rate: the previous
// round's feedback plus the optional prediction / link state.
struct Observation {
    double mu_prev_bps = 0;    // mu(t-1)
    double q_len_prev_bits = 0; // Q(t-1)
    double rate_prev_bps = 0;  // s(t-1)
    std::optional<double> pred_bps;  // Pred(t-1)
    std::optional<int> state_prev;   // S(t-1)
    double round_T_s = 0.1;
};

struct OptimalMifLaw {
    double C = 1.0; // s(t) = (C * mu(t-1) - Q(t-1)/T)^+
};

struct OptimalPmifLaw {
    double Cp = 1.0; // s(t) = (Cp * Pred(t-1) - Q(t-1)/T)^+
};

struct OptimalSmfLaw {
    std::map<int, double> c_map; // s(t) = (C(S(t-1)) * mu(t-1) - Q(t-1)/T)^+
};

struct XcpLaw {
    double alpha = 0.5; // in (0, 1]
    double beta = 1.0;  // >= 0
    // s(t) = (s(t-1) + alpha*(mu(t-1) - s(t-1)) - beta*Q(t-1)/T)^+
};

struct AbcLaw {
    double eta = 1.0;  // > 0
    double beta = 1.0; // >= 0
    // s(t) = (eta * mu(t-1) - beta*Q(t-1)/T)^+
};

using LawConfig = std::variant<OptimalMifLaw, OptimalPmifLaw, OptimalSmfLaw, XcpLaw, AbcLaw>;

void validate_law(const LawConfig& law);
void validate_observation(const Observation& obs);

// The law's formula before the non-negativity clamp; next_rate is its
// positive part. Throws ParamError when a required pred / state is missing.
double raw_rate(const LawConfig& law, const Observation& obs);
double next_rate(const LawConfig& law, const Observation& obs);

// rho(t) = (Q(t-1)/T + s(t)) / mu(t-1); the PMIF analogue divides by the
// prediction instead.
double rho_of(const Observation& obs, double rate_bps);
double rho_pred_of(const Observation& obs, double rate_bps);

// JSON mirrors the variant fields, e.g. {"law":"abc","eta":1.0,"beta":2.0};
// the SMF map is an object keyed by the state index.
LawConfig law_from_json_text(const std::string& text);
std::string law_to_json_text(const LawConfig& law);
std::string law_name(const LawConfig& law);

} // namespace tvlink
