#include "tvlink/control_laws.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "tvlink/errors.hpp"

namespace tvlink {

void validate_law(const LawConfig& law) {
    std::visit(
        [](const auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, OptimalMifLaw>) {
                if (!(l.C > 0.0))
                    throw ParamError("optimal-mif law needs C > 0");
            } else if constexpr (std::is_same_v<L, OptimalPmifLaw>) {
                if (!(l.Cp > 0.0))
                    throw ParamError("optimal-pmif law needs Cp > 0");
            } else if constexpr (std::is_same_v<L, OptimalSmfLaw>) {
                if (l.c_map.empty())
                    throw ParamError("optimal-smf law needs a non-empty constant map");
                for (const auto& [state, c] : l.c_map)
                    if (!(c > 0.0))
                        throw ParamError("optimal-smf constant for state " +
                                         std::to_string(state) + " must be positive");
            } else if constexpr (std::is_same_v<L, XcpLaw>) {
                if (!(l.alpha > 0.0) || l.alpha > 1.0)
                    throw ParamError("xcp law needs alpha in (0, 1]");
                if (l.beta < 0.0)
                    throw ParamError("xcp law needs beta >= 0");
            } else if constexpr (std::is_same_v<L, AbcLaw>) {
                if (!(l.eta > 0.0))
                    throw ParamError("abc law needs eta > 0");
                if (l.beta < 0.0)
                    throw ParamError("abc law needs beta >= 0");
            }
        },
        law);
}

void validate_observation(const Observation& obs) {
    if (!(obs.mu_prev_bps > 0.0))
        throw ParamError("observation needs mu_prev > 0");
    if (obs.q_len_prev_bits < 0.0)
        throw ParamError("observation needs q_len_prev >= 0");
    if (obs.rate_prev_bps < 0.0)
        throw ParamError("observation needs rate_prev >= 0");
    if (obs.pred_bps && !(*obs.pred_bps > 0.0))
        throw ParamError("observation prediction must be positive when present");
    if (!(obs.round_T_s > 0.0))
        throw ParamError("observation needs T > 0");
}

double raw_rate(const LawConfig& law, const Observation& obs) {
    const double queue_rate = obs.q_len_prev_bits / obs.round_T_s;
    return std::visit(
        [&](const auto& l) -> double {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, OptimalMifLaw>) {
                return l.C * obs.mu_prev_bps - queue_rate;
            } else if constexpr (std::is_same_v<L, OptimalPmifLaw>) {
                if (!obs.pred_bps)
                    throw ParamError("optimal-pmif law needs a prediction in the observation");
                return l.Cp * *obs.pred_bps - queue_rate;
            } else if constexpr (std::is_same_v<L, OptimalSmfLaw>) {
                if (!obs.state_prev)
                    throw ParamError("optimal-smf law needs a link state in the observation");
                auto it = l.c_map.find(*obs.state_prev);
                if (it == l.c_map.end()) {
                    // States past the fitted bins use the nearest bin's constant.
                    auto lo = l.c_map.lower_bound(*obs.state_prev);
                    if (lo == l.c_map.end())
                        it = std::prev(lo);
                    else if (lo == l.c_map.begin())
                        it = lo;
                    else {
                        auto before = std::prev(lo);
                        it = (*obs.state_prev - before->first) <= (lo->first - *obs.state_prev)
                                 ? before
                                 : lo;
                    }
                }
                return it->second * obs.mu_prev_bps - queue_rate;
            } else if constexpr (std::is_same_v<L, XcpLaw>) {
                return obs.rate_prev_bps + l.alpha * (obs.mu_prev_bps - obs.rate_prev_bps) -
                       l.beta * queue_rate;
            } else {
                return l.eta * obs.mu_prev_bps - l.beta * queue_rate;
            }
        },
        law);
}

double next_rate(const LawConfig& law, const Observation& obs) {
    return std::max(0.0, raw_rate(law, obs));
}

double rho_of(const Observation& obs, double rate_bps) {
    return (obs.q_len_prev_bits / obs.round_T_s + rate_bps) / obs.mu_prev_bps;
}

double rho_pred_of(const Observation& obs, double rate_bps) {
    if (!obs.pred_bps)
        throw ParamError("rho relative to prediction needs a prediction");
    return (obs.q_len_prev_bits / obs.round_T_s + rate_bps) / *obs.pred_bps;
}

LawConfig law_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("invalid law JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("law") || !j["law"].is_string())
        throw IoError("law JSON must be an object with a \"law\" string");
    const std::string name = j["law"].get<std::string>();
    LawConfig law;
    try {
        if (name == "optimal-mif") {
            law = OptimalMifLaw{j.at("C").get<double>()};
        } else if (name == "optimal-pmif") {
            law = OptimalPmifLaw{j.at("Cp").get<double>()};
        } else if (name == "optimal-smf") {
            OptimalSmfLaw l;
            for (const auto& [key, value] : j.at("C_map").items())
                l.c_map[std::atoi(key.c_str())] = value.get<double>();
            law = l;
        } else if (name == "xcp") {
            law = XcpLaw{j.at("alpha").get<double>(), j.at("beta").get<double>()};
        } else if (name == "abc") {
            law = AbcLaw{j.at("eta").get<double>(), j.at("beta").get<double>()};
        } else {
            throw IoError("unknown law \"" + name + "\"");
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("invalid law JSON: ") + e.what());
    }
    try {
        validate_law(law);
    } catch (const ParamError& e) {
        throw IoError(std::string("invalid law JSON: ") + e.what());
    }
    return law;
}

std::string law_to_json_text(const LawConfig& law) {
    nlohmann::json j;
    std::visit(
        [&](const auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, OptimalMifLaw>) {
                j["law"] = "optimal-mif";
                j["C"] = l.C;
            } else if constexpr (std::is_same_v<L, OptimalPmifLaw>) {
                j["law"] = "optimal-pmif";
                j["Cp"] = l.Cp;
            } else if constexpr (std::is_same_v<L, OptimalSmfLaw>) {
                j["law"] = "optimal-smf";
                nlohmann::json map = nlohmann::json::object();
                for (const auto& [state, c] : l.c_map)
                    map[std::to_string(state)] = c;
                j["C_map"] = std::move(map);
            } else if constexpr (std::is_same_v<L, XcpLaw>) {
                j["law"] = "xcp";
                j["alpha"] = l.alpha;
                j["beta"] = l.beta;
            } else {
                j["law"] = "abc";
                j["eta"] = l.eta;
                j["beta"] = l.beta;
            }
        },
        law);
    return j.dump();
}

std::string law_name(const LawConfig& law) {
    return std::visit(
        [](const auto& l) -> std::string {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, OptimalMifLaw>)
                return "optimal-mif";
            else if constexpr (std::is_same_v<L, OptimalPmifLaw>)
                return "optimal-pmif";
            else if constexpr (std::is_same_v<L, OptimalSmfLaw>)
                return "optimal-smf";
            else if constexpr (std::is_same_v<L, XcpLaw>)
                return "xcp";
            else
                return "abc";
        },
        law);
}

} // namespace tvlink
