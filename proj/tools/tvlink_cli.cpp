// tvlink: trace ingestion, link-model fitting, performance bounds, optimal
// control constants, and trace-driven simulation, end to end.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tvlink/errors.hpp"
#include "tvlink/frontier.hpp"
#include "tvlink/link_models.hpp"
#include "tvlink/manifest.hpp"
#include "tvlink/mdp.hpp"
#include "tvlink/sim.hpp"
#include "tvlink/trace.hpp"

using namespace tvlink;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write \"" + path + "\"");
    out << content;
    if (!out)
        throw IoError("short write to \"" + path + "\"");
}

// "uniform:lo,hi" | "loguniform:e_lo,e_hi" | "pointmass:v" |
// "atoms:@file.json" | "atoms:<inline json array>"
RatioDist parse_dist_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw ParamError("distribution spec needs the form kind:args, got \"" + spec + "\"");
    const std::string kind = spec.substr(0, colon);
    const std::string args = spec.substr(colon + 1);
    auto split2 = [&]() {
        const auto comma = args.find(',');
        if (comma == std::string::npos)
            throw ParamError("distribution spec \"" + spec + "\" needs two numbers");
        return std::pair<double, double>{std::stod(args.substr(0, comma)),
                                         std::stod(args.substr(comma + 1))};
    };
    try {
        if (kind == "uniform") {
            const auto [lo, hi] = split2();
            return RatioDist::uniform(lo, hi);
        }
        if (kind == "loguniform") {
            const auto [lo, hi] = split2();
            return RatioDist::log_uniform(lo, hi);
        }
        if (kind == "pointmass")
            return RatioDist::point_mass(std::stod(args));
        if (kind == "atoms") {
            if (!args.empty() && args[0] == '@')
                return RatioDist::from_json_text(read_file(args.substr(1)));
            return RatioDist::from_json_text("{\"atoms\": " + args + "}");
        }
    } catch (const std::invalid_argument&) {
        throw ParamError("distribution spec \"" + spec + "\" has a malformed number");
    }
    throw ParamError("unknown distribution kind \"" + kind + "\"");
}

std::vector<double> parse_value_list(const std::string& text) {
    std::vector<double> values;
    const auto first_colon = text.find(':');
    if (first_colon != std::string::npos) {
        // lo:hi:n inclusive linspace
        const auto second = text.find(':', first_colon + 1);
        if (second == std::string::npos)
            throw ParamError("range spec needs lo:hi:n, got \"" + text + "\"");
        const double lo = std::stod(text.substr(0, first_colon));
        const double hi = std::stod(text.substr(first_colon + 1, second - first_colon - 1));
        const int n = std::stoi(text.substr(second + 1));
        if (n < 1)
            throw ParamError("range spec needs n >= 1");
        for (int i = 0; i < n; ++i)
            values.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
        return values;
    }
    std::istringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ','))
        values.push_back(std::stod(cell));
    if (values.empty())
        throw ParamError("empty value list");
    return values;
}

std::string join_args(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i)
            out += ' ';
        out += argv[i];
    }
    return out;
}

struct ManifestSink {
    RunManifest manifest;

    void add_input(const std::string& path) {
        manifest.input_digests.emplace_back(path, file_digest(path));
    }
    void write_for(const std::string& out_path) {
        manifest.timestamp_utc = utc_timestamp_now();
        write_manifest(manifest, out_path);
    }
};

CapacityTrace load_trace_csv(const std::string& path, ManifestSink& sink) {
    const std::string text = read_file(path);
    sink.add_input(path);
    return capacity_trace_from_csv_string(text);
}

int cmd_ingest(const std::string& trace_path, double T, int mtu, double floor_bps,
               const std::string& out, ManifestSink sink) {
    std::ifstream in(trace_path, std::ios::binary);
    if (!in)
        throw IoError("cannot open \"" + trace_path + "\"");
    const DeliverySchedule sched = parse_mahimahi(in, mtu);
    sink.add_input(trace_path);
    const IngestResult result = to_capacity_trace(sched, T, floor_bps);
    write_file(out, capacity_csv_string(result.trace));
    sink.write_for(out);
    std::cerr << "ingest: " << result.trace.rounds() << " rounds, " << result.floored_rounds
              << " floored\n";
    return 0;
}

int cmd_synth(const std::string& dist_spec, double mu0, int rounds, double T, uint64_t seed,
              const std::string& out, ManifestSink sink) {
    const RatioDist dist = parse_dist_spec(dist_spec);
    const CapacityTrace trace = gen_mif(MifModel{dist}, mu0, rounds, T, seed);
    write_file(out, capacity_csv_string(trace));
    sink.manifest.seeds.push_back(seed);
    sink.write_for(out);
    std::cerr << "synth: " << trace.rounds() << " rounds\n";
    return 0;
}

int cmd_bound(const std::string& model, const std::string& trace_csv,
              const std::string& dist_spec, int bins, int min_bin_samples, int points, double T,
              const std::string& out, ManifestSink sink) {
    FrontierCurve curve = [&]() {
        if (model == "mif") {
            if (!trace_csv.empty()) {
                const CapacityTrace trace = load_trace_csv(trace_csv, sink);
                return mif_frontier(fit_mif(trace).ratio, trace.round_duration_s, points);
            }
            if (dist_spec.empty())
                throw ParamError("bound needs --trace-csv or --dist");
            return mif_frontier(parse_dist_spec(dist_spec), T, points);
        }
        if (model == "smf" || model == "lost") {
            if (trace_csv.empty())
                throw ParamError(model == "lost"
                                     ? "lost-throughput bound requires bin mean capacities "
                                       "(fit from a trace via --trace-csv)"
                                     : "smf bound requires --trace-csv");
            const CapacityTrace trace = load_trace_csv(trace_csv, sink);
            const SmfModel smf = fit_smf(trace, bins, min_bin_samples);
            return model == "smf"
                       ? smf_frontier(smf, trace.round_duration_s, points)
                       : lost_throughput_frontier(smf, trace.round_duration_s, points);
        }
        throw ParamError("unknown bound model \"" + model + "\"");
    }();
    write_file(out, frontier_csv_string(curve));
    sink.write_for(out);
    std::cerr << "bound: " << curve.points().size() << " points\n";
    return 0;
}

int cmd_solve(const std::string& law, double w, double gamma, const std::string& trace_csv,
              const std::string& dist_spec, const std::string& pred_error_spec,
              const std::string& pred_drift_spec, int bins, int min_bin_samples,
              uint64_t seed, const MdpConfig& grid_overrides, const std::string& out,
              const std::string& dump_vw, ManifestSink sink) {
    MdpConfig cfg = grid_overrides;
    cfg.w = w;
    cfg.gamma = gamma;

    auto trace_T = [&](CapacityTrace& trace) {
        trace = load_trace_csv(trace_csv, sink);
        cfg.T = trace.round_duration_s;
    };

    if (law == "smf-approx") {
        if (trace_csv.empty())
            throw ParamError("smf-approx needs --trace-csv");
        CapacityTrace trace;
        trace_T(trace);
        const SmfModel smf = fit_smf(trace, bins, min_bin_samples);
        const SmfApproxResult r = approx_c_smf(smf, w, cfg.T);
        nlohmann::json j;
        j["law"] = "optimal-smf";
        nlohmann::json map = nlohmann::json::object(), clamped = nlohmann::json::object();
        for (const auto& [state, c] : r.c_map) {
            map[std::to_string(state)] = c;
            clamped[std::to_string(state)] = r.clamped.at(state);
        }
        j["C_map"] = std::move(map);
        j["clamped"] = std::move(clamped);
        j["w"] = w;
        write_file(out, j.dump(2) + "\n");
        sink.write_for(out);
        return 0;
    }

    MdpSolution sol;
    if (law == "mif") {
        RatioDist dist = RatioDist::point_mass(1.0);
        if (!trace_csv.empty()) {
            CapacityTrace trace;
            trace_T(trace);
            dist = fit_mif(trace).ratio;
        } else if (!dist_spec.empty()) {
            dist = parse_dist_spec(dist_spec);
        } else {
            throw ParamError("solve --law mif needs --trace-csv or --dist");
        }
        cfg.validate();
        sol = solve_mif(dist, cfg);
    } else if (law == "pmif") {
        if (pred_error_spec.empty())
            throw ParamError("solve --law pmif needs --pred-error");
        const RatioDist err = parse_dist_spec(pred_error_spec);
        RatioDist drift = err;
        if (!pred_drift_spec.empty()) {
            drift = parse_dist_spec(pred_drift_spec);
        } else if (!trace_csv.empty()) {
            CapacityTrace trace;
            trace_T(trace);
            sink.manifest.seeds.push_back(seed);
            const PredictionSeries preds = gen_predictions(trace, err, seed);
            drift = fit_pred_drift(preds);
        } else {
            throw ParamError("solve --law pmif needs --pred-drift or --trace-csv");
        }
        cfg.validate();
        sol = solve_pmif(err, drift, cfg);
    } else {
        throw ParamError("unknown solve law \"" + law + "\"");
    }

    write_file(out, sol.to_json_text(cfg) + "\n");
    if (!dump_vw.empty()) {
        std::string v_csv = "q,v\n";
        for (size_t i = 0; i < sol.q_grid.size(); ++i)
            v_csv += std::to_string(sol.q_grid[i]) + ',' + std::to_string(sol.v_on_grid[i]) +
                     '\n';
        std::string w_csv = "rho,w\n";
        for (size_t i = 0; i < sol.rho_grid.size(); ++i)
            w_csv += std::to_string(sol.rho_grid[i]) + ',' + std::to_string(sol.w_on_grid[i]) +
                     '\n';
        write_file(dump_vw + ".v.csv", v_csv);
        write_file(dump_vw + ".w.csv", w_csv);
        sink.write_for(dump_vw + ".v.csv");
        sink.write_for(dump_vw + ".w.csv");
    }
    sink.write_for(out);
    std::cerr << "solve: c_star=" << sol.c_star << " iters=" << sol.iters
              << (sol.converged ? "" : " (not converged)") << "\n";
    if (!sol.converged)
        return 3;
    return 0;
}

struct LawFlagValues {
    std::string law;
    std::string c_list, cp_list, alpha_list, beta_list, eta_list;
    std::string law_json;
    std::string smf_json;
};

std::vector<LawConfig> build_law_family(const LawFlagValues& flags, const SmfModel* smf,
                                        double T) {
    if (!flags.law_json.empty()) {
        const std::string text = flags.law_json[0] == '@' ? read_file(flags.law_json.substr(1))
                                                          : flags.law_json;
        return {law_from_json_text(text)};
    }
    std::vector<LawConfig> laws;
    if (flags.law == "optimal-mif") {
        for (double c : parse_value_list(flags.c_list.empty() ? "1.0" : flags.c_list))
            laws.push_back(OptimalMifLaw{c});
    } else if (flags.law == "optimal-pmif") {
        for (double c : parse_value_list(flags.cp_list.empty() ? "1.0" : flags.cp_list))
            laws.push_back(OptimalPmifLaw{c});
    } else if (flags.law == "optimal-smf") {
        if (smf == nullptr)
            throw ParamError("optimal-smf needs an SMF model (--smf-json or --bins)");
        for (double w : parse_value_list(flags.c_list.empty() ? "1.0" : flags.c_list)) {
            // Each value is the delay weight feeding the slope-matched
            // per-state constants.
            OptimalSmfLaw l;
            const SmfApproxResult r = approx_c_smf(*smf, w, T);
            l.c_map = r.c_map;
            laws.push_back(l);
        }
    } else if (flags.law == "xcp") {
        for (double a : parse_value_list(flags.alpha_list.empty() ? "0.5" : flags.alpha_list))
            for (double b : parse_value_list(flags.beta_list.empty() ? "1.0" : flags.beta_list))
                laws.push_back(XcpLaw{a, b});
    } else if (flags.law == "abc") {
        for (double e : parse_value_list(flags.eta_list.empty() ? "1.0" : flags.eta_list))
            for (double b : parse_value_list(flags.beta_list.empty() ? "1.0" : flags.beta_list))
                laws.push_back(AbcLaw{e, b});
    } else {
        throw ParamError("unknown law \"" + flags.law + "\"");
    }
    for (const auto& law : laws)
        validate_law(law);
    return laws;
}

int cmd_simulate_or_sweep(bool is_sweep, const std::string& trace_csv,
                          const LawFlagValues& law_flags, const std::string& pred_error_spec,
                          uint64_t seed, double q0, double xcp_s0, int bins,
                          int min_bin_samples, int jobs, const std::string& out_csv,
                          const std::string& out_summary, ManifestSink sink) {
    if (trace_csv.empty())
        throw ParamError("simulation needs --trace-csv");
    const CapacityTrace trace = load_trace_csv(trace_csv, sink);
    sink.manifest.seeds.push_back(seed);

    SmfModel smf;
    bool have_smf = false;
    if (!law_flags.smf_json.empty()) {
        smf = SmfModel::from_json_text(read_file(law_flags.smf_json));
        sink.add_input(law_flags.smf_json);
        have_smf = true;
    } else if (law_flags.law == "optimal-smf") {
        smf = fit_smf(trace, bins, min_bin_samples);
        have_smf = true;
    }

    const std::vector<LawConfig> laws =
        build_law_family(law_flags, have_smf ? &smf : nullptr, trace.round_duration_s);

    PredictionSeries preds;
    bool have_preds = false;
    const bool needs_preds = std::any_of(laws.begin(), laws.end(), [](const LawConfig& l) {
        return std::holds_alternative<OptimalPmifLaw>(l);
    });
    if (needs_preds) {
        if (pred_error_spec.empty())
            throw ParamError("optimal-pmif needs --pred-error to synthesize predictions");
        preds = gen_predictions(trace, parse_dist_spec(pred_error_spec), seed);
        have_preds = true;
    }

    RunOptions opts;
    opts.q0_bits = q0;
    if (xcp_s0 >= 0.0)
        opts.initial_rate_bps = xcp_s0;
    if (have_preds)
        opts.preds = &preds;
    if (have_smf)
        opts.smf = &smf;

    if (is_sweep) {
        const PerfCurve curve = sweep(trace, laws, opts, jobs);
        write_file(out_csv, perf_curve_csv_string(curve));
        sink.write_for(out_csv);
        std::cerr << "sweep: " << curve.entries.size() << " configs\n";
        return 0;
    }
    if (laws.size() != 1)
        throw ParamError("simulate expects exactly one law config");
    const RunResult r = run(trace, laws[0], opts);
    write_file(out_csv, run_csv_string(r.records));
    sink.write_for(out_csv);
    if (!out_summary.empty()) {
        write_file(out_summary, summary_json_text(r.summary, laws[0], trace) + "\n");
        sink.write_for(out_summary);
    }
    std::cerr << "simulate: " << r.summary.rounds << " rounds, mean_q=" << r.summary.mean_q_s
              << " mean_u=" << r.summary.mean_u << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"underutilization/queuing-delay bounds and control laws for "
                 "time-varying links"};
    app.require_subcommand(1);
    app.fallthrough(true);
    app.set_config("--config", "", "TOML config file with [subcommand] sections; "
                                   "command-line flags win on conflict");

    std::string trace_path, out, out_summary, trace_csv, dist_spec, model = "mif";
    std::string pred_error_spec, pred_drift_spec, dump_vw;
    std::string law = "mif";
    LawFlagValues law_flags;
    double T = 0.1, floor_bps = -1.0, mu0 = 1e7, w = 1.0, gamma = 0.95, q0 = 0.0,
           xcp_s0 = -1.0;
    int mtu = 1500, rounds = 0, bins = 8, min_bin_samples = 50, points = 512, jobs = 1;
    uint64_t seed = 0;
    MdpConfig grid;

    CLI::App* ingest = app.add_subcommand("ingest", "Mahimahi trace -> capacity CSV");
    ingest->add_option("--trace", trace_path)->required();
    ingest->add_option("--T", T);
    ingest->add_option("--mtu", mtu);
    ingest->add_option("--floor-bps", floor_bps);
    ingest->add_option("--out", out)->required();

    CLI::App* synth = app.add_subcommand("synth", "generate a capacity CSV from a ratio law");
    synth->add_option("--dist", dist_spec)->required();
    synth->add_option("--mu0", mu0);
    synth->add_option("--rounds", rounds)->required();
    synth->add_option("--T", T);
    synth->add_option("--seed", seed);
    synth->add_option("--out", out)->required();

    CLI::App* bound = app.add_subcommand("bound", "performance-bound frontier CSV");
    bound->add_option("--model", model)->check(CLI::IsMember({"mif", "smf", "lost"}));
    bound->add_option("--trace-csv", trace_csv);
    bound->add_option("--dist", dist_spec);
    bound->add_option("--bins", bins);
    bound->add_option("--min-bin-samples", min_bin_samples);
    bound->add_option("--points", points);
    bound->add_option("--T", T);
    bound->add_option("--out", out)->required();

    CLI::App* solve = app.add_subcommand("solve", "optimal control constants");
    solve->add_option("--law", law)->check(CLI::IsMember({"mif", "pmif", "smf-approx"}));
    solve->add_option("--w", w)->required();
    solve->add_option("--gamma", gamma);
    solve->add_option("--trace-csv", trace_csv);
    solve->add_option("--dist", dist_spec);
    solve->add_option("--pred-error", pred_error_spec);
    solve->add_option("--pred-drift", pred_drift_spec);
    solve->add_option("--bins", bins);
    solve->add_option("--min-bin-samples", min_bin_samples);
    solve->add_option("--T", grid.T);
    solve->add_option("--q-max", grid.q_max_s);
    solve->add_option("--n-q", grid.n_q);
    solve->add_option("--rho-min", grid.rho_min);
    solve->add_option("--rho-max", grid.rho_max);
    solve->add_option("--n-rho", grid.n_rho);
    solve->add_option("--tol", grid.tol);
    solve->add_option("--max-iters", grid.max_iters);
    solve->add_option("--seed", seed);
    solve->add_option("--dump-vw", dump_vw);
    solve->add_option("--out", out)->required();

    auto add_sim_flags = [&](CLI::App* cmd) {
        cmd->add_option("--trace-csv", trace_csv)->required();
        cmd->add_option("--law", law_flags.law);
        cmd->add_option("--law-json", law_flags.law_json);
        cmd->add_option("--smf-json", law_flags.smf_json);
        cmd->add_option("--C", law_flags.c_list);
        cmd->add_option("--Cp", law_flags.cp_list);
        cmd->add_option("--alpha", law_flags.alpha_list);
        cmd->add_option("--beta", law_flags.beta_list);
        cmd->add_option("--eta", law_flags.eta_list);
        cmd->add_option("--pred-error", pred_error_spec);
        cmd->add_option("--seed", seed);
        cmd->add_option("--q0", q0);
        cmd->add_option("--xcp-s0", xcp_s0);
        cmd->add_option("--bins", bins);
        cmd->add_option("--min-bin-samples", min_bin_samples);
        cmd->add_option("--out", out)->required();
    };
    CLI::App* simulate = app.add_subcommand("simulate", "run one law over a capacity CSV");
    add_sim_flags(simulate);
    simulate->add_option("--out-summary", out_summary);
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a law family over a capacity CSV");
    add_sim_flags(sweep_cmd);
    sweep_cmd->add_option("--jobs", jobs);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e); // --help
        std::cerr << e.what() << "\n";
        return 2;
    }

    ManifestSink sink;
    sink.manifest.command_line = join_args(argc, argv);
    const CLI::Option* config_opt = app.get_config_ptr();
    const std::string config_path =
        (config_opt != nullptr && config_opt->count() > 0) ? config_opt->as<std::string>() : "";
    if (!config_path.empty()) {
        try {
            sink.manifest.config_digest = file_digest(config_path);
        } catch (const IoError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }

    try {
        if (ingest->parsed())
            return cmd_ingest(trace_path, T, mtu, floor_bps, out, std::move(sink));
        if (synth->parsed())
            return cmd_synth(dist_spec, mu0, rounds, T, seed, out, std::move(sink));
        if (bound->parsed())
            return cmd_bound(model, trace_csv, dist_spec, bins, min_bin_samples, points, T, out,
                             std::move(sink));
        if (solve->parsed())
            return cmd_solve(law, w, gamma, trace_csv, dist_spec, pred_error_spec,
                             pred_drift_spec, bins, min_bin_samples, seed, grid, out, dump_vw,
                             std::move(sink));
        if (simulate->parsed() || sweep_cmd->parsed())
            return cmd_simulate_or_sweep(sweep_cmd->parsed(), trace_csv, law_flags,
                                         pred_error_spec, seed, q0, xcp_s0, bins,
                                         min_bin_samples, jobs, out, out_summary,
                                         std::move(sink));
    } catch (const ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
