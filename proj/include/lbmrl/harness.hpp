#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "lbmrl/agent.hpp"
#include "lbmrl/eluder.hpp"
#include "lbmrl/function_class.hpp"
#include "lbmrl/general_agent.hpp"
#include "lbmrl/linear_agent.hpp"
#include "lbmrl/linear_mdp.hpp"
#include "lbmrl/mdp.hpp"
#include "lbmrl/meta.hpp"
#include "lbmrl/model_agent.hpp"
#include "lbmrl/model_class.hpp"
#include "lbmrl/rng.hpp"

namespace lbmrl {

using json = nlohmann::json;

// Configuration problems carry their own exception type so the CLI can map
// them to exit code 1 (runtime failures map to 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cfgdetail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + where);
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
    }
}

template <typename T>
T optional(const json& obj, const char* key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
    }
}

}  // namespace cfgdetail

// ---------------------------------------------------------------------------
// Config blocks
// ---------------------------------------------------------------------------

struct InjectorConfig {
    std::string mode = "none";
    double zeta = 0.0;
    double delta_tv = 0.0;
    double reach_prob = -1.0;  // <0: default to the zeta^4/delta^4 cap
    std::vector<int> trap_states;

    static InjectorConfig parse(const json& j) {
        cfgdetail::reject_unknown(j, {"mode", "zeta", "delta_tv", "reach_prob", "trap_states"},
                                  "env.injector");
        InjectorConfig c;
        c.mode = cfgdetail::require<std::string>(j, "mode", "env.injector");
        if (c.mode != "none" && c.mode != "global" && c.mode != "local_trap")
            throw ConfigError("env.injector.mode must be none, global, or local_trap");
        c.zeta = cfgdetail::optional<double>(j, "zeta", 0.0, "env.injector");
        c.delta_tv = cfgdetail::optional<double>(j, "delta_tv", c.zeta, "env.injector");
        c.reach_prob = cfgdetail::optional<double>(j, "reach_prob", -1.0, "env.injector");
        c.trap_states = cfgdetail::optional<std::vector<int>>(j, "trap_states", {}, "env.injector");
        return c;
    }

    MisspecInjector build() const {
        MisspecInjector inj;
        if (mode == "none")
            inj.mode = MisspecInjector::Mode::none;
        else if (mode == "global")
            inj.mode = MisspecInjector::Mode::global;
        else
            inj.mode = MisspecInjector::Mode::local_trap;
        inj.zeta_target = zeta;
        inj.delta_tv = delta_tv;
        inj.trap_states = trap_states;
        inj.reach_prob = reach_prob >= 0.0 ? reach_prob
                                           : MisspecInjector::max_reach_prob(zeta, delta_tv);
        return inj;
    }
};

struct EnvConfig {
    std::string kind = "chain";
    int S = 2, A = 2, H = 1;
    int d = 0;          // linear kind; 0 means one-hot (S*A)
    double slip = 0.0;  // chain kind
    std::uint64_t seed = 1;
    InjectorConfig injector;

    static EnvConfig parse(const json& j) {
        cfgdetail::reject_unknown(j, {"kind", "S", "A", "H", "d", "slip", "seed", "injector"},
                                  "env");
        EnvConfig c;
        c.kind = cfgdetail::require<std::string>(j, "kind", "env");
        if (c.kind != "chain" && c.kind != "linear")
            throw ConfigError("env.kind must be chain or linear");
        c.S = cfgdetail::require<int>(j, "S", "env");
        c.A = cfgdetail::require<int>(j, "A", "env");
        c.H = cfgdetail::require<int>(j, "H", "env");
        c.d = cfgdetail::optional<int>(j, "d", 0, "env");
        c.slip = cfgdetail::optional<double>(j, "slip", 0.0, "env");
        c.seed = cfgdetail::optional<std::uint64_t>(j, "seed", 1, "env");
        if (j.contains("injector")) c.injector = InjectorConfig::parse(j.at("injector"));
        return c;
    }
};

// Ground truth the agents interact with, the linear approximator they learn
// against, and the exact optimum for regret accounting.
struct Environment {
    TabularMdp mdp;
    LinearMdpSpec spec;
    DpSolution optimal;
    double vstar = 0.0;
};

inline Environment build_environment(const EnvConfig& cfg) {
    Environment env;
    TabularMdp base;
    if (cfg.kind == "chain") {
        base = build_chain_env(cfg.S, cfg.A, cfg.H, cfg.slip);
        if (cfg.d != 0 && cfg.d != cfg.S * cfg.A)
            throw ConfigError("env.d for a chain environment must be S*A (one-hot) or omitted");
        env.spec = one_hot_spec(base);
    } else {
        int d = cfg.d > 0 ? cfg.d : cfg.S * cfg.A;
        auto [mdp, spec] = build_linear_env(d, cfg.S, cfg.A, cfg.H, cfg.seed);
        base = std::move(mdp);
        env.spec = std::move(spec);
    }

    MisspecInjector inj = cfg.injector.build();
    if (inj.mode == MisspecInjector::Mode::local_trap) {
        if (env.spec.d != cfg.S * cfg.A)
            throw ConfigError("local_trap injection requires one-hot features (d = S*A)");
        TabularMdp gated = gate_trap_region(base, inj);
        env.spec = one_hot_spec(gated);
        env.mdp = inject_misspecification(gated, env.spec, inj, cfg.seed ^ 0x5EEDULL);
    } else {
        env.mdp = inject_misspecification(base, env.spec, inj, cfg.seed ^ 0x5EEDULL);
    }
    env.optimal = exact_optimal_values(env.mdp);
    env.vstar = env.optimal.v_at(0, env.mdp.s_init, env.mdp.S);
    return env;
}

struct ValueClassConfig {
    int members = 1;
    double scale = 0.0;
    std::uint64_t seed = 7;
    std::string file;  // when set, the class is loaded from a table file instead

    static ValueClassConfig parse(const json& j) {
        cfgdetail::reject_unknown(j, {"members", "scale", "seed", "file"}, "algorithm.class");
        ValueClassConfig c;
        c.file = cfgdetail::optional<std::string>(j, "file", "", "algorithm.class");
        if (c.file.empty())
            c.members = cfgdetail::require<int>(j, "members", "algorithm.class");
        else
            c.members = cfgdetail::optional<int>(j, "members", 1, "algorithm.class");
        c.scale = cfgdetail::optional<double>(j, "scale", 0.5, "algorithm.class");
        c.seed = cfgdetail::optional<std::uint64_t>(j, "seed", 7, "algorithm.class");
        return c;
    }
};

struct ModelClassConfig {
    int members = 1;
    double tv_scale = 0.3;
    bool include_truth = true;
    double fbar_tv = -1.0;  // <0: default zeta/H
    std::uint64_t seed = 7;

    static ModelClassConfig parse(const json& j) {
        cfgdetail::reject_unknown(j, {"members", "tv_scale", "include_truth", "fbar_tv", "seed"},
                                  "algorithm.model_class");
        ModelClassConfig c;
        c.members = cfgdetail::require<int>(j, "members", "algorithm.model_class");
        c.tv_scale = cfgdetail::optional<double>(j, "tv_scale", 0.3, "algorithm.model_class");
        c.include_truth = cfgdetail::optional<bool>(j, "include_truth", true, "algorithm.model_class");
        c.fbar_tv = cfgdetail::optional<double>(j, "fbar_tv", -1.0, "algorithm.model_class");
        c.seed = cfgdetail::optional<std::uint64_t>(j, "seed", 7, "algorithm.model_class");
        return c;
    }
};

struct AlgorithmConfig {
    std::string name;
    bool zeta_unknown = false;
    double zeta = 0.0;
    double delta = 0.05;
    // linear_lsvi
    double c_beta = 1.0;
    double lambda = 1.0;
    // general_lsvi
    double c_prime = 1.0;
    double cover_t = 0.0;
    double log_w = 0.0;
    bool subsample = false;
    ValueClassConfig value_class;
    bool has_value_class = false;
    // ucrl_vtr
    double alpha_cover = -1.0;
    ModelClassConfig model_class;
    bool has_model_class = false;
    // meta
    std::shared_ptr<AlgorithmConfig> base;
    double l_const = 1.0;
    double alpha_exp = 1.0;
    double beta_exp = 2.0;
    double stability_d = 0.0;  // 0: derived from the base algorithm

    static AlgorithmConfig parse(const json& j, const std::string& where = "algorithm") {
        cfgdetail::reject_unknown(j,
                                  {"name", "zeta", "delta", "c_beta", "lambda", "c_prime",
                                   "cover_t", "log_w", "subsample", "class", "alpha_cover",
                                   "model_class", "base", "l_const", "alpha_exp", "beta_exp",
                                   "stability_d"},
                                  where);
        AlgorithmConfig c;
        c.name = cfgdetail::require<std::string>(j, "name", where);
        if (c.name != "linear_lsvi" && c.name != "general_lsvi" && c.name != "ucrl_vtr" &&
            c.name != "meta")
            throw ConfigError(where + ".name must be linear_lsvi, general_lsvi, ucrl_vtr, or meta");

        if (j.contains("zeta")) {
            if (j.at("zeta").is_string()) {
                if (j.at("zeta").get<std::string>() != "unknown")
                    throw ConfigError(where + ".zeta must be a number or \"unknown\"");
                c.zeta_unknown = true;
            } else {
                c.zeta = cfgdetail::require<double>(j, "zeta", where);
            }
        }
        if (c.zeta_unknown && c.name != "meta")
            throw ConfigError(where + ": zeta \"unknown\" requires the meta algorithm");

        c.delta = cfgdetail::optional<double>(j, "delta", 0.05, where);
        c.c_beta = cfgdetail::optional<double>(j, "c_beta", 1.0, where);
        c.lambda = cfgdetail::optional<double>(j, "lambda", 1.0, where);
        c.c_prime = cfgdetail::optional<double>(j, "c_prime", 1.0, where);
        c.cover_t = cfgdetail::optional<double>(j, "cover_t", 0.0, where);
        c.log_w = cfgdetail::optional<double>(j, "log_w", 0.0, where);
        c.subsample = cfgdetail::optional<bool>(j, "subsample", false, where);
        c.alpha_cover = cfgdetail::optional<double>(j, "alpha_cover", -1.0, where);
        c.l_const = cfgdetail::optional<double>(j, "l_const", 1.0, where);
        c.alpha_exp = cfgdetail::optional<double>(j, "alpha_exp", 1.0, where);
        c.beta_exp = cfgdetail::optional<double>(j, "beta_exp", 2.0, where);
        c.stability_d = cfgdetail::optional<double>(j, "stability_d", 0.0, where);

        if (j.contains("class")) {
            c.value_class = ValueClassConfig::parse(j.at("class"));
            c.has_value_class = true;
        }
        if (j.contains("model_class")) {
            c.model_class = ModelClassConfig::parse(j.at("model_class"));
            c.has_model_class = true;
        }
        if (c.name == "general_lsvi" && !c.has_value_class)
            throw ConfigError(where + ": general_lsvi requires a class block");
        if (c.name == "ucrl_vtr" && !c.has_model_class)
            throw ConfigError(where + ": ucrl_vtr requires a model_class block");
        if (c.name == "meta") {
            if (!j.contains("base")) throw ConfigError(where + ": meta requires a base block");
            c.base = std::make_shared<AlgorithmConfig>(parse(j.at("base"), where + ".base"));
            if (c.base->name == "meta") throw ConfigError(where + ": meta cannot stack on meta");
        }
        return c;
    }
};

struct RunBlock {
    long long K = 1;
    std::vector<std::uint64_t> seeds;
    std::string out;

    static RunBlock parse(const json& j) {
        cfgdetail::reject_unknown(j, {"K", "seeds", "out"}, "run");
        RunBlock c;
        c.K = cfgdetail::require<long long>(j, "K", "run");
        c.seeds = cfgdetail::optional<std::vector<std::uint64_t>>(j, "seeds", {1}, "run");
        c.out = cfgdetail::optional<std::string>(j, "out", "out", "run");
        if (c.K < 1) throw ConfigError("run.K must be >= 1");
        if (c.seeds.empty()) throw ConfigError("run.seeds must be non-empty");
        return c;
    }
};

struct SweepBlock {
    std::vector<double> zetas;
    std::vector<std::string> algorithms;

    static SweepBlock parse(const json& j) {
        cfgdetail::reject_unknown(j, {"zetas", "algorithms"}, "sweep");
        SweepBlock c;
        c.zetas = cfgdetail::optional<std::vector<double>>(j, "zetas", {}, "sweep");
        c.algorithms = cfgdetail::optional<std::vector<std::string>>(j, "algorithms", {}, "sweep");
        return c;
    }
};

struct RunConfig {
    EnvConfig env;
    AlgorithmConfig algorithm;
    RunBlock run;
    SweepBlock sweep;
    bool has_sweep = false;
    json raw;

    static RunConfig parse(const json& j) {
        cfgdetail::reject_unknown(j, {"env", "algorithm", "run", "sweep"}, "config");
        RunConfig c;
        if (!j.contains("env")) throw ConfigError("missing env block");
        if (!j.contains("algorithm")) throw ConfigError("missing algorithm block");
        if (!j.contains("run")) throw ConfigError("missing run block");
        c.env = EnvConfig::parse(j.at("env"));
        c.algorithm = AlgorithmConfig::parse(j.at("algorithm"));
        c.run = RunBlock::parse(j.at("run"));
        if (j.contains("sweep")) {
            c.sweep = SweepBlock::parse(j.at("sweep"));
            c.has_sweep = true;
        }
        c.raw = j;
        return c;
    }

    static RunConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        return parse(j);
    }
};

// ---------------------------------------------------------------------------
// Agent construction
// ---------------------------------------------------------------------------

inline std::unique_ptr<EpisodeAgent> make_agent(const AlgorithmConfig& alg, const Environment& env,
                                                long long K, double zeta) {
    if (alg.name == "linear_lsvi") {
        LinearLsviConfig cfg;
        cfg.c_beta = alg.c_beta;
        cfg.lambda = alg.lambda;
        cfg.delta = alg.delta;
        cfg.zeta = zeta;
        cfg.K = static_cast<int>(K);
        cfg.H = env.mdp.H;
        cfg.d = env.spec.d;
        return std::make_unique<LinearLsviAgent>(env.spec, cfg, env.mdp.s_init);
    }
    if (alg.name == "general_lsvi") {
        GeneralLsviConfig cfg;
        cfg.delta = alg.delta;
        cfg.zeta = zeta;
        cfg.K = static_cast<int>(K);
        cfg.H = env.mdp.H;
        cfg.c_prime = alg.c_prime;
        cfg.cover_t = alg.cover_t;
        cfg.log_w = alg.log_w;
        cfg.subsample = alg.subsample;
        FiniteFunctionClass cls;
        if (!alg.value_class.file.empty()) {
            cls = load_function_class_file(alg.value_class.file);
            if (cls.S != env.mdp.S || cls.A != env.mdp.A || cls.H != env.mdp.H)
                throw ConfigError("algorithm.class.file shape does not match the environment");
        } else {
            Rng cls_rng(alg.value_class.seed);
            cls = make_value_class(env.mdp, alg.value_class.members, alg.value_class.scale,
                                   cls_rng);
        }
        return std::make_unique<GeneralLsviAgent>(std::move(cls), env.mdp, cfg,
                                                  alg.value_class.seed ^ 0xABCDULL);
    }
    if (alg.name == "ucrl_vtr") {
        VtrConfig cfg;
        cfg.delta = alg.delta;
        cfg.zeta = zeta;
        cfg.K = static_cast<int>(K);
        cfg.H = env.mdp.H;
        cfg.c_prime = alg.c_prime;
        cfg.alpha_cover = alg.alpha_cover;
        Rng cls_rng(alg.model_class.seed);
        double fbar = alg.model_class.fbar_tv >= 0.0 ? alg.model_class.fbar_tv
                                                     : zeta / std::max(env.mdp.H, 1);
        FiniteModelClass cls = make_model_class(env.mdp, alg.model_class.members,
                                                alg.model_class.tv_scale,
                                                alg.model_class.include_truth, fbar, cls_rng);
        return std::make_unique<VtrAgent>(std::move(cls), env.mdp, cfg);
    }
    throw ConfigError("make_agent: cannot build agent '" + alg.name + "' directly");
}

// Default stability dimension for the meta threshold: the feature dimension
// for the linear base, a measured (greedy, lower-bound) eluder dimension for
// the class-based bases.
inline double default_stability_d(const AlgorithmConfig& base, const Environment& env,
                                  long long K) {
    if (base.name == "linear_lsvi") return env.spec.d;
    double eps = 1.0 / (static_cast<double>(K) * env.mdp.H);
    if (base.name == "general_lsvi") {
        Rng cls_rng(base.value_class.seed);
        FiniteFunctionClass cls =
            make_value_class(env.mdp, base.value_class.members, base.value_class.scale, cls_rng);
        std::vector<int> domain(static_cast<std::size_t>(env.mdp.S) * env.mdp.A);
        for (std::size_t i = 0; i < domain.size(); ++i) domain[i] = static_cast<int>(i);
        return std::max(1, eluder_dimension(restrict_class(cls, domain), eps, EluderMode::greedy)
                               .dimension);
    }
    // ucrl_vtr: lift the model class over all (h,s,a) with the members'
    // optimal value tables.
    Rng cls_rng(base.model_class.seed);
    double fbar = base.model_class.fbar_tv >= 0.0 ? base.model_class.fbar_tv : 0.0;
    FiniteModelClass cls = make_model_class(env.mdp, base.model_class.members,
                                            base.model_class.tv_scale,
                                            base.model_class.include_truth, fbar, cls_rng);
    std::vector<std::array<int, 3>> hsa;
    for (int h = 0; h < env.mdp.H; ++h)
        for (int s = 0; s < env.mdp.S; ++s)
            for (int a = 0; a < env.mdp.A; ++a) hsa.push_back({h, s, a});
    std::vector<Vec> tables;
    for (int id = 0; id < cls.size(); ++id) {
        DpSolution sol = solve_dp(env.mdp, cls.members[id]);
        tables.emplace_back(sol.V.begin(), sol.V.begin() + env.mdp.S);
    }
    return std::max(1, eluder_dimension(lift_model_class(cls, hsa, tables), eps,
                                        EluderMode::greedy)
                           .dimension);
}

// ---------------------------------------------------------------------------
// Episode loop, regret accounting
// ---------------------------------------------------------------------------

struct RegretEntry {
    long long k = 0;
    double instant = 0.0;
    double cumulative = 0.0;
    double optimistic = 0.0;
    double realized_return = 0.0;
    int epoch = -1;           // meta runs only
    double zeta_guess = 0.0;  // meta runs only
};

struct RunResult {
    std::uint64_t seed = 0;
    std::vector<RegretEntry> entries;
    std::vector<EpochEvent> epoch_events;
    double final_cum = 0.0;
    double runtime_sec = 0.0;
};

inline RunResult run_one(const RunConfig& cfg, const Environment& env, std::uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();
    RunResult result;
    result.seed = seed;
    Rng root(seed);
    const long long K = cfg.run.K;
    double cum = 0.0;

    if (cfg.algorithm.name == "meta") {
        const AlgorithmConfig& base = *cfg.algorithm.base;
        double d_stab = cfg.algorithm.stability_d > 0.0
                            ? cfg.algorithm.stability_d
                            : default_stability_d(base, env, K);
        MetaConfig mc;
        mc.K = K;
        mc.stability_c = stability_constant(d_stab, env.mdp.H, cfg.algorithm.delta, K,
                                            cfg.algorithm.alpha_exp, cfg.algorithm.beta_exp,
                                            cfg.algorithm.l_const);
        AgentFactory factory = [&](double zeta_guess, long long epochs) {
            return make_agent(base, env, epochs, zeta_guess);
        };
        MetaRunResult meta = run_meta(factory, env.mdp, mc, root);
        result.epoch_events = meta.epoch_events;

        double commit_value = evaluate_policy(env.mdp, meta.committed);
        long long k = 0;
        for (const auto& rec : meta.episodes) {
            ++k;
            double value = rec.commit_phase ? commit_value : evaluate_policy(env.mdp, rec.executed);
            double instant = env.vstar - value;
            cum += instant;
            result.entries.push_back(RegretEntry{k, instant, cum,
                                                 rec.commit_phase ? commit_value
                                                                  : rec.optimistic_value,
                                                 rec.realized_return, rec.epoch, rec.zeta_guess});
        }
    } else {
        auto agent = make_agent(cfg.algorithm, env, K, cfg.algorithm.zeta);
        for (long long k = 1; k <= K; ++k) {
            PolicyTable pol = agent->plan();
            double vopt = agent->planned_value();
            double value = evaluate_policy(env.mdp, pol);
            Rng ep_rng = root.derive(static_cast<std::uint64_t>(k));
            EpisodeLog ep = sample_episode(env.mdp, pol, ep_rng, static_cast<int>(k));
            agent->observe(ep);
            double instant = env.vstar - value;
            cum += instant;
            result.entries.push_back(
                RegretEntry{k, instant, cum, vopt, ep.total_return(), -1, 0.0});
        }
    }
    result.final_cum = cum;
    result.runtime_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// ---------------------------------------------------------------------------
// CSV / file output
// ---------------------------------------------------------------------------

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline void write_regret_csv(const RunResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "k,instant_regret,cum_regret,optimistic_value,realized_return,epoch,zeta_guess\n";
    for (const auto& e : r.entries)
        out << e.k << ',' << fmt_double(e.instant) << ',' << fmt_double(e.cumulative) << ','
            << fmt_double(e.optimistic) << ',' << fmt_double(e.realized_return) << ',' << e.epoch
            << ',' << fmt_double(e.zeta_guess) << '\n';
}

inline void write_epoch_csv(const RunResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch,zeta_guess,epoch_len,vbar,violated\n";
    for (const auto& e : r.epoch_events)
        out << e.index << ',' << fmt_double(e.zeta_guess) << ',' << e.len << ','
            << fmt_double(e.vbar) << ',' << (e.violated ? 1 : 0) << '\n';
}

inline std::uint64_t config_hash(const json& j) {
    std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Runs every seed, writes one regret CSV per seed plus summary and manifest.
inline std::vector<RunResult> run_experiment(const RunConfig& cfg,
                                             const std::string& out_override = "") {
    Environment env = build_environment(cfg.env);
    std::string out_dir = out_override.empty() ? cfg.run.out : out_override;
    std::filesystem::create_directories(out_dir);

    std::vector<RunResult> results;
    for (std::uint64_t seed : cfg.run.seeds) results.push_back(run_one(cfg, env, seed));

    for (const auto& r : results) {
        std::string stem = out_dir + "/seed_" + std::to_string(r.seed);
        write_regret_csv(r, stem + ".csv");
        if (!r.epoch_events.empty()) write_epoch_csv(r, stem + "_epochs.csv");
    }
    {
        std::ofstream out(out_dir + "/summary.csv");
        out << "seed,final_cum_regret,runtime_sec\n";
        for (const auto& r : results)
            out << r.seed << ',' << fmt_double(r.final_cum) << ',' << fmt_double(r.runtime_sec)
                << '\n';
    }
    {
        json manifest;
        char hex[24];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(config_hash(cfg.raw)));
        manifest["config_hash"] = hex;
        manifest["seeds"] = cfg.run.seeds;
        std::ofstream out(out_dir + "/manifest.json");
        out << manifest.dump(2) << '\n';
    }
    return results;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct SweepCell {
    std::string algorithm;
    double zeta = 0.0;
    double median_final = 0.0;
    double iqr_final = 0.0;
    int n_seeds = 0;
    std::string error;  // non-empty if the cell failed
};

inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    double pos = q * (static_cast<double>(v.size()) - 1.0);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

// Cross-product over sweep zetas and algorithm names; per-cell medians are
// recomputable from the per-run CSVs the cells write.
inline std::vector<SweepCell> run_sweep(const RunConfig& cfg, const std::string& out_override = "",
                                        int jobs = 1) {
    if (!cfg.has_sweep) throw ConfigError("sweep requires a sweep block in the config");
    std::vector<double> zetas =
        cfg.sweep.zetas.empty() ? std::vector<double>{cfg.env.injector.zeta} : cfg.sweep.zetas;
    std::vector<std::string> algs = cfg.sweep.algorithms.empty()
                                        ? std::vector<std::string>{cfg.algorithm.name}
                                        : cfg.sweep.algorithms;
    std::string out_dir = out_override.empty() ? cfg.run.out : out_override;
    std::filesystem::create_directories(out_dir);

    struct Cell {
        RunConfig cfg;
        std::string dir;
        std::string alg;
        double zeta;
    };
    std::vector<Cell> cells;
    for (const auto& alg : algs)
        for (double z : zetas) {
            json j = cfg.raw;
            j.erase("sweep");
            j["algorithm"]["name"] = alg;
            if (j["algorithm"].contains("zeta") && j["algorithm"]["zeta"].is_string()) {
                // zeta stays "unknown" for meta cells
            } else {
                j["algorithm"]["zeta"] = z;
            }
            if (j["env"].contains("injector")) j["env"]["injector"]["zeta"] = z;
            char zbuf[32];
            std::snprintf(zbuf, sizeof(zbuf), "%g", z);
            std::string dir = out_dir + "/" + alg + "_zeta" + zbuf;
            cells.push_back(Cell{RunConfig::parse(j), dir, alg, z});
        }

    std::vector<SweepCell> summary(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            SweepCell& out = summary[i];
            out.algorithm = cells[i].alg;
            out.zeta = cells[i].zeta;
            try {
                auto results = run_experiment(cells[i].cfg, cells[i].dir);
                std::vector<double> finals;
                for (const auto& r : results) finals.push_back(r.final_cum);
                out.median_final = percentile(finals, 0.5);
                out.iqr_final = percentile(finals, 0.75) - percentile(finals, 0.25);
                out.n_seeds = static_cast<int>(finals.size());
            } catch (const std::exception& e) {
                out.error = e.what();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::ofstream out(out_dir + "/sweep_summary.csv");
    out << "algorithm,zeta,median_final_regret,iqr_final_regret,n_seeds,error\n";
    for (const auto& c : summary)
        out << c.algorithm << ',' << fmt_double(c.zeta) << ',' << fmt_double(c.median_final) << ','
            << fmt_double(c.iqr_final) << ',' << c.n_seeds << ',' << c.error << '\n';
    return summary;
}

// ---------------------------------------------------------------------------
// Assumption verification command
// ---------------------------------------------------------------------------

struct VerifyOutput {
    LbmReport report;
    double zeta = 0.0;
    bool within_bounds = true;
};

inline VerifyOutput verify_environment(const RunConfig& cfg, int n_probe_perturbations = 50) {
    Environment env = build_environment(cfg.env);
    Rng probe_rng(cfg.env.seed ^ 0x9E3779B9ULL);
    auto probes = standard_probe_policies(env.mdp, n_probe_perturbations, probe_rng);
    VerifyOutput out;
    out.report = verify_lbm_assumption(env.mdp, env.spec, probes, 4, true);
    out.zeta = cfg.env.injector.zeta;
    for (int b = 1; b <= 4; ++b) {
        double bound = std::pow(out.zeta, b) + 1e-12;
        if (out.report.step_xi_moment[b - 1] > bound ||
            out.report.step_eta_moment[b - 1] > bound)
            out.within_bounds = false;
    }
    return out;
}

}  // namespace lbmrl
