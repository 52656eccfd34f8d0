#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "lbmrl/agent.hpp"
#include "lbmrl/mdp.hpp"
#include "lbmrl/rng.hpp"

namespace lbmrl {

// Epoch schedule: zeta^(i) = 2^-i, nominal length K^(i) = 4^i for
// i = 0 .. floor(log2 sqrt(3K+1)). The nominal lengths overshoot any budget, so
// each epoch is truncated at the remaining budget and the schedule consumes
// exactly K episodes.
struct EpochPlan {
    int index = 0;
    double zeta_guess = 1.0;
    long long nominal_len = 1;
    long long len = 1;  // truncated length actually run
};

inline std::vector<EpochPlan> epoch_schedule(long long K) {
    if (K < 1) throw std::invalid_argument("epoch_schedule: K must be >= 1");
    int last = static_cast<int>(std::floor(std::log2(std::sqrt(3.0 * static_cast<double>(K) + 1.0))));
    std::vector<EpochPlan> plans;
    long long consumed = 0;
    for (int i = 0; i <= last; ++i) {
        EpochPlan p;
        p.index = i;
        p.zeta_guess = std::ldexp(1.0, -i);  // 2^-i
        p.nominal_len = 1LL << (2 * i);      // 4^i
        p.len = std::min(p.nominal_len, K - consumed);
        consumed += p.len;
        plans.push_back(p);
    }
    return plans;
}

// C(d,H,delta) = 3 sqrt(8 H^2 log(2 ceil(log2 sqrt(3K+1)) / delta))
//              + 6 L * d^alpha * H^beta,
// with L supplied as a constant (it is only specified up to logarithmic order)
// and (alpha, beta) the base algorithm's regret exponents.
inline double stability_constant(double d, int H, double delta, long long K, double alpha_exp,
                                 double beta_exp, double l_const) {
    if (d <= 0.0 || H < 1 || K < 1) throw std::invalid_argument("stability_constant: bad dimensions");
    if (delta <= 0.0 || delta >= 1.0)
        throw std::invalid_argument("stability_constant: delta must be in (0,1)");
    if (l_const < 0.0) throw std::invalid_argument("stability_constant: L must be >= 0");
    double levels = std::ceil(std::log2(std::sqrt(3.0 * static_cast<double>(K) + 1.0)));
    double log_arg = 2.0 * levels / delta;
    if (log_arg <= 0.0) throw std::invalid_argument("stability_constant: nonpositive log argument");
    double inner = 8.0 * static_cast<double>(H) * H * std::log(log_arg);
    if (inner < 0.0) throw std::invalid_argument("stability_constant: log argument below 1");
    return 3.0 * std::sqrt(inner) + 6.0 * l_const * std::pow(d, alpha_exp) * std::pow(H, beta_exp);
}

// Builds a fresh base learner for an epoch: arguments are the zeta guess and
// the number of episodes the epoch will run.
using AgentFactory = std::function<std::unique_ptr<EpisodeAgent>(double zeta_guess, long long epochs)>;

struct EpochResult {
    double vbar = 0.0;  // mean of realized episodic returns
    MixturePolicy policy;
};

struct MetaEpisodeRecord {
    PolicyTable executed;      // policy used this episode (mixture value logged separately)
    double optimistic_value = 0.0;
    double realized_return = 0.0;
    int epoch = -1;            // -1 marks the commit phase
    double zeta_guess = 0.0;
    bool commit_phase = false;
};

struct MetaConfig {
    long long K = 1;
    double stability_c = 0.0;  // threshold constant C(d,H,delta)
    // An epoch shorter than half its nominal length is recorded but cannot
    // trigger the stability break; its estimate is too coarse.
    bool check_truncated = false;
};

struct EpochEvent {
    int index = 0;
    double zeta_guess = 0.0;
    long long len = 0;
    double vbar = 0.0;
    bool violated = false;
};

struct MetaRunResult {
    std::vector<MetaEpisodeRecord> episodes;
    std::vector<EpochEvent> epoch_events;
    MixturePolicy committed;     // policy run in the commit phase (or last epoch's)
    int committed_epoch = -1;    // j
    bool violation = false;
    long long commit_episodes = 0;
};

// One epoch of the base algorithm: run it for `len` episodes, output the mean
// realized return and the uniform mixture of the executed policies.
inline EpochResult run_single_epoch(EpisodeAgent& agent, const TabularMdp& env, long long len,
                                    Rng& rng, std::vector<MetaEpisodeRecord>* sink = nullptr,
                                    int epoch_index = 0, double zeta_guess = 0.0) {
    if (len < 1) throw std::invalid_argument("run_single_epoch: epoch length must be >= 1");
    EpochResult result;
    double total = 0.0;
    for (long long k = 0; k < len; ++k) {
        PolicyTable pol = agent.plan();
        double vopt = agent.planned_value();
        EpisodeLog ep = sample_episode(env, pol, rng, static_cast<int>(k));
        agent.observe(ep);
        total += ep.total_return();
        result.policy.members.push_back(pol);
        if (sink)
            sink->push_back(MetaEpisodeRecord{std::move(pol), vopt, ep.total_return(), epoch_index,
                                              zeta_guess, false});
    }
    result.vbar = total / static_cast<double>(len);
    return result;
}

// Parameter-free wrapper: epochs with halving zeta guesses and quadrupling
// lengths; break on the first stability violation |Vbar_i - Vbar_{i-1}| >
// C * zeta_i and commit the previous epoch's mixture for the rest of the
// budget. Consumes exactly cfg.K episodes.
inline MetaRunResult run_meta(const AgentFactory& factory, const TabularMdp& env,
                              const MetaConfig& cfg, Rng& rng) {
    if (cfg.K < 1) throw std::invalid_argument("run_meta: K must be >= 1");
    MetaRunResult result;
    auto plans = epoch_schedule(cfg.K);

    double prev_vbar = 0.0;
    bool have_prev = false;
    long long consumed = 0;
    std::vector<MixturePolicy> epoch_policies;

    for (const auto& plan : plans) {
        if (plan.len <= 0) break;
        auto agent = factory(plan.zeta_guess, plan.len);
        Rng epoch_rng = rng.derive(0x1000 + static_cast<std::uint64_t>(plan.index));
        EpochResult epoch = run_single_epoch(*agent, env, plan.len, epoch_rng, &result.episodes,
                                             plan.index, plan.zeta_guess);
        consumed += plan.len;
        epoch_policies.push_back(epoch.policy);

        bool full_enough = cfg.check_truncated || 2 * plan.len >= plan.nominal_len;
        bool violated = false;
        if (plan.index >= 1 && have_prev && full_enough &&
            std::abs(epoch.vbar - prev_vbar) > cfg.stability_c * plan.zeta_guess)
            violated = true;

        result.epoch_events.push_back(
            EpochEvent{plan.index, plan.zeta_guess, plan.len, epoch.vbar, violated});

        if (violated) {
            result.violation = true;
            result.committed_epoch = plan.index - 1;
            break;
        }
        prev_vbar = epoch.vbar;
        have_prev = true;
        result.committed_epoch = plan.index;
    }

    result.committed = epoch_policies[result.committed_epoch >= 0 ? result.committed_epoch : 0];
    result.commit_episodes = cfg.K - consumed;
    Rng commit_rng = rng.derive(0x2000);
    for (long long t = 0; t < result.commit_episodes; ++t) {
        EpisodeLog ep = sample_episode(env, result.committed, commit_rng, static_cast<int>(t));
        // The executed member is what the environment saw; regret accounting
        // uses the mixture itself (exact value by linearity).
        result.episodes.push_back(MetaEpisodeRecord{PolicyTable(), 0.0, ep.total_return(),
                                                    result.committed_epoch, 0.0, true});
    }
    return result;
}

}  // namespace lbmrl
