#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lbmrl/linalg.hpp"
#include "lbmrl/rng.hpp"

namespace lbmrl {

// Ground-truth finite episodic MDP. Transitions are step-indexed, rewards are
// deterministic and stationary across steps, the initial state is fixed.
struct TabularMdp {
    int S = 0;
    int A = 0;
    int H = 0;
    int s_init = 0;
    // P[h][s][a] is a probability row over next states; flat layout
    // [(h * S + s) * A + a] * S + s2.
    std::vector<double> P;
    // r[s][a] in [0, 1].
    std::vector<double> r;

    std::size_t row_offset(int h, int s, int a) const {
        return ((static_cast<std::size_t>(h) * S + s) * A + a) * S;
    }
    const double* row(int h, int s, int a) const { return P.data() + row_offset(h, s, a); }
    double* row(int h, int s, int a) { return P.data() + row_offset(h, s, a); }
    double reward(int s, int a) const { return r[static_cast<std::size_t>(s) * A + a]; }
    double& reward(int s, int a) { return r[static_cast<std::size_t>(s) * A + a]; }

    void validate() const {
        if (S < 1 || A < 1 || H < 1)
            throw std::invalid_argument("TabularMdp: S, A, H must be >= 1");
        if (s_init < 0 || s_init >= S)
            throw std::invalid_argument("TabularMdp: s_init out of range");
        if (P.size() != static_cast<std::size_t>(H) * S * A * S)
            throw std::invalid_argument("TabularMdp: transition tensor has wrong size");
        if (r.size() != static_cast<std::size_t>(S) * A)
            throw std::invalid_argument("TabularMdp: reward table has wrong size");
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    const double* p = row(h, s, a);
                    double sum = 0.0;
                    for (int s2 = 0; s2 < S; ++s2) {
                        if (p[s2] < 0.0)
                            throw std::invalid_argument("TabularMdp: negative transition probability");
                        sum += p[s2];
                    }
                    if (std::abs(sum - 1.0) > 1e-12)
                        throw std::invalid_argument("TabularMdp: row does not sum to 1 at (h=" +
                                                    std::to_string(h) + ",s=" + std::to_string(s) +
                                                    ",a=" + std::to_string(a) + ")");
                }
        for (double v : r)
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("TabularMdp: reward outside [0,1]");
    }
};

// Nonstationary deterministic policy, pi[h][s] -> action.
struct PolicyTable {
    int H = 0;
    int S = 0;
    std::vector<int> actions;  // [h * S + s]

    PolicyTable() = default;
    PolicyTable(int horizon, int states)
        : H(horizon), S(states), actions(static_cast<std::size_t>(horizon) * states, 0) {}

    int at(int h, int s) const { return actions[static_cast<std::size_t>(h) * S + s]; }
    int& at(int h, int s) { return actions[static_cast<std::size_t>(h) * S + s]; }

    void validate(int A) const {
        for (int a : actions)
            if (a < 0 || a >= A) throw std::invalid_argument("PolicyTable: action out of range");
    }

    bool operator==(const PolicyTable& o) const {
        return H == o.H && S == o.S && actions == o.actions;
    }
};

// Uniform mixture over deterministic policies; one member is drawn per episode.
struct MixturePolicy {
    std::vector<PolicyTable> members;

    void validate() const {
        if (members.empty()) throw std::invalid_argument("MixturePolicy: empty member list");
    }
};

struct EpisodeLog {
    int k = 0;                   // episode index
    std::vector<int> states;     // s_1 .. s_{H+1}
    std::vector<int> actions;    // a_1 .. a_H
    std::vector<double> rewards; // r_1 .. r_H

    double total_return() const {
        double s = 0.0;
        for (double v : rewards) s += v;
        return s;
    }
};

// ---------------------------------------------------------------------------
// Benchmark construction
// ---------------------------------------------------------------------------

// Riverswim-style chain. Action 0 steps left deterministically; action 1 steps
// right with probability 1-slip (left otherwise). Actions beyond 1 behave like
// action 0. Reward 1 at the rightmost state, 0.05 at the leftmost, 0 elsewhere,
// independent of the action taken. Start state is the left end.
inline TabularMdp build_chain_env(int S, int A, int H, double slip) {
    if (S < 2 || A < 2) throw std::invalid_argument("build_chain_env: need S >= 2 and A >= 2");
    if (H < 1) throw std::invalid_argument("build_chain_env: need H >= 1");
    if (slip < 0.0 || slip > 0.5) throw std::invalid_argument("build_chain_env: slip must be in [0, 0.5]");

    TabularMdp m;
    m.S = S;
    m.A = A;
    m.H = H;
    m.s_init = 0;
    m.P.assign(static_cast<std::size_t>(H) * S * A * S, 0.0);
    m.r.assign(static_cast<std::size_t>(S) * A, 0.0);

    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            int left = std::max(s - 1, 0);
            int right = std::min(s + 1, S - 1);
            for (int a = 0; a < A; ++a) {
                double* p = m.row(h, s, a);
                if (a == 1) {
                    p[right] += 1.0 - slip;
                    p[left] += slip;
                } else {
                    p[left] = 1.0;
                }
            }
        }
    for (int a = 0; a < A; ++a) {
        m.reward(S - 1, a) = 1.0;
        m.reward(0, a) = 0.05;
    }
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Exact dynamic-programming oracles
// ---------------------------------------------------------------------------

struct DpSolution {
    // V[h * S + s] for h = 0..H (V[H] is the terminal zero row).
    std::vector<double> V;
    // Q[(h * S + s) * A + a] for h = 0..H-1.
    std::vector<double> Q;
    PolicyTable greedy;

    double v_at(int h, int s, int S) const { return V[static_cast<std::size_t>(h) * S + s]; }
    double q_at(int h, int s, int a, int S, int A) const {
        return Q[(static_cast<std::size_t>(h) * S + s) * A + a];
    }
};

// Backward DP over an arbitrary kernel sharing the MDP's shape and rewards.
// Greedy ties break toward the lowest action index.
inline DpSolution solve_dp(const TabularMdp& shape, const std::vector<double>& kernel) {
    const int S = shape.S, A = shape.A, H = shape.H;
    DpSolution sol;
    sol.V.assign(static_cast<std::size_t>(H + 1) * S, 0.0);
    sol.Q.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    sol.greedy = PolicyTable(H, S);

    for (int h = H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            double best = -1.0;
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                const double* p = kernel.data() + shape.row_offset(h, s, a);
                double ev = 0.0;
                for (int s2 = 0; s2 < S; ++s2) ev += p[s2] * sol.V[(h + 1) * static_cast<std::size_t>(S) + s2];
                double q = shape.reward(s, a) + ev;
                sol.Q[(static_cast<std::size_t>(h) * S + s) * A + a] = q;
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            sol.V[static_cast<std::size_t>(h) * S + s] = best;
            sol.greedy.at(h, s) = best_a;
        }
    }
    return sol;
}

inline DpSolution exact_optimal_values(const TabularMdp& mdp) {
    mdp.validate();
    return solve_dp(mdp, mdp.P);
}

// Exact value of a deterministic policy from the fixed initial state.
inline double evaluate_policy(const TabularMdp& mdp, const PolicyTable& pol) {
    if (pol.H != mdp.H || pol.S != mdp.S)
        throw std::invalid_argument("evaluate_policy: policy dimensions do not match the MDP");
    const int S = mdp.S;
    std::vector<double> v(S, 0.0), next(S, 0.0);
    for (int h = mdp.H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            int a = pol.at(h, s);
            const double* p = mdp.row(h, s, a);
            double ev = 0.0;
            for (int s2 = 0; s2 < S; ++s2) ev += p[s2] * v[s2];
            next[s] = mdp.reward(s, a) + ev;
        }
        std::swap(v, next);
    }
    return v[mdp.s_init];
}

// Mixture value: average of member values (uniform draw, linearity of
// expectation).
inline double evaluate_policy(const TabularMdp& mdp, const MixturePolicy& pol) {
    pol.validate();
    double s = 0.0;
    for (const auto& member : pol.members) s += evaluate_policy(mdp, member);
    return s / static_cast<double>(pol.members.size());
}

// Step-h state-action occupancy d_h^pi(s,a) for a stochastic policy given as
// pi[h][s][a] probabilities. Forward recursion from the fixed initial state.
inline std::vector<double> occupancy_measure_stochastic(const TabularMdp& mdp,
                                                        const std::vector<double>& pi) {
    const int S = mdp.S, A = mdp.A, H = mdp.H;
    if (pi.size() != static_cast<std::size_t>(H) * S * A)
        throw std::invalid_argument("occupancy_measure: policy dimensions do not match the MDP");
    std::vector<double> d(static_cast<std::size_t>(H) * S * A, 0.0);
    std::vector<double> x(S, 0.0), next(S, 0.0);
    x[mdp.s_init] = 1.0;
    for (int h = 0; h < H; ++h) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < S; ++s) {
            if (x[s] == 0.0) continue;
            for (int a = 0; a < A; ++a) {
                double w = x[s] * pi[(static_cast<std::size_t>(h) * S + s) * A + a];
                if (w == 0.0) continue;
                d[(static_cast<std::size_t>(h) * S + s) * A + a] = w;
                const double* p = mdp.row(h, s, a);
                for (int s2 = 0; s2 < S; ++s2) next[s2] += w * p[s2];
            }
        }
        std::swap(x, next);
    }
    return d;
}

inline std::vector<double> policy_as_stochastic(const PolicyTable& pol, int A) {
    std::vector<double> pi(static_cast<std::size_t>(pol.H) * pol.S * A, 0.0);
    for (int h = 0; h < pol.H; ++h)
        for (int s = 0; s < pol.S; ++s)
            pi[(static_cast<std::size_t>(h) * pol.S + s) * A + pol.at(h, s)] = 1.0;
    return pi;
}

inline std::vector<double> uniform_stochastic_policy(int H, int S, int A) {
    return std::vector<double>(static_cast<std::size_t>(H) * S * A, 1.0 / A);
}

inline std::vector<double> occupancy_measure(const TabularMdp& mdp, const PolicyTable& pol) {
    if (pol.H != mdp.H || pol.S != mdp.S)
        throw std::invalid_argument("occupancy_measure: policy dimensions do not match the MDP");
    return occupancy_measure_stochastic(mdp, policy_as_stochastic(pol, mdp.A));
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

inline EpisodeLog sample_episode(const TabularMdp& mdp, const PolicyTable& pol, Rng& rng,
                                 int episode_index = 0) {
    if (pol.H != mdp.H || pol.S != mdp.S)
        throw std::invalid_argument("sample_episode: policy dimensions do not match the MDP");
    EpisodeLog ep;
    ep.k = episode_index;
    ep.states.reserve(mdp.H + 1);
    ep.actions.reserve(mdp.H);
    ep.rewards.reserve(mdp.H);
    int s = mdp.s_init;
    ep.states.push_back(s);
    for (int h = 0; h < mdp.H; ++h) {
        int a = pol.at(h, s);
        ep.actions.push_back(a);
        ep.rewards.push_back(mdp.reward(s, a));
        s = rng.next_categorical(mdp.row(h, s, a), mdp.S);
        ep.states.push_back(s);
    }
    return ep;
}

inline EpisodeLog sample_episode(const TabularMdp& mdp, const MixturePolicy& pol, Rng& rng,
                                 int episode_index = 0) {
    pol.validate();
    int idx = rng.next_below(static_cast<int>(pol.members.size()));
    return sample_episode(mdp, pol.members[idx], rng, episode_index);
}

}  // namespace lbmrl
