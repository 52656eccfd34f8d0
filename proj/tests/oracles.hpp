// Test-only oracles: independent reference implementations the unit and
// acceptance suites check the library against. Nothing here may call into the
// code paths it verifies.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lbmrl/eluder.hpp"
#include "lbmrl/mdp.hpp"
#include "lbmrl/rng.hpp"

namespace oracles {

using lbmrl::EpisodeLog;
using lbmrl::MixturePolicy;
using lbmrl::PolicyTable;
using lbmrl::Rng;
using lbmrl::TabularMdp;
using lbmrl::Vec;

// Exact value of a policy by direct expectation over the state distribution,
// written forward (the library evaluates backward).
inline double forward_policy_value(const TabularMdp& mdp, const PolicyTable& pol) {
    std::vector<double> x(mdp.S, 0.0);
    x[mdp.s_init] = 1.0;
    double total = 0.0;
    for (int h = 0; h < mdp.H; ++h) {
        std::vector<double> next(mdp.S, 0.0);
        for (int s = 0; s < mdp.S; ++s) {
            if (x[s] == 0.0) continue;
            int a = pol.at(h, s);
            total += x[s] * mdp.reward(s, a);
            const double* p = mdp.row(h, s, a);
            for (int s2 = 0; s2 < mdp.S; ++s2) next[s2] += x[s] * p[s2];
        }
        x.swap(next);
    }
    return total;
}

// Optimal value by exhaustive enumeration of all A^(S*H) deterministic
// policies. Only feasible at toy sizes.
inline double enumerate_optimal_value(const TabularMdp& mdp) {
    long long n_cells = static_cast<long long>(mdp.S) * mdp.H;
    long long n_policies = 1;
    for (long long i = 0; i < n_cells; ++i) n_policies *= mdp.A;
    double best = -1.0;
    for (long long code = 0; code < n_policies; ++code) {
        PolicyTable pol(mdp.H, mdp.S);
        long long c = code;
        for (int h = 0; h < mdp.H; ++h)
            for (int s = 0; s < mdp.S; ++s) {
                pol.at(h, s) = static_cast<int>(c % mdp.A);
                c /= mdp.A;
            }
        best = std::max(best, forward_policy_value(mdp, pol));
    }
    return best;
}

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
};

// Monte-Carlo estimate of the policy value from sampled episodes.
inline McEstimate mc_policy_value(const TabularMdp& mdp, const PolicyTable& pol, long long episodes,
                                  Rng& rng) {
    double sum = 0.0, sum_sq = 0.0;
    for (long long i = 0; i < episodes; ++i) {
        int s = mdp.s_init;
        double ret = 0.0;
        for (int h = 0; h < mdp.H; ++h) {
            int a = pol.at(h, s);
            ret += mdp.reward(s, a);
            s = rng.next_categorical(mdp.row(h, s, a), mdp.S);
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    McEstimate est;
    est.mean = sum / static_cast<double>(episodes);
    double var = std::max(sum_sq / episodes - est.mean * est.mean, 0.0);
    est.stderr_ = std::sqrt(var / static_cast<double>(episodes));
    return est;
}

// Empirical step-state-action visit frequencies.
inline std::vector<double> mc_occupancy(const TabularMdp& mdp, const PolicyTable& pol,
                                        long long episodes, Rng& rng) {
    std::vector<double> counts(static_cast<std::size_t>(mdp.H) * mdp.S * mdp.A, 0.0);
    for (long long i = 0; i < episodes; ++i) {
        int s = mdp.s_init;
        for (int h = 0; h < mdp.H; ++h) {
            int a = pol.at(h, s);
            counts[(static_cast<std::size_t>(h) * mdp.S + s) * mdp.A + a] += 1.0;
            s = rng.next_categorical(mdp.row(h, s, a), mdp.S);
        }
    }
    for (double& c : counts) c /= static_cast<double>(episodes);
    return counts;
}

// Dense linear solve by Gaussian elimination with partial pivoting, written
// against plain row-major storage (independent of lbmrl::invert).
inline Vec gauss_solve(std::vector<Vec> a, Vec b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (int r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            for (int j = col; j < n; ++j) a[r][j] -= f * a[col][j];
            b[r] -= f * b[col];
        }
    }
    Vec x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int j = r + 1; j < n; ++j) s -= a[r][j] * x[j];
        x[r] = s / a[r][r];
    }
    return x;
}

// ---------------------------------------------------------------------------
// Brute-force eluder dimension
// ---------------------------------------------------------------------------

// Independence check by direct pair scan (no shared code with the library).
inline bool bf_independent(const lbmrl::EluderInstance& inst, int point,
                           const std::vector<int>& seq, double eps_prime) {
    for (int f1 = 0; f1 < inst.n_members; ++f1)
        for (int f2 = f1 + 1; f2 < inst.n_members; ++f2) {
            double gap = std::abs(inst.value(f1, point) - inst.value(f2, point));
            if (gap <= eps_prime) continue;
            double nsq = 0.0;
            for (int x : seq) {
                double dd = inst.value(f1, x) - inst.value(f2, x);
                nsq += dd * dd;
            }
            if (nsq <= eps_prime * eps_prime) return true;
        }
    return false;
}

inline void bf_dfs(const lbmrl::EluderInstance& inst, double eps_prime, std::vector<int>& seq,
                   std::vector<char>& used, int& best) {
    best = std::max(best, static_cast<int>(seq.size()));
    if (static_cast<int>(seq.size()) == inst.n_points) return;
    for (int x = 0; x < inst.n_points; ++x) {
        if (used[x]) continue;
        if (!bf_independent(inst, x, seq, eps_prime)) continue;
        used[x] = 1;
        seq.push_back(x);
        bf_dfs(inst, eps_prime, seq, used, best);
        seq.pop_back();
        used[x] = 0;
    }
}

// Longest eps'-independent sequence over every candidate threshold eps' >= eps:
// eps itself, every pairwise gap, and every pairwise subset norm, all nudged up
// by a relative 1e-12 (the same quantifier resolution the library uses, derived
// from scratch). Exponential search over orderings.
inline int bf_eluder_dimension(const lbmrl::EluderInstance& inst, double eps) {
    std::vector<double> candidates{eps};
    for (int f1 = 0; f1 < inst.n_members; ++f1)
        for (int f2 = f1 + 1; f2 < inst.n_members; ++f2) {
            for (int x = 0; x < inst.n_points; ++x) {
                double gap = std::abs(inst.value(f1, x) - inst.value(f2, x));
                if (gap >= eps) candidates.push_back(gap);
            }
            for (std::uint32_t sset = 1; sset < (1u << inst.n_points); ++sset) {
                double nsq = 0.0;
                for (int x = 0; x < inst.n_points; ++x)
                    if (sset & (1u << x)) {
                        double dd = inst.value(f1, x) - inst.value(f2, x);
                        nsq += dd * dd;
                    }
                double norm = std::sqrt(nsq);
                if (norm >= eps) candidates.push_back(norm);
            }
        }
    for (double& c : candidates) c *= 1.0 + 1e-12;
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    int best = 0;
    std::vector<int> seq;
    std::vector<char> used(inst.n_points, 0);
    for (double eps_prime : candidates) {
        bf_dfs(inst, eps_prime, seq, used, best);
        if (best == inst.n_points) break;
    }
    return best;
}

}  // namespace oracles
