#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lbmrl/mdp.hpp"
#include "lbmrl/rng.hpp"

namespace lbmrl {

// Linear-MDP structure: kernel <phi(s,a), mu_h(.)> and reward <phi(s,a), theta_h>.
// Agents see only phi; the induced kernel/reward serve as the approximator the
// ground truth is measured against.
struct LinearMdpSpec {
    int d = 0;
    int S = 0;
    int A = 0;
    int H = 0;
    std::vector<double> phi;    // [s][a][j] : (s*A + a)*d + j
    std::vector<double> mu;     // [h][j][s2]: (h*d + j)*S + s2
    std::vector<double> theta;  // [h][j]    : h*d + j

    const double* feature(int s, int a) const {
        return phi.data() + (static_cast<std::size_t>(s) * A + a) * d;
    }
    Vec feature_vec(int s, int a) const {
        const double* f = feature(s, a);
        return Vec(f, f + d);
    }

    double induced_kernel(int h, int s, int a, int s2) const {
        const double* f = feature(s, a);
        double v = 0.0;
        for (int j = 0; j < d; ++j) v += f[j] * mu[(static_cast<std::size_t>(h) * d + j) * S + s2];
        return v;
    }

    double induced_reward(int h, int s, int a) const {
        const double* f = feature(s, a);
        double v = 0.0;
        for (int j = 0; j < d; ++j) v += f[j] * theta[static_cast<std::size_t>(h) * d + j];
        return v;
    }

    void validate() const {
        if (d < 1 || S < 1 || A < 1 || H < 1)
            throw std::invalid_argument("LinearMdpSpec: dimensions must be >= 1");
        if (phi.size() != static_cast<std::size_t>(S) * A * d ||
            mu.size() != static_cast<std::size_t>(H) * d * S ||
            theta.size() != static_cast<std::size_t>(H) * d)
            throw std::invalid_argument("LinearMdpSpec: table sizes inconsistent");
        const double sqrt_d = std::sqrt(static_cast<double>(d));
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double* f = feature(s, a);
                double n2 = 0.0;
                for (int j = 0; j < d; ++j) n2 += f[j] * f[j];
                if (n2 > 1.0 + 1e-9)
                    throw std::invalid_argument("LinearMdpSpec: ||phi(s,a)|| exceeds 1");
            }
        for (int h = 0; h < H; ++h) {
            double tn = 0.0;
            for (int j = 0; j < d; ++j) {
                double t = theta[static_cast<std::size_t>(h) * d + j];
                tn += t * t;
            }
            if (std::sqrt(tn) > sqrt_d + 1e-9)
                throw std::invalid_argument("LinearMdpSpec: ||theta_h|| exceeds sqrt(d)");
            double mn = 0.0;
            for (int j = 0; j < d; ++j) {
                double col = 0.0;
                for (int s2 = 0; s2 < S; ++s2) col += mu[(static_cast<std::size_t>(h) * d + j) * S + s2];
                mn += col * col;
            }
            if (std::sqrt(mn) > sqrt_d + 1e-9)
                throw std::invalid_argument("LinearMdpSpec: ||mu_h(S)|| exceeds sqrt(d)");
        }
    }
};

// Exact one-hot embedding of a tabular MDP (d = S*A): any kernel is linear in
// indicator features.
inline LinearMdpSpec one_hot_spec(const TabularMdp& mdp) {
    LinearMdpSpec spec;
    spec.S = mdp.S;
    spec.A = mdp.A;
    spec.H = mdp.H;
    spec.d = mdp.S * mdp.A;
    spec.phi.assign(static_cast<std::size_t>(spec.d) * spec.d, 0.0);
    for (int j = 0; j < spec.d; ++j) spec.phi[static_cast<std::size_t>(j) * spec.d + j] = 1.0;
    spec.mu.assign(static_cast<std::size_t>(spec.H) * spec.d * spec.S, 0.0);
    spec.theta.assign(static_cast<std::size_t>(spec.H) * spec.d, 0.0);
    for (int h = 0; h < spec.H; ++h)
        for (int s = 0; s < spec.S; ++s)
            for (int a = 0; a < spec.A; ++a) {
                int j = s * spec.A + a;
                const double* p = mdp.row(h, s, a);
                for (int s2 = 0; s2 < spec.S; ++s2)
                    spec.mu[(static_cast<std::size_t>(h) * spec.d + j) * spec.S + s2] = p[s2];
                spec.theta[static_cast<std::size_t>(h) * spec.d + j] = mdp.reward(s, a);
            }
    return spec;
}

// Exact linear MDP built by mixing d base next-state distributions with
// simplex-valued features; one-hot (d = S*A) is the special case of indicator
// features over random rows.
inline std::pair<TabularMdp, LinearMdpSpec> build_linear_env(int d, int S, int A, int H,
                                                             std::uint64_t seed) {
    if (d < 1 || S < 1 || A < 1 || H < 1)
        throw std::invalid_argument("build_linear_env: dimensions must be >= 1");
    if (d > S * A) throw std::invalid_argument("build_linear_env: need d <= S*A");

    Rng rng(seed);
    Rng mu_rng = rng.derive(1);
    Rng phi_rng = rng.derive(2);
    Rng theta_rng = rng.derive(3);

    LinearMdpSpec spec;
    spec.d = d;
    spec.S = S;
    spec.A = A;
    spec.H = H;
    spec.phi.assign(static_cast<std::size_t>(S) * A * d, 0.0);
    spec.mu.assign(static_cast<std::size_t>(H) * d * S, 0.0);
    spec.theta.assign(static_cast<std::size_t>(H) * d, 0.0);

    auto random_simplex = [](Rng& r, double* out, int n) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            out[i] = -std::log(1.0 - r.next_double());
            sum += out[i];
        }
        for (int i = 0; i < n; ++i) out[i] /= sum;
    };

    for (int h = 0; h < H; ++h)
        for (int j = 0; j < d; ++j)
            random_simplex(mu_rng, spec.mu.data() + (static_cast<std::size_t>(h) * d + j) * S, S);

    if (d == S * A) {
        for (int j = 0; j < d; ++j) spec.phi[static_cast<std::size_t>(j) * d + j] = 1.0;
    } else {
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                random_simplex(phi_rng, spec.phi.data() + (static_cast<std::size_t>(s) * A + a) * d, d);
    }

    // Shared theta across steps keeps the tabular reward stationary.
    Vec theta0(d);
    for (int j = 0; j < d; ++j) theta0[j] = theta_rng.next_double();
    for (int h = 0; h < H; ++h)
        for (int j = 0; j < d; ++j) spec.theta[static_cast<std::size_t>(h) * d + j] = theta0[j];

    TabularMdp m;
    m.S = S;
    m.A = A;
    m.H = H;
    m.s_init = 0;
    m.P.assign(static_cast<std::size_t>(H) * S * A * S, 0.0);
    m.r.assign(static_cast<std::size_t>(S) * A, 0.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                double* p = m.row(h, s, a);
                double sum = 0.0;
                for (int s2 = 0; s2 < S; ++s2) {
                    p[s2] = spec.induced_kernel(h, s, a, s2);
                    sum += p[s2];
                }
                for (int s2 = 0; s2 < S; ++s2) p[s2] /= sum;  // remove rounding drift
            }
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) m.reward(s, a) = spec.induced_reward(0, s, a);

    m.validate();
    spec.validate();
    return {m, spec};
}

// ---------------------------------------------------------------------------
// Misspecification injection
// ---------------------------------------------------------------------------

// Total variation distance between probability rows, TV = (1/2) * L1.
inline double tv_distance(const double* p, const double* q, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

struct MisspecInjector {
    enum class Mode { none, global, local_trap };

    Mode mode = Mode::none;
    double zeta_target = 0.0;   // admissible average misspecification
    double delta_tv = 0.0;      // per-row TV shift at trap states
    double reach_prob = 0.0;    // gate probability into the trap region
    std::vector<int> trap_states;

    void validate() const {
        if (zeta_target < 0.0 || zeta_target > 1.0)
            throw std::invalid_argument("MisspecInjector: zeta_target must be in [0,1]");
        if (delta_tv < 0.0 || delta_tv > 1.0)
            throw std::invalid_argument("MisspecInjector: delta_tv must be in [0,1]");
        if (mode == Mode::local_trap) {
            if (trap_states.empty())
                throw std::invalid_argument("MisspecInjector: local_trap needs trap states");
            if (reach_prob < 0.0 || reach_prob > 1.0)
                throw std::invalid_argument("MisspecInjector: reach_prob must be in [0,1]");
            // p <= zeta^4 / delta^4 keeps every moment E[xi^beta] <= zeta^beta
            // for beta in [4].
            double cap = max_reach_prob(zeta_target, delta_tv);
            if (reach_prob > cap + 1e-12)
                throw std::invalid_argument("MisspecInjector: reach_prob exceeds zeta^4/delta^4");
        }
    }

    static double max_reach_prob(double zeta, double delta) {
        if (delta <= 0.0) return 1.0;
        double z2 = zeta * zeta, d2 = delta * delta;
        return std::min(1.0, (z2 * z2) / (d2 * d2));
    }

    bool is_trap(int s) const {
        return std::find(trap_states.begin(), trap_states.end(), s) != trap_states.end();
    }
};

// Restructures an MDP so the trap region is entered only through a single gate:
// probability mass that any non-trap row places on trap states is redirected to
// a bypass state, and the initial state's step-1 rows route reach_prob into the
// first trap state. Rebuild the linear spec from the result before injecting.
inline TabularMdp gate_trap_region(const TabularMdp& mdp, const MisspecInjector& inj) {
    inj.validate();
    if (inj.mode != MisspecInjector::Mode::local_trap)
        throw std::invalid_argument("gate_trap_region: injector mode must be local_trap");
    for (int t : inj.trap_states)
        if (t < 0 || t >= mdp.S) throw std::invalid_argument("gate_trap_region: trap state out of range");
    if (inj.is_trap(mdp.s_init))
        throw std::invalid_argument("gate_trap_region: initial state cannot be a trap state");

    auto bypass_of = [&](int t) {
        for (int s = t + 1; s < mdp.S; ++s)
            if (!inj.is_trap(s)) return s;
        for (int s = t - 1; s >= 0; --s)
            if (!inj.is_trap(s)) return s;
        throw std::invalid_argument("gate_trap_region: every state is a trap state");
    };

    // Every row sheds its mass on trap states, trap rows included: the region
    // is then entered only through the gate below, and an injected row can
    // reach TV distance 1 from its gated original.
    TabularMdp out = mdp;
    for (int h = 0; h < mdp.H; ++h)
        for (int s = 0; s < mdp.S; ++s)
            for (int a = 0; a < mdp.A; ++a) {
                double* p = out.row(h, s, a);
                for (int t : inj.trap_states) {
                    if (p[t] > 0.0) {
                        p[bypass_of(t)] += p[t];
                        p[t] = 0.0;
                    }
                }
            }
    // Single gate: every step-1 action from the start state enters the region
    // with probability reach_prob, so all policies face the same exposure.
    int t0 = *std::min_element(inj.trap_states.begin(), inj.trap_states.end());
    for (int a = 0; a < mdp.A; ++a) {
        double* p = out.row(0, mdp.s_init, a);
        for (int s2 = 0; s2 < mdp.S; ++s2) p[s2] *= (1.0 - inj.reach_prob);
        p[t0] += inj.reach_prob;
    }
    out.validate();
    return out;
}

// Perturbs an MDP away from its linear approximator. The input spec stays the
// approximator of the returned ground truth:
//   none       — identity;
//   global     — every kernel row is shifted by TV zeta_target from the induced
//                row and every reward by zeta_target, so the pointwise error
//                bound implies the average bound;
//   local_trap — rows and rewards at trap states are shifted by delta_tv; the
//                input must already gate the region (see gate_trap_region) so
//                occupancy of trap states never exceeds reach_prob.
inline TabularMdp inject_misspecification(const TabularMdp& mdp, const LinearMdpSpec& spec,
                                          const MisspecInjector& inj, std::uint64_t seed) {
    mdp.validate();
    spec.validate();
    inj.validate();
    if (spec.S != mdp.S || spec.A != mdp.A || spec.H != mdp.H)
        throw std::invalid_argument("inject_misspecification: spec shape does not match the MDP");

    if (inj.mode == MisspecInjector::Mode::none) return mdp;

    TabularMdp out = mdp;

    if (inj.mode == MisspecInjector::Mode::global) {
        Rng rng(seed);
        const double shift = inj.zeta_target;
        for (int h = 0; h < mdp.H; ++h)
            for (int s = 0; s < mdp.S; ++s)
                for (int a = 0; a < mdp.A; ++a) {
                    Vec base(mdp.S);
                    for (int s2 = 0; s2 < mdp.S; ++s2) base[s2] = spec.induced_kernel(h, s, a, s2);
                    // Move `shift` mass onto a random receiving state that can
                    // still absorb it.
                    std::vector<int> can_receive;
                    for (int s2 = 0; s2 < mdp.S; ++s2)
                        if (1.0 - base[s2] >= shift - 1e-12) can_receive.push_back(s2);
                    if (can_receive.empty())
                        throw std::runtime_error("inject_misspecification: row cannot absorb the perturbation");
                    int tgt = can_receive[rng.next_below(static_cast<int>(can_receive.size()))];
                    double headroom = 1.0 - base[tgt];
                    double factor =
                        headroom > 0.0 ? std::max(headroom - shift, 0.0) / headroom : 0.0;
                    double* p = out.row(h, s, a);
                    double sum = 0.0;
                    for (int s2 = 0; s2 < mdp.S; ++s2) {
                        if (headroom <= 0.0)
                            p[s2] = base[s2];  // shift is ~0, nothing to move
                        else
                            p[s2] = (s2 == tgt) ? base[s2] + std::min(shift, headroom)
                                                : base[s2] * factor;
                        sum += p[s2];
                    }
                    for (int s2 = 0; s2 < mdp.S; ++s2) p[s2] /= sum;
                }
        for (int s = 0; s < mdp.S; ++s)
            for (int a = 0; a < mdp.A; ++a) {
                double base = spec.induced_reward(0, s, a);
                double up = base + shift, down = base - shift;
                if (up <= 1.0)
                    out.reward(s, a) = up;
                else if (down >= 0.0)
                    out.reward(s, a) = down;
                else
                    throw std::runtime_error("inject_misspecification: reward cannot absorb the perturbation");
            }
        out.validate();
        return out;
    }

    // local_trap: verify the gate precondition against the spec-induced kernel,
    // then shift trap rows toward a self-loop by exactly delta_tv.
    for (int t : inj.trap_states)
        if (t < 0 || t >= mdp.S)
            throw std::invalid_argument("inject_misspecification: trap state out of range");
    if (inj.is_trap(mdp.s_init))
        throw std::invalid_argument("inject_misspecification: initial state cannot be a trap state");
    for (int h = 0; h < mdp.H; ++h)
        for (int s = 0; s < mdp.S; ++s) {
            if (inj.is_trap(s)) continue;
            for (int a = 0; a < mdp.A; ++a) {
                double into_trap = 0.0;
                for (int t : inj.trap_states) into_trap += mdp.row(h, s, a)[t];
                bool is_gate_row = (h == 0 && s == mdp.s_init);
                double allowance = is_gate_row ? inj.reach_prob : 0.0;
                if (into_trap > allowance + 1e-12)
                    throw std::runtime_error(
                        "inject_misspecification: trap region is not gated in the input "
                        "(apply gate_trap_region first)");
            }
        }

    const double delta = inj.delta_tv;
    for (int t : inj.trap_states) {
        for (int h = 0; h < mdp.H; ++h)
            for (int a = 0; a < mdp.A; ++a) {
                const double* base = mdp.row(h, t, a);
                double self = base[t];
                if (self + delta > 1.0 + 1e-12)
                    throw std::runtime_error("inject_misspecification: row cannot absorb the perturbation");
                double* p = out.row(h, t, a);
                double rest = 1.0 - self;
                double factor = rest > 0.0 ? std::max(rest - delta, 0.0) / rest : 0.0;
                double sum = 0.0;
                for (int s2 = 0; s2 < mdp.S; ++s2) {
                    p[s2] = (s2 == t) ? self + std::min(delta, rest) : base[s2] * factor;
                    sum += p[s2];
                }
                for (int s2 = 0; s2 < mdp.S; ++s2) p[s2] /= sum;
            }
        for (int a = 0; a < mdp.A; ++a) {
            // rewards shift by the largest feasible magnitude up to delta
            double base = mdp.reward(t, a);
            double headup = 1.0 - base, headdown = base;
            if (headup >= headdown)
                out.reward(t, a) = base + std::min(delta, headup);
            else
                out.reward(t, a) = base - std::min(delta, headdown);
        }
    }
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Assumption verification
// ---------------------------------------------------------------------------

// Pointwise misspecification of the approximator against the ground truth.
inline double xi_error(const TabularMdp& mdp, const LinearMdpSpec& spec, int h, int s, int a) {
    Vec induced(mdp.S);
    for (int s2 = 0; s2 < mdp.S; ++s2) induced[s2] = spec.induced_kernel(h, s, a, s2);
    return tv_distance(mdp.row(h, s, a), induced.data(), mdp.S);
}

inline double eta_error(const TabularMdp& mdp, const LinearMdpSpec& spec, int h, int s, int a) {
    return std::abs(mdp.reward(s, a) - spec.induced_reward(h, s, a));
}

struct LbmReport {
    int beta_max = 4;
    // Maximum over probe policies (and steps h) of E_{d_h^pi}[xi^beta]; index
    // beta-1. step_* is the per-step maximum, avg_* averages d over steps.
    std::vector<double> step_xi_moment;
    std::vector<double> step_eta_moment;
    std::vector<double> avg_xi_moment;
    std::vector<double> avg_eta_moment;
    double pointwise_max_xi = 0.0;
    double pointwise_max_eta = 0.0;
    int probes = 0;
};

// Exact policy-averaged misspecification moments over a probe set. The probe
// maximum is a lower bound on the supremum over all policies; constructions in
// this module guarantee the bound for every policy by design.
inline LbmReport verify_lbm_assumption(const TabularMdp& mdp, const LinearMdpSpec& spec,
                                       const std::vector<PolicyTable>& probes, int beta_max,
                                       bool include_uniform_policy = true) {
    if (beta_max < 1 || beta_max > 4)
        throw std::invalid_argument("verify_lbm_assumption: beta_max must be in [1,4]");
    if (probes.empty() && !include_uniform_policy)
        throw std::invalid_argument("verify_lbm_assumption: probe set is empty");

    const int S = mdp.S, A = mdp.A, H = mdp.H;
    std::vector<double> xi(static_cast<std::size_t>(H) * S * A);
    std::vector<double> eta(static_cast<std::size_t>(H) * S * A);
    LbmReport rep;
    rep.beta_max = beta_max;
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                std::size_t i = (static_cast<std::size_t>(h) * S + s) * A + a;
                xi[i] = xi_error(mdp, spec, h, s, a);
                eta[i] = eta_error(mdp, spec, h, s, a);
                rep.pointwise_max_xi = std::max(rep.pointwise_max_xi, xi[i]);
                rep.pointwise_max_eta = std::max(rep.pointwise_max_eta, eta[i]);
            }

    rep.step_xi_moment.assign(beta_max, 0.0);
    rep.step_eta_moment.assign(beta_max, 0.0);
    rep.avg_xi_moment.assign(beta_max, 0.0);
    rep.avg_eta_moment.assign(beta_max, 0.0);

    auto accumulate = [&](const std::vector<double>& d) {
        for (int b = 1; b <= beta_max; ++b) {
            double avg_xi = 0.0, avg_eta = 0.0;
            for (int h = 0; h < H; ++h) {
                double mx = 0.0, me = 0.0;
                for (std::size_t i = static_cast<std::size_t>(h) * S * A;
                     i < static_cast<std::size_t>(h + 1) * S * A; ++i) {
                    mx += d[i] * std::pow(xi[i], b);
                    me += d[i] * std::pow(eta[i], b);
                }
                rep.step_xi_moment[b - 1] = std::max(rep.step_xi_moment[b - 1], mx);
                rep.step_eta_moment[b - 1] = std::max(rep.step_eta_moment[b - 1], me);
                avg_xi += mx;
                avg_eta += me;
            }
            rep.avg_xi_moment[b - 1] = std::max(rep.avg_xi_moment[b - 1], avg_xi / H);
            rep.avg_eta_moment[b - 1] = std::max(rep.avg_eta_moment[b - 1], avg_eta / H);
        }
        ++rep.probes;
    };

    for (const auto& pol : probes) accumulate(occupancy_measure(mdp, pol));
    if (include_uniform_policy)
        accumulate(occupancy_measure_stochastic(mdp, uniform_stochastic_policy(H, S, A)));
    return rep;
}

// Documented probe set: the optimal policy, plus greedy policies of randomly
// reward-perturbed copies (the uniform-random policy is added by the verifier).
inline std::vector<PolicyTable> standard_probe_policies(const TabularMdp& mdp, int n_perturbed,
                                                        Rng& rng) {
    std::vector<PolicyTable> probes;
    probes.push_back(exact_optimal_values(mdp).greedy);
    for (int i = 0; i < n_perturbed; ++i) {
        TabularMdp copy = mdp;
        for (double& v : copy.r) v = std::clamp(v + 0.5 * (rng.next_double() - 0.5), 0.0, 1.0);
        probes.push_back(exact_optimal_values(copy).greedy);
    }
    return probes;
}

}  // namespace lbmrl
