#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "lbmrl/agent.hpp"
#include "lbmrl/linalg.hpp"
#include "lbmrl/linear_mdp.hpp"
#include "lbmrl/mdp.hpp"

namespace lbmrl {

struct LinearLsviConfig {
    double c_beta = 1.0;
    double lambda = 1.0;
    double delta = 0.05;
    double zeta = 0.0;
    int K = 1;
    int H = 1;
    int d = 1;

    void validate() const {
        if (c_beta <= 0.0) throw std::invalid_argument("LinearLsviConfig: c_beta must be positive");
        if (lambda <= 0.0) throw std::invalid_argument("LinearLsviConfig: lambda must be positive");
        if (delta <= 0.0 || delta >= 1.0)
            throw std::invalid_argument("LinearLsviConfig: delta must be in (0,1)");
        if (zeta < 0.0 || zeta > 1.0)
            throw std::invalid_argument("LinearLsviConfig: zeta must be in [0,1]");
        if (K < 1 || H < 1 || d < 1)
            throw std::invalid_argument("LinearLsviConfig: K, H, d must be >= 1");
    }
};

// Bonus schedule beta_k = c_beta * (4*sqrt(k d)*zeta + sqrt((lambda+1) d^2 log(4dKH/delta))) * H.
// Constant in k when zeta = 0; the misspecification term doubles when k quadruples.
inline double bonus_beta_linear(int k, const LinearLsviConfig& cfg) {
    cfg.validate();
    if (k < 1) throw std::invalid_argument("bonus_beta_linear: k must be >= 1");
    double log_arg = 4.0 * cfg.d * cfg.K * cfg.H / cfg.delta;
    if (log_arg <= 0.0) throw std::invalid_argument("bonus_beta_linear: nonpositive log argument");
    double stat = (cfg.lambda + 1.0) * cfg.d * cfg.d * std::log(log_arg);
    if (stat < 0.0) throw std::invalid_argument("bonus_beta_linear: log argument below 1");
    double bias = 4.0 * std::sqrt(static_cast<double>(k) * cfg.d) * cfg.zeta;
    return cfg.c_beta * (bias + std::sqrt(stat)) * cfg.H;
}

// Robust-LSVI with linear features. Works against the feature map only; the
// true kernel is never consulted. Gram inverses are maintained by rank-1
// updates, regression targets are rebuilt each episode because the value
// estimates move.
class LinearLsviAgent : public EpisodeAgent {
public:
    LinearLsviAgent(const LinearMdpSpec& spec, LinearLsviConfig cfg, int s_init)
        : spec_(spec), cfg_(cfg), S_(spec.S), A_(spec.A), H_(spec.H), d_(spec.d), s_init_(s_init) {
        cfg_.validate();
        if (s_init_ < 0 || s_init_ >= S_)
            throw std::invalid_argument("LinearLsviAgent: s_init out of range");
        if (cfg_.H != H_ || cfg_.d != d_)
            throw std::invalid_argument("LinearLsviAgent: config H/d must match the feature map");
        lambda_inv_.assign(H_, Mat(d_, 1.0 / cfg_.lambda));
        reward_sum_.assign(H_, Vec(d_, 0.0));
        next_state_sum_.assign(static_cast<std::size_t>(H_) * S_, Vec(d_, 0.0));
        q_.assign(static_cast<std::size_t>(H_) * S_ * A_, 0.0);
        v_.assign(static_cast<std::size_t>(H_ + 1) * S_, 0.0);
        policy_ = PolicyTable(H_, S_);
    }

    PolicyTable plan() override {
        backward_pass();
        return policy_;
    }

    double planned_value() const override { return v_[s_init_]; }

    void observe(const EpisodeLog& ep) override {
        for (int h = 0; h < H_; ++h) {
            Vec phi = spec_.feature_vec(ep.states[h], ep.actions[h]);
            sherman_morrison_update(lambda_inv_[h], phi);
            for (int j = 0; j < d_; ++j) {
                reward_sum_[h][j] += phi[j] * ep.rewards[h];
                next_state_sum_[static_cast<std::size_t>(h) * S_ + ep.states[h + 1]][j] += phi[j];
            }
        }
        transitions_.push_back(ep);
        ++k_;
    }

    int episodes_seen() const override { return k_; }

    // ---- inspection surface used by harness and tests ----

    double q_value(int h, int s, int a) const { return q_[(static_cast<std::size_t>(h) * S_ + s) * A_ + a]; }
    double v_value(int h, int s) const { return v_[static_cast<std::size_t>(h) * S_ + s]; }
    const Mat& gram_inverse(int h) const { return lambda_inv_[h]; }
    const std::vector<EpisodeLog>& transitions() const { return transitions_; }
    const LinearLsviConfig& config() const { return cfg_; }

    // Gram matrix rebuilt from the raw transitions: lambda*I + sum phi phi^T.
    Mat gram_from_scratch(int h) const {
        Mat g(d_, cfg_.lambda);
        for (const auto& ep : transitions_) {
            Vec phi = spec_.feature_vec(ep.states[h], ep.actions[h]);
            for (int i = 0; i < d_; ++i)
                for (int j = 0; j < d_; ++j) g.at(i, j) += phi[i] * phi[j];
        }
        return g;
    }

    // Exact ridge solution for step h against targets r + V_next(s'). V_next is
    // indexed by state.
    Vec ridge_weights(int h, const Vec& v_next) const {
        if (static_cast<int>(v_next.size()) != S_)
            throw std::invalid_argument("ridge_weights: V_next must have one entry per state");
        Vec b = reward_sum_[h];
        for (int s2 = 0; s2 < S_; ++s2) {
            const Vec& g = next_state_sum_[static_cast<std::size_t>(h) * S_ + s2];
            for (int j = 0; j < d_; ++j) b[j] += g[j] * v_next[s2];
        }
        return mat_vec(lambda_inv_[h], b);
    }

private:
    void backward_pass() {
        double beta = bonus_beta_linear(k_ + 1, cfg_);
        std::fill(v_.begin(), v_.end(), 0.0);
        for (int h = H_ - 1; h >= 0; --h) {
            Vec v_next(v_.begin() + static_cast<std::size_t>(h + 1) * S_,
                       v_.begin() + static_cast<std::size_t>(h + 2) * S_);
            Vec w = ridge_weights(h, v_next);
            for (int s = 0; s < S_; ++s) {
                double best = -1.0;
                int best_a = 0;
                for (int a = 0; a < A_; ++a) {
                    Vec phi = spec_.feature_vec(s, a);
                    double width = std::sqrt(std::max(quad_form(lambda_inv_[h], phi), 0.0));
                    double raw = dot(w, phi) + beta * width;
                    double q = std::clamp(raw, 0.0, static_cast<double>(H_));
                    q_[(static_cast<std::size_t>(h) * S_ + s) * A_ + a] = q;
                    if (q > best) {
                        best = q;
                        best_a = a;
                    }
                }
                v_[static_cast<std::size_t>(h) * S_ + s] = best;
                policy_.at(h, s) = best_a;
            }
        }
    }

    LinearMdpSpec spec_;
    LinearLsviConfig cfg_;
    int S_, A_, H_, d_;
    int s_init_ = 0;
    int k_ = 0;

    std::vector<Mat> lambda_inv_;          // per step h
    std::vector<Vec> reward_sum_;          // per h: sum phi * r
    std::vector<Vec> next_state_sum_;      // per (h, s'): sum of phi over visits landing in s'
    std::vector<EpisodeLog> transitions_;  // raw data, kept for verification
    std::vector<double> q_;
    std::vector<double> v_;
    PolicyTable policy_;
};

}  // namespace lbmrl
