#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lbmrl/agent.hpp"
#include "lbmrl/function_class.hpp"
#include "lbmrl/mdp.hpp"
#include "lbmrl/rng.hpp"

namespace lbmrl {

struct GeneralLsviConfig {
    double delta = 0.05;
    double zeta = 0.0;
    int K = 1;
    int H = 1;
    double c_prime = 1.0;   // absolute constant in the confidence radius
    double cover_t = 0.0;   // discretization scale T; 0 means default K*H
    double log_w = 0.0;     // bonus-class complexity surrogate log|W|
    bool subsample = false; // sensitivity-sampling hook

    double effective_t() const { return cover_t > 0.0 ? cover_t : static_cast<double>(K) * H; }

    void validate() const {
        if (delta <= 0.0 || delta >= 1.0)
            throw std::invalid_argument("GeneralLsviConfig: delta must be in (0,1)");
        if (zeta < 0.0 || zeta > 1.0)
            throw std::invalid_argument("GeneralLsviConfig: zeta must be in [0,1]");
        if (K < 1 || H < 1) throw std::invalid_argument("GeneralLsviConfig: K, H must be >= 1");
        if (c_prime <= 0.0) throw std::invalid_argument("GeneralLsviConfig: c_prime must be positive");
        if (effective_t() < 1.0) throw std::invalid_argument("GeneralLsviConfig: cover_T must be >= 1");
        if (log_w < 0.0) throw std::invalid_argument("GeneralLsviConfig: log_w must be >= 0");
    }
};

// Confidence radius beta(F, delta) = C' * sqrt(kH zeta^2 + H^2 (log(4T^2/delta)
// + 2 log N(F, 1/T) + log|W| + 1)). A finite class is its own cover, so
// N(F, 1/T) is the class size.
inline double radius_beta_general(int k, const GeneralLsviConfig& cfg, int class_size) {
    cfg.validate();
    if (k < 1) throw std::invalid_argument("radius_beta_general: k must be >= 1");
    if (class_size < 1) throw std::invalid_argument("radius_beta_general: empty class");
    double t = cfg.effective_t();
    double log_arg = 4.0 * t * t / cfg.delta;
    if (log_arg <= 0.0) throw std::invalid_argument("radius_beta_general: nonpositive log argument");
    double h2 = static_cast<double>(cfg.H) * cfg.H;
    double inner = static_cast<double>(k) * cfg.H * cfg.zeta * cfg.zeta +
                   h2 * (std::log(log_arg) + 2.0 * std::log(static_cast<double>(class_size)) +
                         cfg.log_w + 1.0);
    if (inner < 0.0) throw std::invalid_argument("radius_beta_general: negative radicand");
    return cfg.c_prime * std::sqrt(inner);
}

// Regression dataset point (explicit form used by the free functions; the
// agent aggregates identical points into counts).
struct RegressionPoint {
    int s = 0;
    int a = 0;
    double target = 0.0;
};

// argmin_f sum (f(s,a) - q)^2, lowest id on ties. Empty dataset gives id 0.
inline int empirical_minimizer(const FiniteFunctionClass& cls,
                               const std::vector<RegressionPoint>& data) {
    cls.validate();
    int best = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int id = 0; id < cls.size(); ++id) {
        double loss = 0.0;
        for (const auto& pt : data) {
            double diff = cls.value(id, pt.s, pt.a) - pt.target;
            loss += diff * diff;
        }
        if (loss < best_loss) {
            best_loss = loss;
            best = id;
        }
    }
    return best;
}

// Confidence region around the empirical minimizer under the dataset norm.
struct ConfidenceRegion {
    int center = 0;
    double radius = 0.0;
    std::vector<int> member_ids;
};

// Width of the region at a point: max minus min over members (equals the
// pairwise sup for a pointwise class).
inline double width_bonus(const ConfidenceRegion& region, const FiniteFunctionClass& cls, int s,
                          int a) {
    if (region.member_ids.empty())
        throw std::invalid_argument("width_bonus: empty confidence region");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int id : region.member_ids) {
        double v = cls.value(id, s, a);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

// State-action multiset with per-point weights (inverse keep probabilities
// after subsampling; all weights 1 without it).
struct WeightedStateActions {
    int S = 0;
    int A = 0;
    Vec weight;  // [s*A + a], total weight of occurrences

    double pair_norm_sq(const FiniteFunctionClass& cls, int f1, int f2) const {
        double sum = 0.0;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                double w = weight[static_cast<std::size_t>(s) * A + a];
                if (w == 0.0) continue;
                double diff = cls.value(f1, s, a) - cls.value(f2, s, a);
                sum += w * diff * diff;
            }
        return sum;
    }
};

// Sensitivity sampling over the collected state-actions. Pass-through by
// default: the confidence region over the full dataset is the exact object and
// subsampling only trades accuracy for speed. When enabled, each occurrence is
// kept with probability min(1, oversample * sensitivity) and reweighted by the
// inverse, where sensitivity(z) = max_pairs (f1-f2)^2(z) / max(||f1-f2||_Z^2, 1).
inline WeightedStateActions sensitivity_sample(const FiniteFunctionClass& cls,
                                               const WeightedStateActions& z, bool enabled,
                                               Rng& rng, double oversample = 100.0) {
    if (!enabled) return z;
    const int M = cls.size();
    WeightedStateActions out;
    out.S = z.S;
    out.A = z.A;
    out.weight.assign(z.weight.size(), 0.0);

    std::vector<double> pair_norms;
    pair_norms.reserve(static_cast<std::size_t>(M) * M);
    for (int f1 = 0; f1 < M; ++f1)
        for (int f2 = 0; f2 < M; ++f2)
            pair_norms.push_back(f1 < f2 ? std::max(z.pair_norm_sq(cls, f1, f2), 1.0) : 0.0);

    for (int s = 0; s < z.S; ++s)
        for (int a = 0; a < z.A; ++a) {
            std::size_t i = static_cast<std::size_t>(s) * z.A + a;
            double count = z.weight[i];
            if (count == 0.0) continue;
            double sens = 0.0;
            for (int f1 = 0; f1 < M; ++f1)
                for (int f2 = f1 + 1; f2 < M; ++f2) {
                    double diff = cls.value(f1, s, a) - cls.value(f2, s, a);
                    sens = std::max(sens, diff * diff / pair_norms[static_cast<std::size_t>(f1) * M + f2]);
                }
            double keep_p = std::min(1.0, oversample * sens);
            if (keep_p <= 0.0) continue;
            int kept = 0;
            for (int c = 0; c < static_cast<int>(count); ++c)
                if (rng.next_double() < keep_p) ++kept;
            out.weight[i] = kept / keep_p;
        }
    return out;
}

// Robust-LSVI over a finite function class. The dataset for every step pools
// all (episode, step) pairs; regression targets are rebuilt against the
// current backward-pass values. Exhaustive scans realize the argmin and
// width oracles exactly.
class GeneralLsviAgent : public EpisodeAgent {
public:
    GeneralLsviAgent(FiniteFunctionClass cls, const TabularMdp& env_shape, GeneralLsviConfig cfg,
                     std::uint64_t subsample_seed = 0)
        : cls_(std::move(cls)), cfg_(cfg), S_(env_shape.S), A_(env_shape.A), H_(env_shape.H),
          s_init_(env_shape.s_init), subsample_rng_(subsample_seed) {
        cfg_.validate();
        cls_.validate();
        if (cls_.S != S_ || cls_.A != A_ || cls_.H != H_)
            throw std::invalid_argument("GeneralLsviAgent: class shape does not match the environment");
        triple_count_.assign(static_cast<std::size_t>(S_) * A_ * S_, 0.0);
        reward_of_.assign(static_cast<std::size_t>(S_) * A_,
                          std::numeric_limits<double>::quiet_NaN());
        z_.S = S_;
        z_.A = A_;
        z_.weight.assign(static_cast<std::size_t>(S_) * A_, 0.0);
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
            std::size_t sa = static_cast<std::size_t>(ep.states[h]) * A_ + ep.actions[h];
            triple_count_[sa * S_ + ep.states[h + 1]] += 1.0;
            z_.weight[sa] += 1.0;
            reward_of_[sa] = ep.rewards[h];
        }
        ++k_;
    }

    int episodes_seen() const override { return k_; }

    double q_value(int h, int s, int a) const { return q_[(static_cast<std::size_t>(h) * S_ + s) * A_ + a]; }
    const FiniteFunctionClass& function_class() const { return cls_; }
    const ConfidenceRegion& region_at(int h) const { return regions_[h]; }

private:
    // Loss of member id against targets r(s,a) + V_next(s') with the pooled
    // triple counts.
    double pooled_loss(int id, const Vec& v_next) const {
        double loss = 0.0;
        for (int s = 0; s < S_; ++s)
            for (int a = 0; a < A_; ++a) {
                std::size_t sa = static_cast<std::size_t>(s) * A_ + a;
                double fval = cls_.value(id, s, a);
                for (int s2 = 0; s2 < S_; ++s2) {
                    double count = triple_count_[sa * S_ + s2];
                    if (count == 0.0) continue;
                    double diff = fval - (reward_of_[sa] + v_next[s2]);
                    loss += count * diff * diff;
                }
            }
        return loss;
    }

    void backward_pass() {
        double beta = radius_beta_general(k_ + 1, cfg_, cls_.size());
        double beta_sq = beta * beta;
        WeightedStateActions z_hat = sensitivity_sample(cls_, z_, cfg_.subsample, subsample_rng_);
        regions_.assign(H_, ConfidenceRegion{});

        std::fill(v_.begin(), v_.end(), 0.0);
        for (int h = H_ - 1; h >= 0; --h) {
            Vec v_next(v_.begin() + static_cast<std::size_t>(h + 1) * S_,
                       v_.begin() + static_cast<std::size_t>(h + 2) * S_);

            int center = 0;
            double best_loss = std::numeric_limits<double>::infinity();
            for (int id = 0; id < cls_.size(); ++id) {
                double loss = pooled_loss(id, v_next);
                if (loss < best_loss) {
                    best_loss = loss;
                    center = id;
                }
            }

            ConfidenceRegion& region = regions_[h];
            region.center = center;
            region.radius = beta;
            region.member_ids.clear();
            for (int id = 0; id < cls_.size(); ++id)
                if (z_hat.pair_norm_sq(cls_, id, center) <= beta_sq) region.member_ids.push_back(id);

            for (int s = 0; s < S_; ++s) {
                double best = -1.0;
                int best_a = 0;
                for (int a = 0; a < A_; ++a) {
                    double bonus = width_bonus(region, cls_, s, a);
                    double q = std::clamp(cls_.value(center, s, a) + bonus, 0.0,
                                          static_cast<double>(H_));
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

    FiniteFunctionClass cls_;
    GeneralLsviConfig cfg_;
    int S_, A_, H_, s_init_;
    int k_ = 0;
    Rng subsample_rng_;

    // Pooled over all (episode, step) pairs; rewards are deterministic so one
    // observed value per (s,a) suffices.
    Vec triple_count_;  // [(s*A + a)*S + s2]
    Vec reward_of_;     // [s*A + a], NaN until first visit
    WeightedStateActions z_;

    std::vector<ConfidenceRegion> regions_;
    Vec q_;
    Vec v_;
    PolicyTable policy_;
};

}  // namespace lbmrl
