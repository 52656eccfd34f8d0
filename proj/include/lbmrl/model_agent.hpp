#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lbmrl/agent.hpp"
#include "lbmrl/mdp.hpp"
#include "lbmrl/model_class.hpp"

namespace lbmrl {

struct VtrConfig {
    double delta = 0.05;
    double zeta = 0.0;
    int K = 1;
    int H = 1;
    double c_prime = 1.0;
    double alpha_cover = -1.0;  // discretization alpha; negative means default 1/(K*H)

    double effective_alpha() const {
        return alpha_cover >= 0.0 ? alpha_cover : 1.0 / (static_cast<double>(K) * H);
    }

    void validate() const {
        if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("VtrConfig: delta must be in (0,1)");
        if (zeta < 0.0 || zeta > 1.0) throw std::invalid_argument("VtrConfig: zeta must be in [0,1]");
        if (K < 1 || H < 1) throw std::invalid_argument("VtrConfig: K, H must be >= 1");
        if (c_prime <= 0.0) throw std::invalid_argument("VtrConfig: c_prime must be positive");
    }
};

// beta_k = 3 sqrt(kH) zeta + 5 sqrt(C' H^2 log(4KH N(F,alpha)/delta)) + 4 sqrt(alpha k H^2).
// A finite class is its own alpha-cover, so N(F, alpha) is the class size. The
// confidence set compares the squared distance d_k against beta_k^2.
inline double radius_beta_vtr(int k, const VtrConfig& cfg, int class_size) {
    cfg.validate();
    if (k < 1) throw std::invalid_argument("radius_beta_vtr: k must be >= 1");
    if (class_size < 1) throw std::invalid_argument("radius_beta_vtr: empty class");
    double log_arg = 4.0 * cfg.K * cfg.H * static_cast<double>(class_size) / cfg.delta;
    if (log_arg <= 0.0) throw std::invalid_argument("radius_beta_vtr: nonpositive log argument");
    double stat = cfg.c_prime * cfg.H * cfg.H * std::log(log_arg);
    if (stat < 0.0) throw std::invalid_argument("radius_beta_vtr: log argument below 1");
    double kh = static_cast<double>(k) * cfg.H;
    return 3.0 * std::sqrt(kh) * cfg.zeta + 5.0 * std::sqrt(stat) +
           4.0 * std::sqrt(cfg.effective_alpha() * k * cfg.H * cfg.H);
}

// Past trajectories together with the value tables that were current when each
// was collected. The regression targets reference historical values, so they
// are stored rather than recomputed.
struct VtrHistory {
    int S = 0;
    int A = 0;
    int H = 0;
    struct Episode {
        std::vector<int> states;   // s_1 .. s_{H+1}
        std::vector<int> actions;  // a_1 .. a_H
        Vec values;                // V_{h+1}(s) for h = 1..H, laid out [h * S + s]
    };
    std::vector<Episode> episodes;

    double value_at(const Episode& ep, int h, int s) const {
        return ep.values[static_cast<std::size_t>(h) * S + s];
    }
};

namespace detail {
inline double expected_value(const double* row, const Vec& values, std::size_t offset, int S) {
    double v = 0.0;
    for (int s2 = 0; s2 < S; ++s2) v += row[s2] * values[offset + s2];
    return v;
}
}  // namespace detail

// Value-targeted regression loss of a kernel against the full history.
inline double vtr_loss(const std::vector<double>& kernel, const TabularMdp& shape,
                       const VtrHistory& hist) {
    if (kernel.size() != static_cast<std::size_t>(shape.H) * shape.S * shape.A * shape.S)
        throw std::invalid_argument("vtr_loss: kernel shape mismatch");
    double loss = 0.0;
    for (const auto& ep : hist.episodes)
        for (int h = 0; h < shape.H; ++h) {
            const double* row = kernel.data() + shape.row_offset(h, ep.states[h], ep.actions[h]);
            double pred = detail::expected_value(row, ep.values, static_cast<std::size_t>(h) * shape.S,
                                                 shape.S);
            double realized = ep.values[static_cast<std::size_t>(h) * shape.S + ep.states[h + 1]];
            double diff = pred - realized;
            loss += diff * diff;
        }
    return loss;
}

// argmin over the class of the regression loss, lowest id on ties.
inline int vtr_minimizer(const FiniteModelClass& cls, const TabularMdp& shape,
                         const VtrHistory& hist) {
    cls.validate();
    int best = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int id = 0; id < cls.size(); ++id) {
        double loss = vtr_loss(cls.members[id], shape, hist);
        if (loss < best_loss) {
            best_loss = loss;
            best = id;
        }
    }
    return best;
}

// Squared model distance d_k under the historical value functions.
inline double model_distance(const std::vector<double>& kernel_a, const std::vector<double>& kernel_b,
                             const TabularMdp& shape, const VtrHistory& hist) {
    double sum = 0.0;
    for (const auto& ep : hist.episodes)
        for (int h = 0; h < shape.H; ++h) {
            std::size_t off = shape.row_offset(h, ep.states[h], ep.actions[h]);
            std::size_t voff = static_cast<std::size_t>(h) * shape.S;
            double pa = detail::expected_value(kernel_a.data() + off, ep.values, voff, shape.S);
            double pb = detail::expected_value(kernel_b.data() + off, ep.values, voff, shape.S);
            double diff = pa - pb;
            sum += diff * diff;
        }
    return sum;
}

struct OptimisticModelChoice {
    int id = 0;
    DpSolution dp;
    std::vector<int> candidate_ids;  // members of the confidence set B_k
};

// Confidence-set membership by squared distance, then optimistic selection by
// the DP-optimal initial value, lowest id on ties.
inline OptimisticModelChoice optimistic_model(const FiniteModelClass& cls, const TabularMdp& shape,
                                              const VtrHistory& hist, double beta_k, int center_id) {
    OptimisticModelChoice choice;
    double threshold = beta_k * beta_k;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int id = 0; id < cls.size(); ++id) {
        if (model_distance(cls.members[id], cls.members[center_id], shape, hist) > threshold)
            continue;
        choice.candidate_ids.push_back(id);
        DpSolution sol = solve_dp(shape, cls.members[id]);
        double v1 = sol.v_at(0, shape.s_init, shape.S);
        if (v1 > best_value + 1e-15) {
            best_value = v1;
            choice.id = id;
            choice.dp = std::move(sol);
        }
    }
    return choice;
}

// Robust-UCRL-VTR over a finite model class. Regression losses and pairwise
// distances are extended incrementally by the H new terms each episode;
// vtr_loss / model_distance above recompute from scratch and serve as the
// verification oracle.
class VtrAgent : public EpisodeAgent {
public:
    VtrAgent(FiniteModelClass cls, const TabularMdp& env_shape, VtrConfig cfg)
        : cls_(std::move(cls)), shape_(env_shape), cfg_(cfg) {
        cfg_.validate();
        cls_.validate();
        if (cls_.S != shape_.S || cls_.A != shape_.A || cls_.H != shape_.H)
            throw std::invalid_argument("VtrAgent: class shape does not match the environment");
        hist_.S = shape_.S;
        hist_.A = shape_.A;
        hist_.H = shape_.H;
        const int n = cls_.size();
        loss_.assign(n, 0.0);
        pair_dist_.assign(static_cast<std::size_t>(n) * n, 0.0);
    }

    PolicyTable plan() override {
        int n = cls_.size();
        int center = 0;
        double best_loss = std::numeric_limits<double>::infinity();
        for (int id = 0; id < n; ++id)
            if (loss_[id] < best_loss) {
                best_loss = loss_[id];
                center = id;
            }
        center_ = center;

        double beta = radius_beta_vtr(k_ + 1, cfg_, n);
        double threshold = beta * beta;
        double best_value = -std::numeric_limits<double>::infinity();
        int chosen = center;
        DpSolution chosen_dp;
        candidate_count_ = 0;
        for (int id = 0; id < n; ++id) {
            if (pair_dist_[static_cast<std::size_t>(id) * n + center] > threshold) continue;
            ++candidate_count_;
            DpSolution sol = solve_dp(shape_, cls_.members[id]);
            double v1 = sol.v_at(0, shape_.s_init, shape_.S);
            if (v1 > best_value + 1e-15) {
                best_value = v1;
                chosen = id;
                chosen_dp = std::move(sol);
            }
        }
        chosen_id_ = chosen;
        dp_ = std::move(chosen_dp);
        return dp_.greedy;
    }

    double planned_value() const override { return dp_.v_at(0, shape_.s_init, shape_.S); }

    void observe(const EpisodeLog& ep) override {
        if (dp_.V.empty())
            throw std::logic_error("VtrAgent::observe: plan() must run before observe()");
        // Record the episode with the value tables of the model it was planned
        // under, then extend every running sum with the H new terms.
        VtrHistory::Episode rec;
        rec.states = ep.states;
        rec.actions = ep.actions;
        rec.values.assign(static_cast<std::size_t>(shape_.H) * shape_.S, 0.0);
        for (int h = 0; h < shape_.H; ++h)
            for (int s = 0; s < shape_.S; ++s)
                rec.values[static_cast<std::size_t>(h) * shape_.S + s] =
                    dp_.v_at(h + 1, s, shape_.S);

        const int n = cls_.size();
        Vec preds(n);
        for (int h = 0; h < shape_.H; ++h) {
            std::size_t off = shape_.row_offset(h, rec.states[h], rec.actions[h]);
            std::size_t voff = static_cast<std::size_t>(h) * shape_.S;
            for (int id = 0; id < n; ++id)
                preds[id] = detail::expected_value(cls_.members[id].data() + off, rec.values, voff,
                                                   shape_.S);
            double realized = rec.values[voff + rec.states[h + 1]];
            for (int id = 0; id < n; ++id) {
                double diff = preds[id] - realized;
                loss_[id] += diff * diff;
            }
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    double diff = preds[i] - preds[j];
                    double sq = diff * diff;
                    pair_dist_[static_cast<std::size_t>(i) * n + j] += sq;
                    pair_dist_[static_cast<std::size_t>(j) * n + i] += sq;
                }
        }
        hist_.episodes.push_back(std::move(rec));
        ++k_;
    }

    int episodes_seen() const override { return k_; }

    const VtrHistory& history() const { return hist_; }
    const FiniteModelClass& model_class() const { return cls_; }
    int last_center() const { return center_; }
    int last_chosen() const { return chosen_id_; }
    int last_candidate_count() const { return candidate_count_; }
    double running_loss(int id) const { return loss_[id]; }
    double running_distance(int i, int j) const {
        return pair_dist_[static_cast<std::size_t>(i) * cls_.size() + j];
    }

private:
    FiniteModelClass cls_;
    TabularMdp shape_;  // provides layout, rewards, and s_init; P is not consulted
    VtrConfig cfg_;
    VtrHistory hist_;
    int k_ = 0;

    Vec loss_;       // running regression loss per member
    Vec pair_dist_;  // running pairwise squared distances

    int center_ = 0;
    int chosen_id_ = 0;
    int candidate_count_ = 0;
    DpSolution dp_;
};

}  // namespace lbmrl
