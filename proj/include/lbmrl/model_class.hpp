#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lbmrl/mdp.hpp"
#include "lbmrl/rng.hpp"

namespace lbmrl {

// Enumerable set of candidate transition kernels sharing the environment's
// shape; rewards are assumed known and shared.
struct FiniteModelClass {
    int S = 0;
    int A = 0;
    int H = 0;
    std::vector<std::vector<double>> members;  // each shaped like TabularMdp::P

    int size() const { return static_cast<int>(members.size()); }

    const double* row(int id, int h, int s, int a) const {
        return members[id].data() + ((static_cast<std::size_t>(h) * S + s) * A + a) * S;
    }

    void validate() const {
        if (S < 1 || A < 1 || H < 1)
            throw std::invalid_argument("FiniteModelClass: dimensions must be >= 1");
        if (members.empty()) throw std::invalid_argument("FiniteModelClass: empty class");
        for (const auto& kernel : members) {
            if (kernel.size() != static_cast<std::size_t>(H) * S * A * S)
                throw std::invalid_argument("FiniteModelClass: member has wrong size");
            for (std::size_t off = 0; off < kernel.size(); off += S) {
                double sum = 0.0;
                for (int s2 = 0; s2 < S; ++s2) {
                    if (kernel[off + s2] < 0.0)
                        throw std::invalid_argument("FiniteModelClass: negative probability");
                    sum += kernel[off + s2];
                }
                if (std::abs(sum - 1.0) > 1e-12)
                    throw std::invalid_argument("FiniteModelClass: row does not sum to 1");
            }
        }
    }
};

// Shifts every row of a kernel by TV magnitude tv toward a random receiving
// state. Used to populate model classes around (or away from) the truth.
inline std::vector<double> perturb_kernel(const TabularMdp& shape, const std::vector<double>& kernel,
                                          double tv, Rng& rng) {
    std::vector<double> out = kernel;
    for (int h = 0; h < shape.H; ++h)
        for (int s = 0; s < shape.S; ++s)
            for (int a = 0; a < shape.A; ++a) {
                double* p = out.data() + shape.row_offset(h, s, a);
                std::vector<int> can_receive;
                for (int s2 = 0; s2 < shape.S; ++s2)
                    if (1.0 - p[s2] >= tv - 1e-12) can_receive.push_back(s2);
                if (can_receive.empty()) continue;
                int tgt = can_receive[rng.next_below(static_cast<int>(can_receive.size()))];
                double headroom = 1.0 - p[tgt];
                if (headroom <= 0.0) continue;
                double factor = std::max(headroom - tv, 0.0) / headroom;
                double sum = 0.0;
                for (int s2 = 0; s2 < shape.S; ++s2) {
                    p[s2] = (s2 == tgt) ? p[s2] + std::min(tv, headroom) : p[s2] * factor;
                    sum += p[s2];
                }
                for (int s2 = 0; s2 < shape.S; ++s2) p[s2] /= sum;
            }
    return out;
}

// Experiment helper. include_truth=true: {truth} + (n-1) perturbed copies.
// include_truth=false: the first member is instead a near-truth approximator
// whose pointwise TV error fbar_tv keeps |PV - P_truth V| <= fbar_tv * H for
// any V in [0,H], exercising the best-approximator regime.
inline FiniteModelClass make_model_class(const TabularMdp& mdp, int n_members, double tv_scale,
                                         bool include_truth, double fbar_tv, Rng& rng) {
    if (n_members < 1) throw std::invalid_argument("make_model_class: need at least one member");
    mdp.validate();
    FiniteModelClass cls;
    cls.S = mdp.S;
    cls.A = mdp.A;
    cls.H = mdp.H;
    if (include_truth)
        cls.members.push_back(mdp.P);
    else
        cls.members.push_back(perturb_kernel(mdp, mdp.P, fbar_tv, rng));
    for (int i = 1; i < n_members; ++i) {
        double tv = tv_scale * (0.25 + 0.75 * rng.next_double());
        cls.members.push_back(perturb_kernel(mdp, mdp.P, tv, rng));
    }
    cls.validate();
    return cls;
}

}  // namespace lbmrl
