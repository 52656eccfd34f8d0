#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lbmrl/function_class.hpp"
#include "lbmrl/model_class.hpp"

namespace lbmrl {

// A finite class restricted to a finite list of evaluation points: everything
// the eluder computations need is the value matrix.
struct EluderInstance {
    int n_members = 0;
    int n_points = 0;
    Vec vals;  // [member * n_points + point]

    double value(int f, int x) const { return vals[static_cast<std::size_t>(f) * n_points + x]; }

    void validate() const {
        if (n_members < 1 || n_points < 1)
            throw std::invalid_argument("EluderInstance: need at least one member and one point");
        if (vals.size() != static_cast<std::size_t>(n_members) * n_points)
            throw std::invalid_argument("EluderInstance: value matrix has wrong size");
    }
};

// Restriction of a function class to chosen state-action points (flat s*A+a).
inline EluderInstance restrict_class(const FiniteFunctionClass& cls, const std::vector<int>& points) {
    cls.validate();
    if (points.empty()) throw std::invalid_argument("restrict_class: empty domain");
    EluderInstance inst;
    inst.n_members = cls.size();
    inst.n_points = static_cast<int>(points.size());
    inst.vals.resize(static_cast<std::size_t>(inst.n_members) * inst.n_points);
    for (int f = 0; f < inst.n_members; ++f)
        for (int x = 0; x < inst.n_points; ++x) {
            int sa = points[x];
            if (sa < 0 || sa >= cls.S * cls.A)
                throw std::invalid_argument("restrict_class: point out of range");
            inst.vals[static_cast<std::size_t>(f) * inst.n_points + x] = cls.members[f][sa];
        }
    return inst;
}

// Lifting of a model class to functions on (h, s, a, V): member value is the
// expected next-state value P V(s,a). Points are the cross product of the
// given (h,s,a) triples with the given value tables.
inline EluderInstance lift_model_class(const FiniteModelClass& cls,
                                       const std::vector<std::array<int, 3>>& hsa_points,
                                       const std::vector<Vec>& value_tables) {
    cls.validate();
    if (hsa_points.empty() || value_tables.empty())
        throw std::invalid_argument("lift_model_class: empty domain");
    EluderInstance inst;
    inst.n_members = cls.size();
    inst.n_points = static_cast<int>(hsa_points.size() * value_tables.size());
    inst.vals.resize(static_cast<std::size_t>(inst.n_members) * inst.n_points);
    for (int f = 0; f < inst.n_members; ++f) {
        int x = 0;
        for (const auto& hsa : hsa_points)
            for (const auto& vt : value_tables) {
                if (static_cast<int>(vt.size()) != cls.S)
                    throw std::invalid_argument("lift_model_class: value table has wrong size");
                const double* row = cls.row(f, hsa[0], hsa[1], hsa[2]);
                double v = 0.0;
                for (int s2 = 0; s2 < cls.S; ++s2) v += row[s2] * vt[s2];
                inst.vals[static_cast<std::size_t>(f) * inst.n_points + x] = v;
                ++x;
            }
    }
    return inst;
}

// (s,a) is eps-independent of the sequence Z iff some pair f, f' has
// ||f - f'||_Z <= eps while |f(s,a) - f'(s,a)| > eps. Exhaustive pair scan;
// comparisons are squared to avoid square roots.
inline bool is_independent(const EluderInstance& inst, int point, const std::vector<int>& z,
                           double eps) {
    inst.validate();
    if (eps < 0.0) throw std::invalid_argument("is_independent: eps must be >= 0");
    const double eps_sq = eps * eps;
    for (int f1 = 0; f1 < inst.n_members; ++f1)
        for (int f2 = f1 + 1; f2 < inst.n_members; ++f2) {
            double gap = std::abs(inst.value(f1, point) - inst.value(f2, point));
            if (!(gap > eps)) continue;
            double norm_sq = 0.0;
            for (int x : z) {
                double d = inst.value(f1, x) - inst.value(f2, x);
                norm_sq += d * d;
            }
            if (norm_sq <= eps_sq) return true;
        }
    return false;
}

enum class EluderMode { exhaustive, greedy };

struct EluderResult {
    int dimension = 0;
    bool exact = false;  // greedy mode reports a certified lower bound
};

namespace detail {

// Candidate thresholds for the "for some eps' >= eps" quantifier: eps itself,
// every pairwise gap, and every pairwise prefix-set norm, each nudged up so
// the <= comparisons at the breakpoints are robust to summation order. The
// independence predicate only changes at these values.
inline std::vector<double> eluder_candidates(const EluderInstance& inst, double eps,
                                             const std::vector<double>* subset_norms_sq) {
    std::vector<double> cand;
    cand.push_back(eps);
    for (int f1 = 0; f1 < inst.n_members; ++f1)
        for (int f2 = f1 + 1; f2 < inst.n_members; ++f2)
            for (int x = 0; x < inst.n_points; ++x) {
                double g = std::abs(inst.value(f1, x) - inst.value(f2, x));
                if (g >= eps) cand.push_back(g);
            }
    if (subset_norms_sq)
        for (double nsq : *subset_norms_sq) {
            double n = std::sqrt(nsq);
            if (n >= eps) cand.push_back(n);
        }
    for (double& c : cand) c *= 1.0 + 1e-12;
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    return cand;
}

}  // namespace detail

// Exact longest-sequence length via reachability over point subsets: a set is
// orderable iff some element is independent of the rest and the rest is
// orderable. Exponential in the domain size, hence the size guard.
inline EluderResult eluder_dimension_exhaustive(const EluderInstance& inst, double eps) {
    inst.validate();
    if (inst.n_points > 12)
        throw std::invalid_argument(
            "eluder_dimension: exhaustive mode is limited to 12 domain points; use greedy mode");
    const int P = inst.n_points;
    const int n_pairs = inst.n_members * (inst.n_members - 1) / 2;
    const std::uint32_t n_subsets = 1u << P;

    // gap[p][x] and incremental subset norms per pair.
    std::vector<double> gap(static_cast<std::size_t>(std::max(n_pairs, 1)) * P, 0.0);
    {
        int p = 0;
        for (int f1 = 0; f1 < inst.n_members; ++f1)
            for (int f2 = f1 + 1; f2 < inst.n_members; ++f2, ++p)
                for (int x = 0; x < P; ++x)
                    gap[static_cast<std::size_t>(p) * P + x] =
                        std::abs(inst.value(f1, x) - inst.value(f2, x));
    }
    std::vector<double> norm_sq(static_cast<std::size_t>(std::max(n_pairs, 1)) * n_subsets, 0.0);
    for (int p = 0; p < n_pairs; ++p)
        for (std::uint32_t sset = 1; sset < n_subsets; ++sset) {
            int low = __builtin_ctz(sset);
            double g = gap[static_cast<std::size_t>(p) * P + low];
            norm_sq[static_cast<std::size_t>(p) * n_subsets + sset] =
                norm_sq[static_cast<std::size_t>(p) * n_subsets + (sset & (sset - 1))] + g * g;
        }

    std::vector<double> all_norms;
    all_norms.reserve(norm_sq.size());
    for (double v : norm_sq) all_norms.push_back(v);
    auto candidates = detail::eluder_candidates(inst, eps, &all_norms);

    EluderResult result;
    result.exact = true;
    std::vector<std::uint32_t> indep_mask(n_subsets);
    std::vector<char> reachable(n_subsets, 0);
    std::vector<std::uint32_t> gap_mask(std::max(n_pairs, 1));

    for (double eps_prime : candidates) {
        const double e2 = eps_prime * eps_prime;
        for (int p = 0; p < n_pairs; ++p) {
            std::uint32_t m = 0;
            for (int x = 0; x < P; ++x)
                if (gap[static_cast<std::size_t>(p) * P + x] > eps_prime) m |= 1u << x;
            gap_mask[p] = m;
        }
        for (std::uint32_t sset = 0; sset < n_subsets; ++sset) {
            std::uint32_t m = 0;
            for (int p = 0; p < n_pairs; ++p)
                if (norm_sq[static_cast<std::size_t>(p) * n_subsets + sset] <= e2) m |= gap_mask[p];
            indep_mask[sset] = m;
        }
        reachable[0] = 1;
        int best = 0;
        for (std::uint32_t sset = 1; sset < n_subsets; ++sset) {
            char ok = 0;
            std::uint32_t rest = sset;
            while (rest) {
                std::uint32_t bit = rest & (~rest + 1);
                rest ^= bit;
                std::uint32_t without = sset ^ bit;
                if (reachable[without] && (indep_mask[without] & bit)) {
                    ok = 1;
                    break;
                }
            }
            reachable[sset] = ok;
            if (ok) best = std::max(best, __builtin_popcount(sset));
        }
        result.dimension = std::max(result.dimension, best);
        if (result.dimension == P) break;
    }
    return result;
}

// Greedy lower bound: extend sequences point by point over rotated visiting
// orders, for every candidate threshold. Certified as a lower bound only.
inline EluderResult eluder_dimension_greedy(const EluderInstance& inst, double eps) {
    inst.validate();
    const int P = inst.n_points;
    auto candidates = detail::eluder_candidates(inst, eps, nullptr);

    EluderResult result;
    result.exact = false;
    std::vector<int> sequence;
    for (double eps_prime : candidates) {
        for (int start = 0; start < P; ++start) {
            sequence.clear();
            for (int step = 0; step < P; ++step) {
                int x = (start + step) % P;
                if (is_independent(inst, x, sequence, eps_prime)) sequence.push_back(x);
            }
            result.dimension = std::max(result.dimension, static_cast<int>(sequence.size()));
            if (result.dimension == P) return result;
        }
    }
    return result;
}

inline EluderResult eluder_dimension(const EluderInstance& inst, double eps, EluderMode mode) {
    if (eps < 0.0) throw std::invalid_argument("eluder_dimension: eps must be >= 0");
    return mode == EluderMode::exhaustive ? eluder_dimension_exhaustive(inst, eps)
                                          : eluder_dimension_greedy(inst, eps);
}

// Greedy sup-norm cover of a finite class: repeatedly pick the member covering
// the most uncovered members. Upper bounds N(F, eps); exact at eps = 0 where it
// counts distinct members.
inline int cover_size(const FiniteFunctionClass& cls, double eps) {
    cls.validate();
    if (eps < 0.0) throw std::invalid_argument("cover_size: eps must be >= 0");
    const int M = cls.size();
    auto covered_by = [&](int c, int f) {
        double worst = 0.0;
        for (std::size_t i = 0; i < cls.members[c].size(); ++i)
            worst = std::max(worst, std::abs(cls.members[c][i] - cls.members[f][i]));
        return worst <= eps;
    };
    std::vector<char> covered(M, 0);
    int n_centers = 0;
    int remaining = M;
    while (remaining > 0) {
        int best = -1, best_count = -1;
        for (int c = 0; c < M; ++c) {
            int count = 0;
            for (int f = 0; f < M; ++f)
                if (!covered[f] && covered_by(c, f)) ++count;
            if (count > best_count) {
                best_count = count;
                best = c;
            }
        }
        ++n_centers;
        for (int f = 0; f < M; ++f)
            if (!covered[f] && covered_by(best, f)) {
                covered[f] = 1;
                --remaining;
            }
    }
    return n_centers;
}

}  // namespace lbmrl
