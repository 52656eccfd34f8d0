#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lbmrl/linalg.hpp"
#include "lbmrl/mdp.hpp"
#include "lbmrl/rng.hpp"

namespace lbmrl {

// Enumerable hypothesis set of step-independent Q-tables with range [0, H+1].
struct FiniteFunctionClass {
    int S = 0;
    int A = 0;
    int H = 0;
    std::vector<Vec> members;  // each of size S*A

    int size() const { return static_cast<int>(members.size()); }
    double value(int id, int s, int a) const {
        return members[id][static_cast<std::size_t>(s) * A + a];
    }

    void validate() const {
        if (S < 1 || A < 1 || H < 1)
            throw std::invalid_argument("FiniteFunctionClass: dimensions must be >= 1");
        if (members.empty()) throw std::invalid_argument("FiniteFunctionClass: empty class");
        for (const auto& f : members) {
            if (f.size() != static_cast<std::size_t>(S) * A)
                throw std::invalid_argument("FiniteFunctionClass: member has wrong size");
            for (double v : f)
                if (v < 0.0 || v > H + 1.0)
                    throw std::invalid_argument("FiniteFunctionClass: value outside [0, H+1]");
        }
    }
};

// Experiment helper: the environment's exact Bellman-backup tables (the
// optimal Q at every step, so each step's regression has a well-fitting
// member) plus perturbed copies of them. Perturbations are uniform in
// [-scale, scale], clipped to the admissible range. Member 0 is the step-1
// optimal table.
inline FiniteFunctionClass make_value_class(const TabularMdp& mdp, int n_members, double scale,
                                            Rng& rng) {
    if (n_members < 1) throw std::invalid_argument("make_value_class: need at least one member");
    DpSolution sol = exact_optimal_values(mdp);
    FiniteFunctionClass cls;
    cls.S = mdp.S;
    cls.A = mdp.A;
    cls.H = mdp.H;
    std::vector<Vec> exact;
    for (int h = 0; h < mdp.H; ++h) {
        Vec q(static_cast<std::size_t>(mdp.S) * mdp.A);
        for (int s = 0; s < mdp.S; ++s)
            for (int a = 0; a < mdp.A; ++a)
                q[static_cast<std::size_t>(s) * mdp.A + a] = sol.q_at(h, s, a, mdp.S, mdp.A);
        exact.push_back(std::move(q));
    }
    for (int i = 0; i < n_members; ++i) {
        Vec f = exact[i % mdp.H];
        if (i >= mdp.H) {
            for (double& v : f)
                v = std::clamp(v + scale * (2.0 * rng.next_double() - 1.0), 0.0, mdp.H + 1.0);
        }
        cls.members.push_back(std::move(f));
    }
    cls.validate();
    return cls;
}

// Table file: header "S A H", then one row of S*A values per member.
inline void save_function_class(const FiniteFunctionClass& cls, std::ostream& out) {
    out << cls.S << ' ' << cls.A << ' ' << cls.H << '\n';
    out.precision(17);
    for (const auto& f : cls.members) {
        for (std::size_t i = 0; i < f.size(); ++i) out << (i ? " " : "") << f[i];
        out << '\n';
    }
}

inline FiniteFunctionClass load_function_class(std::istream& in) {
    FiniteFunctionClass cls;
    if (!(in >> cls.S >> cls.A >> cls.H))
        throw std::runtime_error("load_function_class: bad header (expected: S A H)");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        Vec f;
        double v;
        while (row >> v) f.push_back(v);
        if (f.size() != static_cast<std::size_t>(cls.S) * cls.A)
            throw std::runtime_error("load_function_class: row has wrong length");
        cls.members.push_back(std::move(f));
    }
    cls.validate();
    return cls;
}

inline FiniteFunctionClass load_function_class_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_function_class: cannot open " + path);
    return load_function_class(in);
}

}  // namespace lbmrl
