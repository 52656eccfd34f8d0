#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lbmrl/eluder.hpp"
#include "oracles.hpp"

using namespace lbmrl;

static EluderInstance from_matrix(std::vector<Vec> rows) {
    EluderInstance inst;
    inst.n_members = static_cast<int>(rows.size());
    inst.n_points = static_cast<int>(rows[0].size());
    for (const auto& r : rows) inst.vals.insert(inst.vals.end(), r.begin(), r.end());
    return inst;
}

TEST_CASE("independence: single member class is never independent") {
    EluderInstance inst = from_matrix({{0.3, 0.8}});
    CHECK_FALSE(is_independent(inst, 0, {}, 0.0));
    CHECK_FALSE(is_independent(inst, 1, {0}, 0.5));
}

TEST_CASE("independence: hand case with two constants") {
    // F = {0, 1} on one point, empty Z, eps = 0.5: ||.||_empty = 0 <= 0.5 and
    // the gap 1 > 0.5
    EluderInstance inst = from_matrix({{0.0}, {1.0}});
    CHECK(is_independent(inst, 0, {}, 0.5));
    // once the point is in Z the norm equals the gap and independence fails
    CHECK_FALSE(is_independent(inst, 0, {0}, 0.5));
}

TEST_CASE("independence matches an independent pair scan") {
    Rng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        int m = 2 + rng.next_below(5);  // M <= 6
        int p = 2 + rng.next_below(4);
        std::vector<Vec> rows(m, Vec(p));
        for (auto& r : rows)
            for (double& v : r) v = rng.next_double();
        EluderInstance inst = from_matrix(rows);
        double eps = 0.4 * rng.next_double();
        std::vector<int> z;
        for (int x = 0; x < p; ++x)
            if (rng.next_below(2)) z.push_back(x);
        int point = rng.next_below(p);
        CHECK(is_independent(inst, point, z, eps) == oracles::bf_independent(inst, point, z, eps));
    }
}

TEST_CASE("eluder dimension: hand cases") {
    EluderInstance single = from_matrix({{0.3, 0.8, 0.1}});
    CHECK(eluder_dimension(single, 0.0, EluderMode::exhaustive).dimension == 0);

    EluderInstance pair = from_matrix({{0.0}, {1.0}});
    auto res = eluder_dimension(pair, 0.5, EluderMode::exhaustive);
    CHECK(res.dimension == 1);
    CHECK(res.exact);
}

TEST_CASE("eluder dimension of a linear grid class on basis points equals d") {
    for (int d = 2; d <= 4; ++d) {
        // members theta in {0, 0.5, 1}^d evaluated on the d coordinate points
        int m = 1;
        for (int i = 0; i < d; ++i) m *= 3;
        std::vector<Vec> rows;
        for (int code = 0; code < m; ++code) {
            Vec row(d);
            int c = code;
            for (int i = 0; i < d; ++i) {
                row[i] = 0.5 * (c % 3);
                c /= 3;
            }
            rows.push_back(std::move(row));
        }
        EluderInstance inst = from_matrix(rows);
        CHECK(eluder_dimension(inst, 0.1, EluderMode::exhaustive).dimension == d);
    }
}

TEST_CASE("exhaustive eluder dimension equals brute-force enumeration on random instances") {
    Rng rng(2025);
    for (int trial = 0; trial < 20; ++trial) {
        int m = 2 + rng.next_below(5);        // M <= 6
        int p = 2 + rng.next_below(7);        // |domain| <= 8
        std::vector<Vec> rows(m, Vec(p));
        for (auto& r : rows)
            for (double& v : r) v = rng.next_double();
        EluderInstance inst = from_matrix(rows);
        double eps = 0.3 * rng.next_double();
        int expect = oracles::bf_eluder_dimension(inst, eps);
        auto got = eluder_dimension(inst, eps, EluderMode::exhaustive);
        INFO("trial " << trial << " m=" << m << " p=" << p << " eps=" << eps);
        CHECK(got.dimension == expect);
        CHECK(got.exact);
    }
}

TEST_CASE("greedy mode lower-bounds the exhaustive result") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        int m = 2 + rng.next_below(4);
        int p = 2 + rng.next_below(6);
        std::vector<Vec> rows(m, Vec(p));
        for (auto& r : rows)
            for (double& v : r) v = rng.next_double();
        EluderInstance inst = from_matrix(rows);
        double eps = 0.3 * rng.next_double();
        auto exact = eluder_dimension(inst, eps, EluderMode::exhaustive);
        auto greedy = eluder_dimension(inst, eps, EluderMode::greedy);
        CHECK_FALSE(greedy.exact);
        CHECK(greedy.dimension <= exact.dimension);
        CHECK(greedy.dimension <= inst.n_points);
    }
}

TEST_CASE("dimension is monotone nonincreasing in eps") {
    Rng rng(8);
    std::vector<Vec> rows(4, Vec(6));
    for (auto& r : rows)
        for (double& v : r) v = rng.next_double();
    EluderInstance inst = from_matrix(rows);
    int prev = inst.n_points + 1;
    for (double eps : {0.0, 0.05, 0.1, 0.2, 0.4, 0.8}) {
        int dim = eluder_dimension(inst, eps, EluderMode::exhaustive).dimension;
        CHECK(dim <= prev);
        prev = dim;
    }
}

TEST_CASE("exhaustive mode refuses oversized domains") {
    std::vector<Vec> rows(2, Vec(13, 0.0));
    rows[1].assign(13, 1.0);
    EluderInstance inst = from_matrix(rows);
    CHECK_THROWS_WITH(eluder_dimension(inst, 0.1, EluderMode::exhaustive),
                      Catch::Matchers::ContainsSubstring("greedy"));
    CHECK_NOTHROW(eluder_dimension(inst, 0.1, EluderMode::greedy));
}

TEST_CASE("cover size: large eps, zero eps, and small-class exhaustive check") {
    FiniteFunctionClass cls;
    cls.S = 2;
    cls.A = 2;
    cls.H = 3;
    Rng rng(5);
    for (int i = 0; i < 6; ++i) {
        Vec f(4);
        for (double& v : f) v = 3.0 * rng.next_double();
        cls.members.push_back(std::move(f));
    }
    CHECK(cover_size(cls, 10.0) == 1);
    CHECK(cover_size(cls, 0.0) == 6);  // all members distinct

    // duplicate members collapse at eps = 0
    FiniteFunctionClass dup = cls;
    dup.members.push_back(dup.members[0]);
    CHECK(cover_size(dup, 0.0) == 6);

    // exhaustive minimal cover at M <= 8: greedy upper-bounds it
    for (double eps : {0.2, 0.5, 1.0, 2.0}) {
        int greedy = cover_size(cls, eps);
        // minimal cover by subset enumeration
        int m = cls.size();
        int best = m;
        for (int mask = 1; mask < (1 << m); ++mask) {
            bool covers_all = true;
            for (int f = 0; f < m && covers_all; ++f) {
                bool covered = false;
                for (int c = 0; c < m && !covered; ++c) {
                    if (!(mask & (1 << c))) continue;
                    double worst = 0.0;
                    for (int i = 0; i < 4; ++i)
                        worst = std::max(worst,
                                         std::abs(cls.members[c][i] - cls.members[f][i]));
                    covered = worst <= eps;
                }
                covers_all = covered;
            }
            if (covers_all) best = std::min(best, __builtin_popcount(mask));
        }
        CHECK(greedy >= best);
        CHECK(greedy <= cls.size());
    }
}

TEST_CASE("cover size is nonincreasing in eps") {
    FiniteFunctionClass cls;
    cls.S = 2;
    cls.A = 2;
    cls.H = 3;
    Rng rng(12);
    for (int i = 0; i < 8; ++i) {
        Vec f(4);
        for (double& v : f) v = 3.0 * rng.next_double();
        cls.members.push_back(std::move(f));
    }
    int prev = 1 << 20;
    for (double eps : {0.0, 0.1, 0.3, 0.7, 1.5, 3.0}) {
        int n = cover_size(cls, eps);
        CHECK(n <= prev);
        prev = n;
    }
}

TEST_CASE("model-class lifting evaluates expected values") {
    TabularMdp env = build_chain_env(3, 2, 2, 0.0);
    FiniteModelClass cls;
    cls.S = env.S;
    cls.A = env.A;
    cls.H = env.H;
    cls.members.push_back(env.P);
    std::vector<std::array<int, 3>> hsa{{0, 0, 1}};
    std::vector<Vec> tables{{1.0, 2.0, 3.0}};
    EluderInstance inst = lift_model_class(cls, hsa, tables);
    // deterministic right step from state 0: expected value is V(1) = 2
    CHECK(inst.value(0, 0) == Catch::Approx(2.0));
}
