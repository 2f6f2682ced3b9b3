#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sievelab/classes.hpp"
#include "sievelab/errors.hpp"
#include "sievelab/packing.hpp"

using namespace sievelab;

namespace {

const Bounds kBounds{0.5, 2.0};

CandidatePool sine_pool(int count, std::size_t m = 4096) {
    std::vector<GridDensity> f;
    for (int j = 1; j <= count; ++j) f.push_back(sin_family(j, 0.5, m));
    return CandidatePool(std::move(f));
}

// Exact maximum packing size over `eligible` by exhaustive branch and bound.
std::size_t exact_max_packing(const CandidatePool& pool, const std::vector<std::size_t>& eligible, double sep) {
    std::size_t best = 0;
    std::vector<std::size_t> chosen;
    auto recurse = [&](auto&& self, std::size_t from) -> void {
        best = std::max(best, chosen.size());
        if (chosen.size() + (eligible.size() - from) <= best) return;
        for (std::size_t t = from; t < eligible.size(); ++t) {
            const std::size_t i = eligible[t];
            bool ok = true;
            for (const std::size_t j : chosen) ok = ok && pool.distance(i, j) > sep;
            if (!ok) continue;
            chosen.push_back(i);
            self(self, t + 1);
            chosen.pop_back();
        }
    };
    recurse(recurse, 0);
    return best;
}

std::vector<std::size_t> all_of(const CandidatePool& pool) {
    std::vector<std::size_t> out(pool.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
}

}  // namespace

TEST_CASE("single-element pool packs one element at any separation") {
    const CandidatePool pool({uniform_density(16)});
    for (const double sep : {1e-9, 0.1, 10.0}) {
        const auto p = greedy_maximal_packing(pool, sep);
        CHECK(p.center_indices.size() == 1);
        CHECK(verify_packing(pool, p));
    }
    CHECK_THROWS_AS(greedy_maximal_packing(pool, 0.0), DomainError);
}

TEST_CASE("sine pool packings") {
    const auto pool = sine_pool(8);
    for (std::size_t a = 0; a < 8; ++a) {
        for (std::size_t b = a + 1; b < 8; ++b) CHECK(pool.distance(a, b) == doctest::Approx(0.5).epsilon(1e-3));
    }
    const auto loose = greedy_maximal_packing(pool, 0.49);
    CHECK(loose.center_indices.size() == 8);
    CHECK(exact_max_packing(pool, all_of(pool), 0.49) == 8);
    const auto tight = greedy_maximal_packing(pool, 0.8);
    CHECK(tight.center_indices.size() == 1);
    CHECK(exact_max_packing(pool, all_of(pool), 0.8) == 1);
    CHECK(verify_packing(pool, loose));
    CHECK(verify_packing(pool, tight));
}

TEST_CASE("greedy packings are valid, maximal, deterministic and bounded by the exact maximum") {
    const auto spec = example_convmix(kBounds, 64);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto pool = CandidatePool::generate(spec, 18, seed);
        const double diam = pool.diameter();
        for (const double frac : {0.1, 0.25, 0.5}) {
            const double sep = frac * diam;
            const auto p = greedy_maximal_packing(pool, sep);
            CHECK(verify_packing(pool, p));
            CHECK(p.center_indices.size() <= exact_max_packing(pool, all_of(pool), sep));
            CHECK(greedy_maximal_packing(pool, sep).center_indices == p.center_indices);
            const Ball ball{pool[3], 2.0 * sep};
            const auto local = greedy_maximal_packing(pool, sep, ball);
            CHECK(verify_packing(pool, local, ball));
            CHECK(local.eligible_count == ball_members(pool, ball.center, ball.radius).size());
        }
    }
}

TEST_CASE("maximality certificate catches a non-maximal packing") {
    const auto pool = sine_pool(4, 256);
    PackingResult p;
    p.center_indices = {0, 1};
    p.separation = 0.3;
    p.maximal = true;
    CHECK_FALSE(verify_packing(pool, p));
    p.center_indices = {0, 1, 2, 3};
    CHECK(verify_packing(pool, p));
    p.separation = 0.6;
    CHECK_FALSE(verify_packing(pool, p));
}

TEST_CASE("pool prefixes are stable and counts never shrink with the pool") {
    const auto spec = example_bv(kBounds, 32);
    const auto small = CandidatePool::generate(spec, 40, 9);
    const auto large = CandidatePool::generate(spec, 160, 9);
    for (std::size_t i = 0; i < small.size(); ++i) CHECK(small[i] == large[i]);
    const double sep = 0.2 * large.diameter();
    CHECK(greedy_maximal_packing(small, sep).center_indices.size() <=
          greedy_maximal_packing(large, sep).center_indices.size());
    const auto centers = default_centers(small, 4);
    for (const double eps : {0.1, 0.3, 0.6}) {
        CHECK(local_entropy_estimate(spec, eps, 4.0, small, centers).log_count <=
              local_entropy_estimate(spec, eps, 4.0, large, centers).log_count);
    }
}

TEST_CASE("local entropy estimates") {
    const auto spec = example_convmix(kBounds, 64);
    const auto pool = CandidatePool::generate(spec, 300, 4);
    const auto centers = default_centers(pool, 8);
    CHECK(centers.size() == 8);

    SUBCASE("a ball covering the pool recovers the global count") {
        const double eps = 2.0 * pool.diameter();
        const auto local = local_entropy_estimate(spec, eps, 20.0, pool, centers);
        CHECK(local.count == global_entropy_estimate(pool, eps / 20.0).count);
    }
    SUBCASE("single center equals the adaptive estimate") {
        for (const double eps : {0.05, 0.2, 0.5}) {
            const auto a = local_entropy_estimate(spec, eps, 5.0, pool, std::span<const GridDensity>(&centers[2], 1));
            const auto b = adaptive_local_entropy(spec, centers[2], eps, 5.0, pool);
            CHECK(a.count == b.count);
            CHECK(b.mode == EntropyMode::Adaptive);
        }
    }
    SUBCASE("tiny radius leaves only the center") {
        const auto e = adaptive_local_entropy(spec, pool[0], 1e-12, 5.0, pool);
        CHECK(e.log_count == 0.0);
    }
    SUBCASE("mixture class counts stay flat in epsilon") {
        // Each local packing is a packing of a ball in a 2-dimensional simplex
        // at ratio c, so it is bounded by a constant independent of eps.
        double lo = 1e9, hi = 0.0;
        for (const double eps : {0.04, 0.08, 0.16, 0.32}) {
            const auto e = local_entropy_estimate(spec, eps, 6.0, pool, centers);
            CHECK(e.log_count >= 0.0);
            lo = std::min(lo, e.log_count);
            hi = std::max(hi, e.log_count);
        }
        CHECK(hi - lo <= 2.0);
    }
    CHECK_THROWS_AS(local_entropy_estimate(spec, 0.1, 1.0, pool, centers), DomainError);
    CHECK_THROWS_AS(local_entropy_estimate(spec, 0.1, 2.0, pool, {}), DomainError);
    CHECK(entropy_mode_name(EntropyMode::LocalSup) == "local-sup");
}

TEST_CASE("nearby centers: a packing at (nu, eps, c) is a packing at (mu, 2 eps, 2c)") {
    const auto spec = example_lipschitz(kBounds, 32);
    const auto pool = CandidatePool::generate(spec, 16, 21);
    const double diam = pool.diameter();
    for (std::size_t mu = 0; mu < 4; ++mu) {
        for (std::size_t nu = 0; nu < pool.size(); ++nu) {
            const double delta = pool.distance(mu, nu);
            for (const double frac : {0.3, 0.6}) {
                const double eps = std::max(delta, frac * diam);
                const double c = 3.0;
                const auto at_nu = greedy_maximal_packing(pool, eps / c, Ball{pool[nu], eps});
                for (const std::size_t i : at_nu.center_indices) CHECK(pool.distance(i, mu) <= 2.0 * eps + 1e-12);
                const auto eligible = ball_members(pool, pool[mu], 2.0 * eps);
                CHECK(at_nu.center_indices.size() <= exact_max_packing(pool, eligible, 2.0 * eps / (2.0 * c)));
            }
        }
    }
}

TEST_CASE("contraction halves distances and keeps membership") {
    const auto spec = example_lipschitz(kBounds, 64);
    const auto pool = CandidatePool::generate(spec, 400, 13);
    const double eps = 0.5 * pool.diameter();
    const double c = 4.0;
    const auto packing = greedy_maximal_packing(pool, eps / c, Ball{pool[0], eps});
    std::vector<GridDensity> g;
    for (const std::size_t i : packing.center_indices) g.push_back(pool[i]);
    REQUIRE(g.size() >= 2);

    const auto same = contract_packing(pool[0], eps, eps, c, g);
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(l2_distance(same[j], g[j]) == 0.0);

    const auto half = contract_packing(pool[0], eps, eps / 2.0, c, g);
    for (std::size_t a = 0; a < g.size(); ++a) {
        for (std::size_t b = a + 1; b < g.size(); ++b) {
            CHECK(l2_distance(half[a], half[b]) == doctest::Approx(0.5 * l2_distance(g[a], g[b])).epsilon(1e-12));
        }
    }
    const auto third = contract_packing(pool[0], eps, eps / 3.0, c, g);
    for (std::size_t a = 0; a < g.size(); ++a) {
        CHECK(is_member(spec, third[a]));
        CHECK(l2_distance(third[a], pool[0]) <= eps / 3.0 * (1.0 + 1e-12));
        for (std::size_t b = a + 1; b < g.size(); ++b) CHECK(l2_distance(third[a], third[b]) > eps / (3.0 * c));
    }
    CHECK_THROWS_AS(contract_packing(pool[0], eps, 2.0 * eps, c, g), ContractError);
    CHECK_THROWS_AS(contract_packing(pool[0], eps, 0.0, c, g), ContractError);
    CHECK_THROWS_AS(contract_packing(pool[0], 1e-6, 1e-7, c, g), ContractError);
    std::vector<GridDensity> dup{g[0], g[0]};
    CHECK_THROWS_AS(contract_packing(pool[0], eps, eps / 2.0, c, dup), ContractError);
}

TEST_CASE("isotonic regression and the monotone entropy curve") {
    CHECK(isotonic_nonincreasing(std::vector<double>{1.0, 3.0, 2.0}) == std::vector<double>{2.0, 2.0, 2.0});
    CHECK(isotonic_nonincreasing(std::vector<double>{3.0, 1.0, 2.0}) == std::vector<double>{3.0, 1.5, 1.5});
    CHECK(isotonic_nonincreasing(std::vector<double>{5.0, 4.0, 1.0}) == std::vector<double>{5.0, 4.0, 1.0});

    std::mt19937_64 rng(17);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> y(1 + t % 30);
        for (double& v : y) v = noise(rng);
        const auto fit = isotonic_nonincreasing(y);
        double sum_y = 0.0, sum_fit = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            sum_y += y[i];
            sum_fit += fit[i];
            if (i > 0) CHECK(fit[i] <= fit[i - 1] + 1e-12);
        }
        CHECK(sum_fit == doctest::Approx(sum_y).epsilon(1e-9));
    }

    const MonotoneEntropy e({0.1, 0.2, 0.4}, std::vector<double>{3.0, 4.0, 1.0});
    CHECK(e(0.05) == 3.5);
    CHECK(e(0.1) == 3.5);
    CHECK(e(0.2) == 3.5);
    CHECK(e(0.3) == 3.5);
    CHECK(e(0.4) == 1.0);
    CHECK(e(9.0) == 1.0);
    CHECK_THROWS_AS(MonotoneEntropy({0.2, 0.1}, std::vector<double>{1.0, 1.0}), DomainError);
}

TEST_CASE("critical epsilon") {
    CHECK(solve_critical_epsilon(100, 2.0, [](double) { return 0.0; }) == 0.0);
    for (const std::size_t n : {10u, 1000u, 100000u}) {
        const double E = 3.0;
        const double eps = solve_critical_epsilon(n, 2.0, [&](double) { return E; });
        const double oracle = std::min(2.0, std::sqrt(E / static_cast<double>(n)));
        CHECK(eps == doctest::Approx(oracle).epsilon(2e-3));
        CHECK(eps <= oracle);
    }
    for (const std::size_t n : {100u, 10000u, 1000000u}) {
        const double eps = solve_critical_epsilon(n, 2.0, [](double e) { return 1.0 / e; });
        CHECK(eps == doctest::Approx(std::cbrt(1.0 / static_cast<double>(n))).epsilon(0.02));
    }
    CHECK(solve_critical_epsilon(1, 2.0, [](double) { return 100.0; }) == 2.0);
}

TEST_CASE("lower-bound radius condition") {
    CHECK_FALSE(lower_bound_condition(100, 0.1, 0.5, 0.0));
    CHECK(lower_bound_condition(100, 0.1, 0.5, 10.0));
    CHECK_FALSE(lower_bound_condition(100, 0.1, 0.5, 5.0));
    CHECK_FALSE(lower_bound_condition(50, 0.5, 0.5, 50.0 + 2.0 * std::numbers::ln2));
    CHECK(lower_bound_condition(50, 0.5, 0.5, std::nextafter(50.0 + 2.0 * std::numbers::ln2, 100.0)));
}

TEST_CASE("global-local entropy sandwich") {
    SUBCASE("degenerate pool") {
        const ClassSpec ambient{kBounds, 16, AmbientClass{}};
        const CandidatePool pool({uniform_density(16)});
        const auto r = global_local_gap_check(ambient, 0.3, 4.0, pool);
        CHECK(r.log_global_eps == 0.0);
        CHECK(r.log_global_eps_over_c == 0.0);
        CHECK(r.log_local == 0.0);
        CHECK(r.lower_holds);
        CHECK(r.upper_holds);
    }
    SUBCASE("mixture pool") {
        const auto spec = example_convmix(kBounds, 64);
        const auto pool = CandidatePool::generate(spec, 400, 2);
        const auto centers = default_centers(pool, 16);
        for (const double frac : {0.1, 0.2, 0.4}) {
            const auto r = global_local_gap_check(spec, frac * pool.diameter(), 4.0, pool, centers);
            CHECK(r.lower_holds);
            CHECK(r.upper_holds);
            CHECK(r.log_local <= r.log_global_eps_over_c);
        }
    }
}

TEST_CASE("pool diameter and spacing") {
    const auto pool = sine_pool(5, 512);
    double oracle = 0.0;
    for (std::size_t a = 0; a < 5; ++a) {
        for (std::size_t b = 0; b < 5; ++b) oracle = std::max(oracle, l2_distance(pool[a], pool[b]));
    }
    CHECK(pool.diameter() == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(mean_nearest_neighbor_spacing(pool) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK_THROWS_AS(CandidatePool({uniform_density(4), uniform_density(8)}), DimensionError);
}
