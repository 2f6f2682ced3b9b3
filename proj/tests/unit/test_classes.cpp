#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sievelab/classes.hpp"
#include "sievelab/errors.hpp"

using namespace sievelab;

namespace {

const Bounds kBounds{0.5, 2.0};

std::vector<ClassSpec> example_specs(std::size_t m) {
    return {example_lipschitz(kBounds, m), example_bv(kBounds, m), example_quad(kBounds, m), example_convmix(kBounds, m),
            ClassSpec{kBounds, m, AmbientClass{}}};
}

// Direct variation sum.
double variation(const GridDensity& f) {
    double v = 0.0;
    for (std::size_t i = 1; i < f.size(); ++i) v += std::abs(f[i] - f[i - 1]);
    return v;
}

}  // namespace

TEST_CASE("uniform density is a member of every example class") {
    for (const std::size_t m : {64u, 128u, 256u}) {
        for (const auto& spec : example_specs(m)) {
            if (std::holds_alternative<ConvexMixtureClass>(spec.kind)) continue;
            CHECK_MESSAGE(is_member(spec, uniform_density(m)), spec.variant_name());
        }
        CHECK(is_member(ClassSpec{kBounds, m, LipschitzClass{0.5, 2.0, 1.01}}, uniform_density(m)));
    }
    const auto u = uniform_density(4);
    CHECK(std::all_of(u.values().begin(), u.values().end(), [](double v) { return v == 1.0; }));
}

TEST_CASE("mixture components are members") {
    const auto spec = example_convmix(kBounds, 64);
    const auto& mix = std::get<ConvexMixtureClass>(spec.kind);
    REQUIRE(mix.components.size() == 3);
    for (const auto& f : mix.components) CHECK(is_member(spec, f));
}

TEST_CASE("two-step density exceeds the variation budget") {
    const GridDensity f({0.5, 1.5, 1.5, 0.5});
    CHECK(variation(f) == 2.0);
    const ClassSpec bv{kBounds, 4, BoundedVariationClass{1.5}};
    const auto report = membership(bv, f);
    CHECK_FALSE(report.is_member);
    CHECK(report.worst_slack() == doctest::Approx(-0.5));
    CHECK(is_member(ClassSpec{kBounds, 4, BoundedVariationClass{2.0}}, f));
}

TEST_CASE("membership reports slack per constraint") {
    const ClassSpec ambient{kBounds, 2, AmbientClass{}};
    const auto inside = membership(ambient, GridDensity({0.5, 1.5}));
    CHECK(inside.is_member);
    CHECK(inside.worst_slack() >= -kMembershipTolerance);
    const auto outside = membership(ambient, GridDensity({0.25, 1.75}));
    CHECK_FALSE(outside.is_member);
    CHECK(outside.worst_slack() == doctest::Approx(-0.25));
    CHECK_THROWS_AS(membership(ambient, uniform_density(3)), DimensionError);
}

TEST_CASE("quad proxy uses scaled second differences") {
    // Linear profiles have zero second difference everywhere.
    std::vector<double> v(32);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.75 + 0.5 * (static_cast<double>(i) + 0.5) / 32.0;
    CHECK(is_member(ClassSpec{kBounds, 32, QuadFunctionalClass{1.01}}, GridDensity::normalized(v)));
    // A single kink of height 0.01 has m^2 * 0.02 = 20.48 in its second difference.
    std::vector<double> w(32, 1.0);
    w[16] += 0.01;
    const auto kink = GridDensity::normalized(w);
    CHECK_FALSE(is_member(ClassSpec{kBounds, 32, QuadFunctionalClass{10.0}}, kink));
    CHECK(is_member(ClassSpec{kBounds, 32, QuadFunctionalClass{21.0}}, kink));
}

TEST_CASE("convex_combine") {
    const GridDensity f({0.5, 1.5});
    const GridDensity g({1.5, 0.5});
    CHECK(convex_combine(f, g, 1.0) == f);
    CHECK(convex_combine(f, g, 0.0) == g);
    CHECK(convex_combine(f, g, 0.5) == GridDensity({1.0, 1.0}));
    CHECK_THROWS_AS(convex_combine(f, g, 1.5), DomainError);
    CHECK_THROWS_AS(convex_combine(f, g, -0.1), DomainError);
    CHECK_THROWS_AS(convex_combine(f, uniform_density(3), 0.5), DimensionError);
}

TEST_CASE("convex combinations stay in every example class") {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const auto& spec : example_specs(64)) {
        Rng rng(101);
        int failures = 0;
        for (int k = 0; k < 1000; ++k) {
            const auto f = sample_member(spec, rng);
            const auto g = sample_member(spec, rng);
            if (!is_member(spec, convex_combine(f, g, unit(rng)))) ++failures;
        }
        CHECK_MESSAGE(failures == 0, spec.variant_name());
    }
}

TEST_CASE("sampled members pass membership and are deterministic") {
    for (const auto& spec : example_specs(64)) {
        Rng rng(7);
        int failures = 0;
        for (int k = 0; k < 1000; ++k) {
            if (!is_member(spec, sample_member(spec, rng))) ++failures;
        }
        CHECK_MESSAGE(failures == 0, spec.variant_name());
        Rng a(99), b(99);
        CHECK(sample_member(spec, a) == sample_member(spec, b));
    }
}

TEST_CASE("sampler reports exhaustion") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_member(example_quad(kBounds, 64), rng, SamplerOptions{0}), GenerationError);
}

TEST_CASE("sine family values, mass and resolution") {
    const auto f = sin_family(3, 0.5, 256);
    CHECK(f.min_value() >= 0.5 - 1e-12);
    CHECK(f.max_value() <= 1.5 + 1e-12);
    CHECK(grid_mass(f.values()) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(sin_family(3, 0.5, 47), ResolutionError);
    CHECK_NOTHROW(sin_family(3, 0.5, 48));
    CHECK_THROWS_AS(sin_family(1, 1.0, 64), DomainError);
}

TEST_CASE("sine family members are equidistant at (1 - alpha)^2") {
    // The integral of (1 - alpha)^2 (sin 2 pi j x - sin 2 pi k x)^2 over [0,1]
    // is (1 - alpha)^2 (1/2 + 1/2) for j != k.
    for (const double alpha : {0.25, 0.5, 0.8}) {
        std::vector<GridDensity> f;
        for (int j = 1; j <= 6; ++j) f.push_back(sin_family(j, alpha, 4096));
        for (std::size_t a = 0; a < f.size(); ++a) {
            for (std::size_t b = a + 1; b < f.size(); ++b) {
                CHECK(l2_distance_squared(f[a], f[b]) == doctest::Approx((1 - alpha) * (1 - alpha)).epsilon(1e-3));
            }
        }
    }
}

TEST_CASE("gram matrix matches a quadrature oracle") {
    const ConvexMixtureClass single{{uniform_density(8)}};
    const auto g1 = gram_matrix(single);
    CHECK(g1.gram.rows() == 1);
    CHECK(g1.gram(0, 0) == 1.0);
    CHECK(g1.positive_definite);

    const auto spec = example_convmix(kBounds, 256);
    const auto& mix = std::get<ConvexMixtureClass>(spec.kind);
    const auto report = gram_matrix(mix);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            double oracle = 0.0;
            for (std::size_t t = 0; t < 256; ++t) oracle += mix.components[i][t] * mix.components[j][t];
            oracle /= 256.0;
            CHECK(report.gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                  doctest::Approx(oracle).epsilon(1e-13));
        }
    }
    // Sines of distinct frequency are orthogonal, so only the constant part couples components.
    for (Eigen::Index i = 0; i < 3; ++i) {
        CHECK(report.gram(i, i) == doctest::Approx(1.125).epsilon(1e-3));
        for (Eigen::Index j = 0; j < 3; ++j) {
            if (j == i) continue;
            CHECK(report.gram(i, j) == doctest::Approx(1.0).epsilon(1e-3));
            CHECK(report.gram(i, i) > report.gram(i, j));
        }
    }
    CHECK(report.positive_definite);
    CHECK(report.min_eigenvalue > 0.0);

    Rng rng(3);
    std::vector<GridDensity> random;
    for (int k = 0; k < 5; ++k) random.push_back(sample_member(ClassSpec{kBounds, 32, AmbientClass{}}, rng));
    const auto r = gram_matrix(ConvexMixtureClass{random});
    CHECK((r.gram - r.gram.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("simplex projection") {
    Eigen::VectorXd v(3);
    v << 0.2, 0.3, 0.5;
    CHECK((project_to_simplex(v) - v).norm() < 1e-15);
    v << 2.0, 0.0, 0.0;
    const auto p = project_to_simplex(v);
    CHECK(p(0) == doctest::Approx(1.0));
    CHECK(p(1) == 0.0);
    v << -1.0, 0.5, 0.5;
    const auto q = project_to_simplex(v);
    CHECK(q.sum() == doctest::Approx(1.0));
    CHECK(q.minCoeff() >= 0.0);
}

TEST_CASE("mixture fit recovers weights and is permutation invariant") {
    const auto spec = example_convmix(kBounds, 64);
    const auto& mix = std::get<ConvexMixtureClass>(spec.kind);
    Eigen::VectorXd w(3);
    w << 0.2, 0.0, 0.8;
    const auto f = mixture_density(mix, w);
    const auto fit = fit_simplex_weights(mix, f);
    CHECK(fit.residual <= kMixtureResidualTolerance);
    CHECK((fit.weights - w).cwiseAbs().maxCoeff() < 1e-6);

    ConvexMixtureClass permuted{{mix.components[2], mix.components[0], mix.components[1]}};
    ClassSpec permuted_spec = spec;
    permuted_spec.kind = permuted;
    Rng rng(11);
    for (int k = 0; k < 200; ++k) {
        const auto g = sample_member(spec, rng);
        CHECK(is_member(permuted_spec, g));
    }
    // A density away from the hull is rejected under every ordering.
    const GridDensity off = sin_family(4, 0.5, 64);
    CHECK_FALSE(is_member(spec, off));
    CHECK_FALSE(is_member(permuted_spec, off));
}

TEST_CASE("class validation") {
    CHECK_THROWS_AS((ClassSpec{kBounds, 64, LipschitzClass{0.2, 1.0, 2.0}}.validate()), ConfigError);
    CHECK_NOTHROW((ClassSpec{kBounds, 64, LipschitzClass{0.6, 1.0, 2.0}}.validate()));
    CHECK_THROWS_AS((ClassSpec{kBounds, 64, LipschitzClass{1.0, 2.0, 1.0}}.validate()), ConfigError);
    CHECK_THROWS_AS((ClassSpec{kBounds, 64, BoundedVariationClass{1.0}}.validate()), ConfigError);
    CHECK_THROWS_AS((ClassSpec{kBounds, 64, QuadFunctionalClass{0.5}}.validate()), ConfigError);
    CHECK_THROWS_AS((ClassSpec{kBounds, 64, ConvexMixtureClass{}}.validate()), ConfigError);
    CHECK_THROWS_AS((ClassSpec{kBounds, 32, ConvexMixtureClass{{uniform_density(64)}}}.validate()), ConfigError);
    CHECK_THROWS_AS((ClassSpec{Bounds{1.2, 2.0}, 64, AmbientClass{}}.validate()), ConfigError);
}

TEST_CASE("rate exponents") {
    CHECK(example_bv(kBounds, 64).rate_exponent() == doctest::Approx(2.0 / 3.0));
    CHECK(example_quad(kBounds, 64).rate_exponent() == doctest::Approx(0.8));
    CHECK(example_convmix(kBounds, 64).rate_exponent() == doctest::Approx(1.0));
    CHECK(std::isnan(ClassSpec{}.rate_exponent()));
}

TEST_CASE("class spec JSON round trip") {
    for (const auto& spec : example_specs(64)) {
        const nlohmann::json j = spec;
        CHECK(j.contains("variant"));
        const auto back = j.get<ClassSpec>();
        CHECK(back.variant_name() == spec.variant_name());
        CHECK(back.grid_size == spec.grid_size);
        CHECK(nlohmann::json(back) == j);
    }
    nlohmann::json bad = {{"variant", "sobolev"}};
    CHECK_THROWS_AS(bad.get<ClassSpec>(), ConfigError);
}
