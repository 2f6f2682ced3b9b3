#include "sievelab/properties.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sievelab/packing.hpp"
#include "sievelab/rng.hpp"
#include "sievelab/sampling.hpp"
#include "sievelab/sieve.hpp"

namespace sievelab {
namespace {

void record(SuiteResult& r, double margin) {
    ++r.checked;
    if (margin < -kInequalitySlack) ++r.violations;
    r.worst_margin = std::min(r.worst_margin, margin);
}

template <class Check>
SuiteResult over_random_pairs(std::string name, const Bounds& bounds, std::size_t m, std::size_t pairs,
                              std::uint64_t seed, Check&& check) {
    SuiteResult r;
    r.name = std::move(name);
    const ClassSpec ambient{bounds, m, AmbientClass{}};
    for (std::size_t k = 0; k < pairs; ++k) {
        Rng rng = make_stream(seed, {stream_tag::kProperty, k});
        const auto f = sample_member(ambient, rng);
        const auto g = sample_member(ambient, rng);
        check(r, f, g);
    }
    return r;
}

}  // namespace

SuiteResult suite_kl_sandwich(const Bounds& bounds, std::size_t m, std::size_t pairs, std::uint64_t seed) {
    const double c_ab = equivalence_constants(bounds).c_ab;
    return over_random_pairs("kl_l2_sandwich", bounds, m, pairs, seed,
                             [&](SuiteResult& r, const GridDensity& f, const GridDensity& g) {
                                 const double l2 = l2_distance_squared(f, g);
                                 const double kl = kl_divergence(f, g);
                                 record(r, std::min(kl - c_ab * l2, l2 / bounds.alpha - kl));
                             });
}

SuiteResult suite_hellinger_sandwich(const Bounds& bounds, std::size_t m, std::size_t pairs, std::uint64_t seed) {
    return over_random_pairs("hellinger_l2_sandwich", bounds, m, pairs, seed,
                             [&](SuiteResult& r, const GridDensity& f, const GridDensity& g) {
                                 const double l2 = l2_distance_squared(f, g);
                                 const double h = hellinger(f, g);
                                 const double h2 = h * h;
                                 record(r, std::min(h2 - l2 / (4.0 * bounds.beta), l2 / bounds.alpha - h2));
                             });
}

SuiteResult suite_kl_below_chi_square(const Bounds& bounds, std::size_t m, std::size_t pairs, std::uint64_t seed) {
    return over_random_pairs("kl_below_chi_square", bounds, m, pairs, seed,
                             [&](SuiteResult& r, const GridDensity& f, const GridDensity& g) {
                                 record(r, chi_square(f, g) - kl_divergence(f, g));
                             });
}

SuiteResult suite_log_inequality(std::size_t gamma_points, std::size_t x_points, double gamma_max) {
    SuiteResult r;
    r.name = "elementary_log_inequality";
    for (std::size_t a = 1; a <= gamma_points; ++a) {
        const double gamma = gamma_max * static_cast<double>(a) / static_cast<double>(gamma_points);
        for (std::size_t b = 1; b <= x_points; ++b) {
            const double x = gamma * static_cast<double>(b) / static_cast<double>(x_points);
            ++r.checked;
            if (!elementary_log_check(gamma, x)) {
                ++r.violations;
                const double u = x - 1.0;
                r.worst_margin = std::min(r.worst_margin, u - h_function(gamma) * u * u - std::log(x));
            }
        }
    }
    return r;
}

SuiteResult suite_h_monotone(std::size_t points) {
    SuiteResult r;
    r.name = "h_strictly_decreasing";
    ++r.checked;
    if (h_function(1.0) != 0.5) ++r.violations;
    double prev = h_function(1e-3);
    for (std::size_t i = 1; i < points; ++i) {
        const double gamma = std::pow(10.0, -3.0 + 6.0 * static_cast<double>(i) / static_cast<double>(points - 1));
        const double h = h_function(gamma);
        ++r.checked;
        if (!(h < prev)) {
            ++r.violations;
            r.worst_margin = std::min(r.worst_margin, prev - h);
        }
        prev = h;
    }
    return r;
}

SuiteResult suite_sine_family(double alpha, std::size_t m, int count, double tolerance) {
    SuiteResult r;
    r.name = "sine_family_equidistant";
    std::vector<GridDensity> f;
    for (int j = 1; j <= count; ++j) f.push_back(sin_family(j, alpha, m));
    const double reference = l2_distance_squared(f[0], f[1]);
    for (int j = 0; j < count; ++j) {
        for (int k = j + 1; k < count; ++k) {
            ++r.checked;
            const double gap = std::abs(l2_distance_squared(f[static_cast<std::size_t>(j)], f[static_cast<std::size_t>(k)]) -
                                        reference);
            if (gap > tolerance) ++r.violations;
            r.worst_margin = std::min(r.worst_margin, tolerance - gap);
        }
    }
    std::ostringstream detail;
    detail << "common squared distance " << reference;
    r.detail = detail.str();
    return r;
}

SuiteResult suite_convexity(const ClassSpec& spec, std::size_t trials, std::uint64_t seed) {
    SuiteResult r;
    r.name = "convexity_" + std::string(spec.variant_name());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < trials; ++k) {
        Rng rng = make_stream(seed, {stream_tag::kProperty, k});
        const auto f = sample_member(spec, rng);
        const auto g = sample_member(spec, rng);
        const auto report = membership(spec, convex_combine(f, g, unit(rng)));
        ++r.checked;
        if (!report.is_member) ++r.violations;
        r.worst_margin = std::min(r.worst_margin, std::min(0.0, report.worst_slack()));
    }
    return r;
}

SuiteResult suite_contraction(const ClassSpec& spec, std::size_t trials, std::size_t pool_size, double c,
                              std::uint64_t seed) {
    SuiteResult r;
    r.name = "contraction_" + std::string(spec.variant_name());
    const auto pool = CandidatePool::generate(spec, pool_size, seed);
    const double diameter = pool.diameter();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::size_t total_size = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng = make_stream(seed, {stream_tag::kProperty, t});
        const std::size_t center = pick(rng);
        const double eps = diameter * (0.05 + 0.45 * unit(rng));
        const auto packing = greedy_maximal_packing(pool, eps / c, Ball{pool[center], eps});
        std::vector<GridDensity> g;
        for (const std::size_t i : packing.center_indices) g.push_back(pool[i]);
        total_size += g.size();
        for (const double divisor : {2.0, 3.0}) {
            const double eps_prime = eps / divisor;
            const auto out = contract_packing(pool[center], eps, eps_prime, c, g);
            bool ok = out.size() == g.size();
            for (std::size_t a = 0; a < out.size() && ok; ++a) {
                ok = l2_distance(out[a], pool[center]) <= eps_prime * (1.0 + 1e-12) && is_member(spec, out[a]);
                for (std::size_t b = a + 1; b < out.size() && ok; ++b) ok = l2_distance(out[a], out[b]) > eps_prime / c;
            }
            ++r.checked;
            if (!ok) ++r.violations;
        }
    }
    std::ostringstream detail;
    detail << "mean local packing size " << static_cast<double>(total_size) / static_cast<double>(std::max<std::size_t>(trials, 1));
    r.detail = detail.str();
    return r;
}

SuiteResult suite_cauchy_trajectory(const ClassSpec& spec, std::size_t runs, std::size_t pool_size, double c,
                                    int depth, std::uint64_t seed) {
    SuiteResult r;
    r.name = "cauchy_trajectory_" + std::string(spec.variant_name());
    const auto pool = CandidatePool::generate(spec, pool_size, seed);
    const double d = std::min(diameter_upper_bound(spec.bounds), pool.diameter());
    const auto constants = compute_constants(spec.bounds, c, d, 0.5);
    const PackingTree tree(pool, constants);
    for (std::size_t k = 0; k < runs; ++k) {
        Rng rng = make_stream(seed, {stream_tag::kProperty, k});
        const auto truth = sample_member(spec, rng);
        const auto samples = sample_iid(truth, 100 * (1 + k % 8), rng);
        const auto result = run_sieve(samples, tree, depth);
        const auto& path = result.trace.path;
        for (std::size_t b = 1; b < path.size(); ++b) {
            for (std::size_t a = 0; a < b; ++a) {
                const int J_prime = static_cast<int>(a) + 1;
                const double bound = d / std::ldexp(1.0, J_prime - 2);
                record(r, bound * (1.0 + 1e-12) - pool.distance(path[a], path[b]));
            }
        }
    }
    return r;
}

void to_json(nlohmann::json& j, const SuiteResult& r) {
    j = nlohmann::json{{"name", r.name},
                       {"checked", r.checked},
                       {"violations", r.violations},
                       {"worst_margin", r.worst_margin},
                       {"passed", r.passed()},
                       {"detail", r.detail}};
}

}  // namespace sievelab
