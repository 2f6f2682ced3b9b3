#include "sievelab/classes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "sievelab/errors.hpp"
#include "sievelab/kernels.hpp"

namespace sievelab {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double q_norm(std::span<const double> x, double q) {
    if (std::isinf(q)) {
        double acc = 0.0;
        for (const double v : x) acc = std::max(acc, std::abs(v));
        return acc;
    }
    double acc = 0.0;
    for (const double v : x) acc += std::pow(std::abs(v), q);
    return std::pow(acc / static_cast<double>(x.size()), 1.0 / q);
}

// Largest Lipschitz-proxy violation margin: min_s psi (s/m)^gamma - ||D_s f||_q.
double lipschitz_shift_slack(const GridDensity& f, const LipschitzClass& lip) {
    const std::size_t m = f.size();
    const auto v = f.values();
    std::vector<double> diff(m);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t s = 1; s < m; ++s) {
        for (std::size_t i = 0; i < m; ++i) diff[i] = v[std::min(i + s, m - 1)] - v[i];
        const double allowed = lip.psi * std::pow(static_cast<double>(s) / static_cast<double>(m), lip.gamma);
        worst = std::min(worst, allowed - q_norm(diff, lip.q));
    }
    return worst;
}

double total_variation(const GridDensity& f) {
    const auto v = f.values();
    double acc = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) acc += std::abs(v[i] - v[i - 1]);
    return acc;
}

double max_scaled_second_difference(const GridDensity& f) {
    const std::size_t m = f.size();
    if (m < 3) return 0.0;
    const auto v = f.values();
    const double m2 = static_cast<double>(m) * static_cast<double>(m);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < m; ++i) worst = std::max(worst, std::abs(v[i + 1] - 2.0 * v[i] + v[i - 1]));
    // One-sided stencils at x = 0 and x = 1.
    worst = std::max(worst, std::abs(v[2] - 2.0 * v[1] + v[0]));
    worst = std::max(worst, std::abs(v[m - 1] - 2.0 * v[m - 2] + v[m - 3]));
    return m2 * worst;
}

double upper_cap(const ClassSpec& spec) {
    return std::visit(overloaded{[&](const LipschitzClass& c) { return std::min(spec.bounds.beta, c.psi); },
                                 [&](const BoundedVariationClass& c) { return std::min(spec.bounds.beta, c.zeta); },
                                 [&](const auto&) { return spec.bounds.beta; }},
                      spec.kind);
}

// Clips into [lo, hi] and rescales to unit mass until both hold.
std::vector<double> clip_renormalize(std::vector<double> v, double lo, double hi) {
    for (int pass = 0; pass < 64; ++pass) {
        for (double& x : v) x = std::clamp(x, lo, hi);
        const double mass = grid_mass(v);
        for (double& x : v) x /= mass;
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        if (*mn >= lo - 1e-13 && *mx <= hi + 1e-13) break;
    }
    return v;
}

std::vector<double> midpoints(std::size_t m) {
    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
    return x;
}

// Zero-mean shape scaled to max |p| = 1.
std::vector<double> center_and_scale(std::vector<double> p) {
    const double mean = grid_mass(p);
    double peak = 0.0;
    for (double& x : p) {
        x -= mean;
        peak = std::max(peak, std::abs(x));
    }
    if (peak > 0.0) {
        for (double& x : p) x /= peak;
    }
    return p;
}

std::vector<double> smooth_shape(std::size_t m, int terms, double decay, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto x = midpoints(m);
    std::vector<double> p(m, 0.0);
    for (int j = 1; j <= terms; ++j) {
        const double a = normal(rng) / std::pow(static_cast<double>(j), decay);
        for (std::size_t i = 0; i < m; ++i) p[i] += a * std::cos(std::numbers::pi * j * x[i]);
    }
    return center_and_scale(std::move(p));
}

std::vector<double> step_shape(std::size_t m, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> jumps_dist(1, 4);
    const int jumps = m > 1 ? std::min<int>(jumps_dist(rng), static_cast<int>(m) - 1) : 0;
    std::vector<std::size_t> cuts;
    std::uniform_int_distribution<std::size_t> pos(1, m > 1 ? m - 1 : 1);
    while (static_cast<int>(cuts.size()) < jumps) {
        const std::size_t c = pos(rng);
        if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> p(m);
    double level = normal(rng);
    std::size_t next = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (next < cuts.size() && i == cuts[next]) {
            level = normal(rng);
            ++next;
        }
        p[i] = level;
    }
    return center_and_scale(std::move(p));
}

std::vector<double> rough_shape(std::size_t m, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, 2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    switch (pick(rng)) {
        case 0: {
            std::vector<double> p(m);
            for (double& x : p) x = unit(rng);
            return center_and_scale(std::move(p));
        }
        case 1:
            return step_shape(m, rng);
        default:
            return smooth_shape(m, 6, 0.5, rng);
    }
}

GridDensity sample_by_shrinking(const ClassSpec& spec, Rng& rng, const SamplerOptions& options,
                                std::vector<double> (*shape)(const ClassSpec&, Rng&)) {
    const double lo = spec.bounds.alpha;
    const double hi = upper_cap(spec);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double max_amplitude = std::max(1.0 - lo, hi - 1.0);
    double amplitude = max_amplitude * unit(rng);
    const auto p = shape(spec, rng);
    for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
        std::vector<double> v(p.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + amplitude * p[i];
        auto candidate = GridDensity::normalized(clip_renormalize(std::move(v), lo, hi));
        if (membership(spec, candidate).is_member) return candidate;
        amplitude *= 0.5;
    }
    throw GenerationError("sample_member: no member of class '" + std::string(spec.variant_name()) +
                          "' after " + std::to_string(options.max_attempts) + " attempts");
}

std::vector<double> lipschitz_shape(const ClassSpec& spec, Rng& rng) {
    const auto& lip = std::get<LipschitzClass>(spec.kind);
    return smooth_shape(spec.grid_size, 8, lip.gamma + 0.5, rng);
}

std::vector<double> quad_shape(const ClassSpec& spec, Rng& rng) { return smooth_shape(spec.grid_size, 4, 2.0, rng); }

std::vector<double> bv_shape(const ClassSpec& spec, Rng& rng) { return step_shape(spec.grid_size, rng); }

std::vector<double> ambient_shape(const ClassSpec& spec, Rng& rng) { return rough_shape(spec.grid_size, rng); }

GridDensity shrink_until_member(const ClassSpec& spec, const std::vector<double>& shape, double amplitude) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<double> v(shape.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + amplitude * shape[i];
        auto candidate = GridDensity::normalized(std::move(v));
        if (membership(spec, candidate).is_member) return candidate;
        amplitude *= 0.5;
    }
    return uniform_density(spec.grid_size);
}

}  // namespace

void ClassSpec::validate() const {
    bounds.validate(false);
    if (grid_size == 0) throw ConfigError("grid size must be positive");
    if (bounds.alpha > 1.0 || bounds.beta < 1.0) {
        throw ConfigError("bounds must bracket 1 for any density to exist");
    }
    std::visit(
        overloaded{
            [](const AmbientClass&) {},
            [](const LipschitzClass& c) {
                if (!(c.q >= 1.0)) throw ConfigError("Lipschitz class needs q >= 1");
                const double floor = std::max(1.0 / c.q - 0.5, 0.0);
                if (!(c.gamma > floor && c.gamma <= 1.0)) {
                    throw ConfigError("Lipschitz class needs max(1/q - 1/2, 0) < gamma <= 1");
                }
                if (!(c.psi > 1.0)) throw ConfigError("Lipschitz class needs psi > 1");
            },
            [](const BoundedVariationClass& c) {
                if (!(c.zeta > 1.0)) throw ConfigError("BV class needs zeta > 1");
            },
            [](const QuadFunctionalClass& c) {
                if (!(c.gamma > 1.0)) throw ConfigError("Quad class needs gamma > 1");
            },
            [&](const ConvexMixtureClass& c) {
                if (c.components.empty()) throw ConfigError("mixture class needs at least one component");
                for (const auto& f : c.components) {
                    if (f.size() != grid_size) throw ConfigError("mixture components must share the class grid");
                    if (f.min_value() < bounds.alpha - kMembershipTolerance ||
                        f.max_value() > bounds.beta + kMembershipTolerance) {
                        throw ConfigError("mixture components must lie in the ambient bounds");
                    }
                }
            }},
        kind);
}

std::string_view ClassSpec::variant_name() const {
    return std::visit(overloaded{[](const AmbientClass&) { return std::string_view{"ambient"}; },
                                 [](const LipschitzClass&) { return std::string_view{"lipschitz"}; },
                                 [](const BoundedVariationClass&) { return std::string_view{"bv"}; },
                                 [](const QuadFunctionalClass&) { return std::string_view{"quad"}; },
                                 [](const ConvexMixtureClass&) { return std::string_view{"convmix"}; }},
                      kind);
}

double ClassSpec::rate_exponent() const {
    return std::visit(overloaded{[](const AmbientClass&) { return std::numeric_limits<double>::quiet_NaN(); },
                                 [](const LipschitzClass& c) { return 2.0 * c.gamma / (2.0 * c.gamma + 1.0); },
                                 [](const BoundedVariationClass&) { return 2.0 / 3.0; },
                                 [](const QuadFunctionalClass&) { return 4.0 / 5.0; },
                                 [](const ConvexMixtureClass&) { return 1.0; }},
                      kind);
}

double MembershipReport::worst_slack() const {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& s : slacks) worst = std::min(worst, s.slack);
    return worst;
}

MembershipReport membership(const ClassSpec& spec, const GridDensity& f, double tolerance) {
    if (f.size() != spec.grid_size) {
        throw DimensionError("membership: density has " + std::to_string(f.size()) + " cells, class expects " +
                             std::to_string(spec.grid_size));
    }
    MembershipReport report;
    auto& s = report.slacks;
    s.push_back({"normalization", kNormalizationTolerance - std::abs(grid_mass(f.values()) - 1.0)});
    s.push_back({"lower_bound", f.min_value() - spec.bounds.alpha});
    s.push_back({"upper_bound", spec.bounds.beta - f.max_value()});
    std::visit(overloaded{[](const AmbientClass&) {},
                          [&](const LipschitzClass& c) {
                              s.push_back({"sup_bound", c.psi - f.max_value()});
                              s.push_back({"q_norm", c.psi - q_norm(f.values(), c.q)});
                              s.push_back({"shift_modulus", lipschitz_shift_slack(f, c)});
                          },
                          [&](const BoundedVariationClass& c) {
                              s.push_back({"sup_bound", c.zeta - f.max_value()});
                              s.push_back({"total_variation", c.zeta - total_variation(f)});
                          },
                          [&](const QuadFunctionalClass& c) {
                              s.push_back({"second_difference", c.gamma - max_scaled_second_difference(f)});
                          },
                          [&](const ConvexMixtureClass& c) {
                              const auto fit = fit_simplex_weights(c, f);
                              s.push_back({"mixture_residual", kMixtureResidualTolerance - fit.residual});
                          }},
               spec.kind);
    report.is_member = std::all_of(s.begin(), s.end(), [&](const ConstraintSlack& c) { return c.slack >= -tolerance; });
    return report;
}

GridDensity convex_combine(const GridDensity& f, const GridDensity& g, double kappa) {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw DomainError("convex_combine: kappa must lie in [0,1]");
    if (f.size() != g.size()) throw DimensionError("convex_combine: grid sizes differ");
    std::vector<double> out(f.size());
    kernels::affine_combine(kappa, f.values(), 1.0 - kappa, g.values(), out);
    return GridDensity(std::move(out));
}

GridDensity sample_member(const ClassSpec& spec, Rng& rng, const SamplerOptions& options) {
    return std::visit(
        overloaded{[&](const AmbientClass&) { return sample_by_shrinking(spec, rng, options, ambient_shape); },
                   [&](const LipschitzClass&) { return sample_by_shrinking(spec, rng, options, lipschitz_shape); },
                   [&](const BoundedVariationClass&) { return sample_by_shrinking(spec, rng, options, bv_shape); },
                   [&](const QuadFunctionalClass&) { return sample_by_shrinking(spec, rng, options, quad_shape); },
                   [&](const ConvexMixtureClass& c) {
                       std::gamma_distribution<double> gamma(1.0, 1.0);
                       Eigen::VectorXd w(static_cast<Eigen::Index>(c.components.size()));
                       for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = gamma(rng);
                       w /= w.sum();
                       auto f = mixture_density(c, w);
                       if (!membership(spec, f).is_member) {
                           throw GenerationError("sample_member: Dirichlet mixture failed membership");
                       }
                       return f;
                   }},
        spec.kind);
}

GridDensity sin_family(int j, double alpha, std::size_t m) {
    if (j < 1) throw DomainError("sin_family needs j >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("sin_family needs alpha in (0,1)");
    if (m < 16 * static_cast<std::size_t>(j)) {
        throw ResolutionError("sin_family needs m >= 16 j (m=" + std::to_string(m) + ", j=" + std::to_string(j) + ")");
    }
    const auto x = midpoints(m);
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = 1.0 + (1.0 - alpha) * std::sin(2.0 * std::numbers::pi * j * x[i]);
    return GridDensity::normalized(std::move(v));
}

GramReport gram_matrix(const ConvexMixtureClass& mixture) {
    const auto k = static_cast<Eigen::Index>(mixture.components.size());
    GramReport report;
    report.gram.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& fi = mixture.components[static_cast<std::size_t>(i)];
        for (Eigen::Index j = i; j < k; ++j) {
            const auto& fj = mixture.components[static_cast<std::size_t>(j)];
            if (fi.size() != fj.size()) throw DimensionError("gram_matrix: components on different grids");
            const double g = kernels::dot(fi.values(), fj.values()) / static_cast<double>(fi.size());
            report.gram(i, j) = g;
            report.gram(j, i) = g;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(report.gram, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = eig.eigenvalues().minCoeff();
    report.positive_definite = report.min_eigenvalue > 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff());
    return report;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    const auto n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        cumulative += u[static_cast<std::size_t>(i)];
        const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (u[static_cast<std::size_t>(i)] - t > 0.0) theta = t;
    }
    return (v.array() - theta).max(0.0).matrix();
}

GridDensity mixture_density(const ConvexMixtureClass& mixture, const Eigen::VectorXd& weights) {
    if (static_cast<std::size_t>(weights.size()) != mixture.components.size() || mixture.components.empty()) {
        throw DimensionError("mixture_density: weight count does not match components");
    }
    const std::size_t m = mixture.components.front().size();
    std::vector<double> out(m, 0.0);
    for (std::size_t c = 0; c < mixture.components.size(); ++c) {
        kernels::affine_combine(1.0, out, weights(static_cast<Eigen::Index>(c)), mixture.components[c].values(), out);
    }
    return GridDensity::normalized(std::move(out));
}

SimplexFit fit_simplex_weights(const ConvexMixtureClass& mixture, const GridDensity& f) {
    const auto k = static_cast<Eigen::Index>(mixture.components.size());
    if (k == 0) throw DimensionError("fit_simplex_weights: empty mixture");
    const auto m = static_cast<double>(f.size());
    const auto gram = gram_matrix(mixture).gram;
    Eigen::VectorXd b(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& fi = mixture.components[static_cast<std::size_t>(i)];
        if (fi.size() != f.size()) throw DimensionError("fit_simplex_weights: grid mismatch");
        b(i) = kernels::dot(fi.values(), f.values()) / m;
    }
    const double ff = kernels::dot(f.values(), f.values()) / m;
    // ||f - sum w_i f_i||^2 = w'Gw - 2 b'w + <f, f>
    auto objective = [&](const Eigen::VectorXd& w) { return std::max(0.0, w.dot(gram * w) - 2.0 * b.dot(w) + ff); };

    // Accelerated projected gradient, at most 200 iterations.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lipschitz = std::max(eig.eigenvalues().maxCoeff(), 1e-300);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    Eigen::VectorXd y = w;
    double t = 1.0;
    int it = 0;
    for (; it < 200; ++it) {
        const Eigen::VectorXd next = project_to_simplex(y - (gram * y - b) / lipschitz);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = next + ((t - 1.0) / t_next) * (next - w);
        w = next;
        t = t_next;
        // Stationarity of the projected-gradient map at w, not the step size:
        // momentum can park y on a vertex for a few iterations.
        const Eigen::VectorXd mapped = project_to_simplex(w - (gram * w - b) / lipschitz);
        if ((mapped - w).lpNorm<Eigen::Infinity>() < 1e-15) break;
    }

    // Active-set polish: solve the equality-constrained problem on a support,
    // drop coordinates that turn negative, add the coordinate that most
    // violates the optimality conditions, until none does.
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (w(i) > 0.0) support.push_back(i);
    }
    Eigen::VectorXd best = w;
    double best_obj = objective(w);
    for (int round = 0; round < 4 * static_cast<int>(k) + 4 && !support.empty(); ++round) {
        const auto s = static_cast<Eigen::Index>(support.size());
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
        Eigen::VectorXd rhs(s + 1);
        for (Eigen::Index a = 0; a < s; ++a) {
            for (Eigen::Index c = 0; c < s; ++c) kkt(a, c) = gram(support[a], support[c]);
            kkt(a, s) = 1.0;
            kkt(s, a) = 1.0;
            rhs(a) = b(support[a]);
        }
        rhs(s) = 1.0;
        const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        std::vector<Eigen::Index> keep;
        for (Eigen::Index a = 0; a < s; ++a) {
            if (sol(a) >= 0.0) keep.push_back(support[a]);
        }
        if (keep.size() != support.size()) {
            support = std::move(keep);
            continue;
        }
        Eigen::VectorXd candidate = Eigen::VectorXd::Zero(k);
        for (Eigen::Index a = 0; a < s; ++a) candidate(support[a]) = sol(a);
        const double obj = objective(candidate);
        if (obj < best_obj) {
            best = candidate;
            best_obj = obj;
        }
        const Eigen::VectorXd grad = gram * candidate - b;
        double level = 0.0;
        for (const Eigen::Index i : support) level += grad(i);
        level /= static_cast<double>(s);
        Eigen::Index entering = -1;
        double worst = -1e-14;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (std::find(support.begin(), support.end(), i) != support.end()) continue;
            if (grad(i) - level < worst) {
                worst = grad(i) - level;
                entering = i;
            }
        }
        if (entering < 0) break;
        support.push_back(entering);
        std::sort(support.begin(), support.end());
    }

    // Report the residual measured on the grid rather than through the Gram form.
    std::vector<double> fitted(f.size(), 0.0);
    for (Eigen::Index i = 0; i < k; ++i) {
        kernels::affine_combine(1.0, fitted, best(i), mixture.components[static_cast<std::size_t>(i)].values(), fitted);
    }
    SimplexFit fit;
    fit.weights = best;
    fit.residual = std::sqrt(kernels::squared_distance(fitted, f.values()) / m);
    fit.iterations = it;
    return fit;
}

GridDensity default_truth(const ClassSpec& spec) {
    const std::size_t m = spec.grid_size;
    const auto x = midpoints(m);
    const double room = std::min(1.0 - spec.bounds.alpha, upper_cap(spec) - 1.0);
    return std::visit(
        overloaded{[&](const AmbientClass&) {
                       std::vector<double> p(m);
                       for (std::size_t i = 0; i < m; ++i) p[i] = std::sin(2.0 * std::numbers::pi * x[i]);
                       return shrink_until_member(spec, p, 0.8 * room);
                   },
                   [&](const LipschitzClass&) {
                       std::vector<double> p(m);
                       for (std::size_t i = 0; i < m; ++i) p[i] = std::cos(std::numbers::pi * x[i]);
                       return shrink_until_member(spec, p, std::min(0.25, 0.5 * room));
                   },
                   [&](const BoundedVariationClass&) {
                       std::vector<double> p(m);
                       for (std::size_t i = 0; i < m; ++i) p[i] = i < m / 2 ? -1.0 : 1.0;
                       return shrink_until_member(spec, center_and_scale(p), std::min(0.3, 0.8 * room));
                   },
                   [&](const QuadFunctionalClass&) {
                       std::vector<double> p(m);
                       for (std::size_t i = 0; i < m; ++i) p[i] = std::cos(std::numbers::pi * x[i]);
                       return shrink_until_member(spec, p, std::min(0.3, 0.8 * room));
                   },
                   [&](const ConvexMixtureClass& c) {
                       const auto k = static_cast<Eigen::Index>(c.components.size());
                       Eigen::VectorXd w(k);
                       for (Eigen::Index i = 0; i < k; ++i) w(i) = static_cast<double>(k - i);
                       return mixture_density(c, w / w.sum());
                   }},
        spec.kind);
}

ClassSpec example_lipschitz(const Bounds& bounds, std::size_t m) {
    return ClassSpec{bounds, m, LipschitzClass{1.0, 2.0, std::min(1.8, 0.5 * (1.0 + bounds.beta))}};
}

ClassSpec example_bv(const Bounds& bounds, std::size_t m) { return ClassSpec{bounds, m, BoundedVariationClass{1.5}}; }

ClassSpec example_quad(const Bounds& bounds, std::size_t m) { return ClassSpec{bounds, m, QuadFunctionalClass{10.0}}; }

ClassSpec example_convmix(const Bounds& bounds, std::size_t m) {
    const double sine_alpha = std::max({bounds.alpha, 2.0 - bounds.beta, 0.5});
    if (!(sine_alpha < 1.0)) throw ConfigError("bounds too tight for the sine mixture components");
    ConvexMixtureClass mix;
    for (int j = 1; j <= 3; ++j) mix.components.push_back(sin_family(j, sine_alpha, m));
    return ClassSpec{bounds, m, std::move(mix)};
}

void to_json(nlohmann::json& j, const ClassSpec& spec) {
    j = nlohmann::json{{"variant", spec.variant_name()},
                       {"alpha", spec.bounds.alpha},
                       {"beta", spec.bounds.beta},
                       {"m", spec.grid_size}};
    std::visit(overloaded{[](const AmbientClass&) {},
                          [&](const LipschitzClass& c) {
                              j["gamma"] = c.gamma;
                              j["q"] = std::isinf(c.q) ? nlohmann::json("inf") : nlohmann::json(c.q);
                              j["psi"] = c.psi;
                          },
                          [&](const BoundedVariationClass& c) { j["zeta"] = c.zeta; },
                          [&](const QuadFunctionalClass& c) { j["gamma"] = c.gamma; },
                          [&](const ConvexMixtureClass& c) { j["components"] = c.components; }},
               spec.kind);
}

void from_json(const nlohmann::json& j, ClassSpec& spec) {
    const auto variant = j.at("variant").get<std::string>();
    spec.bounds.alpha = j.value("alpha", 0.5);
    spec.bounds.beta = j.value("beta", 2.0);
    spec.grid_size = j.value("m", std::size_t{64});
    if (variant == "ambient") {
        spec.kind = AmbientClass{};
    } else if (variant == "lipschitz") {
        LipschitzClass c;
        c.gamma = j.value("gamma", c.gamma);
        if (j.contains("q")) {
            const auto& q = j.at("q");
            c.q = q.is_string() && q.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                                                 : q.get<double>();
        }
        c.psi = j.value("psi", c.psi);
        spec.kind = c;
    } else if (variant == "bv") {
        spec.kind = BoundedVariationClass{j.value("zeta", 1.5)};
    } else if (variant == "quad") {
        spec.kind = QuadFunctionalClass{j.value("gamma", 10.0)};
    } else if (variant == "convmix") {
        ConvexMixtureClass c;
        if (j.contains("components")) {
            c.components = j.at("components").get<std::vector<GridDensity>>();
        } else {
            const double sine_alpha = j.value("sine_alpha", 0.5);
            for (const int jj : j.value("sine_components", std::vector<int>{1, 2, 3})) {
                c.components.push_back(sin_family(jj, sine_alpha, spec.grid_size));
            }
        }
        spec.kind = std::move(c);
    } else {
        throw ConfigError("unknown class variant '" + variant + "'");
    }
    spec.validate();
}

}  // namespace sievelab
