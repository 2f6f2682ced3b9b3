#pragma once

// Convex density classes on the grid: the ambient class F^[alpha, beta] and
// the four example classes (Lipschitz, bounded variation, quadratic
// functional, finite convex mixtures), each intersected with the ambient
// bounds. Function-space constraints are checked through grid proxies:
//
//   Lipschitz   ||f(. + s/m) - f||_q <= psi (s/m)^gamma for s = 1..m-1, with
//               f(x + h) = f(1) past the right edge; ||f||_q <= psi; f <= psi.
//   BV          sum_i |f_{i+1} - f_i| <= zeta and max f <= zeta.
//   Quad        m^2 |f_{i+1} - 2 f_i + f_{i-1}| <= gamma (one-sided stencils
//               at both ends).
//   ConvMix     distance from f to the simplex hull of the components <= 1e-8.

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sievelab/grid_density.hpp"
#include "sievelab/rng.hpp"

namespace sievelab {

struct AmbientClass {};

struct LipschitzClass {
    double gamma = 1.0;
    double q = std::numeric_limits<double>::infinity();
    double psi = 2.0;
};

struct BoundedVariationClass {
    double zeta = 1.5;
};

struct QuadFunctionalClass {
    double gamma = 10.0;
};

struct ConvexMixtureClass {
    std::vector<GridDensity> components;
};

using ClassVariant = std::variant<AmbientClass, LipschitzClass, BoundedVariationClass,
                                  QuadFunctionalClass, ConvexMixtureClass>;

struct ClassSpec {
    Bounds bounds;
    std::size_t grid_size = 64;
    ClassVariant kind = AmbientClass{};

    // Throws ConfigError on out-of-range parameters.
    void validate() const;

    std::string_view variant_name() const;

    // Minimax exponent r in risk ~ n^{-r} for the class; NaN for the ambient
    // class, which is not totally bounded.
    double rate_exponent() const;
};

inline constexpr double kMembershipTolerance = 1e-9;
inline constexpr double kMixtureResidualTolerance = 1e-8;

struct ConstraintSlack {
    std::string name;
    double slack;  // >= -tolerance means satisfied
};

struct MembershipReport {
    bool is_member = false;
    std::vector<ConstraintSlack> slacks;

    double worst_slack() const;
};

MembershipReport membership(const ClassSpec& spec, const GridDensity& f,
                            double tolerance = kMembershipTolerance);

inline bool is_member(const ClassSpec& spec, const GridDensity& f) {
    return membership(spec, f).is_member;
}

// kappa f + (1 - kappa) g.
GridDensity convex_combine(const GridDensity& f, const GridDensity& g, double kappa);

struct SamplerOptions {
    int max_attempts = 64;
};

// Deterministic given the stream state. Throws GenerationError when no member
// is produced within the attempt budget.
GridDensity sample_member(const ClassSpec& spec, Rng& rng, const SamplerOptions& options = {});

// Cell-midpoint values of 1 + (1 - alpha) sin(2 pi j x), renormalized.
// Requires m >= 16 j.
GridDensity sin_family(int j, double alpha, std::size_t m);

struct GramReport {
    Eigen::MatrixXd gram;
    double min_eigenvalue = 0.0;
    bool positive_definite = false;
};

GramReport gram_matrix(const ConvexMixtureClass& mixture);

// Least-squares projection of f onto the convex hull of the components.
struct SimplexFit {
    Eigen::VectorXd weights;
    double residual = 0.0;  // L2 distance from f to the fitted mixture
    int iterations = 0;
};

SimplexFit fit_simplex_weights(const ConvexMixtureClass& mixture, const GridDensity& f);

// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

GridDensity mixture_density(const ConvexMixtureClass& mixture, const Eigen::VectorXd& weights);

// Representative member used as the default truth for experiments.
GridDensity default_truth(const ClassSpec& spec);

// Example classes at the repository's default parameters.
ClassSpec example_lipschitz(const Bounds& bounds, std::size_t m);
ClassSpec example_bv(const Bounds& bounds, std::size_t m);
ClassSpec example_quad(const Bounds& bounds, std::size_t m);
ClassSpec example_convmix(const Bounds& bounds, std::size_t m);  // sine components j = 1, 2, 3

void to_json(nlohmann::json& j, const ClassSpec& spec);
void from_json(const nlohmann::json& j, ClassSpec& spec);

}  // namespace sievelab
