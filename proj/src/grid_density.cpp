#include "sievelab/grid_density.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sievelab/errors.hpp"
#include "sievelab/kernels.hpp"

namespace sievelab {
namespace {

void require_same_grid(const GridDensity& f, const GridDensity& g, const char* op) {
    if (f.size() != g.size()) {
        throw DimensionError(std::string(op) + ": grid sizes differ (" + std::to_string(f.size()) +
                             " vs " + std::to_string(g.size()) + ")");
    }
}

void require_positive(const GridDensity& g, const char* op) {
    for (const double v : g.values()) {
        if (!(v > 0.0)) {
            throw DomainError(std::string(op) + ": reference density must be strictly positive");
        }
    }
}

}  // namespace

void Bounds::validate(bool require_positive_alpha) const {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha < 0.0 || !(alpha < beta)) {
        throw ConfigError("bounds must satisfy 0 <= alpha < beta < inf (got alpha=" +
                          std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
    }
    if (require_positive_alpha && !(alpha > 0.0)) {
        throw ConfigError("alpha must be strictly positive here");
    }
}

GridDensity::GridDensity(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DomainError("GridDensity needs at least one cell");
    for (const double v : values_) {
        if (!std::isfinite(v)) throw DomainError("GridDensity values must be finite");
    }
    const double mass = grid_mass(values_);
    if (std::abs(mass - 1.0) > kNormalizationTolerance) {
        throw DomainError("GridDensity does not integrate to 1 (mass " + std::to_string(mass) + ")");
    }
}

GridDensity GridDensity::normalized(std::vector<double> values) {
    if (values.empty()) throw DomainError("GridDensity needs at least one cell");
    const double mass = grid_mass(values);
    if (!(mass > 0.0) || !std::isfinite(mass)) {
        throw DomainError("cannot normalize a vector with non-positive mass");
    }
    for (double& v : values) v /= mass;
    return GridDensity(std::move(values));
}

double GridDensity::min_value() const { return *std::min_element(values_.begin(), values_.end()); }

double GridDensity::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

std::size_t GridDensity::cell_of(double x, std::size_t m) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("point outside [0,1]");
    const double scaled = std::ceil(x * static_cast<double>(m));
    if (scaled <= 1.0) return 0;
    return std::min(static_cast<std::size_t>(scaled) - 1, m - 1);
}

GridDensity uniform_density(std::size_t m) {
    if (m == 0) throw DomainError("uniform_density needs m >= 1");
    return GridDensity(std::vector<double>(m, 1.0));
}

double grid_mass(std::span<const double> values) {
    return kernels::sum(values) / static_cast<double>(values.size());
}

double l2_distance_squared(const GridDensity& f, const GridDensity& g) {
    require_same_grid(f, g, "l2_distance");
    return kernels::squared_distance(f.values(), g.values()) / static_cast<double>(f.size());
}

double l2_distance(const GridDensity& f, const GridDensity& g) {
    return std::sqrt(l2_distance_squared(f, g));
}

double kl_divergence(const GridDensity& f, const GridDensity& g) {
    require_same_grid(f, g, "kl_divergence");
    require_positive(g, "kl_divergence");
    // No vector log in the kernel set; this stays scalar.
    double acc = 0.0;
    const auto fv = f.values();
    const auto gv = g.values();
    for (std::size_t i = 0; i < fv.size(); ++i) {
        if (fv[i] > 0.0) acc += fv[i] * std::log(fv[i] / gv[i]);
    }
    return acc / static_cast<double>(f.size());
}

double chi_square(const GridDensity& f, const GridDensity& g) {
    require_same_grid(f, g, "chi_square");
    require_positive(g, "chi_square");
    return kernels::chi_square_sum(f.values(), g.values()) / static_cast<double>(f.size());
}

double hellinger(const GridDensity& f, const GridDensity& g) {
    require_same_grid(f, g, "hellinger");
    if (f.min_value() < 0.0 || g.min_value() < 0.0) {
        throw DomainError("hellinger: densities must be nonnegative");
    }
    return std::sqrt(kernels::hellinger_sum(f.values(), g.values()) / static_cast<double>(f.size()));
}

double h_function(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("h_function needs gamma > 0");
    const double t = gamma - 1.0;
    if (std::abs(t) < 1e-8) return 0.5;
    if (std::abs(t) < 1e-2) {
        // Taylor series of (t - log1p t) / t^2 = sum_k (-t)^k / (k + 2).
        double term = 1.0;
        double acc = 0.0;
        for (int k = 0; k < 10; ++k) {
            acc += term / (k + 2);
            term *= -t;
        }
        return acc;
    }
    return (t - std::log1p(t)) / (t * t);
}

EquivalenceConstants equivalence_constants(const Bounds& bounds) {
    if (!(bounds.alpha > 0.0)) throw DomainError("equivalence constants need alpha > 0");
    bounds.validate(true);
    EquivalenceConstants k{};
    k.h_of_ratio = h_function(bounds.beta / bounds.alpha);
    k.c_ab = k.h_of_ratio / bounds.beta;
    k.K_ab = bounds.beta / (bounds.alpha * bounds.alpha * k.c_ab);
    return k;
}

bool elementary_log_check(double gamma, double x) {
    if (!(gamma > 0.0) || !(x > 0.0) || x > gamma) {
        throw DomainError("elementary_log_check needs gamma > 0 and 0 < x <= gamma");
    }
    const double u = x - 1.0;
    return std::log(x) <= u - h_function(gamma) * u * u + kInequalitySlack;
}

double diameter_upper_bound(const Bounds& bounds) { return 2.0 * std::sqrt(bounds.beta); }

void to_json(nlohmann::json& j, const GridDensity& f) {
    j = nlohmann::json{{"m", f.size()},
                       {"values", std::vector<double>(f.values().begin(), f.values().end())}};
}

void from_json(const nlohmann::json& j, GridDensity& f) {
    auto values = j.at("values").get<std::vector<double>>();
    if (j.contains("m") && j.at("m").get<std::size_t>() != values.size()) {
        throw ParseError("density JSON: m does not match the number of values");
    }
    f = GridDensity(std::move(values));
}

void to_json(nlohmann::json& j, const Bounds& b) { j = nlohmann::json{{"alpha", b.alpha}, {"beta", b.beta}}; }

void from_json(const nlohmann::json& j, Bounds& b) {
    b.alpha = j.at("alpha").get<double>();
    b.beta = j.at("beta").get<double>();
}

}  // namespace sievelab
