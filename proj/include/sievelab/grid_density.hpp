#pragma once

// Piecewise-constant densities on the uniform m-cell grid over [0,1], with the
// normalized Lebesgue measure. Cell i covers (i/m, (i+1)/m]; the point 0 falls
// in cell 0. Integrals are exact cell averages: int f dmu = (1/m) sum_i f_i.

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

namespace sievelab {

inline constexpr double kNormalizationTolerance = 1e-9;
inline constexpr double kInequalitySlack = 1e-12;

struct Bounds {
    double alpha = 0.5;
    double beta = 2.0;

    // Throws ConfigError unless 0 <= alpha < beta < inf (alpha > 0 when
    // require_positive_alpha).
    void validate(bool require_positive_alpha = true) const;
};

class GridDensity {
public:
    GridDensity() = default;

    // Values must be finite and average to 1 within kNormalizationTolerance.
    explicit GridDensity(std::vector<double> values);

    // Rescales a positive-mass vector so that it averages to exactly 1.
    static GridDensity normalized(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    double min_value() const;
    double max_value() const;

    // Density at a point of [0,1] (its cell's value).
    double at(double x) const { return values_[cell_of(x, size())]; }

    static std::size_t cell_of(double x, std::size_t m);

    friend bool operator==(const GridDensity&, const GridDensity&) = default;

private:
    std::vector<double> values_;
};

GridDensity uniform_density(std::size_t m);

// Mean of values, i.e. the integral against mu.
double grid_mass(std::span<const double> values);

double l2_distance(const GridDensity& f, const GridDensity& g);
double l2_distance_squared(const GridDensity& f, const GridDensity& g);
double kl_divergence(const GridDensity& f, const GridDensity& g);
double chi_square(const GridDensity& f, const GridDensity& g);
double hellinger(const GridDensity& f, const GridDensity& g);

// (g - 1 - log g) / (g - 1)^2, continuously extended by 1/2 at g = 1.
double h_function(double gamma);

struct EquivalenceConstants {
    double h_of_ratio;  // h(beta / alpha)
    double c_ab;        // h(beta / alpha) / beta
    double K_ab;        // beta / (alpha^2 c_ab)
};

EquivalenceConstants equivalence_constants(const Bounds& bounds);

// log x <= (x - 1) - h(gamma) (x - 1)^2 for 0 < x <= gamma, checked with
// kInequalitySlack.
bool elementary_log_check(double gamma, double x);

// Every pair in F^[alpha, beta] is within 2 sqrt(beta) in L2.
double diameter_upper_bound(const Bounds& bounds);

void to_json(nlohmann::json& j, const GridDensity& f);
void from_json(const nlohmann::json& j, GridDensity& f);
void to_json(nlohmann::json& j, const Bounds& b);
void from_json(const nlohmann::json& j, Bounds& b);

}  // namespace sievelab
