#include "sievelab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sievelab {

std::vector<double> sample_iid(const GridDensity& f, std::size_t n, Rng& rng) {
    const std::size_t m = f.size();
    std::vector<double> cdf(f.values().begin(), f.values().end());
    std::partial_sum(cdf.begin(), cdf.end(), cdf.begin());
    const double total = cdf.back();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = unit(rng) * total;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const std::size_t cell = std::min(static_cast<std::size_t>(it - cdf.begin()), m - 1);
        const double w = 1.0 - unit(rng);  // (0, 1]
        double x = std::min((static_cast<double>(cell) + w) / static_cast<double>(m), 1.0);
        // Keep the point off the left edge of its cell after rounding.
        while (GridDensity::cell_of(x, m) < cell) x = std::nextafter(x, 2.0);
        out.push_back(x);
    }
    return out;
}

}  // namespace sievelab
