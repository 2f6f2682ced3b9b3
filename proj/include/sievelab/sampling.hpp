#pragma once

#include <cstddef>
#include <vector>

#include "sievelab/grid_density.hpp"
#include "sievelab/rng.hpp"

namespace sievelab {

// Inverse-CDF draws: a uniform picks the cell by cumulative mass, a second
// uniform places the point inside the (right-closed) cell.
std::vector<double> sample_iid(const GridDensity& f, std::size_t n, Rng& rng);

}  // namespace sievelab
