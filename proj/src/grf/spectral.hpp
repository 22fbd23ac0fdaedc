#pragma once

#include "reki/grf.hpp"

#include <vector>

namespace reki::detail {

struct SpectralMode {
  int p = 0;
  int q = 0;
  double eigenvalue = 0.0;
};

/// All admissible cosine modes of a spectral family, sorted by descending
/// eigenvalue with ties broken by (q, p).
std::vector<SpectralMode> spectral_modes(const CovarianceSpec& spec, const Grid& grid);

/// Euclidean-normalized 1D cosine vector of mode p on n cells, evaluated at
/// the normalized coordinate s = (x - x0) / (x1 - x0).
double cosine_mode(int p, int n, double s);

}  // namespace reki::detail
