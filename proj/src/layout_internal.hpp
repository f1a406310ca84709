#pragma once

#include "semspace/layout.hpp"

namespace semspace::detail {

/// Subtracts the centroid from every point.
void center(Coords2D& coords);

/// trustworthiness() on the whole layout, or on a seeded subset when the
/// layout has more than config.trustworthiness_sample points.
double layout_trustworthiness(const EmbeddingTable& vectors, const Coords2D& coords, const LayoutConfig& config);

}  // namespace semspace::detail
