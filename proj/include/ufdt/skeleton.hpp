// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ufdt/grid.hpp"

#include <array>
#include <vector>

namespace ufdt {

/// Offsets of the 26 neighbors of a voxel.
const std::vector<std::array<int, 3>>& neighbors26();

/// True if removing the center of a 3x3x3 neighborhood (index (a+1)*9 +
/// (b+1)*3 + (c+1), center at 13) preserves topology under 26/6 adjacency.
bool is_simple_point(const std::array<bool, 27>& nbhd);

/// Connected components of a mask (26-connectivity).
int count_components(const BinaryMask& mask);

/// Drops 26-connected components with fewer than `min_voxels` voxels.
BinaryMask remove_small_components(const BinaryMask& mask, int min_voxels);

/// Topology-preserving directional thinning to one-voxel centerlines.
/// Endpoints are kept, so branches are not eroded away.
BinaryMask skeletonize(const BinaryMask& mask);

/// Removes side branches of at most `max_length` voxels hanging off a
/// junction. Branches of isolated short components are kept.
BinaryMask prune_spurs(const BinaryMask& skeleton, int max_length = 2);

/// Exact Euclidean distance (mm) from each object voxel to the nearest
/// background voxel center; zero on background. Outside the grid counts as
/// background.
Volume<double> distance_transform(const BinaryMask& mask);

/// Number of 26-neighbors set in the skeleton.
int neighbor_count(const BinaryMask& skeleton, int i, int j, int k);

}  // namespace ufdt
