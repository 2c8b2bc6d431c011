#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace seamstress {

/// Adjacency list over dense node indices [0, n).
using Adjacency = std::vector<std::vector<std::size_t>>;

Adjacency make_adjacency(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

/// Strongly connected components (iterative Tarjan). Each component lists its
/// members in ascending index order; components are ordered by their smallest
/// member. The result partitions [0, n).
std::vector<std::vector<std::size_t>> strongly_connected_components(const Adjacency& adj);

/// Component index for every node, given the output of
/// strongly_connected_components.
std::vector<std::size_t> component_index(std::size_t n,
                                         const std::vector<std::vector<std::size_t>>& sccs);

/// Stable dependency order. An edge a -> b means "a references b", so b must
/// come first. Members of one SCC stay contiguous in ascending index order;
/// among ready components the one with the smallest member goes first (Kahn
/// with source-order tie-breaking). Returns a permutation of [0, n).
std::vector<std::size_t> stable_dependency_order(const Adjacency& adj);

}  // namespace seamstress
