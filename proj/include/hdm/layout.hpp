#pragma once

#include <cstddef>
#include <vector>

namespace hdm {

/// Fibre sizes kappa_j and offsets s_j (s_0 = 0, s_j = sum of earlier sizes)
/// locating each fibre's segment inside a length-kappa vector.
struct BlockLayout {
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> offsets;
  std::size_t total = 0;

  static BlockLayout from_sizes(std::vector<std::size_t> sizes);

  std::size_t fibre_count() const { return sizes.size(); }
  /// Fibre owning global point index p.
  std::size_t fibre_of(std::size_t p) const;

  bool operator==(const BlockLayout&) const = default;
};

}  // namespace hdm
