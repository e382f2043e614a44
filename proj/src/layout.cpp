#include "hdm/layout.hpp"

#include <algorithm>

#include "hdm/error.hpp"

namespace hdm {

BlockLayout BlockLayout::from_sizes(std::vector<std::size_t> sizes) {
  BlockLayout layout;
  layout.offsets.reserve(sizes.size());
  for (std::size_t s : sizes) {
    if (s == 0) throw Error(ErrorCode::InvalidArgument, "every fibre needs at least one point");
    layout.offsets.push_back(layout.total);
    layout.total += s;
  }
  layout.sizes = std::move(sizes);
  return layout;
}

std::size_t BlockLayout::fibre_of(std::size_t p) const {
  if (p >= total) throw Error(ErrorCode::IndexOutOfRange, "point index " + std::to_string(p));
  auto it = std::upper_bound(offsets.begin(), offsets.end(), p);
  return static_cast<std::size_t>(it - offsets.begin()) - 1;
}

}  // namespace hdm
