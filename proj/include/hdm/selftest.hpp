#pragma once

#include <string>
#include <vector>

namespace hdm {

struct SelftestResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Quick invariant suite (a few seconds): geometry, W and Laplacian
/// invariants, eigensolver against a dense oracle, the block Frobenius
/// identity, the two-vertex spectrum and manifest round trip.
std::vector<SelftestResult> run_selftest();

}  // namespace hdm
