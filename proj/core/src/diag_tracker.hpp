#pragma once

// Running own-group group scores for a shrinking identity set.

#include <cstddef>
#include <vector>

#include "fairsample/manifest.hpp"
#include "fairsample/numeric.hpp"
#include "fairsample/sampling.hpp"
#include "fairsample/scoring.hpp"

namespace fairsample::detail {

class DiagTracker {
 public:
  DiagTracker(const Manifest& m, Protocol p);

  Protocol protocol() const { return protocol_; }
  double own(std::size_t identity) const { return own_[identity]; }
  std::size_t count(GroupIndex g) const { return counts_[g]; }
  bool alive(std::size_t identity) const { return alive_[identity] != 0; }

  /// Mean (A, B) or sum (C) of the own-group scores still in group `g`.
  /// Undefined (NaN) for an emptied group under A/B.
  double diag(GroupIndex g) const;
  std::vector<double> diag() const;

  RemovalEvent remove(std::size_t identity, std::size_t step);

  /// Rebuilds every group score from the surviving identities and throws
  /// InvariantError if any running value drifted by more than `tolerance`.
  void verify(double tolerance) const;

 private:
  const Manifest& manifest_;
  Protocol protocol_;
  std::vector<double> own_;
  std::vector<char> alive_;
  std::vector<CompensatedSum> sums_;
  std::vector<std::size_t> counts_;
};

}  // namespace fairsample::detail
