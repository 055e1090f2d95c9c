#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairsample/manifest.hpp"

namespace fairsample {

struct Distribution {
  std::size_t count = 0;
  double mean = 0.0;
  std::optional<double> stddev;  // Bessel-corrected; unset for a single value
  double min = 0.0;
  double max = 0.0;
  std::array<double, 9> deciles{};  // 10th..90th percentiles, linear interpolation
};

/// Throws DataError on an empty sample.
Distribution describe(std::span<const double> values);

struct GroupSummary {
  std::string group;
  std::size_t identities = 0;
  std::size_t images = 0;
  std::optional<Distribution> own_score;  // protocol-A own-group identity score
};

struct ManifestSummary {
  std::size_t images = 0;
  std::size_t identities = 0;
  std::vector<GroupSummary> groups;
};

ManifestSummary summarize(const Manifest& m);

std::string format_summary_json(const ManifestSummary& summary);

}  // namespace fairsample
