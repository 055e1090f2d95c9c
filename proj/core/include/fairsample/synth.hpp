#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fairsample/manifest.hpp"

namespace fairsample {

struct SynthConfig {
  std::uint64_t seed = 0;
  GroupSet groups;
  std::vector<std::size_t> identities_per_group;
  std::size_t images_min = 1;
  std::size_t images_max = 1;
  /// Per group; larger values push image scores towards their peak group.
  std::vector<double> concentration;
  /// Fraction of identities whose scores peak on a random other group.
  double label_noise = 0.0;

  /// Throws DataError describing the first problem found.
  void validate() const;
};

/// Reads the JSON form: {"seed", "groups", "identities_per_group",
/// "images_per_identity": [min, max], "concentration": number or list,
/// "label_noise"}. Missing fields keep their defaults.
SynthConfig parse_synth_config(std::string_view json);

/// Deterministic in the config. Generation order:
///
///  1. Identities are laid out group by group; identity k (0-based overall)
///     is named "id%06d" and its images "<identity>_%03d".
///  2. round(label_noise * total) identities are chosen by shuffling all
///     identity indices and taking the prefix. In identity order, each chosen
///     identity draws o = below(d - 1) and peaks on group o (o < own) or
///     o + 1 (otherwise). Everyone else peaks on its own group.
///  3. For each identity in order: typicality t = 1 / (1 - uniform01()), a
///     Pareto tail so that every group holds some very typical identities;
///     image count images_min + below(images_max - images_min + 1); then per
///     image,
///     e_g = uniform01() for every group g, and with c the concentration of
///     the identity's assigned group,
///         w_peak = 1 + c * t * (1 + e_peak),  w_g = 1 + min(c, 1) * e_g,
///     normalised to sum to one.
///
/// All draws come from one SplitMix64 stream seeded with `seed`. As c grows
/// the vector tends to one-hot on the peak; as c shrinks it tends to uniform.
/// The peak share increases strictly with c.
Manifest generate(const SynthConfig& config);

}  // namespace fairsample
