#include "fairsample/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "fairsample/error.hpp"
#include "fairsample/rng.hpp"

namespace fairsample {

void SynthConfig::validate() const {
  const std::size_t d = groups.size();
  if (identities_per_group.size() != d) throw DataError("identities_per_group needs one count per group");
  if (concentration.size() != d) throw DataError("concentration needs one value per group");
  if (std::accumulate(identities_per_group.begin(), identities_per_group.end(), std::size_t{0}) == 0) {
    throw DataError("all groups are empty");
  }
  if (images_min < 1 || images_min > images_max) throw DataError("images_per_identity must satisfy 1 <= min <= max");
  for (double c : concentration) {
    if (!(c > 0.0) || !std::isfinite(c)) throw DataError("concentration must be positive and finite");
  }
  if (!(label_noise >= 0.0 && label_noise < 1.0)) throw DataError("label_noise must lie in [0, 1)");
}

SynthConfig parse_synth_config(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid synth config JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("synth config must be a JSON object");
  SynthConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "groups") {
        cfg.groups = GroupSet(value.get<std::vector<std::string>>());
      } else if (key == "identities_per_group") {
        cfg.identities_per_group = value.is_number() ? std::vector<std::size_t>{value.get<std::size_t>()}
                                                     : value.get<std::vector<std::size_t>>();
      } else if (key == "images_per_identity") {
        const auto range = value.get<std::vector<std::size_t>>();
        if (range.size() != 2) throw DataError("images_per_identity must be [min, max]");
        cfg.images_min = range[0];
        cfg.images_max = range[1];
      } else if (key == "concentration") {
        cfg.concentration = value.is_number() ? std::vector<double>{value.get<double>()} : value.get<std::vector<double>>();
      } else if (key == "label_noise") {
        cfg.label_noise = value.get<double>();
      } else {
        throw DataError("unknown synth config field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid synth config: ") + e.what());
  }
  // A single count or concentration applies to every group.
  if (cfg.identities_per_group.size() == 1) cfg.identities_per_group.assign(cfg.groups.size(), cfg.identities_per_group[0]);
  if (cfg.concentration.size() == 1) cfg.concentration.assign(cfg.groups.size(), cfg.concentration[0]);
  return cfg;
}

Manifest generate(const SynthConfig& config) {
  config.validate();
  const std::size_t d = config.groups.size();
  SplitMix64 rng(config.seed);

  std::vector<GroupIndex> label;
  for (GroupIndex g = 0; g < d; ++g) label.insert(label.end(), config.identities_per_group[g], g);
  const std::size_t total = label.size();

  std::vector<GroupIndex> peak = label;
  const auto noisy = static_cast<std::size_t>(std::llround(config.label_noise * static_cast<double>(total)));
  if (noisy > 0) {
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<char> chosen(total, 0);
    for (std::size_t k = 0; k < noisy; ++k) chosen[order[k]] = 1;
    for (std::size_t j = 0; j < total; ++j) {
      if (!chosen[j]) continue;
      const auto other = static_cast<GroupIndex>(rng.below(d - 1));
      peak[j] = other < label[j] ? other : other + 1;
    }
  }

  std::vector<ImageRecord> images;
  char name[32];
  std::vector<double> weights(d);
  for (std::size_t j = 0; j < total; ++j) {
    std::snprintf(name, sizeof(name), "id%06zu", j);
    const std::string identity_id = name;
    const double c = config.concentration[label[j]];
    const double t = 1.0 / (1.0 - rng.uniform01());
    const std::size_t count = config.images_min + static_cast<std::size_t>(rng.below(config.images_max - config.images_min + 1));
    for (std::size_t i = 0; i < count; ++i) {
      double total_weight = 0.0;
      for (GroupIndex g = 0; g < d; ++g) {
        const double e = rng.uniform01();
        weights[g] = g == peak[j] ? 1.0 + c * t * (1.0 + e) : 1.0 + std::min(c, 1.0) * e;
        total_weight += weights[g];
      }
      ImageRecord img;
      std::snprintf(name, sizeof(name), "_%03zu", i);
      img.image_id = identity_id + name;
      img.identity_id = identity_id;
      img.group = label[j];
      img.scores.resize(d);
      for (GroupIndex g = 0; g < d; ++g) img.scores[g] = weights[g] / total_weight;
      images.push_back(std::move(img));
    }
  }
  return Manifest(config.groups, std::move(images));
}

}  // namespace fairsample
