#include "fairsample/summary.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fairsample/error.hpp"
#include "fairsample/numeric.hpp"
#include "fairsample/scoring.hpp"

namespace fairsample {

Distribution describe(std::span<const double> values) {
  if (values.empty()) throw DataError("cannot describe an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  Distribution out;
  out.count = sorted.size();
  const double n = static_cast<double>(out.count);
  out.mean = compensated_sum(values) / n;
  if (out.count > 1) {
    CompensatedSum ss;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss.value() / (n - 1.0));
  }
  out.min = sorted.front();
  out.max = sorted.back();
  for (std::size_t k = 0; k < out.deciles.size(); ++k) {
    const double h = (n - 1.0) * static_cast<double>(k + 1) / 10.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    out.deciles[k] = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  }
  return out;
}

ManifestSummary summarize(const Manifest& m) {
  ManifestSummary summary;
  summary.images = m.images().size();
  summary.identities = m.identities().size();
  const auto image_counts = m.image_counts();
  std::vector<std::vector<double>> own(m.dims());
  for (std::size_t j = 0; j < m.identities().size(); ++j) {
    own[m.identity(j).group].push_back(own_group_score(m, j, Protocol::A));
  }
  for (GroupIndex g = 0; g < m.dims(); ++g) {
    GroupSummary gs;
    gs.group = m.groups().label(g);
    gs.identities = m.group_counts()[g];
    gs.images = image_counts[g];
    if (!own[g].empty()) gs.own_score = describe(own[g]);
    summary.groups.push_back(std::move(gs));
  }
  return summary;
}

std::string format_summary_json(const ManifestSummary& summary) {
  using ordered_json = nlohmann::ordered_json;
  ordered_json doc;
  doc["images"] = summary.images;
  doc["identities"] = summary.identities;
  ordered_json groups;
  for (const auto& gs : summary.groups) {
    ordered_json entry;
    entry["identities"] = gs.identities;
    entry["images"] = gs.images;
    if (gs.own_score) {
      const auto& d = *gs.own_score;
      ordered_json dist;
      dist["count"] = d.count;
      dist["mean"] = d.mean;
      dist["std"] = d.stddev ? ordered_json(*d.stddev) : ordered_json(nullptr);
      dist["min"] = d.min;
      dist["max"] = d.max;
      dist["deciles"] = d.deciles;
      entry["own_score"] = std::move(dist);
    } else {
      entry["own_score"] = nullptr;
    }
    groups[gs.group] = std::move(entry);
  }
  doc["groups"] = std::move(groups);
  return doc.dump(2) + "\n";
}

}  // namespace fairsample
