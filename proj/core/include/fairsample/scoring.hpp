#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fairsample/manifest.hpp"

namespace fairsample {

/// A: identity score is the mean image score, group score the mean identity score.
/// B: identity score is the summed image score, group score the mean identity score.
/// C: identity score is the summed image score, group score the summed identity score.
enum class Protocol { A, B, C };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view text);

/// True when group scores are averages over identities (A and B).
constexpr bool averages_identities(Protocol p) { return p != Protocol::C; }

/// Per-identity score vectors, in the manifest's identity order.
struct IdsTable {
  Protocol protocol = Protocol::A;
  std::size_t dims = 0;
  std::vector<double> values;  // identities x dims, row-major

  std::size_t size() const { return dims == 0 ? 0 : values.size() / dims; }
  std::span<const double> row(std::size_t identity) const {
    return std::span<const double>(values).subspan(identity * dims, dims);
  }
};

/// Score vector of one identity under protocol `p`.
std::vector<double> identity_scores(const Manifest& m, std::size_t identity, Protocol p);

/// The component of identity_scores() for the identity's own assigned group.
double own_group_score(const Manifest& m, std::size_t identity, Protocol p);

IdsTable compute_ids(const Manifest& m, Protocol p);

/// d x d group-level scores. at(r, c): identities assigned to group r scored
/// against group c.
class EsMatrix {
 public:
  EsMatrix(Protocol protocol, std::size_t dims, std::vector<double> values)
      : protocol_(protocol), dims_(dims), values_(std::move(values)) {}

  Protocol protocol() const { return protocol_; }
  std::size_t dims() const { return dims_; }
  double at(std::size_t row, std::size_t col) const { return values_.at(row * dims_ + col); }
  std::vector<double> diagonal() const;
  const std::vector<double>& values() const { return values_; }

 private:
  Protocol protocol_;
  std::size_t dims_;
  std::vector<double> values_;
};

/// Throws DataError for A/B when a group has no identities; under C an empty
/// group yields a zero row.
EsMatrix compute_es(const Manifest& m, Protocol p);

/// argmax over groups of the protocol-A identity score, ties to the lowest
/// group index. One entry per identity.
std::vector<GroupIndex> relabel_assignments(const Manifest& m);

Manifest relabel(const Manifest& m);

struct ScatterRow {
  std::string image_id;
  GroupIndex group = 0;
  double own_score = 0.0;
  double external = 0.0;
};

struct ScatterResult {
  std::vector<ScatterRow> rows;
  std::vector<std::size_t> samples_per_group;
  /// Pearson r per group; empty when fewer than two samples or zero variance.
  std::vector<std::optional<double>> pearson;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// Pairs each image's own-group score with an external per-image score.
ScatterResult score_scatter(const Manifest& m, const std::unordered_map<std::string, double>& external);

std::optional<double> pearson_correlation(std::span<const double> x, std::span<const double> y);

/// Reads `image_id,<value>` (header required, value column is the second one).
std::unordered_map<std::string, double> load_external_scores(const std::filesystem::path& path);

std::string format_ids_csv(const Manifest& m, const IdsTable& ids);
std::string format_ids_json(const Manifest& m, const IdsTable& ids);
std::string format_es_csv(const GroupSet& groups, const EsMatrix& es);
std::string format_es_json(const GroupSet& groups, const EsMatrix& es);
std::string format_scatter_csv(const GroupSet& groups, const ScatterResult& scatter);
std::string format_scatter_json(const GroupSet& groups, const ScatterResult& scatter);

}  // namespace fairsample
