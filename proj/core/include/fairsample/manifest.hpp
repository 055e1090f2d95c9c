#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fairsample {

using GroupIndex = std::size_t;

/// Ordered set of demographic group labels. The order is the column order of
/// every score vector and of ES rows/columns.
class GroupSet {
 public:
  /// African, Asian, Caucasian, Indian.
  GroupSet();
  explicit GroupSet(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(GroupIndex g) const { return labels_.at(g); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<GroupIndex> index_of(std::string_view label) const;

  /// Parses "a,b,c".
  static GroupSet parse(std::string_view comma_separated);

  friend bool operator==(const GroupSet&, const GroupSet&) = default;

 private:
  std::vector<std::string> labels_;
};

struct ImageRecord {
  std::string image_id;
  std::string identity_id;
  GroupIndex group = 0;
  std::vector<double> scores;  // one per group, sums to 1

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct IdentityRecord {
  std::string identity_id;
  GroupIndex group = 0;
  std::vector<std::size_t> images;  // indices into Manifest::images(), file order

  std::size_t image_count() const { return images.size(); }
};

/// Immutable dataset. Construction validates every record and builds the
/// identity index (identities in first-appearance order).
class Manifest {
 public:
  Manifest(GroupSet groups, std::vector<ImageRecord> images);

  const GroupSet& groups() const { return groups_; }
  std::size_t dims() const { return groups_.size(); }

  std::span<const ImageRecord> images() const { return images_; }
  std::span<const IdentityRecord> identities() const { return identities_; }
  const IdentityRecord& identity(std::size_t index) const { return identities_.at(index); }
  std::optional<std::size_t> find_identity(std::string_view identity_id) const;

  /// N_y: identities per group.
  const std::vector<std::size_t>& group_counts() const { return group_counts_; }
  std::vector<std::size_t> image_counts() const;

  /// Identity indices assigned to `g`, first-appearance order.
  std::vector<std::size_t> identities_in_group(GroupIndex g) const;

  /// Copy with the given identities (by index) and all their images dropped.
  Manifest without_identities(std::span<const std::size_t> identity_indices) const;

  /// Copy where identity i is assigned `groups[i]`; images follow their identity.
  Manifest with_identity_groups(std::span<const GroupIndex> groups) const;

  friend bool operator==(const Manifest& a, const Manifest& b) {
    return a.groups_ == b.groups_ && a.images_ == b.images_;
  }

 private:
  GroupSet groups_;
  std::vector<ImageRecord> images_;
  std::vector<IdentityRecord> identities_;
  std::unordered_map<std::string, std::size_t> identity_lookup_;
  std::vector<std::size_t> group_counts_;
};

/// Largest allowed |sum(scores) - 1| on input.
inline constexpr double kSimplexTolerance = 1e-3;

struct LoadOptions {
  /// When unset the groups are taken from the score_<g> header columns, in
  /// header order.
  std::optional<GroupSet> groups;
  /// Skip invalid rows instead of failing. Identity/group conflicts and
  /// duplicate image ids stay fatal.
  bool permissive = false;
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_rejected = 0;
  std::vector<std::string> problems;
};

Manifest parse_manifest(std::istream& in, const LoadOptions& options = {},
                        LoadReport* report = nullptr);
Manifest load_manifest(const std::filesystem::path& path, const LoadOptions& options = {},
                       LoadReport* report = nullptr);

std::string format_manifest(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace fairsample
