#include "fairsample/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "fairsample/csv.hpp"
#include "fairsample/error.hpp"
#include "fairsample/io.hpp"
#include "fairsample/numeric.hpp"

namespace fairsample {

namespace {

constexpr std::string_view kScorePrefix = "score_";

// Leaves vectors that are already on the simplex to working precision alone,
// so that a written manifest reloads bit for bit.
void renormalize(std::vector<double>& scores) {
  const double total = compensated_sum(scores);
  if (std::fabs(total - 1.0) <= 1e-12) return;
  for (double& s : scores) s /= total;
}

// Empty string when valid.
std::string check_scores(const std::vector<double>& scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) return "non-finite score";
    if (s < 0.0 || s > 1.0) return "score " + csv::format_double(s) + " outside [0,1]";
  }
  const double total = compensated_sum(scores);
  if (std::fabs(total - 1.0) > kSimplexTolerance) {
    return "scores sum to " + csv::format_double(total) + ", not 1";
  }
  return {};
}

}  // namespace

GroupSet::GroupSet() : labels_{"African", "Asian", "Caucasian", "Indian"} {}

GroupSet::GroupSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) throw DataError("a group set needs at least 2 groups");
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw DataError("empty group label");
    if (!seen.insert(l).second) throw DataError("duplicate group label '" + l + "'");
  }
}

std::optional<GroupIndex> GroupSet::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

GroupSet GroupSet::parse(std::string_view comma_separated) {
  return GroupSet(csv::split_line(comma_separated));
}

Manifest::Manifest(GroupSet groups, std::vector<ImageRecord> images)
    : groups_(std::move(groups)), images_(std::move(images)), group_counts_(groups_.size(), 0) {
  const std::size_t d = groups_.size();
  std::unordered_set<std::string_view> image_ids;
  image_ids.reserve(images_.size());
  for (std::size_t i = 0; i < images_.size(); ++i) {
    auto& img = images_[i];
    if (img.image_id.empty()) throw DataError("image " + std::to_string(i) + " has an empty image_id");
    if (img.identity_id.empty()) throw DataError("image '" + img.image_id + "' has an empty identity_id");
    if (img.group >= d) throw DataError("image '" + img.image_id + "' has group index out of range");
    if (img.scores.size() != d) {
      throw DataError("image '" + img.image_id + "' has " + std::to_string(img.scores.size()) +
                      " scores, expected " + std::to_string(d));
    }
    if (auto problem = check_scores(img.scores); !problem.empty()) {
      throw DataError("image '" + img.image_id + "': " + problem);
    }
    renormalize(img.scores);
    if (!image_ids.insert(img.image_id).second) {
      throw DataError("duplicate image_id '" + img.image_id + "'");
    }

    auto [it, inserted] = identity_lookup_.try_emplace(img.identity_id, identities_.size());
    if (inserted) {
      identities_.push_back(IdentityRecord{img.identity_id, img.group, {}});
      ++group_counts_[img.group];
    } else if (identities_[it->second].group != img.group) {
      throw DataError("identity '" + img.identity_id + "' is labelled both '" +
                      groups_.label(identities_[it->second].group) + "' and '" +
                      groups_.label(img.group) + "'");
    }
    identities_[it->second].images.push_back(i);
  }
}

std::optional<std::size_t> Manifest::find_identity(std::string_view identity_id) const {
  auto it = identity_lookup_.find(std::string(identity_id));
  if (it == identity_lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> Manifest::image_counts() const {
  std::vector<std::size_t> counts(dims(), 0);
  for (const auto& img : images_) ++counts[img.group];
  return counts;
}

std::vector<std::size_t> Manifest::identities_in_group(GroupIndex g) const {
  std::vector<std::size_t> out;
  out.reserve(g < group_counts_.size() ? group_counts_[g] : 0);
  for (std::size_t j = 0; j < identities_.size(); ++j) {
    if (identities_[j].group == g) out.push_back(j);
  }
  return out;
}

Manifest Manifest::without_identities(std::span<const std::size_t> identity_indices) const {
  std::vector<char> drop(identities_.size(), 0);
  for (std::size_t j : identity_indices) drop.at(j) = 1;
  std::vector<ImageRecord> kept;
  kept.reserve(images_.size());
  for (const auto& img : images_) {
    if (!drop[identity_lookup_.at(img.identity_id)]) kept.push_back(img);
  }
  return Manifest(groups_, std::move(kept));
}

Manifest Manifest::with_identity_groups(std::span<const GroupIndex> groups) const {
  if (groups.size() != identities_.size()) {
    throw InvariantError("with_identity_groups: one group per identity required");
  }
  std::vector<ImageRecord> images = images_;
  for (auto& img : images) img.group = groups[identity_lookup_.at(img.identity_id)];
  return Manifest(groups_, std::move(images));
}

Manifest parse_manifest(std::istream& in, const LoadOptions& options, LoadReport* report) {
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  rep = LoadReport{};

  csv::Reader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) throw DataError("empty manifest: no header");

  std::optional<std::size_t> col_image, col_identity, col_group;
  std::vector<std::string> score_labels;
  std::vector<std::size_t> score_cols;
  std::unordered_set<std::string> seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& name = header[c];
    if (!seen.insert(name).second) throw DataError("duplicate column '" + name + "'");
    if (name == "image_id") {
      col_image = c;
    } else if (name == "identity_id") {
      col_identity = c;
    } else if (name == "group") {
      col_group = c;
    } else if (name.starts_with(kScorePrefix)) {
      score_labels.push_back(name.substr(kScorePrefix.size()));
      score_cols.push_back(c);
    } else {
      throw DataError("unexpected column '" + name + "'");
    }
  }
  if (!col_image) throw DataError("missing column 'image_id'");
  if (!col_identity) throw DataError("missing column 'identity_id'");
  if (!col_group) throw DataError("missing column 'group'");

  GroupSet groups = options.groups ? *options.groups : GroupSet(score_labels);
  // column_for_group[g] = CSV column holding score_<g>
  std::vector<std::size_t> column_for_group(groups.size());
  {
    std::vector<char> found(groups.size(), 0);
    for (std::size_t k = 0; k < score_labels.size(); ++k) {
      auto g = groups.index_of(score_labels[k]);
      if (!g) throw DataError("score column 'score_" + score_labels[k] + "' names an unknown group");
      column_for_group[*g] = score_cols[k];
      found[*g] = 1;
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (!found[g]) throw DataError("missing column 'score_" + groups.label(g) + "'");
    }
  }

  std::vector<ImageRecord> images;
  std::vector<std::string> row;
  auto reject = [&](std::string message) {
    ++rep.rows_rejected;
    rep.problems.push_back("line " + std::to_string(reader.line()) + ": " + std::move(message));
  };
  while (reader.next(row)) {
    ++rep.rows_read;
    if (row.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(row.size()));
      continue;
    }
    ImageRecord img;
    img.image_id = row[*col_image];
    img.identity_id = row[*col_identity];
    if (img.image_id.empty() || img.identity_id.empty()) {
      reject("empty image_id or identity_id");
      continue;
    }
    auto g = groups.index_of(row[*col_group]);
    if (!g) {
      reject("unknown group '" + row[*col_group] + "'");
      continue;
    }
    img.group = *g;
    img.scores.resize(groups.size());
    std::string problem;
    try {
      for (std::size_t k = 0; k < groups.size(); ++k) {
        img.scores[k] = csv::parse_double(row[column_for_group[k]], "score_" + groups.label(k));
      }
      problem = check_scores(img.scores);
    } catch (const DataError& e) {
      problem = e.what();
    }
    if (!problem.empty()) {
      reject("image '" + img.image_id + "': " + problem);
      continue;
    }
    images.push_back(std::move(img));
  }

  if (rep.rows_rejected > 0 && !options.permissive) {
    throw DataError(std::to_string(rep.rows_rejected) + " invalid row(s); first: " + rep.problems.front());
  }
  if (images.empty()) throw DataError("empty manifest");
  return Manifest(std::move(groups), std::move(images));
}

Manifest load_manifest(const std::filesystem::path& path, const LoadOptions& options, LoadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  try {
    return parse_manifest(in, options, report);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_manifest(const Manifest& manifest) {
  if (manifest.images().empty()) throw DataError("empty manifest");
  std::vector<std::string> fields{"image_id", "identity_id", "group"};
  for (const auto& label : manifest.groups().labels()) fields.push_back(std::string(kScorePrefix) + label);
  std::string out = csv::join(fields);
  for (const auto& img : manifest.images()) {
    fields.assign({img.image_id, img.identity_id, manifest.groups().label(img.group)});
    for (double s : img.scores) fields.push_back(csv::format_double(s));
    out += csv::join(fields);
  }
  return out;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  write_file_atomic(path, format_manifest(manifest));
}

}  // namespace fairsample
