#include "fairsample/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fairsample/csv.hpp"
#include "fairsample/error.hpp"
#include "fairsample/numeric.hpp"

namespace fairsample {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::A: return "A";
    case Protocol::B: return "B";
    case Protocol::C: return "C";
  }
  throw InvariantError("bad protocol");
}

Protocol parse_protocol(std::string_view text) {
  if (text == "A" || text == "a") return Protocol::A;
  if (text == "B" || text == "b") return Protocol::B;
  if (text == "C" || text == "c") return Protocol::C;
  throw DataError("unknown protocol '" + std::string(text) + "' (expected A, B or C)");
}

std::vector<double> identity_scores(const Manifest& m, std::size_t identity, Protocol p) {
  const auto& rec = m.identity(identity);
  const auto images = m.images();
  const std::size_t d = m.dims();
  std::vector<CompensatedSum> acc(d);
  for (std::size_t i : rec.images) {
    const auto& scores = images[i].scores;
    for (std::size_t g = 0; g < d; ++g) acc[g] += scores[g];
  }
  std::vector<double> out(d);
  const double count = static_cast<double>(rec.image_count());
  for (std::size_t g = 0; g < d; ++g) {
    out[g] = p == Protocol::A ? acc[g].value() / count : acc[g].value();
  }
  return out;
}

double own_group_score(const Manifest& m, std::size_t identity, Protocol p) {
  const auto& rec = m.identity(identity);
  const auto images = m.images();
  CompensatedSum acc;
  for (std::size_t i : rec.images) acc += images[i].scores[rec.group];
  return p == Protocol::A ? acc.value() / static_cast<double>(rec.image_count()) : acc.value();
}

IdsTable compute_ids(const Manifest& m, Protocol p) {
  IdsTable table;
  table.protocol = p;
  table.dims = m.dims();
  table.values.reserve(m.identities().size() * m.dims());
  for (std::size_t j = 0; j < m.identities().size(); ++j) {
    auto row = identity_scores(m, j, p);
    table.values.insert(table.values.end(), row.begin(), row.end());
  }
  return table;
}

std::vector<double> EsMatrix::diagonal() const {
  std::vector<double> diag(dims_);
  for (std::size_t g = 0; g < dims_; ++g) diag[g] = values_[g * dims_ + g];
  return diag;
}

EsMatrix compute_es(const Manifest& m, Protocol p) {
  const std::size_t d = m.dims();
  const auto& counts = m.group_counts();
  if (averages_identities(p)) {
    for (std::size_t g = 0; g < d; ++g) {
      if (counts[g] == 0) {
        throw DataError("empty group under mean protocol: '" + m.groups().label(g) + "' has no identities");
      }
    }
  }
  const IdsTable ids = compute_ids(m, p);
  std::vector<CompensatedSum> acc(d * d);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const GroupIndex r = m.identity(j).group;
    const auto row = ids.row(j);
    for (std::size_t c = 0; c < d; ++c) acc[r * d + c] += row[c];
  }
  std::vector<double> values(d * d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double total = acc[r * d + c].value();
      values[r * d + c] = averages_identities(p) ? total / static_cast<double>(counts[r]) : total;
    }
  }
  return EsMatrix(p, d, std::move(values));
}

std::vector<GroupIndex> relabel_assignments(const Manifest& m) {
  std::vector<GroupIndex> out(m.identities().size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const auto scores = identity_scores(m, j, Protocol::A);
    GroupIndex best = 0;
    for (GroupIndex g = 1; g < scores.size(); ++g) {
      if (scores[g] > scores[best]) best = g;
    }
    out[j] = best;
  }
  return out;
}

Manifest relabel(const Manifest& m) {
  const auto assignments = relabel_assignments(m);
  return m.with_identity_groups(assignments);
}

std::optional<double> pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvariantError("pearson_correlation: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = compensated_sum(x) / n;
  const double my = compensated_sum(y) / n;
  CompensatedSum sxx, syy, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx.value() <= 0.0 || syy.value() <= 0.0) return std::nullopt;
  const double r = sxy.value() / std::sqrt(sxx.value() * syy.value());
  return std::clamp(r, -1.0, 1.0);
}

ScatterResult score_scatter(const Manifest& m, const std::unordered_map<std::string, double>& external) {
  const std::size_t d = m.dims();
  ScatterResult result;
  result.samples_per_group.assign(d, 0);
  std::vector<std::vector<double>> own(d), ext(d);
  for (const auto& img : m.images()) {
    auto it = external.find(img.image_id);
    if (it == external.end()) {
      ++result.skipped;
      continue;
    }
    result.rows.push_back({img.image_id, img.group, img.scores[img.group], it->second});
    own[img.group].push_back(img.scores[img.group]);
    ext[img.group].push_back(it->second);
    ++result.samples_per_group[img.group];
  }
  if (result.rows.empty()) throw DataError("no image of the manifest appears in the external score table");
  result.pearson.resize(d);
  for (std::size_t g = 0; g < d; ++g) {
    result.pearson[g] = pearson_correlation(own[g], ext[g]);
    if (!result.pearson[g]) {
      result.warnings.push_back("correlation undefined for group '" + m.groups().label(g) +
                                "' (fewer than two samples or zero variance)");
    }
  }
  if (result.skipped > 0) {
    result.warnings.push_back(std::to_string(result.skipped) + " image(s) missing from the external table were skipped");
  }
  return result;
}

std::unordered_map<std::string, double> load_external_scores(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  csv::Reader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw DataError(path.string() + ": empty file");
  if (row.size() < 2 || row[0] != "image_id") {
    throw DataError(path.string() + ": expected header 'image_id,<score>'");
  }
  std::unordered_map<std::string, double> out;
  while (reader.next(row)) {
    if (row.size() < 2) throw DataError(path.string() + ": line " + std::to_string(reader.line()) + " is short");
    const double v = csv::parse_double(row[1], "external score");
    if (!std::isfinite(v)) throw DataError(path.string() + ": non-finite score for '" + row[0] + "'");
    if (!out.emplace(row[0], v).second) throw DataError(path.string() + ": duplicate image_id '" + row[0] + "'");
  }
  return out;
}

std::string format_ids_csv(const Manifest& m, const IdsTable& ids) {
  std::vector<std::string> fields{"identity_id", "group"};
  for (const auto& l : m.groups().labels()) fields.push_back("ids_" + l);
  std::string out = csv::join(fields);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const auto& rec = m.identity(j);
    fields.assign({rec.identity_id, m.groups().label(rec.group)});
    for (double v : ids.row(j)) fields.push_back(csv::format_double(v));
    out += csv::join(fields);
  }
  return out;
}

std::string format_ids_json(const Manifest& m, const IdsTable& ids) {
  ordered_json doc;
  doc["protocol"] = std::string(to_string(ids.protocol));
  doc["groups"] = m.groups().labels();
  ordered_json entries = ordered_json::array();
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const auto row = ids.row(j);
    entries.push_back({{"identity_id", m.identity(j).identity_id},
                       {"group", m.groups().label(m.identity(j).group)},
                       {"ids", std::vector<double>(row.begin(), row.end())}});
  }
  doc["identities"] = std::move(entries);
  return doc.dump(2) + "\n";
}

std::string format_es_csv(const GroupSet& groups, const EsMatrix& es) {
  std::vector<std::string> fields{"group"};
  for (const auto& l : groups.labels()) fields.push_back(l);
  std::string out = csv::join(fields);
  for (std::size_t r = 0; r < es.dims(); ++r) {
    fields.assign({groups.label(r)});
    for (std::size_t c = 0; c < es.dims(); ++c) fields.push_back(csv::format_double(es.at(r, c)));
    out += csv::join(fields);
  }
  return out;
}

std::string format_es_json(const GroupSet& groups, const EsMatrix& es) {
  ordered_json doc;
  doc["protocol"] = std::string(to_string(es.protocol()));
  doc["groups"] = groups.labels();
  ordered_json rows = ordered_json::array();
  for (std::size_t r = 0; r < es.dims(); ++r) {
    std::vector<double> row(es.dims());
    for (std::size_t c = 0; c < es.dims(); ++c) row[c] = es.at(r, c);
    rows.push_back(row);
  }
  doc["matrix"] = std::move(rows);
  doc["diagonal"] = es.diagonal();
  return doc.dump(2) + "\n";
}

std::string format_scatter_csv(const GroupSet& groups, const ScatterResult& scatter) {
  std::string out = csv::join({"image_id", "group", "own_score", "external_score"});
  for (const auto& row : scatter.rows) {
    out += csv::join({row.image_id, groups.label(row.group), csv::format_double(row.own_score),
                      csv::format_double(row.external)});
  }
  return out;
}

std::string format_scatter_json(const GroupSet& groups, const ScatterResult& scatter) {
  ordered_json doc;
  ordered_json per_group;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    ordered_json entry;
    entry["n"] = scatter.samples_per_group[g];
    entry["pearson"] = scatter.pearson[g] ? ordered_json(*scatter.pearson[g]) : ordered_json(nullptr);
    per_group[groups.label(g)] = std::move(entry);
  }
  doc["per_group"] = std::move(per_group);
  doc["matched"] = scatter.rows.size();
  doc["skipped"] = scatter.skipped;
  doc["warnings"] = scatter.warnings;
  return doc.dump(2) + "\n";
}

}  // namespace fairsample
