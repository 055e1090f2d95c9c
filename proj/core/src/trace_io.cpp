#include <sstream>

#include "fairsample/csv.hpp"
#include "fairsample/sampling.hpp"

namespace fairsample {

std::string format_removal_log(const GroupSet& groups, const RemovalTrace& trace) {
  std::vector<std::string> fields{"step", "identity_id", "group", "own_group_ids"};
  for (const auto& l : groups.labels()) fields.push_back("diag_" + l + "_before");
  for (const auto& l : groups.labels()) fields.push_back("diag_" + l + "_after");
  std::string out = csv::join(fields);
  for (const auto& ev : trace.events) {
    fields.assign({std::to_string(ev.step), ev.identity_id, groups.label(ev.group), csv::format_double(ev.own_score)});
    for (double v : ev.diag_before) fields.push_back(csv::format_double(v));
    for (double v : ev.diag_after) fields.push_back(csv::format_double(v));
    out += csv::join(fields);
  }
  return out;
}

std::string format_evolution(const GroupSet& groups, const RemovalTrace& trace) {
  const auto series = diag_series(trace, groups);
  std::vector<std::string> fields{"step"};
  for (const auto& l : groups.labels()) fields.push_back("diag_" + l);
  std::string out = csv::join(fields);
  for (std::size_t i = 0; i < series.steps.size(); ++i) {
    fields.assign({std::to_string(series.steps[i])});
    for (double v : series.diags[i]) fields.push_back(csv::format_double(v));
    out += csv::join(fields);
  }
  return out;
}

DiagSeries parse_diag_series(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header) || header.empty() || header[0] != "step") {
    throw DataError("trace file must start with a 'step' column");
  }
  constexpr std::string_view kPrefix = "diag_";
  constexpr std::string_view kBefore = "_before";
  constexpr std::string_view kAfter = "_after";

  DiagSeries series;
  std::vector<std::size_t> after_cols, before_cols;
  bool is_log = false;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto& name = header[c];
    if (!name.starts_with(kPrefix)) continue;
    if (name.ends_with(kAfter)) {
      is_log = true;
      series.groups.push_back(name.substr(kPrefix.size(), name.size() - kPrefix.size() - kAfter.size()));
      after_cols.push_back(c);
    } else if (name.ends_with(kBefore)) {
      before_cols.push_back(c);
    }
  }
  if (!is_log) {
    for (std::size_t c = 1; c < header.size(); ++c) {
      if (!header[c].starts_with(kPrefix)) throw DataError("unexpected column '" + header[c] + "'");
      series.groups.push_back(header[c].substr(kPrefix.size()));
      after_cols.push_back(c);
    }
  } else if (before_cols.size() != after_cols.size()) {
    throw DataError("removal log has unmatched diag_*_before/diag_*_after columns");
  }
  if (series.groups.empty()) throw DataError("trace file has no diag columns");

  std::vector<std::string> row;
  auto read_cols = [&](const std::vector<std::size_t>& cols) {
    std::vector<double> values;
    for (std::size_t c : cols) values.push_back(csv::parse_double(row[c], header[c]));
    return values;
  };
  while (reader.next(row)) {
    if (row.size() != header.size()) throw DataError("line " + std::to_string(reader.line()) + ": wrong field count");
    const auto step = csv::parse_int(row[0], "step");
    if (step < 0) throw DataError("negative step");
    if (is_log && series.steps.empty()) {
      series.steps.push_back(static_cast<std::size_t>(step) - 1);
      series.diags.push_back(read_cols(before_cols));
    }
    series.steps.push_back(static_cast<std::size_t>(step));
    series.diags.push_back(read_cols(after_cols));
  }
  return series;
}

}  // namespace fairsample
