#include "fairsample/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "fairsample/csv.hpp"
#include "fairsample/error.hpp"
#include "fairsample/numeric.hpp"

namespace fairsample {

using ordered_json = nlohmann::ordered_json;

PairMode parse_pair_mode(std::string_view text) {
  if (text == "outcomes") return PairMode::Outcomes;
  if (text == "similarity") return PairMode::Similarity;
  throw DataError("unknown pair mode '" + std::string(text) + "' (expected outcomes or similarity)");
}

ThresholdChoice best_threshold(std::span<const double> similarity, std::span<const char> is_genuine) {
  const std::size_t n = similarity.size();
  if (n == 0 || is_genuine.size() != n) throw InvariantError("best_threshold: bad input");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return similarity[a] < similarity[b]; });

  const std::size_t genuine = static_cast<std::size_t>(std::count(is_genuine.begin(), is_genuine.end(), 1));
  // Threshold below everything: all pairs called genuine.
  std::size_t correct = genuine;
  ThresholdChoice best{static_cast<double>(correct) / static_cast<double>(n), std::nullopt};
  std::size_t best_correct = correct;

  std::size_t k = 0;
  while (k < n) {
    // Move the whole run of equal similarities below the threshold.
    const double value = similarity[order[k]];
    while (k < n && similarity[order[k]] == value) {
      correct += is_genuine[order[k]] ? std::size_t{0} : std::size_t{1};
      correct -= is_genuine[order[k]] ? std::size_t{1} : std::size_t{0};
      ++k;
    }
    if (correct > best_correct) {
      best_correct = correct;
      best.accuracy = static_cast<double>(correct) / static_cast<double>(n);
      best.threshold = k < n ? std::optional<double>(0.5 * (value + similarity[order[k]])) : std::nullopt;
    }
  }
  return best;
}

GroupAccuracy group_accuracy(std::span<const PairRecord> pairs, PairMode mode, std::size_t groups) {
  GroupAccuracy out;
  out.pairs.assign(groups, 0);
  out.accuracy.assign(groups, std::nullopt);
  out.threshold.assign(groups, std::nullopt);

  std::vector<std::vector<double>> sims(groups);
  std::vector<std::vector<char>> genuine(groups);
  std::vector<std::size_t> correct(groups, 0);
  for (const auto& p : pairs) {
    if (p.group >= groups) throw DataError("pair references an unknown group");
    ++out.pairs[p.group];
    if (mode == PairMode::Outcomes) {
      correct[p.group] += p.correct ? 1 : 0;
    } else {
      if (!std::isfinite(p.similarity)) throw DataError("non-finite similarity");
      sims[p.group].push_back(p.similarity);
      genuine[p.group].push_back(p.is_genuine ? 1 : 0);
    }
  }
  for (GroupIndex g = 0; g < groups; ++g) {
    if (out.pairs[g] == 0) continue;
    if (mode == PairMode::Outcomes) {
      out.accuracy[g] = static_cast<double>(correct[g]) / static_cast<double>(out.pairs[g]);
      continue;
    }
    const auto n_genuine = std::count(genuine[g].begin(), genuine[g].end(), 1);
    if (n_genuine == 0 || static_cast<std::size_t>(n_genuine) == genuine[g].size()) {
      throw DataError("group " + std::to_string(g) + " needs both genuine and impostor pairs in similarity mode");
    }
    const auto choice = best_threshold(sims[g], genuine[g]);
    out.accuracy[g] = choice.accuracy;
    out.threshold[g] = choice.threshold;
  }
  return out;
}

namespace {

bool parse_flag(const std::string& field, std::string_view what) {
  if (field == "1" || field == "true" || field == "True") return true;
  if (field == "0" || field == "false" || field == "False") return false;
  throw DataError("invalid boolean '" + field + "' for " + std::string(what));
}

}  // namespace

std::vector<PairRecord> load_pairs(const std::filesystem::path& path, const GroupSet& groups, PairMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open pairs file '" + path.string() + "'");
  csv::Reader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw DataError(path.string() + ": empty file");
  const std::vector<std::string> expected = mode == PairMode::Outcomes
                                                ? std::vector<std::string>{"group", "correct"}
                                                : std::vector<std::string>{"group", "similarity", "is_genuine"};
  if (row != expected) throw DataError(path.string() + ": expected header '" + csv::join(expected).substr(0, csv::join(expected).size() - 1) + "'");
  std::vector<PairRecord> pairs;
  while (reader.next(row)) {
    const auto where = path.string() + ": line " + std::to_string(reader.line());
    if (row.size() != expected.size()) throw DataError(where + ": wrong field count");
    auto g = groups.index_of(row[0]);
    if (!g) throw DataError(where + ": unknown group '" + row[0] + "'");
    PairRecord p;
    p.group = *g;
    try {
      if (mode == PairMode::Outcomes) {
        p.correct = parse_flag(row[1], "correct");
      } else {
        p.similarity = csv::parse_double(row[1], "similarity");
        p.is_genuine = parse_flag(row[2], "is_genuine");
      }
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    pairs.push_back(p);
  }
  return pairs;
}

bool FairnessReport::ser_defined() const { return std::isfinite(ser); }

FairnessReport fairness_report(std::span<const double> accuracies) {
  if (accuracies.size() < 2) throw DataError("a fairness report needs at least two groups");
  for (double a : accuracies) {
    if (!std::isfinite(a) || a < 0.0 || a > 1.0) {
      throw DataError("accuracy " + csv::format_double(a) + " outside [0, 1]");
    }
  }
  FairnessReport r;
  r.per_group_accuracy.assign(accuracies.begin(), accuracies.end());
  const double n = static_cast<double>(accuracies.size());
  r.average = compensated_sum(accuracies) / n;

  std::vector<double> percent(accuracies.size());
  std::transform(accuracies.begin(), accuracies.end(), percent.begin(), [](double a) { return 100.0 * a; });
  const double mean_pct = compensated_sum(percent) / n;
  CompensatedSum ss;
  for (double p : percent) ss += (p - mean_pct) * (p - mean_pct);
  r.std_dev = std::sqrt(ss.value() / (n - 1.0));

  const auto [lo, hi] = std::minmax_element(accuracies.begin(), accuracies.end());
  if (*hi >= 1.0) {
    r.ser = std::numeric_limits<double>::infinity();
    r.flags.push_back("ser_undefined_perfect_group");
  } else {
    r.ser = (1.0 - *lo) / (1.0 - *hi);
  }
  return r;
}

AccuracyScale parse_accuracy_scale(std::string_view text) {
  if (text == "percent") return AccuracyScale::Percent;
  if (text == "fraction") return AccuracyScale::Fraction;
  throw DataError("unknown accuracy scale '" + std::string(text) + "' (expected percent or fraction)");
}

std::vector<double> to_fractions(std::span<const double> values, AccuracyScale scale) {
  std::vector<double> out(values.begin(), values.end());
  if (scale == AccuracyScale::Percent) {
    for (double& v : out) v /= 100.0;
  }
  return out;
}

std::string format_report_json(const GroupSet& groups, const FairnessReport& report) {
  ordered_json doc;
  ordered_json per_group;
  for (std::size_t g = 0; g < groups.size(); ++g) per_group[groups.label(g)] = 100.0 * report.per_group_accuracy.at(g);
  doc["per_group"] = std::move(per_group);
  doc["average"] = 100.0 * report.average;
  doc["std"] = report.std_dev;
  doc["ser"] = report.ser_defined() ? ordered_json(report.ser) : ordered_json(nullptr);
  doc["flags"] = report.flags;
  return doc.dump(2) + "\n";
}

std::string format_report_csv(const GroupSet& groups, const FairnessReport& report) {
  std::vector<std::string> header;
  std::vector<std::string> values;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    header.push_back("acc_" + groups.label(g));
    values.push_back(csv::format_double(100.0 * report.per_group_accuracy.at(g)));
  }
  header.insert(header.end(), {"average", "std", "ser"});
  values.push_back(csv::format_double(100.0 * report.average));
  values.push_back(csv::format_double(report.std_dev));
  values.push_back(report.ser_defined() ? csv::format_double(report.ser) : "inf");
  return csv::join(header) + csv::join(values);
}

BiasAxis parse_bias_axis(std::string_view text) {
  if (text == "std") return BiasAxis::Std;
  if (text == "ser") return BiasAxis::Ser;
  throw DataError("unknown bias axis '" + std::string(text) + "' (expected std or ser)");
}

std::vector<std::size_t> pareto_frontier(std::span<const RunPoint> points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].error != points[b].error) return points[a].error < points[b].error;
    return points[a].bias < points[b].bias;
  });

  // Sweep blocks of equal error. Inside a block only the lowest bias can
  // survive, and only if every strictly lower error had a strictly higher bias.
  std::vector<std::size_t> frontier;
  double best_bias_so_far = std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && points[order[j]].error == points[order[i]].error) ++j;
    const double block_min = points[order[i]].bias;
    if (block_min < best_bias_so_far) {
      for (std::size_t k = i; k < j && points[order[k]].bias == block_min; ++k) frontier.push_back(order[k]);
      best_bias_so_far = block_min;
    }
    i = j;
  }
  return frontier;
}

RunsTable parse_runs(std::istream& in) {
  csv::Reader reader(in);
  RunsTable table;
  if (!reader.next(table.header)) throw DataError("runs file is empty");
  const auto& h = table.header;
  if (h.size() < 5 || h[0] != "run_id" || h[1] != "strategy" || h[2] != "size") {
    throw DataError("runs header must be run_id,strategy,size,acc_<g1>,...,acc_<gd>");
  }
  for (std::size_t c = 3; c < h.size(); ++c) {
    if (!h[c].starts_with("acc_")) throw DataError("unexpected runs column '" + h[c] + "'");
    table.groups.push_back(h[c].substr(4));
  }
  GroupSet validate(table.groups);
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() != h.size()) throw DataError("runs line " + std::to_string(reader.line()) + ": wrong field count");
    std::vector<double> acc;
    for (std::size_t c = 3; c < row.size(); ++c) acc.push_back(csv::parse_double(row[c], h[c]));
    table.accuracies.push_back(std::move(acc));
    table.rows.push_back(row);
  }
  if (table.rows.empty()) throw DataError("runs file has no runs");
  return table;
}

RunsTable load_runs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open runs file '" + path.string() + "'");
  try {
    return parse_runs(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

FrontierResult runs_frontier(const RunsTable& runs, BiasAxis axis, AccuracyScale scale) {
  FrontierResult out;
  out.on_frontier.assign(runs.rows.size(), 0);
  out.excluded.assign(runs.rows.size(), 0);
  std::vector<RunPoint> eligible;
  std::vector<std::size_t> eligible_index;
  for (std::size_t r = 0; r < runs.rows.size(); ++r) {
    const auto report = fairness_report(to_fractions(runs.accuracies[r], scale));
    RunPoint p{runs.rows[r][0], runs.rows[r][1], runs.rows[r][2], 1.0 - report.average,
               axis == BiasAxis::Std ? report.std_dev : report.ser};
    out.points.push_back(p);
    if (!std::isfinite(p.bias)) {
      out.excluded[r] = 1;
      continue;
    }
    eligible.push_back(p);
    eligible_index.push_back(r);
  }
  for (std::size_t k : pareto_frontier(eligible)) out.on_frontier[eligible_index[k]] = 1;
  return out;
}

std::string format_frontier_csv(const RunsTable& runs, const FrontierResult& frontier) {
  auto header = runs.header;
  header.push_back("on_frontier");
  std::string out = csv::join(header);
  for (std::size_t r = 0; r < runs.rows.size(); ++r) {
    auto row = runs.rows[r];
    row.push_back(frontier.on_frontier[r] ? "true" : "false");
    out += csv::join(row);
  }
  return out;
}

}  // namespace fairsample
