#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairsample/manifest.hpp"

namespace fairsample {

enum class PairMode {
  Outcomes,    // each pair already judged correct or not
  Similarity,  // raw similarity plus ground truth; threshold chosen per group
};

PairMode parse_pair_mode(std::string_view text);

struct PairRecord {
  GroupIndex group = 0;
  double similarity = 0.0;
  bool is_genuine = false;
  bool correct = false;
};

struct GroupAccuracy {
  std::vector<std::size_t> pairs;                 // per group
  std::vector<std::optional<double>> accuracy;    // unset for groups without pairs
  std::vector<std::optional<double>> threshold;   // similarity mode; unset when an extreme wins
};

/// Best single-threshold accuracy of "genuine iff similarity > t" over the
/// midpoints between consecutive distinct similarities and the two extremes.
/// Ties resolve to the lowest threshold.
struct ThresholdChoice {
  double accuracy = 0.0;
  std::optional<double> threshold;
};
ThresholdChoice best_threshold(std::span<const double> similarity, std::span<const char> is_genuine);

GroupAccuracy group_accuracy(std::span<const PairRecord> pairs, PairMode mode, std::size_t groups);

/// outcomes: `group,correct`; similarity: `group,similarity,is_genuine`.
std::vector<PairRecord> load_pairs(const std::filesystem::path& path, const GroupSet& groups, PairMode mode);

struct FairnessReport {
  std::vector<double> per_group_accuracy;  // fractions in [0, 1]
  double average = 0.0;                    // fraction
  double std_dev = 0.0;                    // Bessel-corrected, percentage points
  double ser = 1.0;                        // +inf when the best group is perfect
  std::vector<std::string> flags;

  bool ser_defined() const;
};

/// `accuracies` are fractions. Throws DataError for fewer than two groups or
/// values outside [0, 1].
FairnessReport fairness_report(std::span<const double> accuracies);

enum class AccuracyScale { Percent, Fraction };
AccuracyScale parse_accuracy_scale(std::string_view text);
std::vector<double> to_fractions(std::span<const double> values, AccuracyScale scale);

std::string format_report_json(const GroupSet& groups, const FairnessReport& report);
std::string format_report_csv(const GroupSet& groups, const FairnessReport& report);

struct RunPoint {
  std::string run_id;
  std::string strategy;
  std::string size;
  double error = 0.0;  // 1 - average accuracy
  double bias = 0.0;   // STD or SER
};

enum class BiasAxis { Std, Ser };
BiasAxis parse_bias_axis(std::string_view text);

/// Indices of the points no other point dominates (<= on both coordinates,
/// < on one), ordered by error then bias then input position. Points sharing
/// coordinates are all kept.
std::vector<std::size_t> pareto_frontier(std::span<const RunPoint> points);

/// `run_id,strategy,size,acc_<g1>,...,acc_<gd>` plus the raw rows so the
/// frontier export can echo them.
struct RunsTable {
  std::vector<std::string> header;
  std::vector<std::string> groups;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<double>> accuracies;  // as written in the file
};

RunsTable load_runs(const std::filesystem::path& path);
RunsTable parse_runs(std::istream& in);

struct FrontierResult {
  std::vector<RunPoint> points;
  std::vector<char> on_frontier;
  std::vector<char> excluded;  // flagged reports (undefined SER on the SER axis)
};

FrontierResult runs_frontier(const RunsTable& runs, BiasAxis axis, AccuracyScale scale);

/// Input columns plus `on_frontier`.
std::string format_frontier_csv(const RunsTable& runs, const FrontierResult& frontier);

}  // namespace fairsample
