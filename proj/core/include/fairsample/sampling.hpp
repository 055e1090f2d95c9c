#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairsample/error.hpp"
#include "fairsample/manifest.hpp"
#include "fairsample/scoring.hpp"

namespace fairsample {

struct RemovalEvent {
  std::size_t step = 0;  // 1-based
  std::string identity_id;
  GroupIndex group = 0;
  double own_score = 0.0;  // own-group identity score that ranked the victim
  std::vector<double> diag_before;
  std::vector<double> diag_after;
};

struct RemovalTrace {
  std::string strategy;  // "A", "B", "C", "random", "single-min", ...
  /// Protocol whose diag(ES) the before/after columns report.
  Protocol diag_protocol = Protocol::A;
  std::optional<std::uint64_t> seed;
  std::vector<double> initial_diag;
  std::vector<RemovalEvent> events;
  std::vector<std::string> warnings;
};

struct SamplingResult {
  Manifest manifest;
  RemovalTrace trace;
};

/// Raised when a greedy run cannot continue; carries the steps completed so far.
class SamplingError : public DataError {
 public:
  SamplingError(const std::string& what, RemovalTrace partial)
      : DataError(what), partial_(std::move(partial)) {}
  const RemovalTrace& partial_trace() const { return partial_; }

 private:
  RemovalTrace partial_;
};

/// Throws DataError unless `removals` can possibly be honoured: under A/B every
/// group must be able to keep one identity, under C one identity must remain.
void validate_budget(const Manifest& m, Protocol p, std::size_t removals);

/// Greedy removal with incremental group scores. Each step targets the group
/// with the lowest diag(ES) (A, B) or the highest (C) and removes its
/// identity with the lowest own-group score. Ties go to the lowest group index,
/// then to the earliest identity.
SamplingResult sample_protocol(const Manifest& m, Protocol p, std::size_t removals);

/// Same contract as sample_protocol, recomputing every score from the images
/// at every step. Reference implementation for testing.
SamplingResult sample_naive(const Manifest& m, Protocol p, std::size_t removals);

/// Discretely balanced random removal: every group loses floor(z/d)
/// identities and z mod d groups, picked at random, lose one more.
SamplingResult sample_random(const Manifest& m, std::size_t removals, std::uint64_t seed);

enum class SingleGroupStrategy { Min, Max, Random };

std::string_view to_string(SingleGroupStrategy s);
SingleGroupStrategy parse_single_group_strategy(std::string_view text);

/// Keeps ceil(keep_fraction * N_g) identities of group `g`: those with the
/// lowest protocol-A own-group score (Min), the highest (Max), or a seeded
/// uniform subset (Random). Other groups are untouched.
SamplingResult sample_single_group(const Manifest& m, GroupIndex g, SingleGroupStrategy strategy,
                                   double keep_fraction, std::uint64_t seed);

/// Number of identities kept by sample_single_group.
std::size_t single_group_keep_count(std::size_t group_size, double keep_fraction);

enum class SpreadMeasure {
  Absolute,  // max - min
  Relative,  // (max - min) / max
};

double diag_spread(std::span<const double> diag, SpreadMeasure measure = SpreadMeasure::Absolute);

/// Diagonal after each step, step 0 being the starting point.
struct DiagSeries {
  std::vector<std::string> groups;
  std::vector<std::size_t> steps;
  std::vector<std::vector<double>> diags;
};

DiagSeries diag_series(const RemovalTrace& trace, const GroupSet& groups);

/// First step >= 1 whose post-removal spread is below `epsilon`.
std::optional<std::size_t> equilibrium_step(const DiagSeries& series, double epsilon,
                                            SpreadMeasure measure = SpreadMeasure::Absolute);
std::optional<std::size_t> equilibrium_step(const RemovalTrace& trace, double epsilon,
                                            SpreadMeasure measure = SpreadMeasure::Absolute);

/// step,identity_id,group,own_group_ids,diag_<g>_before...,diag_<g>_after...
std::string format_removal_log(const GroupSet& groups, const RemovalTrace& trace);
/// step,diag_<g1>,...,diag_<gd>; row 0 is the starting point.
std::string format_evolution(const GroupSet& groups, const RemovalTrace& trace);

/// Reads either an evolution CSV or a removal log back into a series.
DiagSeries parse_diag_series(std::istream& in);

}  // namespace fairsample
