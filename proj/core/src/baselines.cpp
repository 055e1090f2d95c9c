#include <algorithm>
#include <cmath>
#include <numeric>

#include "diag_tracker.hpp"
#include "fairsample/rng.hpp"
#include "fairsample/sampling.hpp"

namespace fairsample {

namespace {

SamplingResult apply_removals(const Manifest& m, RemovalTrace trace, std::span<const std::size_t> order) {
  detail::DiagTracker tracker(m, trace.diag_protocol);
  trace.initial_diag = tracker.diag();
  trace.events.reserve(order.size());
  std::size_t step = 0;
  for (std::size_t j : order) trace.events.push_back(tracker.remove(j, ++step));
  return {m.without_identities(order), std::move(trace)};
}

}  // namespace

SamplingResult sample_random(const Manifest& m, std::size_t removals, std::uint64_t seed) {
  const std::size_t d = m.dims();
  const auto& counts = m.group_counts();
  if (removals >= m.identities().size()) {
    throw DataError("budget of " + std::to_string(removals) + " exceeds the identities available");
  }

  RemovalTrace trace;
  trace.strategy = "random";
  trace.diag_protocol = Protocol::A;
  trace.seed = seed;

  const bool balanced = std::adjacent_find(counts.begin(), counts.end(), std::not_equal_to<>()) == counts.end();
  if (balanced && removals % d != 0) {
    trace.warnings.push_back("budget " + std::to_string(removals) + " is not divisible by " + std::to_string(d) +
                             " groups; the result is off balance by one identity in some groups");
  }

  SplitMix64 rng(seed);
  std::vector<GroupIndex> group_order(d);
  std::iota(group_order.begin(), group_order.end(), GroupIndex{0});
  rng.shuffle(std::span<GroupIndex>(group_order));
  std::vector<std::size_t> losses(d, removals / d);
  for (std::size_t k = 0; k < removals % d; ++k) ++losses[group_order[k]];

  std::vector<std::size_t> order;
  order.reserve(removals);
  for (GroupIndex g = 0; g < d; ++g) {
    if (losses[g] >= counts[g] && losses[g] > 0) {
      throw DataError("group '" + m.groups().label(g) + "' has " + std::to_string(counts[g]) +
                      " identities and cannot lose " + std::to_string(losses[g]) + " while staying non-empty");
    }
    auto members = m.identities_in_group(g);
    rng.shuffle(std::span<std::size_t>(members));
    order.insert(order.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(losses[g]));
  }
  return apply_removals(m, std::move(trace), order);
}

std::string_view to_string(SingleGroupStrategy s) {
  switch (s) {
    case SingleGroupStrategy::Min: return "min";
    case SingleGroupStrategy::Max: return "max";
    case SingleGroupStrategy::Random: return "rand";
  }
  throw InvariantError("bad strategy");
}

SingleGroupStrategy parse_single_group_strategy(std::string_view text) {
  if (text == "min") return SingleGroupStrategy::Min;
  if (text == "max") return SingleGroupStrategy::Max;
  if (text == "rand" || text == "random") return SingleGroupStrategy::Random;
  throw DataError("unknown strategy '" + std::string(text) + "' (expected min, max or rand)");
}

std::size_t single_group_keep_count(std::size_t group_size, double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) throw DataError("keep fraction must lie in (0, 1]");
  // The slack absorbs representation error, e.g. 0.7 * 10 = 7.000000000000001.
  const double exact = keep_fraction * static_cast<double>(group_size);
  const auto keep = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::clamp<std::size_t>(keep, 1, group_size);
}

SamplingResult sample_single_group(const Manifest& m, GroupIndex g, SingleGroupStrategy strategy,
                                   double keep_fraction, std::uint64_t seed) {
  if (g >= m.dims()) throw DataError("group index out of range");
  const std::size_t n = m.group_counts()[g];
  if (n == 0) throw DataError("group '" + m.groups().label(g) + "' is empty");
  const std::size_t keep = single_group_keep_count(n, keep_fraction);

  RemovalTrace trace;
  trace.strategy = "single-" + std::string(to_string(strategy));
  trace.diag_protocol = Protocol::A;

  auto members = m.identities_in_group(g);
  std::vector<double> own(m.identities().size(), 0.0);
  for (std::size_t j : members) own[j] = own_group_score(m, j, Protocol::A);
  const auto by_score = [&](std::size_t a, std::size_t b) { return own[a] < own[b]; };

  // Both score strategies rank by (score, first appearance), so at
  // keep_fraction 0.5 Min and Max partition the group exactly.
  switch (strategy) {
    case SingleGroupStrategy::Max:
      std::stable_sort(members.begin(), members.end(), by_score);
      break;
    case SingleGroupStrategy::Min:
      std::stable_sort(members.begin(), members.end(), by_score);
      std::reverse(members.begin(), members.end());
      break;
    case SingleGroupStrategy::Random: {
      trace.seed = seed;
      SplitMix64 rng(seed);
      rng.shuffle(std::span<std::size_t>(members));
      break;
    }
  }
  members.resize(n - keep);
  return apply_removals(m, std::move(trace), members);
}

}  // namespace fairsample
