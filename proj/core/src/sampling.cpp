#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "diag_tracker.hpp"
#include "fairsample/sampling.hpp"

namespace fairsample {

namespace detail {

DiagTracker::DiagTracker(const Manifest& m, Protocol p)
    : manifest_(m),
      protocol_(p),
      own_(m.identities().size()),
      alive_(m.identities().size(), 1),
      sums_(m.dims()),
      counts_(m.group_counts()) {
  // Identity order within each group, so the starting sums match a fresh
  // recomputation bit for bit.
  for (std::size_t j = 0; j < own_.size(); ++j) {
    own_[j] = own_group_score(m, j, p);
    sums_[m.identity(j).group] += own_[j];
  }
}

double DiagTracker::diag(GroupIndex g) const {
  if (!averages_identities(protocol_)) return sums_[g].value();
  if (counts_[g] == 0) return std::numeric_limits<double>::quiet_NaN();
  return sums_[g].value() / static_cast<double>(counts_[g]);
}

std::vector<double> DiagTracker::diag() const {
  std::vector<double> out(sums_.size());
  for (GroupIndex g = 0; g < out.size(); ++g) out[g] = diag(g);
  return out;
}

RemovalEvent DiagTracker::remove(std::size_t identity, std::size_t step) {
  if (!alive_[identity]) throw InvariantError("identity removed twice");
  const auto& rec = manifest_.identity(identity);
  RemovalEvent ev;
  ev.step = step;
  ev.identity_id = rec.identity_id;
  ev.group = rec.group;
  ev.own_score = own_[identity];
  ev.diag_before = diag();
  alive_[identity] = 0;
  sums_[rec.group] -= own_[identity];
  --counts_[rec.group];
  ev.diag_after = diag();
  return ev;
}

void DiagTracker::verify(double tolerance) const {
  std::vector<CompensatedSum> fresh(sums_.size());
  std::vector<std::size_t> counts(sums_.size(), 0);
  for (std::size_t j = 0; j < own_.size(); ++j) {
    if (!alive_[j]) continue;
    const GroupIndex g = manifest_.identity(j).group;
    fresh[g] += own_group_score(manifest_, j, protocol_);
    ++counts[g];
  }
  for (GroupIndex g = 0; g < sums_.size(); ++g) {
    if (counts[g] != counts_[g]) throw InvariantError("group identity count drifted");
    if (counts[g] == 0) continue;
    const double scale = averages_identities(protocol_) ? static_cast<double>(counts[g]) : 1.0;
    const double expected = fresh[g].value() / scale;
    if (std::fabs(expected - diag(g)) > tolerance) {
      throw InvariantError("incremental group score drifted from recomputation for group '" +
                           manifest_.groups().label(g) + "'");
    }
  }
}

}  // namespace detail

namespace {

constexpr std::size_t kCheckpointInterval = 100;
constexpr double kCheckpointTolerance = 1e-9;

std::vector<std::size_t> removed_indices(const Manifest& m, const RemovalTrace& trace) {
  std::vector<std::size_t> out;
  out.reserve(trace.events.size());
  for (const auto& ev : trace.events) out.push_back(*m.find_identity(ev.identity_id));
  return out;
}

}  // namespace

void validate_budget(const Manifest& m, Protocol p, std::size_t removals) {
  const std::size_t total = m.identities().size();
  if (averages_identities(p)) {
    for (GroupIndex g = 0; g < m.dims(); ++g) {
      if (m.group_counts()[g] == 0) {
        throw DataError("empty group under mean protocol: '" + m.groups().label(g) + "' has no identities");
      }
    }
    if (removals > total - m.dims()) {
      throw DataError("budget of " + std::to_string(removals) + " removals cannot leave every group non-empty (" +
                      std::to_string(total) + " identities, " + std::to_string(m.dims()) + " groups)");
    }
  } else if (removals >= total) {
    throw DataError("budget of " + std::to_string(removals) + " removals must leave at least one of " +
                    std::to_string(total) + " identities");
  }
}

SamplingResult sample_protocol(const Manifest& m, Protocol p, std::size_t removals) {
  validate_budget(m, p, removals);
  const std::size_t d = m.dims();
  detail::DiagTracker tracker(m, p);

  // Within a group identities leave in (own score, first appearance) order,
  // and identity scores never change, so a sorted queue per group suffices.
  std::vector<std::vector<std::size_t>> queues(d);
  for (std::size_t j = 0; j < m.identities().size(); ++j) queues[m.identity(j).group].push_back(j);
  for (auto& q : queues) {
    std::stable_sort(q.begin(), q.end(),
                     [&](std::size_t a, std::size_t b) { return tracker.own(a) < tracker.own(b); });
  }
  std::vector<std::size_t> cursor(d, 0);

  RemovalTrace trace;
  trace.strategy = std::string(to_string(p));
  trace.diag_protocol = p;
  trace.initial_diag = tracker.diag();
  trace.events.reserve(removals);

  for (std::size_t step = 1; step <= removals; ++step) {
    std::optional<GroupIndex> target;
    for (GroupIndex g = 0; g < d; ++g) {
      if (tracker.count(g) == 0) continue;
      if (!target) {
        target = g;
      } else if (averages_identities(p) ? tracker.diag(g) < tracker.diag(*target)
                                        : tracker.diag(g) > tracker.diag(*target)) {
        target = g;
      }
    }
    if (!target) throw InvariantError("no group left to sample from");
    if (averages_identities(p) && tracker.count(*target) == 1) {
      throw SamplingError("step " + std::to_string(step) + ": removing the last identity of group '" +
                              m.groups().label(*target) + "' would empty it",
                          std::move(trace));
    }
    const std::size_t victim = queues[*target][cursor[*target]++];
    trace.events.push_back(tracker.remove(victim, step));
    if (step % kCheckpointInterval == 0) tracker.verify(kCheckpointTolerance);
  }

  auto subset = m.without_identities(removed_indices(m, trace));
  return {std::move(subset), std::move(trace)};
}

double diag_spread(std::span<const double> diag, SpreadMeasure measure) {
  if (diag.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(diag.begin(), diag.end());
  const double spread = *hi - *lo;
  if (measure == SpreadMeasure::Absolute) return spread;
  return *hi > 0.0 ? spread / *hi : 0.0;
}

DiagSeries diag_series(const RemovalTrace& trace, const GroupSet& groups) {
  DiagSeries series;
  series.groups = groups.labels();
  series.steps.push_back(0);
  series.diags.push_back(trace.initial_diag);
  for (const auto& ev : trace.events) {
    series.steps.push_back(ev.step);
    series.diags.push_back(ev.diag_after);
  }
  return series;
}

std::optional<std::size_t> equilibrium_step(const DiagSeries& series, double epsilon, SpreadMeasure measure) {
  if (!(epsilon > 0.0)) throw DataError("epsilon must be positive");
  for (std::size_t i = 0; i < series.steps.size(); ++i) {
    if (series.steps[i] == 0) continue;
    if (diag_spread(series.diags[i], measure) < epsilon) return series.steps[i];
  }
  return std::nullopt;
}

std::optional<std::size_t> equilibrium_step(const RemovalTrace& trace, double epsilon, SpreadMeasure measure) {
  if (!(epsilon > 0.0)) throw DataError("epsilon must be positive");
  if (trace.events.empty()) throw DataError("equilibrium needs a non-empty trace");
  for (const auto& ev : trace.events) {
    if (diag_spread(ev.diag_after, measure) < epsilon) return ev.step;
  }
  return std::nullopt;
}

}  // namespace fairsample
