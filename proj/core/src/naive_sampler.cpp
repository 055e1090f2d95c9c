// Reference sampler: every iteration rebuilds identity and group scores from
// the image scores of the surviving identities, then removes one identity.
// Quadratic and slow on purpose; it shares nothing with sample_protocol
// beyond the data model.

#include <limits>

#include "fairsample/numeric.hpp"
#include "fairsample/sampling.hpp"

namespace fairsample {

namespace {

struct Scores {
  std::vector<double> identity;  // own-group score per identity (alive only)
  std::vector<double> group;     // diag, NaN for an emptied group under A/B
  std::vector<std::size_t> members;
};

Scores recompute(const Manifest& m, Protocol p, const std::vector<char>& alive) {
  const std::size_t d = m.dims();
  const auto images = m.images();
  Scores s;
  s.identity.assign(m.identities().size(), 0.0);
  s.group.assign(d, 0.0);
  s.members.assign(d, 0);
  for (GroupIndex y = 0; y < d; ++y) {
    CompensatedSum group_total;
    std::size_t members = 0;
    for (std::size_t j = 0; j < m.identities().size(); ++j) {
      const auto& rec = m.identity(j);
      if (!alive[j] || rec.group != y) continue;
      CompensatedSum identity_total;
      std::size_t image_count = 0;
      for (std::size_t i : rec.images) {
        identity_total += images[i].scores[y];
        ++image_count;
      }
      double ids = identity_total.value();
      if (p == Protocol::A) ids /= static_cast<double>(image_count);
      s.identity[j] = ids;
      group_total += ids;
      ++members;
    }
    s.members[y] = members;
    if (averages_identities(p)) {
      s.group[y] = members == 0 ? std::numeric_limits<double>::quiet_NaN()
                                : group_total.value() / static_cast<double>(members);
    } else {
      s.group[y] = group_total.value();
    }
  }
  return s;
}

}  // namespace

SamplingResult sample_naive(const Manifest& m, Protocol p, std::size_t removals) {
  validate_budget(m, p, removals);
  const std::size_t d = m.dims();
  std::vector<char> alive(m.identities().size(), 1);
  std::vector<std::size_t> removed;

  RemovalTrace trace;
  trace.strategy = std::string(to_string(p));
  trace.diag_protocol = p;
  trace.initial_diag = recompute(m, p, alive).group;

  for (std::size_t step = 1; step <= removals; ++step) {
    const Scores before = recompute(m, p, alive);

    std::size_t target = d;
    for (GroupIndex y = 0; y < d; ++y) {
      if (before.members[y] == 0) continue;
      if (target == d) {
        target = y;
        continue;
      }
      const bool better = averages_identities(p) ? before.group[y] < before.group[target]
                                                 : before.group[y] > before.group[target];
      if (better) target = y;
    }
    if (averages_identities(p) && before.members[target] == 1) {
      throw SamplingError("step " + std::to_string(step) + ": removing the last identity of group '" +
                              m.groups().label(target) + "' would empty it",
                          std::move(trace));
    }

    std::size_t victim = m.identities().size();
    for (std::size_t j = 0; j < m.identities().size(); ++j) {
      if (!alive[j] || m.identity(j).group != target) continue;
      if (victim == m.identities().size() || before.identity[j] < before.identity[victim]) victim = j;
    }

    alive[victim] = 0;
    removed.push_back(victim);
    const Scores after = recompute(m, p, alive);

    RemovalEvent ev;
    ev.step = step;
    ev.identity_id = m.identity(victim).identity_id;
    ev.group = target;
    ev.own_score = before.identity[victim];
    ev.diag_before = before.group;
    ev.diag_after = after.group;
    trace.events.push_back(std::move(ev));
  }

  return {m.without_identities(removed), std::move(trace)};
}

}  // namespace fairsample
