#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fairsample/error.hpp"
#include "fairsample/sampling.hpp"
#include "fairsample/synth.hpp"
#include "support/oracles.hpp"

using namespace fairsample;

namespace {

std::vector<std::string> removed_ids(const RemovalTrace& t) {
  std::vector<std::string> out;
  for (const auto& e : t.events) out.push_back(e.identity_id);
  return out;
}

// Greedy loop rebuilt from the oracle scores on every step.
// Stops early, like the samplers, when A/B would empty a group.
std::vector<std::string> oracle_greedy(Manifest m, Protocol p, std::size_t z) {
  std::vector<std::string> out;
  const bool mean_ids = p == Protocol::A;
  const bool mean_rows = p != Protocol::C;
  for (std::size_t step = 0; step < z; ++step) {
    const auto es = oracle::es(m, mean_ids, mean_rows);
    std::optional<GroupIndex> target;
    for (GroupIndex g = 0; g < m.dims(); ++g) {
      if (m.group_counts()[g] == 0) continue;
      if (!target) {
        target = g;
      } else if (p == Protocol::C ? es[g][g] > es[*target][*target] : es[g][g] < es[*target][*target]) {
        target = g;
      }
    }
    if (p != Protocol::C && m.group_counts()[*target] == 1) break;
    const auto table = oracle::ids(m, mean_ids);
    std::optional<std::size_t> victim;
    for (std::size_t j = 0; j < table.size(); ++j) {
      if (m.identity(j).group != *target) continue;
      if (!victim || table[j][*target] < table[*victim][*target]) victim = j;
    }
    out.push_back(m.identity(*victim).identity_id);
    const std::vector<std::size_t> drop{*victim};
    m = m.without_identities(drop);
  }
  return out;
}

struct Outcome {
  std::vector<std::string> removed;
  std::string error;
  std::optional<Manifest> manifest;
};

template <typename Fn>
Outcome capture(Fn&& fn) {
  Outcome o;
  try {
    auto r = fn();
    o.removed = removed_ids(r.trace);
    o.manifest = std::move(r.manifest);
  } catch (const SamplingError& e) {
    o.removed = removed_ids(e.partial_trace());
    o.error = e.what();
  }
  return o;
}

// The trace of a run, or the partial trace when A/B stop at an emptied group.
template <typename Fn>
RemovalTrace trace_of(Fn&& fn) {
  try {
    return fn().trace;
  } catch (const SamplingError& e) {
    return e.partial_trace();
  }
}

Manifest hand_manifest() {
  const GroupSet groups({"G1", "G2"});
  return Manifest(groups, {{"a", "p1", 0, {0.9, 0.1}},
                           {"b", "p2", 0, {0.6, 0.4}},
                           {"c", "q1", 1, {0.05, 0.95}},
                           {"d", "q2", 1, {0.06, 0.94}}});
}

Manifest skewed(std::uint64_t seed, std::size_t per_group) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.identities_per_group.assign(4, per_group);
  cfg.images_min = 1;
  cfg.images_max = 5;
  cfg.concentration = {1.0, 12.0, 12.0, 12.0};
  return generate(cfg);
}

}  // namespace

TEST_CASE("hand-checked protocol A step") {
  const auto m = hand_manifest();
  const auto r = sample_protocol(m, Protocol::A, 1);
  REQUIRE(r.trace.events.size() == 1);
  const auto& e = r.trace.events[0];
  CHECK(e.identity_id == "p2");
  CHECK(e.group == 0);
  CHECK(e.own_score == doctest::Approx(0.6));
  CHECK(e.diag_before[0] == doctest::Approx(0.75));
  CHECK(e.diag_before[1] == doctest::Approx(0.945));
  CHECK(e.diag_after[0] == doctest::Approx(0.9));
  CHECK(e.diag_after[1] == doctest::Approx(0.945));
  CHECK(r.manifest.identities().size() == 3);
  CHECK(removed_ids(sample_naive(m, Protocol::A, 1).trace) == removed_ids(r.trace));
}

TEST_CASE("zero budget leaves the manifest unchanged") {
  std::vector<ImageRecord> images;
  for (GroupIndex g = 0; g < 4; ++g) {
    std::vector<double> s(4, 0.0);
    s[g] = 1.0;
    images.push_back({"i" + std::to_string(g), "p" + std::to_string(g), g, s});
  }
  const Manifest m(GroupSet(), images);
  const auto r = sample_protocol(m, Protocol::C, 0);
  CHECK(r.manifest == m);
  CHECK(r.trace.events.empty());
}

TEST_CASE("budgets") {
  const auto m = hand_manifest();
  CHECK_THROWS_AS(sample_protocol(m, Protocol::A, 3), DataError);
  CHECK_THROWS_AS(sample_naive(m, Protocol::B, 3), DataError);
  CHECK_THROWS_AS(sample_protocol(m, Protocol::C, 4), DataError);
  CHECK_THROWS_AS(sample_protocol(m, Protocol::A, 2), SamplingError);
  const auto one = sample_naive(m, Protocol::C, 3);
  CHECK(one.manifest.identities().size() == 1);
  CHECK(removed_ids(sample_protocol(m, Protocol::C, 3).trace) == removed_ids(one.trace));
}

TEST_CASE("A/B error when greedy would empty a group, with the partial trace") {
  // G1 stays lowest no matter what, so the third removal would empty it.
  const GroupSet groups({"G1", "G2"});
  const Manifest m(groups, {{"a", "p1", 0, {0.5, 0.5}},
                            {"b", "p2", 0, {0.55, 0.45}},
                            {"c", "q1", 1, {0.01, 0.99}},
                            {"d", "q2", 1, {0.02, 0.98}},
                            {"e", "q3", 1, {0.03, 0.97}}});
  for (auto p : {Protocol::A, Protocol::B}) {
    for (auto* fn : {&sample_protocol, &sample_naive}) {
      try {
        fn(m, p, 3);
        FAIL("expected SamplingError");
      } catch (const SamplingError& e) {
        CHECK(e.partial_trace().events.size() == 1);
        CHECK(e.partial_trace().events[0].identity_id == "p1");
      }
    }
  }
}

TEST_CASE("incremental, naive and test-side greedy agree") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto m = oracle::random_manifest(seed, {.groups = 2 + seed % 3, .min_total = 8, .max_total = 30});
    const std::size_t total = m.identities().size();
    for (auto p : {Protocol::A, Protocol::B, Protocol::C}) {
      const std::size_t z = p == Protocol::C ? total - 1 : total - m.dims();
      const auto fast = capture([&] { return sample_protocol(m, p, z); });
      const auto slow = capture([&] { return sample_naive(m, p, z); });
      CHECK(fast.removed == slow.removed);
      CHECK(fast.error == slow.error);
      CHECK(fast.manifest == slow.manifest);
      CHECK(fast.removed == oracle_greedy(m, p, z));
    }
  }
}

TEST_CASE("ties break on group index then first appearance") {
  const GroupSet groups({"G1", "G2"});
  const Manifest level(groups, {{"a", "x", 1, {0.3, 0.7}},
                                {"b", "y", 1, {0.3, 0.7}},
                                {"c", "u", 0, {0.7, 0.3}},
                                {"d", "v", 0, {0.7, 0.3}}});
  CHECK(removed_ids(sample_protocol(level, Protocol::A, 1).trace) == std::vector<std::string>{"u"});
  CHECK(removed_ids(sample_naive(level, Protocol::A, 1).trace) == std::vector<std::string>{"u"});

  const Manifest low_second(groups, {{"a", "x", 1, {0.4, 0.6}},
                                     {"b", "y", 1, {0.4, 0.6}},
                                     {"c", "u", 0, {0.7, 0.3}},
                                     {"d", "v", 0, {0.7, 0.3}}});
  CHECK(removed_ids(sample_protocol(low_second, Protocol::A, 1).trace) == std::vector<std::string>{"x"});
  CHECK(removed_ids(sample_protocol(low_second, Protocol::C, 1).trace) == std::vector<std::string>{"u"});
}

TEST_CASE("coarse scores with many ties still match the naive sampler") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const auto m = oracle::random_manifest(seed, {.groups = 3, .max_images = 2, .coarse = true});
    for (auto p : {Protocol::A, Protocol::B, Protocol::C}) {
      const std::size_t z = m.identities().size() / 2;
      const auto fast = capture([&] { return sample_protocol(m, p, z); });
      const auto slow = capture([&] { return sample_naive(m, p, z); });
      CHECK(fast.removed == slow.removed);
      CHECK(fast.error == slow.error);
    }
  }
}

TEST_CASE("monotonicity and victim optimality") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto m = skewed(seed, 12);
    for (auto p : {Protocol::A, Protocol::B, Protocol::C}) {
      const auto trace = trace_of([&] { return sample_protocol(m, p, 30); });
      CHECK(trace.events.size() >= 5);
      double prev = p == Protocol::C ? *std::max_element(trace.initial_diag.begin(), trace.initial_diag.end())
                                     : *std::min_element(trace.initial_diag.begin(), trace.initial_diag.end());
      std::set<std::string> gone;
      for (const auto& e : trace.events) {
        const auto& d = e.diag_after;
        if (p == Protocol::C) {
          const double now = *std::max_element(d.begin(), d.end());
          CHECK(now <= prev);
          if (e.own_score > 0.0) CHECK(now < e.diag_before[e.group] + 1e-15);
          prev = now;
        } else {
          const double now = *std::min_element(d.begin(), d.end());
          CHECK(now >= prev);
          prev = now;
        }
        for (auto j : m.identities_in_group(e.group)) {
          const auto& id = m.identity(j).identity_id;
          if (gone.count(id) || id == e.identity_id) continue;
          CHECK(e.own_score <= own_group_score(m, j, p));
        }
        gone.insert(e.identity_id);
      }
    }
  }
}

TEST_CASE("greedy prefix property") {
  SynthConfig cfg;
  cfg.seed = 9;
  cfg.identities_per_group.assign(4, 15);
  cfg.images_min = 1;
  cfg.images_max = 5;
  cfg.concentration.assign(4, 6.0);
  const auto m = generate(cfg);
  for (auto p : {Protocol::A, Protocol::B, Protocol::C}) {
    const auto all = sample_protocol(m, p, 25);
    const auto first = sample_protocol(m, p, 10);
    const auto rest = sample_protocol(first.manifest, p, 15);
    auto chained = removed_ids(first.trace);
    for (auto& id : removed_ids(rest.trace)) chained.push_back(id);
    CHECK(chained == removed_ids(all.trace));
    CHECK(rest.manifest == all.manifest);
  }
}

TEST_CASE("only the target row changes for A/B and only the target entry for C") {
  const auto m = skewed(3, 10);
  for (auto p : {Protocol::A, Protocol::B, Protocol::C}) {
    const auto trace = trace_of([&] { return sample_protocol(m, p, 15); });
    CHECK_FALSE(trace.events.empty());
    for (const auto& e : trace.events) {
      for (GroupIndex g = 0; g < 4; ++g) {
        if (g != e.group) CHECK(e.diag_after[g] == e.diag_before[g]);
      }
    }
  }
}

TEST_CASE("random baseline keeps discrete balance") {
  const auto m = skewed(5, 20);
  const auto r = sample_random(m, 6, 42);
  CHECK(r.trace.seed == 42u);
  std::vector<std::size_t> lost(4, 0);
  for (const auto& e : r.trace.events) ++lost[e.group];
  std::sort(lost.begin(), lost.end());
  CHECK(lost == std::vector<std::size_t>{1, 1, 2, 2});
  CHECK(r.trace.warnings.size() == 1);

  const auto even = sample_random(m, 8, 42);
  CHECK(even.manifest.group_counts() == std::vector<std::size_t>{18, 18, 18, 18});
  CHECK(even.trace.warnings.empty());

  CHECK(removed_ids(sample_random(m, 6, 42).trace) == removed_ids(r.trace));
  CHECK(sample_random(m, 6, 42).manifest == r.manifest);
  CHECK(removed_ids(sample_random(m, 6, 43).trace) != removed_ids(r.trace));
}

TEST_CASE("random baseline distinct victims and budget") {
  const auto m = skewed(6, 10);
  const auto r = sample_random(m, 36, 1);
  const auto ids = removed_ids(r.trace);
  CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == 36);
  CHECK(r.manifest.group_counts() == std::vector<std::size_t>{1, 1, 1, 1});
  CHECK_THROWS_AS(sample_random(m, 37, 1), DataError);
}

TEST_CASE("single-group strategies") {
  const auto m = skewed(8, 10);
  const GroupIndex g = 2;
  auto kept = [&](const SamplingResult& r) {
    std::set<std::string> out;
    for (auto j : r.manifest.identities_in_group(g)) out.insert(r.manifest.identity(j).identity_id);
    return out;
  };
  const auto lo = sample_single_group(m, g, SingleGroupStrategy::Min, 0.5, 0);
  const auto hi = sample_single_group(m, g, SingleGroupStrategy::Max, 0.5, 0);
  const auto klo = kept(lo), khi = kept(hi);
  CHECK(klo.size() == 5);
  CHECK(khi.size() == 5);
  std::set<std::string> both;
  std::set_intersection(klo.begin(), klo.end(), khi.begin(), khi.end(), std::inserter(both, both.begin()));
  CHECK(both.empty());
  double max_lo = 0.0, min_hi = 1.0;
  for (auto j : m.identities_in_group(g)) {
    const auto& id = m.identity(j).identity_id;
    const double s = own_group_score(m, j, Protocol::A);
    if (klo.count(id)) max_lo = std::max(max_lo, s);
    if (khi.count(id)) min_hi = std::min(min_hi, s);
  }
  CHECK(max_lo <= min_hi);
  for (GroupIndex other = 0; other < 4; ++other) {
    if (other != g) CHECK(lo.manifest.group_counts()[other] == 10);
  }

  const auto all = sample_single_group(m, g, SingleGroupStrategy::Random, 1.0, 5);
  CHECK(all.manifest == m);
  const auto r1 = sample_single_group(m, g, SingleGroupStrategy::Random, 0.3, 5);
  const auto r2 = sample_single_group(m, g, SingleGroupStrategy::Random, 0.3, 5);
  CHECK(r1.manifest == r2.manifest);
  CHECK(kept(r1).size() == 3);
  CHECK_THROWS_AS(sample_single_group(m, g, SingleGroupStrategy::Max, 0.0, 0), DataError);
  CHECK_THROWS_AS(sample_single_group(m, g, SingleGroupStrategy::Max, 1.5, 0), DataError);
  CHECK(single_group_keep_count(7000, 0.5) == 3500);
  CHECK(single_group_keep_count(10, 0.31) == 4);
  CHECK(single_group_keep_count(10, 0.3) == 3);
}

TEST_CASE("equilibrium step") {
  RemovalTrace t;
  t.initial_diag = {0.8, 0.9, 0.85, 0.95};
  t.events.resize(4);
  const std::vector<std::vector<double>> after{
      {0.85, 0.9, 0.85, 0.95}, {0.88, 0.9, 0.88, 0.9201}, {0.91, 0.90, 0.905, 0.9101}, {0.91, 0.91, 0.91, 0.91}};
  for (std::size_t i = 0; i < 4; ++i) {
    t.events[i].step = i + 1;
    t.events[i].diag_before = i == 0 ? t.initial_diag : after[i - 1];
    t.events[i].diag_after = after[i];
  }
  CHECK(equilibrium_step(t, 0.02) == 3u);
  CHECK(equilibrium_step(t, 1.0) == 1u);
  CHECK(equilibrium_step(t, 1e-6) == 4u);
  CHECK_THROWS_AS(equilibrium_step(t, 0.0), DataError);
  CHECK_THROWS_AS(equilibrium_step(RemovalTrace{}, 0.1), DataError);
  CHECK(diag_spread(after[2]) == doctest::Approx(0.0101));
  CHECK(diag_spread(std::vector<double>{2.0, 1.0}, SpreadMeasure::Relative) == doctest::Approx(0.5));
}

TEST_CASE("equilibrium from the exported evolution matches a naive scan") {
  const auto m = skewed(2, 40);
  RemovalTrace trace = trace_of([&] { return sample_protocol(m, Protocol::A, 120); });
  const auto step = equilibrium_step(trace, 0.02);
  REQUIRE(step.has_value());

  std::istringstream evo(format_evolution(m.groups(), trace));
  const auto series = parse_diag_series(evo);
  std::optional<std::size_t> scanned;
  for (std::size_t i = 0; i < series.steps.size() && !scanned; ++i) {
    if (series.steps[i] == 0) continue;
    const auto& d = series.diags[i];
    if (*std::max_element(d.begin(), d.end()) - *std::min_element(d.begin(), d.end()) < 0.02) {
      scanned = series.steps[i];
    }
  }
  CHECK(scanned == step);

  std::istringstream log(format_removal_log(m.groups(), trace));
  CHECK(equilibrium_step(parse_diag_series(log), 0.02) == step);
}

TEST_CASE("removal log layout") {
  const auto m = hand_manifest();
  const auto r = sample_protocol(m, Protocol::A, 1);
  const auto log = format_removal_log(m.groups(), r.trace);
  CHECK(log.rfind("step,identity_id,group,own_group_ids,diag_G1_before,diag_G2_before,diag_G1_after,diag_G2_after\n"
                  "1,p2,G1,0.6,",
                  0) == 0);
  const auto evo = format_evolution(m.groups(), r.trace);
  CHECK(evo.rfind("step,diag_G1,diag_G2\n0,0.75,", 0) == 0);
}

TEST_CASE("large run stays consistent with the naive sampler") {
  const auto m = skewed(17, 60);
  for (auto p : {Protocol::A, Protocol::B, Protocol::C}) {
    const auto fast = capture([&] { return sample_protocol(m, p, 150); });
    const auto slow = capture([&] { return sample_naive(m, p, 150); });
    CHECK(fast.removed == slow.removed);
    CHECK(fast.error == slow.error);
  }
}
