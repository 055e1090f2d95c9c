#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "fairsample/error.hpp"
#include "fairsample/io.hpp"
#include "fairsample/manifest.hpp"
#include "fairsample/summary.hpp"
#include "fairsample/synth.hpp"
#include "support/oracles.hpp"

using namespace fairsample;

namespace {

Manifest parse(const std::string& text, const LoadOptions& options = {}, LoadReport* report = nullptr) {
  std::istringstream in(text);
  return parse_manifest(in, options, report);
}

const char* kHeader = "image_id,identity_id,group,score_African,score_Asian,score_Caucasian,score_Indian\n";

SynthConfig small_config(std::uint64_t seed, std::size_t per_group) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.identities_per_group.assign(4, per_group);
  cfg.images_min = 1;
  cfg.images_max = 4;
  cfg.concentration = {2.0, 6.0, 10.0, 4.0};
  return cfg;
}

}  // namespace

TEST_CASE("two valid rows load") {
  const auto m = parse(std::string(kHeader) +
                       "a,p1,African,0.7,0.1,0.1,0.1\n"
                       "b,p2,Asian,0.25,0.25,0.25,0.25\n");
  CHECK(m.images().size() == 2);
  CHECK(m.identities().size() == 2);
  CHECK(m.group_counts() == std::vector<std::size_t>{1, 1, 0, 0});
  CHECK(m.groups() == GroupSet());
}

TEST_CASE("a row summing to 0.90 is rejected and named") {
  try {
    parse(std::string(kHeader) + "a,p1,African,0.6,0.1,0.1,0.1\n");
    FAIL("expected a load error");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("line 2") != std::string::npos);
    CHECK(what.find("'a'") != std::string::npos);
  }
}

TEST_CASE("permissive loading skips bad rows and reports them") {
  LoadReport report;
  LoadOptions options;
  options.permissive = true;
  const auto m = parse(std::string(kHeader) +
                           "a,p1,African,0.6,0.1,0.1,0.1\n"
                           "b,p2,Asian,0.25,0.25,0.25,0.25\n"
                           "c,p3,Martian,0.25,0.25,0.25,0.25\n"
                           "d,p4,Asian,1.5,-0.5,0,0\n",
                       options, &report);
  CHECK(m.images().size() == 1);
  CHECK(report.rows_read == 4);
  CHECK(report.rows_rejected == 3);
  CHECK(report.problems.size() == 3);
}

TEST_CASE("identity labelled in two groups is fatal even when permissive") {
  LoadOptions options;
  options.permissive = true;
  CHECK_THROWS_AS(parse(std::string(kHeader) +
                            "a,X,African,0.7,0.1,0.1,0.1\n"
                            "b,X,Asian,0.7,0.1,0.1,0.1\n",
                        options),
                  DataError);
}

TEST_CASE("header problems") {
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(parse("image_id,identity_id,score_A,score_B\nx,y,0.5,0.5\n"), DataError);
  CHECK_THROWS_AS(parse("image_id,identity_id,group,group,score_A,score_B\n"), DataError);
  CHECK_THROWS_AS(parse("image_id,identity_id,group,score_A,score_B,extra\nx,y,A,0.5,0.5,1\n"), DataError);
  LoadOptions options;
  options.groups = GroupSet({"A", "B", "C"});
  CHECK_THROWS_AS(parse("image_id,identity_id,group,score_A,score_B\nx,y,A,0.5,0.5\n", options), DataError);
}

TEST_CASE("duplicate image ids are rejected") {
  CHECK_THROWS_AS(parse(std::string(kHeader) +
                        "a,p1,African,0.7,0.1,0.1,0.1\n"
                        "a,p2,Asian,0.25,0.25,0.25,0.25\n"),
                  DataError);
}

TEST_CASE("group sets") {
  CHECK(GroupSet().labels() == std::vector<std::string>{"African", "Asian", "Caucasian", "Indian"});
  CHECK_THROWS_AS(GroupSet({"only"}), DataError);
  CHECK_THROWS_AS(GroupSet({"a", "a"}), DataError);
  CHECK_THROWS_AS(GroupSet({"a", ""}), DataError);
  CHECK(GroupSet::parse("x,y").index_of("y") == 1);
  CHECK_FALSE(GroupSet::parse("x,y").index_of("Y").has_value());
}

TEST_CASE("two-group manifest round trips with two score columns") {
  const auto m = parse("image_id,identity_id,group,score_Left,score_Right\r\n"
                       "i1,p1,Left,0.75,0.25\r\n"
                       "\r\n"
                       "i2,p2,Right,0.125,0.875\r\n");
  const std::string text = format_manifest(m);
  CHECK(text.rfind("image_id,identity_id,group,score_Left,score_Right\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
  CHECK(parse(text) == m);
}

TEST_CASE("scores are renormalized at load") {
  const auto m = parse(std::string(kHeader) + "a,p1,African,0.7004,0.1,0.1,0.1\n");
  double sum = 0.0;
  for (double s : m.images()[0].scores) sum += s;
  CHECK(std::fabs(sum - 1.0) <= 1e-12);
}

TEST_CASE("empty manifest cannot be written") {
  CHECK_THROWS_WITH_AS(format_manifest(Manifest(GroupSet(), {})), "empty manifest", DataError);
}

TEST_CASE("write then load is the identity and preserves row order") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = oracle::random_manifest(seed, {});
    const auto path = std::filesystem::temp_directory_path() / ("fs_manifest_" + std::to_string(seed) + ".csv");
    write_manifest(m, path);
    const auto back = load_manifest(path);
    CHECK(back == m);
    CHECK(format_manifest(back) == read_file(path));
    std::filesystem::remove(path);
  }
}

TEST_CASE("identity partition and simplex invariants") {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const auto m = oracle::random_manifest(seed, {});
    std::size_t covered = 0;
    for (const auto& id : m.identities()) {
      covered += id.images.size();
      for (auto i : id.images) {
        CHECK(m.images()[i].identity_id == id.identity_id);
        CHECK(m.images()[i].group == id.group);
      }
    }
    CHECK(covered == m.images().size());
    std::size_t total = 0;
    for (auto n : m.group_counts()) total += n;
    CHECK(total == m.identities().size());
    for (const auto& img : m.images()) {
      double s = 0.0;
      for (double v : img.scores) s += v;
      CHECK(std::fabs(s - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("without_identities drops the identities and their images") {
  const auto m = oracle::random_manifest(3, {});
  const std::vector<std::size_t> drop{0, 2};
  const auto sub = m.without_identities(drop);
  CHECK(sub.identities().size() == m.identities().size() - 2);
  CHECK_FALSE(sub.find_identity(m.identity(0).identity_id).has_value());
  CHECK_FALSE(sub.find_identity(m.identity(2).identity_id).has_value());
  CHECK(sub.images().size() ==
        m.images().size() - m.identity(0).images.size() - m.identity(2).images.size());
}

TEST_CASE("summary of a balanced manifest") {
  const auto m = generate(small_config(4, 25));
  const auto s = summarize(m);
  REQUIRE(s.groups.size() == 4);
  for (const auto& g : s.groups) CHECK(g.identities == 25);
  CHECK(s.identities == 100);
  CHECK(s.images == m.images().size());
}

TEST_CASE("summary statistics match a naive second pass") {
  const auto m = generate(small_config(11, 10));
  const auto s = summarize(m);
  const auto table = oracle::ids(m, true);
  for (GroupIndex g = 0; g < 4; ++g) {
    std::vector<double> own;
    for (std::size_t j = 0; j < table.size(); ++j) {
      if (m.identity(j).group == g) own.push_back(table[j][g]);
    }
    REQUIRE(s.groups[g].own_score.has_value());
    const auto& dist = *s.groups[g].own_score;
    CHECK(dist.count == own.size());
    CHECK(dist.mean == doctest::Approx(oracle::mean(own)).epsilon(1e-12));
    CHECK(*dist.stddev == doctest::Approx(oracle::sample_std(own)).epsilon(1e-10));
    CHECK(dist.min == *std::min_element(own.begin(), own.end()));
    CHECK(dist.max == *std::max_element(own.begin(), own.end()));
  }
}

TEST_CASE("single-identity summary has equal deciles") {
  const auto m = parse(std::string(kHeader) + "a,p1,African,0.7,0.1,0.1,0.1\nb,p1,African,0.5,0.3,0.1,0.1\n");
  const auto s = summarize(m);
  const auto& dist = *s.groups[0].own_score;
  for (double q : dist.deciles) CHECK(q == doctest::Approx(0.6));
  CHECK_FALSE(dist.stddev.has_value());
  CHECK_FALSE(s.groups[1].own_score.has_value());
}

TEST_CASE("deciles use linear interpolation") {
  const std::vector<double> v{5, 1, 4, 2, 3, 10, 7, 6, 9, 8, 11};
  const auto d = describe(v);
  CHECK(d.deciles[0] == doctest::Approx(2.0));
  CHECK(d.deciles[4] == doctest::Approx(6.0));
  CHECK(d.deciles[8] == doctest::Approx(10.0));
  CHECK_THROWS_AS(describe(std::vector<double>{}), DataError);
}

TEST_CASE("summary JSON keeps a stable key order") {
  const auto m = generate(small_config(2, 3));
  const std::string json = format_summary_json(summarize(m));
  CHECK(json.find("\"images\"") < json.find("\"identities\""));
  CHECK(json.find("\"identities\"") < json.find("\"groups\""));
  CHECK(json == format_summary_json(summarize(m)));
}
