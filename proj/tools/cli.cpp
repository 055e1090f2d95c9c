#include "cli.hpp"

#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "fairsample/csv.hpp"
#include "fairsample/io.hpp"
#include "fairsample/manifest.hpp"
#include "fairsample/metrics.hpp"
#include "fairsample/sampling.hpp"
#include "fairsample/scoring.hpp"
#include "fairsample/summary.hpp"
#include "fairsample/synth.hpp"

#ifndef FAIRSAMPLE_VERSION
#define FAIRSAMPLE_VERSION "unknown"
#endif

namespace fairsample::cli {

namespace {

// Bad combinations of otherwise well-formed flags.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Verbosity { Quiet, Warn, Info };

Verbosity verbosity_from_env() {
  const char* level = std::getenv("FAIRSAMPLE_LOG");
  if (!level) return Verbosity::Warn;
  const std::string_view v(level);
  if (v == "quiet" || v == "error") return Verbosity::Quiet;
  if (v == "info" || v == "debug") return Verbosity::Info;
  return Verbosity::Warn;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  Verbosity verbosity = Verbosity::Warn;

  void warn(const std::string& message) const {
    if (verbosity != Verbosity::Quiet) err << "warning: " << message << "\n";
  }
  void info(const std::string& message) const {
    if (verbosity == Verbosity::Info) err << message << "\n";
  }

  /// Writes to `path` atomically, or to the output stream for "" and "-".
  void emit(const std::string& path, std::string_view contents) const {
    if (path.empty() || path == "-") {
      out << contents;
    } else {
      write_file_atomic(path, contents);
    }
  }
};

struct ManifestArgs {
  std::string path;
  std::string groups;
  bool permissive = false;
};

void add_manifest_args(CLI::App* sub, ManifestArgs& args) {
  sub->add_option("manifest", args.path, "Score manifest CSV ('-' for stdin)")->required();
  sub->add_option("--groups", args.groups, "Comma-separated group order (default: header order)");
  sub->add_flag("--permissive", args.permissive, "Skip invalid rows instead of failing");
}

Manifest read_manifest(const Context& ctx, const ManifestArgs& args) {
  LoadOptions options;
  if (!args.groups.empty()) options.groups = GroupSet::parse(args.groups);
  options.permissive = args.permissive;
  LoadReport report;
  Manifest m = args.path == "-" ? parse_manifest(std::cin, options, &report)
                                : load_manifest(args.path, options, &report);
  if (report.rows_rejected > 0) {
    ctx.warn(std::to_string(report.rows_rejected) + " row(s) rejected");
    for (const auto& p : report.problems) ctx.warn(p);
  }
  return m;
}

std::vector<std::string> split_list(const std::string& text) { return csv::split_line(text); }

std::vector<double> parse_doubles(const std::string& text, std::string_view what) {
  std::vector<double> out;
  for (const auto& f : split_list(text)) out.push_back(csv::parse_double(f, what));
  return out;
}

void check_format(const std::string& format, std::initializer_list<std::string_view> allowed) {
  for (auto a : allowed) {
    if (format == a) return;
  }
  throw UsageError("unsupported --format '" + format + "'");
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
  ManifestArgs manifest;
};

void cmd_validate(const Context& ctx, const ValidateArgs& a) {
  const Manifest m = read_manifest(ctx, a.manifest);
  ctx.out << "ok: " << m.images().size() << " images, " << m.identities().size() << " identities, "
          << m.dims() << " groups\n";
}

// ---------------------------------------------------------------- summarize

struct SummarizeArgs {
  ManifestArgs manifest;
  std::string out;
};

void cmd_summarize(const Context& ctx, const SummarizeArgs& a) {
  const Manifest m = read_manifest(ctx, a.manifest);
  ctx.emit(a.out, format_summary_json(summarize(m)));
}

// ---------------------------------------------------------------- ids / es

struct ScoreArgs {
  ManifestArgs manifest;
  std::string protocol = "A";
  std::string format = "csv";
  std::string out;
};

void cmd_ids(const Context& ctx, const ScoreArgs& a) {
  check_format(a.format, {"csv", "json"});
  const Manifest m = read_manifest(ctx, a.manifest);
  const auto ids = compute_ids(m, parse_protocol(a.protocol));
  ctx.emit(a.out, a.format == "json" ? format_ids_json(m, ids) : format_ids_csv(m, ids));
}

void cmd_es(const Context& ctx, const ScoreArgs& a) {
  check_format(a.format, {"csv", "json"});
  const Manifest m = read_manifest(ctx, a.manifest);
  const auto es = compute_es(m, parse_protocol(a.protocol));
  ctx.emit(a.out, a.format == "json" ? format_es_json(m.groups(), es) : format_es_csv(m.groups(), es));
}

// ---------------------------------------------------------------- relabel

struct RelabelArgs {
  ManifestArgs manifest;
  std::string out;
};

std::size_t count_changes(const Manifest& before, const Manifest& after) {
  std::size_t changed = 0;
  for (std::size_t j = 0; j < before.identities().size(); ++j) {
    if (before.identity(j).group != after.identity(j).group) ++changed;
  }
  return changed;
}

void cmd_relabel(const Context& ctx, const RelabelArgs& a) {
  const Manifest m = read_manifest(ctx, a.manifest);
  const Manifest r = relabel(m);
  ctx.info(std::to_string(count_changes(m, r)) + " identities relabelled");
  ctx.emit(a.out, format_manifest(r));
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  ManifestArgs manifest;
  std::string protocol;
  std::optional<std::size_t> remove;
  std::optional<std::size_t> target_size;
  std::optional<std::uint64_t> seed;
  bool relabel_first = false;
  bool naive = false;
  std::string log;
  std::string evolution;
  std::string out;
};

void write_trace_files(const Context& ctx, const GroupSet& groups, const RemovalTrace& trace,
                       const std::string& log, const std::string& evolution) {
  if (!log.empty()) ctx.emit(log, format_removal_log(groups, trace));
  if (!evolution.empty()) ctx.emit(evolution, format_evolution(groups, trace));
}

void cmd_sample(const Context& ctx, const SampleArgs& a) {
  if (a.remove.has_value() == a.target_size.has_value()) {
    throw UsageError("give exactly one of --remove and --target-size");
  }
  const bool random = a.protocol == "random";
  if (random && !a.seed) throw UsageError("--protocol random requires --seed");
  if (random && a.naive) throw UsageError("--naive applies to protocols A, B and C only");
  const Protocol protocol = random ? Protocol::A : parse_protocol(a.protocol);
  if (!random && a.seed) ctx.warn("--seed has no effect on protocol " + a.protocol);

  Manifest m = read_manifest(ctx, a.manifest);
  if (a.relabel_first) m = relabel(m);

  const std::size_t current = m.identities().size();
  std::size_t removals = 0;
  if (a.remove) {
    removals = *a.remove;
  } else {
    if (*a.target_size > current) {
      throw DataError("target size " + std::to_string(*a.target_size) + " exceeds the " + std::to_string(current) +
                      " identities available");
    }
    removals = current - *a.target_size;
  }

  std::optional<SamplingResult> result;
  try {
    if (random) {
      result.emplace(sample_random(m, removals, *a.seed));
    } else if (a.naive) {
      result.emplace(sample_naive(m, protocol, removals));
    } else {
      result.emplace(sample_protocol(m, protocol, removals));
    }
  } catch (const SamplingError& e) {
    write_trace_files(ctx, m.groups(), e.partial_trace(), a.log, a.evolution);
    throw;
  }
  for (const auto& w : result->trace.warnings) ctx.warn(w);
  ctx.info("removed " + std::to_string(result->trace.events.size()) + " identities; " +
           std::to_string(result->manifest.identities().size()) + " remain");
  write_trace_files(ctx, m.groups(), result->trace, a.log, a.evolution);
  ctx.emit(a.out, format_manifest(result->manifest));
}

// ---------------------------------------------------------------- single

struct SingleArgs {
  ManifestArgs manifest;
  std::string group;
  std::string strategy;
  double keep_fraction = 0.5;
  std::optional<std::uint64_t> seed;
  std::string log;
  std::string out;
};

void cmd_single(const Context& ctx, const SingleArgs& a) {
  const auto strategy = parse_single_group_strategy(a.strategy);
  if (strategy == SingleGroupStrategy::Random && !a.seed) throw UsageError("--strategy rand requires --seed");
  const Manifest m = read_manifest(ctx, a.manifest);
  const auto g = m.groups().index_of(a.group);
  if (!g) throw DataError("unknown group '" + a.group + "'");
  const auto result = sample_single_group(m, *g, strategy, a.keep_fraction, a.seed.value_or(0));
  if (!a.log.empty()) ctx.emit(a.log, format_removal_log(m.groups(), result.trace));
  ctx.emit(a.out, format_manifest(result.manifest));
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs {
  std::string pairs;
  std::string mode = "outcomes";
  std::string accuracies;
  std::string groups;
  std::string scale = "percent";
  std::string format = "json";
  std::string out;
};

void cmd_metrics(const Context& ctx, const MetricsArgs& a) {
  check_format(a.format, {"json", "csv"});
  if (a.pairs.empty() == a.accuracies.empty()) throw UsageError("give exactly one of --pairs and --accuracies");
  const GroupSet groups = a.groups.empty() ? GroupSet() : GroupSet::parse(a.groups);

  std::vector<double> fractions;
  if (!a.accuracies.empty()) {
    const auto values = parse_doubles(a.accuracies, "accuracy");
    if (values.size() != groups.size()) {
      throw DataError("got " + std::to_string(values.size()) + " accuracies for " + std::to_string(groups.size()) +
                      " groups");
    }
    fractions = to_fractions(values, parse_accuracy_scale(a.scale));
  } else {
    const auto mode = parse_pair_mode(a.mode);
    const auto pairs = load_pairs(a.pairs, groups, mode);
    const auto acc = group_accuracy(pairs, mode, groups.size());
    for (GroupIndex g = 0; g < groups.size(); ++g) {
      if (!acc.accuracy[g]) throw DataError("no pairs for group '" + groups.label(g) + "'");
      fractions.push_back(*acc.accuracy[g]);
    }
  }
  const auto report = fairness_report(fractions);
  for (const auto& flag : report.flags) ctx.warn(flag);
  ctx.emit(a.out, a.format == "json" ? format_report_json(groups, report) : format_report_csv(groups, report));
}

// ---------------------------------------------------------------- pareto

struct ParetoArgs {
  std::string runs;
  std::string bias = "std";
  std::string scale = "percent";
  std::string out;
};

void cmd_pareto(const Context& ctx, const ParetoArgs& a) {
  const auto runs = load_runs(a.runs);
  const auto frontier = runs_frontier(runs, parse_bias_axis(a.bias), parse_accuracy_scale(a.scale));
  for (std::size_t r = 0; r < runs.rows.size(); ++r) {
    if (frontier.excluded[r]) ctx.warn("run '" + runs.rows[r][0] + "' has undefined SER and is excluded");
  }
  ctx.emit(a.out, format_frontier_csv(runs, frontier));
}

// ---------------------------------------------------------------- scatter

struct ScatterArgs {
  ManifestArgs manifest;
  std::string external;
  std::string format = "csv";
  std::string correlations;
  std::string out;
};

void cmd_scatter(const Context& ctx, const ScatterArgs& a) {
  check_format(a.format, {"csv", "json"});
  const Manifest m = read_manifest(ctx, a.manifest);
  const auto result = score_scatter(m, load_external_scores(a.external));
  for (const auto& w : result.warnings) ctx.warn(w);
  if (!a.correlations.empty()) ctx.emit(a.correlations, format_scatter_json(m.groups(), result));
  ctx.emit(a.out, a.format == "json" ? format_scatter_json(m.groups(), result)
                                     : format_scatter_csv(m.groups(), result));
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string groups;
  std::string identities;
  std::string images;
  std::string concentration;
  std::optional<double> label_noise;
  std::string out;
};

void cmd_synth(const Context& ctx, const SynthArgs& a) {
  SynthConfig cfg;
  bool seeded = a.seed.has_value();
  if (!a.config.empty()) {
    const auto text = read_file(a.config);
    cfg = parse_synth_config(text);
    seeded = seeded || text.find("\"seed\"") != std::string::npos;
  }
  if (!seeded) throw UsageError("synth requires --seed (or a seed in --config)");
  if (a.seed) cfg.seed = *a.seed;
  if (!a.groups.empty()) cfg.groups = GroupSet::parse(a.groups);
  const std::size_t d = cfg.groups.size();
  if (!a.identities.empty()) {
    cfg.identities_per_group.clear();
    for (const auto& f : split_list(a.identities)) {
      const auto n = csv::parse_int(f, "--identities");
      if (n < 0) throw DataError("--identities must be non-negative");
      cfg.identities_per_group.push_back(static_cast<std::size_t>(n));
    }
  }
  if (cfg.identities_per_group.size() == 1) cfg.identities_per_group.assign(d, cfg.identities_per_group[0]);
  if (cfg.identities_per_group.empty()) cfg.identities_per_group.assign(d, 10);
  if (!a.images.empty()) {
    const auto range = split_list(a.images);
    if (range.size() != 2) throw UsageError("--images takes MIN,MAX");
    const auto lo = csv::parse_int(range[0], "--images");
    const auto hi = csv::parse_int(range[1], "--images");
    if (lo < 1 || hi < lo) throw DataError("--images must satisfy 1 <= MIN <= MAX");
    cfg.images_min = static_cast<std::size_t>(lo);
    cfg.images_max = static_cast<std::size_t>(hi);
  }
  if (!a.concentration.empty()) cfg.concentration = parse_doubles(a.concentration, "--concentration");
  if (cfg.concentration.size() == 1) cfg.concentration.assign(d, cfg.concentration[0]);
  if (cfg.concentration.empty()) cfg.concentration.assign(d, 8.0);
  if (a.label_noise) cfg.label_noise = *a.label_noise;
  const Manifest m = generate(cfg);
  ctx.info("generated " + std::to_string(m.identities().size()) + " identities, " +
           std::to_string(m.images().size()) + " images");
  ctx.emit(a.out, format_manifest(m));
}

// ---------------------------------------------------------------- equilibrium

struct EquilibriumArgs {
  std::string trace;
  double epsilon = 0.0;
  bool relative = false;
};

void cmd_equilibrium(const Context& ctx, const EquilibriumArgs& a) {
  std::istringstream in(read_file(a.trace));
  const auto series = parse_diag_series(in);
  if (series.steps.empty()) throw DataError("trace has no rows");
  const auto measure = a.relative ? SpreadMeasure::Relative : SpreadMeasure::Absolute;
  const auto step = equilibrium_step(series, a.epsilon, measure);
  ctx.out << "{\"equilibrium_step\": " << (step ? std::to_string(*step) : "null")
          << ", \"epsilon\": " << csv::format_double(a.epsilon)
          << ", \"measure\": \"" << (a.relative ? "relative" : "absolute") << "\"}\n";
}

}  // namespace

ExitStatus run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err, verbosity_from_env()};

  CLI::App app{"Balance identity-labelled datasets over continuous group scores", "fairsample"};
  app.set_version_flag("--version", FAIRSAMPLE_VERSION);
  app.require_subcommand(1);

  std::function<void()> action;
  auto command = [&](const std::string& name, const std::string& description) {
    auto* sub = app.add_subcommand(name, description);
    sub->set_version_flag("--version", FAIRSAMPLE_VERSION);
    return sub;
  };

  ValidateArgs validate_args;
  {
    auto* sub = command("validate", "Load and validate a score manifest");
    add_manifest_args(sub, validate_args.manifest);
    sub->callback([&] { action = [&] { cmd_validate(ctx, validate_args); }; });
  }

  SummarizeArgs summarize_args;
  {
    auto* sub = command("summarize", "Per-group counts and own-group score distributions (JSON)");
    add_manifest_args(sub, summarize_args.manifest);
    sub->add_option("--out", summarize_args.out, "Output file (default stdout)");
    sub->callback([&] { action = [&] { cmd_summarize(ctx, summarize_args); }; });
  }

  ScoreArgs ids_args, es_args;
  for (auto [name, description, target] :
       {std::tuple{"ids", "Identity score vectors", &ids_args}, std::tuple{"es", "Group score matrix", &es_args}}) {
    auto* sub = command(name, description);
    add_manifest_args(sub, target->manifest);
    sub->add_option("--protocol", target->protocol, "A, B or C")->check(CLI::IsMember({"A", "B", "C"}));
    sub->add_option("--format", target->format, "csv or json");
    sub->add_option("--out", target->out, "Output file (default stdout)");
    const bool is_ids = target == &ids_args;
    sub->callback([&, is_ids] { action = [&, is_ids] { is_ids ? cmd_ids(ctx, ids_args) : cmd_es(ctx, es_args); }; });
  }

  RelabelArgs relabel_args;
  {
    auto* sub = command("relabel", "Reassign each identity to its highest-scoring group");
    add_manifest_args(sub, relabel_args.manifest);
    sub->add_option("--out", relabel_args.out, "Output manifest (default stdout)");
    sub->callback([&] { action = [&] { cmd_relabel(ctx, relabel_args); }; });
  }

  SampleArgs sample_args;
  {
    auto* sub = command("sample", "Remove identities with protocol A, B, C or the random baseline");
    add_manifest_args(sub, sample_args.manifest);
    sub->add_option("--protocol", sample_args.protocol, "A, B, C or random")
        ->required()
        ->check(CLI::IsMember({"A", "B", "C", "random"}));
    sub->add_option("--remove", sample_args.remove, "Number of identities to remove");
    sub->add_option("--target-size", sample_args.target_size, "Number of identities to keep");
    sub->add_option("--seed", sample_args.seed, "Seed (required for random)");
    sub->add_flag("--relabel-first", sample_args.relabel_first, "Relabel identities before sampling");
    sub->add_flag("--naive", sample_args.naive, "Use the full-recomputation reference sampler");
    sub->add_option("--log", sample_args.log, "Removal log CSV");
    sub->add_option("--evolution", sample_args.evolution, "Per-step diag(ES) CSV");
    sub->add_option("--out", sample_args.out, "Subset manifest (default stdout)");
    sub->callback([&] { action = [&] { cmd_sample(ctx, sample_args); }; });
  }

  SingleArgs single_args;
  {
    auto* sub = command("single", "Keep a fraction of one group by min, max or random score");
    add_manifest_args(sub, single_args.manifest);
    sub->add_option("--group", single_args.group, "Group to thin")->required();
    sub->add_option("--strategy", single_args.strategy, "min, max or rand")
        ->required()
        ->check(CLI::IsMember({"min", "max", "rand"}));
    sub->add_option("--keep-fraction", single_args.keep_fraction, "Fraction of the group to keep, in (0, 1]");
    sub->add_option("--seed", single_args.seed, "Seed (required for rand)");
    sub->add_option("--log", single_args.log, "Removal log CSV");
    sub->add_option("--out", single_args.out, "Subset manifest (default stdout)");
    sub->callback([&] { action = [&] { cmd_single(ctx, single_args); }; });
  }

  MetricsArgs metrics_args;
  {
    auto* sub = command("metrics", "Per-group accuracy, average, STD and SER");
    sub->add_option("--pairs", metrics_args.pairs, "Pairs CSV");
    sub->add_option("--mode", metrics_args.mode, "outcomes or similarity")
        ->check(CLI::IsMember({"outcomes", "similarity"}));
    sub->add_option("--accuracies", metrics_args.accuracies, "Comma-separated per-group accuracies");
    sub->add_option("--groups", metrics_args.groups, "Group order (default African,Asian,Caucasian,Indian)");
    sub->add_option("--scale", metrics_args.scale, "Scale of --accuracies: percent or fraction")
        ->check(CLI::IsMember({"percent", "fraction"}));
    sub->add_option("--format", metrics_args.format, "json or csv");
    sub->add_option("--out", metrics_args.out, "Output file (default stdout)");
    sub->callback([&] { action = [&] { cmd_metrics(ctx, metrics_args); }; });
  }

  ParetoArgs pareto_args;
  {
    auto* sub = command("pareto", "Mark runs on the error/bias Pareto frontier");
    sub->add_option("--runs", pareto_args.runs, "Runs CSV")->required();
    sub->add_option("--bias", pareto_args.bias, "std or ser")->check(CLI::IsMember({"std", "ser"}));
    sub->add_option("--scale", pareto_args.scale, "Scale of acc_* columns: percent or fraction")
        ->check(CLI::IsMember({"percent", "fraction"}));
    sub->add_option("--out", pareto_args.out, "Frontier CSV (default stdout)");
    sub->callback([&] { action = [&] { cmd_pareto(ctx, pareto_args); }; });
  }

  ScatterArgs scatter_args;
  {
    auto* sub = command("scatter", "Pair own-group image scores with an external per-image score");
    add_manifest_args(sub, scatter_args.manifest);
    sub->add_option("--external", scatter_args.external, "CSV image_id,<score>")->required();
    sub->add_option("--format", scatter_args.format, "csv (rows) or json (correlations)");
    sub->add_option("--correlations", scatter_args.correlations, "Also write the correlation JSON here");
    sub->add_option("--out", scatter_args.out, "Output file (default stdout)");
    sub->callback([&] { action = [&] { cmd_scatter(ctx, scatter_args); }; });
  }

  SynthArgs synth_args;
  {
    auto* sub = command("synth", "Generate a seeded synthetic score manifest");
    sub->add_option("--config", synth_args.config, "JSON config file");
    sub->add_option("--seed", synth_args.seed, "Seed");
    sub->add_option("--groups", synth_args.groups, "Comma-separated group labels");
    sub->add_option("--identities", synth_args.identities, "Identities per group (one value or one per group)");
    sub->add_option("--images", synth_args.images, "Images per identity as MIN,MAX");
    sub->add_option("--concentration", synth_args.concentration, "Concentration (one value or one per group)");
    sub->add_option("--label-noise", synth_args.label_noise, "Fraction of identities peaking on another group");
    sub->add_option("--out", synth_args.out, "Output manifest (default stdout)");
    sub->callback([&] { action = [&] { cmd_synth(ctx, synth_args); }; });
  }

  EquilibriumArgs equilibrium_args;
  {
    auto* sub = command("equilibrium", "First step at which diag(ES) spread drops below epsilon");
    sub->add_option("--trace", equilibrium_args.trace, "Evolution CSV or removal log")->required();
    sub->add_option("--epsilon", equilibrium_args.epsilon, "Spread threshold")->required();
    sub->add_flag("--relative", equilibrium_args.relative, "Use (max - min) / max instead of max - min");
    sub->callback([&] { action = [&] { cmd_equilibrium(ctx, equilibrium_args); }; });
  }

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ExitStatus::Success : ExitStatus::UsageError;
  }

  try {
    if (!action) throw InvariantError("no subcommand dispatched");
    action();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return ExitStatus::UsageError;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return ExitStatus::InternalError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return ExitStatus::DataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return ExitStatus::InternalError;
  }
  return ExitStatus::Success;
}

}  // namespace fairsample::cli
