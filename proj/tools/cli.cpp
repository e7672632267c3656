#include "cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "gcog/dataset.hpp"
#include "gcog/errors.hpp"
#include "gcog/grammar.hpp"
#include "gcog/splits.hpp"

namespace gcog::cli {

namespace {

struct GenerateArgs {
  std::string split;
  std::string manifest;
  std::string variant = "standard";
  std::optional<std::uint64_t> seed;
  std::uint64_t train = kDefaultTrainCount;
  std::uint64_t test = kDefaultTestCount;
  double holdout = kDefaultHoldoutFraction;
  std::string out_dir = "gcog_data";
  unsigned jobs = 1;
  std::string format = "shard";
  std::string config;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fills options the user did not pass on the command line from a JSON config file.
void apply_config(const CLI::App& cmd, GenerateArgs& a) {
  std::ifstream in(a.config);
  if (!in) throw UsageError("cannot read config " + a.config);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config " + a.config + ": " + e.what());
  }
  auto unset = [&](const std::string& flag) { return cmd.get_option(flag)->count() == 0; };
  if (j.contains("split") && a.split.empty() && a.manifest.empty()) a.split = j["split"].get<std::string>();
  if (j.contains("variant") && unset("--variant")) a.variant = j["variant"].get<std::string>();
  if (j.contains("seed") && unset("--seed")) a.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("train") && unset("--train")) a.train = j["train"].get<std::uint64_t>();
  if (j.contains("test") && unset("--test")) a.test = j["test"].get<std::uint64_t>();
  if (j.contains("holdout") && unset("--holdout")) a.holdout = j["holdout"].get<double>();
  if (j.contains("out") && unset("--out")) a.out_dir = j["out"].get<std::string>();
  if (j.contains("jobs") && unset("--jobs")) a.jobs = j["jobs"].get<unsigned>();
  if (j.contains("format") && unset("--format")) a.format = j["format"].get<std::string>();
}

SplitManifest build_manifest(const GenerateArgs& a) {
  if (!a.manifest.empty()) {
    std::ifstream in(a.manifest);
    if (!in) throw UsageError("cannot read manifest " + a.manifest);
    SplitManifest m = manifest_from_json(nlohmann::json::parse(in));
    if (a.seed) m.master_seed = *a.seed;
    return m;
  }
  if (a.split.empty()) throw UsageError("generate needs a split kind or --manifest");
  const SampleCounts counts{a.train, a.test};
  switch (split_kind_from_name(a.split)) {
    case SplitKind::Distractor: return build_distractor_split(*a.seed, counts);
    case SplitKind::SystematicityD1: return build_systematicity_d1(*a.seed, a.holdout, counts);
    case SplitKind::SystematicityD3: return build_systematicity_d3(*a.seed, a.holdout, counts);
    case SplitKind::Productivity: return build_productivity(*a.seed, variant_from_name(a.variant), counts);
  }
  throw UsageError("unknown split " + a.split);
}

int cmd_generate(const CLI::App& cmd, GenerateArgs a, std::ostream& out) {
  if (!a.config.empty()) apply_config(cmd, a);
  if (!a.seed && a.manifest.empty()) throw UsageError("generate requires --seed (or GCOG_SEED)");
  if (a.format != "shard" && a.format != "jsonl") throw UsageError("--format must be shard or jsonl");
  if (a.jobs == 0) throw UsageError("--jobs must be positive");
  if (a.manifest.empty() && (a.train == 0 || a.test == 0)) throw UsageError("--train and --test must be positive");

  GenerateOptions options{build_manifest(a), a.out_dir, a.jobs,
                          a.format == "shard" ? OutputFormat::Shard : OutputFormat::Jsonl};
  const auto report = generate_dataset(options);
  out << "manifest " << report.manifest_path.string() << '\n';
  out << "digest " << report.digest << '\n';
  for (const auto& s : report.sets) {
    out << std::left << std::setw(16) << s.name << ' ' << s.records << " records -> " << s.file.string() << '\n';
  }
  return kExitOk;
}

int cmd_verify(const std::vector<std::string>& shards, std::ostream& out) {
  int status = kExitOk;
  for (const auto& path : shards) {
    try {
      const auto report = verify_shard(path);
      out << path << ": split=" << report.split_tag << " records=" << report.records
          << " mismatches=" << report.mismatches << " constraint_violations=" << report.constraint_violations
          << " checksum=" << (report.checksum_ok ? "ok" : "MISMATCH") << '\n';
      for (const auto& p : report.problems) out << "  " << p << '\n';
      if (!report.ok()) status = kExitDataFailure;
    } catch (const Error& e) {
      out << path << ": " << e.what() << '\n';
      status = kExitDataFailure;
    }
  }
  return status;
}

std::string class_label(int index) {
  return class_to_answer(index).to_string();
}

int cmd_stats(const std::string& manifest_path, std::ostream& out) {
  const auto stats = dataset_stats(manifest_path);
  const auto& m = stats.manifest;
  out << "split " << split_kind_name(m.kind);
  if (m.variant) out << " (" << variant_name(*m.variant) << ")";
  out << "  digest " << digest_hex(manifest_digest(m)) << '\n';
  out << "reference-scale training samples " << with_thousands(std::to_string(m.reference_train_samples)) << '\n';

  std::vector<int> depths;
  auto note_depths = [&](const SetSpec& s) {
    for (int d : s.depths) {
      if (std::find(depths.begin(), depths.end(), d) == depths.end()) depths.push_back(d);
    }
  };
  note_depths(m.train);
  for (const auto& t : m.tests) note_depths(t);
  for (int d : {1, 3}) {
    if (std::find(depths.begin(), depths.end(), d) == depths.end()) depths.push_back(d);
  }
  std::sort(depths.begin(), depths.end());
  for (int d : depths) {
    out << "pool size depth " << d << ": "
        << with_thousands(count_task_structures(d, /*allow_recursive=*/true).str()) << '\n';
  }

  for (const auto& s : stats.sets) {
    out << "\n[" << s.name << "] " << s.records << " records\n";
    out << "  depths:";
    for (const auto& [d, n] : s.depth_histogram) out << ' ' << d << '=' << n;
    out << "\n  distractors:";
    for (const auto& [d, n] : s.distractor_histogram) out << ' ' << d << '=' << n;
    out << "\n  targets:";
    for (int c = 0; c < kClassCount; ++c) {
      if (s.target_histogram[c]) out << ' ' << class_label(c) << '=' << s.target_histogram[c];
    }
    out << '\n';
    if (s.records > 0) {
      const auto chance = chance_level(s.target_histogram);
      out << std::fixed << std::setprecision(4) << "  chance (probability matching) " << chance.probability_matching
          << "\n  chance (mode) " << chance.mode << '\n';
      out.unsetf(std::ios::fixed);
    }
  }
  for (const auto& missing : stats.missing) out << "missing shard " << missing << '\n';
  return stats.missing.empty() ? kExitOk : kExitDataFailure;
}

int cmd_export(const std::string& shard, const std::string& out_path, std::ostream& out) {
  if (out_path.empty() || out_path == "-") {
    export_jsonl(shard, out);
    return kExitOk;
  }
  std::ofstream file(out_path, std::ios::trunc);
  if (!file) throw Error(ErrorCode::IoError, "cannot open " + out_path);
  export_jsonl(shard, file);
  return kExitOk;
}

int cmd_count(const std::vector<int>& depths, bool recursive, std::ostream& out) {
  for (int d : depths) {
    out << "depth " << d << ": " << with_thousands(count_task_structures(d, recursive).str()) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"gcog: compositional task benchmark generator"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Build a split manifest and write its train/test shards");
  generate->add_option("split", gen.split, "distractor | systematicity_d1 | systematicity_d3 | productivity");
  generate->add_option("--manifest", gen.manifest, "Generate from an existing manifest.json");
  generate->add_option("--variant", gen.variant, "Productivity variant: standard | depth1_only");
  generate->add_option("--seed", gen.seed, "Master seed")->envname("GCOG_SEED");
  generate->add_option("--train", gen.train, "Training records");
  generate->add_option("--test", gen.test, "Records per test set");
  generate->add_option("--holdout", gen.holdout, "Held-out fraction for systematicity splits");
  generate->add_option("--out", gen.out_dir, "Output directory");
  generate->add_option("--jobs", gen.jobs, "Worker threads");
  generate->add_option("--format", gen.format, "shard | jsonl");
  generate->add_option("--config", gen.config, "JSON config; flags override it");

  std::vector<std::string> verify_paths;
  auto* verify = app.add_subcommand("verify", "Re-check every record of one or more shards");
  verify->add_option("shards", verify_paths, "Shard files")->required();

  std::string stats_manifest;
  auto* stats = app.add_subcommand("stats", "Histograms, chance levels and pool sizes for a generated split");
  stats->add_option("manifest", stats_manifest, "manifest.json")->required();

  std::string export_shard;
  std::string export_out;
  auto* exporter = app.add_subcommand("export-jsonl", "Dump a shard as JSON lines");
  exporter->add_option("shard", export_shard, "Shard file")->required();
  exporter->add_option("--out", export_out, "Output file (default stdout)");

  std::vector<int> count_depths{1, 3};
  bool recursive = false;
  auto* count = app.add_subcommand("count", "Number of task structures per depth");
  count->add_option("--depth", count_depths, "Odd depths");
  count->add_flag("--recursive", recursive, "Allow depths above 3");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(*generate, gen, out);
    if (verify->parsed()) return cmd_verify(verify_paths, out);
    if (stats->parsed()) return cmd_stats(stats_manifest, out);
    if (exporter->parsed()) return cmd_export(export_shard, export_out, out);
    if (count->parsed()) return cmd_count(count_depths, recursive, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    const bool usage = e.code() == ErrorCode::InvalidArgument || e.code() == ErrorCode::InvalidDepth ||
                       e.code() == ErrorCode::Unsupported;
    return usage ? kExitUsage : kExitDataFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataFailure;
  }
  return kExitUsage;
}

}  // namespace gcog::cli
