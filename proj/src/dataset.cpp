#include "gcog/dataset.hpp"

#include <exception>
#include <fstream>
#include <thread>

#include "gcog/errors.hpp"
#include "gcog/forge.hpp"
#include "gcog/interpreter.hpp"

namespace gcog {

namespace {

constexpr std::uint64_t kRecordsPerWorker = 512;
constexpr std::size_t kMaxListedProblems = 20;

std::string file_name(const SetSpec& set, OutputFormat format) {
  return set.name + (format == OutputFormat::Shard ? ".shard" : ".jsonl");
}

void note_problem(VerifyReport& report, std::string message) {
  if (report.problems.size() < kMaxListedProblems) report.problems.push_back(std::move(message));
}

}  // namespace

std::vector<SampleRecord> generate_block(const SplitManifest& manifest, const SetSpec& set, std::uint64_t first,
                                         std::uint64_t n, unsigned jobs) {
  std::vector<SampleRecord> out(n);
  jobs = std::max(1u, jobs);
  if (jobs == 1 || n < 2) {
    for (std::uint64_t i = 0; i < n; ++i) out[i] = sample_at(manifest, set, manifest.master_seed, first + i);
    return out;
  }
  std::vector<std::exception_ptr> failures(jobs);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::uint64_t i = w; i < n; i += jobs) {
            out[i] = sample_at(manifest, set, manifest.master_seed, first + i);
          }
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

GenerateReport generate_dataset(const GenerateOptions& options) {
  const auto& manifest = options.manifest;
  std::filesystem::create_directories(options.out_dir);
  const ManifestDigest digest = manifest_digest(manifest);
  GenerateReport report;
  report.digest = digest_hex(digest);

  std::vector<const SetSpec*> sets{&manifest.train};
  for (const auto& t : manifest.tests) sets.push_back(&t);

  const unsigned jobs = std::max(1u, options.jobs);
  const std::uint64_t block = kRecordsPerWorker * jobs;
  for (const SetSpec* set : sets) {
    const auto path = options.out_dir / file_name(*set, options.format);
    std::optional<ShardWriter> shard;
    std::ofstream jsonl;
    if (options.format == OutputFormat::Shard) {
      shard.emplace(path, set->name, manifest.master_seed, digest);
    } else {
      jsonl.open(path, std::ios::trunc);
      if (!jsonl) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    for (std::uint64_t first = 0; first < set->count; first += block) {
      const auto n = std::min(block, set->count - first);
      for (const auto& record : generate_block(manifest, *set, first, n, jobs)) {
        if (shard) {
          shard->append(record);
        } else {
          jsonl << record_to_json(record).dump() << '\n';
        }
      }
    }
    if (shard) {
      shard->finish();
    } else if (!jsonl.flush()) {
      throw Error(ErrorCode::IoError, "write failed on " + path.string());
    }
    report.sets.push_back(GeneratedSet{set->name, path, set->count});
  }

  nlohmann::json j = manifest_to_json(manifest);
  nlohmann::json listing = nlohmann::json::array();
  for (const auto& s : report.sets) {
    listing.push_back({{"subset", s.name},
                       {"file", s.file.filename().string()},
                       {"records", s.records},
                       {"format", options.format == OutputFormat::Shard ? "shard" : "jsonl"}});
  }
  j["shards"] = std::move(listing);
  report.manifest_path = options.out_dir / "manifest.json";
  std::ofstream out(report.manifest_path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + report.manifest_path.string());
  return report;
}

VerifyReport verify_shard(const std::filesystem::path& path) {
  ShardReader reader(path, /*verify_checksum=*/false);
  VerifyReport report;
  report.split_tag = reader.header().split_tag;
  report.checksum_ok = reader.checksum_ok();
  if (!report.checksum_ok) note_problem(report, "payload checksum mismatch");
  while (true) {
    std::optional<EncodedRecord> encoded;
    try {
      encoded = reader.next();
    } catch (const Error& e) {
      ++report.mismatches;
      note_problem(report, e.what());
      break;
    }
    if (!encoded) break;
    ++report.records;
    try {
      const SampleRecord record = decode_record(*encoded, report.split_tag);
      const Evaluation result = evaluate(record.tree, record.grid);
      if (answer_to_class(result.answer) != record.target) {
        ++report.mismatches;
        note_problem(report, "record " + std::to_string(record.sample_id) + ": stored target " +
                                 std::to_string(record.target.index()) + ", interpreter says " +
                                 std::to_string(answer_to_class(result.answer).index()));
      }
      const auto broken = constraint_violations(record.tree, record.grid);
      if (!broken.empty()) {
        ++report.constraint_violations;
        note_problem(report, "record " + std::to_string(record.sample_id) + ": " + broken.front());
      }
    } catch (const Error& e) {
      ++report.mismatches;
      note_problem(report, "record " + std::to_string(encoded->sample_id) + ": " + e.what());
    }
  }
  if (report.records != reader.header().record_count) {
    note_problem(report, "header promises " + std::to_string(reader.header().record_count) + " records, read " +
                             std::to_string(report.records));
  }
  return report;
}

SetStats shard_stats(const std::filesystem::path& shard_path) {
  ShardReader reader(shard_path);
  SetStats stats;
  stats.name = reader.header().split_tag;
  while (auto e = reader.next()) {
    const SampleRecord r = decode_record(*e, stats.name);
    ++stats.records;
    ++stats.target_histogram[r.target.index()];
    ++stats.depth_histogram[r.tree.depth()];
    ++stats.distractor_histogram[r.n_distractors];
  }
  return stats;
}

DatasetStats dataset_stats(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + manifest_path.string());
  const auto j = nlohmann::json::parse(in);
  DatasetStats stats{manifest_from_json(j), {}, {}};
  if (!j.contains("shards")) return stats;
  for (const auto& entry : j.at("shards")) {
    const auto file = manifest_path.parent_path() / entry.at("file").get<std::string>();
    if (entry.value("format", std::string("shard")) != "shard" || !std::filesystem::exists(file)) {
      stats.missing.push_back(file.string());
      continue;
    }
    stats.sets.push_back(shard_stats(file));
  }
  return stats;
}

std::string with_thousands(const std::string& digits) {
  std::string out;
  const auto n = digits.size();
  for (std::size_t i = 0; i < n; ++i) {
    out += digits[i];
    const auto left = n - i - 1;
    if (left > 0 && left % 3 == 0) out += ',';
  }
  return out;
}

}  // namespace gcog
