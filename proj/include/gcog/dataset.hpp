#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gcog/splits.hpp"

namespace gcog {

enum class OutputFormat { Shard, Jsonl };

struct GenerateOptions {
  SplitManifest manifest;
  std::filesystem::path out_dir;
  unsigned jobs = 1;
  OutputFormat format = OutputFormat::Shard;
};

struct GeneratedSet {
  std::string name;
  std::filesystem::path file;
  std::uint64_t records = 0;
};

struct GenerateReport {
  std::filesystem::path manifest_path;
  std::string digest;
  std::vector<GeneratedSet> sets;
};

/// Writes manifest.json plus one file per subset. Output bytes do not depend on `jobs`.
GenerateReport generate_dataset(const GenerateOptions& options);

/// Generates records [first, first + n) of a subset on `jobs` threads, in index order.
std::vector<SampleRecord> generate_block(const SplitManifest& manifest, const SetSpec& set, std::uint64_t first,
                                         std::uint64_t n, unsigned jobs);

struct VerifyReport {
  std::string split_tag;
  std::uint64_t records = 0;
  std::uint64_t mismatches = 0;
  std::uint64_t constraint_violations = 0;
  bool checksum_ok = false;
  std::vector<std::string> problems;  // first few, for display

  bool ok() const { return checksum_ok && mismatches == 0 && constraint_violations == 0; }
};

/// Re-evaluates every record with the interpreter. Throws for unreadable
/// shards (TruncatedShard, FormatVersionMismatch, IoError).
VerifyReport verify_shard(const std::filesystem::path& path);

struct SetStats {
  std::string name;
  std::uint64_t records = 0;
  std::vector<std::uint64_t> target_histogram = std::vector<std::uint64_t>(kClassCount, 0);
  std::map<int, std::uint64_t> depth_histogram;
  std::map<int, std::uint64_t> distractor_histogram;
};

struct DatasetStats {
  SplitManifest manifest;
  std::vector<SetStats> sets;
  std::vector<std::string> missing;  // shard files listed but absent
};

DatasetStats dataset_stats(const std::filesystem::path& manifest_path);
SetStats shard_stats(const std::filesystem::path& shard_path);

/// 5624320000 -> "5,624,320,000".
std::string with_thousands(const std::string& digits);

}  // namespace gcog
