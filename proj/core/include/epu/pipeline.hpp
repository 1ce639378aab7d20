#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "epu/agreement.hpp"
#include "epu/calendar.hpp"
#include "epu/diagnostics.hpp"
#include "epu/index.hpp"
#include "epu/learner.hpp"
#include "epu/prevalence.hpp"

namespace epu {

/// Measurement functions the pipeline knows how to run.
inline const std::vector<std::string>& known_measurements() {
  static const std::vector<std::string> names{"KeyOrg",   "KeyEU",      "KeyExp",
                                              "CC-LogReg", "PCC-LogReg", "ImpLik-LogReg"};
  return names;
}

/// Everything a run needs. Paths are absolute after load_config().
struct PipelineConfig {
  std::vector<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> gazetteer;
  bool filter_us = false;
  bool dateline_text_fallback = false;

  std::optional<std::filesystem::path> keywords;
  std::optional<std::filesystem::path> embeddings;
  std::size_t expansion_k = 5;
  std::vector<std::string> expand_banks{"economy", "uncertainty"};
  std::map<std::string, std::set<std::string>> expansion_removal{
      {"economy", {"policy"}}, {"uncertainty", {"prospects", "remain"}}};

  std::vector<std::filesystem::path> labels;
  Date split_date{2008, 1, 1};  // train: date < split_date; test: the rest
  std::size_t min_df = 5;
  std::vector<double> c_grid{0.01, 0.1, 1.0, 10.0, 100.0};  // inverse strengths
  std::size_t cv_folds = 5;
  std::optional<std::filesystem::path> model;
  std::optional<double> train_prior;
  double implik_step = kDefaultImplikStep;

  std::vector<std::string> measurements;
  std::optional<std::filesystem::path> totals;
  std::optional<std::string> outlet;

  std::vector<std::filesystem::path> annotations;
  std::vector<std::filesystem::path> pxa_docs;

  std::vector<std::filesystem::path> series;
  std::vector<std::filesystem::path> external;

  std::filesystem::path out{"out"};
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Reads an INI-style key = value file ("#" and ";" start comments, lists are comma
/// separated, the [removal] section maps bank -> words). Relative paths resolve against the
/// config file's directory; `overrides` (key -> value, same syntax) win over the file and
/// resolve relative paths against the working directory. Pass an empty config path to build
/// from overrides alone. Throws ConfigError on unknown keys, bad values, or a missing seed.
PipelineConfig load_config(const std::filesystem::path& config_path,
                           const std::map<std::string, std::string>& overrides = {});

struct IngestResult {
  std::size_t records = 0;
  std::size_t skipped = 0;
  std::size_t discarded_non_us = 0;
  std::size_t kept = 0;
  MonthlyTotals totals;
};

/// Streams the corpus through the optional US filter and writes out/totals.csv and
/// out/ingest.json.
IngestResult cmd_ingest(const PipelineConfig& config, Diagnostics* diag = nullptr);

struct MeasureResult {
  IngestResult ingest;
  std::map<std::string, PrevalenceSeries> series;  // by measurement name
  std::vector<std::filesystem::path> written;
};

/// Scores every kept document under each configured measurement, aggregates monthly, and
/// writes out/scores/<name>.csv, out/series/<name>.csv, and out/manifest.json.
/// Throws ConfigError naming the measurement whose resources are missing.
MeasureResult cmd_measure(const PipelineConfig& config, Diagnostics* diag = nullptr);

struct TrainResult {
  TrainedClassifier classifier;
  L2Selection selection;
  std::vector<double> l2_grid;
  EvalReport train_report;
  EvalReport test_report;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// Temporal split, vocabulary, cross-validated penalty, fit, evaluation. Writes
/// out/model.txt, out/train_report.csv, and out/train_report.json.
TrainResult cmd_train(const PipelineConfig& config, Diagnostics* diag = nullptr);

struct AgreeResult {
  std::vector<AgreementReport> reports;
  std::map<std::string, AnnotatorSummary> annotators;  // by round
  std::vector<std::pair<std::string, PxaResult>> pxa;  // by doc-set name
};

/// Reliability table per round (all documents and the 2+ annotation subset), per-annotator
/// statistics, and PXA for each doc-set file when exactly two rounds are given.
AgreeResult cmd_agree(const PipelineConfig& config, Diagnostics* diag = nullptr);

/// Correlation matrix across series files and external benchmarks; writes
/// out/correlations.csv. When no series are configured, out/series/*.csv is used.
CorrelationMatrix cmd_correlate(const PipelineConfig& config, Diagnostics* diag = nullptr);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace epu
