#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "epu/diagnostics.hpp"

namespace epu {

struct Annotation {
  std::string annotator;
  int label = 0;                  // 0 or 1
  std::optional<int> confidence;  // 1..5 when recorded
};

/// One round of binary annotations keyed by document id.
class AnnotationRound {
 public:
  explicit AnnotationRound(std::string name = {}) : name_(std::move(name)) {}

  /// CSV doc_id,annotator_id,label[,confidence]. The round is named after the file stem.
  /// Malformed rows and repeated (doc, annotator) pairs are skipped and counted.
  static AnnotationRound load(const std::filesystem::path& path, Diagnostics* diag = nullptr);

  /// Returns false if the annotator already labeled this document. Throws DataError on a
  /// non-binary label or a confidence outside 1..5.
  bool add(const std::string& doc_id, Annotation annotation);

  const std::string& name() const { return name_; }
  const std::map<std::string, std::vector<Annotation>>& records() const { return records_; }
  std::size_t num_docs() const { return records_.size(); }
  std::size_t num_annotations() const;
  std::size_t skipped_rows() const { return skipped_; }

  /// Labels for one document; throws NotFoundError when absent.
  std::vector<int> labels(const std::string& doc_id) const;

  /// Documents with at least `min_annotations` annotations.
  AnnotationRound with_min_annotations(std::size_t min_annotations) const;
  /// Documents in `docs` (missing ones are ignored).
  AnnotationRound restricted_to(const std::set<std::string>& docs) const;

 private:
  std::string name_;
  std::map<std::string, std::vector<Annotation>> records_;
  std::size_t skipped_ = 0;
};

/// Share of agreeing within-document annotation pairs, pooled over all pairs.
/// Throws DataError if no document has two annotations.
double pairwise_agreement(const AnnotationRound& round);

/// Krippendorff's alpha for nominal data from the coincidence matrix. Units with a single
/// annotation are excluded. Returns 1.0 with a diagnostic when expected disagreement is 0.
/// Throws DataError if no unit has two annotations.
double krippendorff_alpha(const AnnotationRound& round, Diagnostics* diag = nullptr);

struct PxaResult {
  double value = 0.0;
  std::size_t agreeing_pairs = 0;
  std::size_t total_pairs = 0;
};

/// Pairwise cross-agreement between two rounds over `docs`: every annotation of round A on
/// a document is paired with every annotation of round B on it. Throws NotFoundError naming
/// the first document missing from either round.
PxaResult pxa(const AnnotationRound& round_a, const AnnotationRound& round_b,
              const std::set<std::string>& docs);

/// Strict majority; an exact tie is a fair coin drawn from `seed`.
int majority_label(std::span<const int> labels, std::uint64_t seed);

struct AnnotatorStats {
  std::string annotator;
  double mean_positive = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 when n < 2
  std::size_t n = 0;
  std::optional<double> mean_confidence;
};

struct AnnotatorSummary {
  std::vector<AnnotatorStats> annotators;                   // sorted by annotator id
  std::map<std::size_t, std::size_t> annotations_per_doc;  // annotations -> documents
};

AnnotatorSummary per_annotator_stats(const AnnotationRound& round);

/// One row of a reliability table. Agreement columns are empty when no document has two
/// annotations.
struct AgreementReport {
  std::string round;
  std::string subset;
  std::size_t num_docs = 0;
  std::size_t num_annotations = 0;
  double prop_positive = 0.0;
  std::optional<double> prop_docs_unanimous;
  std::optional<double> pairwise_agreement;
  std::optional<double> krippendorff_alpha;
  std::optional<double> mean_confidence;

  bool operator==(const AgreementReport&) const = default;
};

AgreementReport agreement_report(const AnnotationRound& round, std::string subset_label,
                                 Diagnostics* diag = nullptr);

void write_agreement_csv(std::span<const AgreementReport> rows, const std::filesystem::path& path);
std::vector<AgreementReport> read_agreement_csv(const std::filesystem::path& path);

}  // namespace epu
