#include "epu/agreement.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "epu/csv.hpp"
#include "epu/error.hpp"
#include "epu/seed.hpp"

namespace epu {
namespace {

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct LabelCounts {
  std::size_t ones = 0;
  std::size_t total = 0;
};

LabelCounts count_labels(const std::vector<Annotation>& anns) {
  LabelCounts c;
  for (const auto& a : anns) c.ones += static_cast<std::size_t>(a.label);
  c.total = anns.size();
  return c;
}

double choose2(std::size_t n) { return n < 2 ? 0.0 : static_cast<double>(n) * static_cast<double>(n - 1) / 2.0; }

}  // namespace

// ---------------------------------------------------------------- AnnotationRound

AnnotationRound AnnotationRound::load(const std::filesystem::path& path, Diagnostics* diag) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open annotation file '{}'", path.string()));
  CsvReader reader(in);
  const auto c_doc = reader.column("doc_id");
  const auto c_ann = reader.column("annotator_id");
  const auto c_label = reader.column("label");
  if (!c_doc || !c_ann || !c_label) {
    throw DataError(fmt::format("'{}': header must contain doc_id,annotator_id,label", path.string()));
  }
  const auto c_conf = reader.column("confidence");

  AnnotationRound round(path.stem().string());
  std::vector<std::string> row;
  while (reader.next(row)) {
    auto skip = [&](std::string_view why) {
      ++round.skipped_;
      note(diag, fmt::format("{}:{}: skipped annotation: {}", path.string(), reader.line_number(), why));
    };
    const std::size_t needed = std::max({*c_doc, *c_ann, *c_label}) + 1;
    if (row.size() < needed || row[*c_doc].empty() || row[*c_ann].empty()) {
      skip("missing field");
      continue;
    }
    const auto label = parse_int(row[*c_label]);
    if (!label || (*label != 0 && *label != 1)) {
      skip("label is not 0/1");
      continue;
    }
    std::optional<int> confidence;
    if (c_conf && *c_conf < row.size() && !row[*c_conf].empty()) {
      confidence = parse_int(row[*c_conf]);
      if (!confidence || *confidence < 1 || *confidence > 5) {
        skip("confidence outside 1..5");
        continue;
      }
    }
    if (!round.add(row[*c_doc], {row[*c_ann], *label, confidence})) skip("repeated doc/annotator pair");
  }
  return round;
}

bool AnnotationRound::add(const std::string& doc_id, Annotation annotation) {
  if (annotation.label != 0 && annotation.label != 1) {
    throw DataError(fmt::format("label {} is not binary", annotation.label));
  }
  if (annotation.confidence && (*annotation.confidence < 1 || *annotation.confidence > 5)) {
    throw DataError(fmt::format("confidence {} outside 1..5", *annotation.confidence));
  }
  auto& anns = records_[doc_id];
  for (const auto& a : anns) {
    if (a.annotator == annotation.annotator) return false;
  }
  anns.push_back(std::move(annotation));
  return true;
}

std::size_t AnnotationRound::num_annotations() const {
  std::size_t n = 0;
  for (const auto& [_, anns] : records_) n += anns.size();
  return n;
}

std::vector<int> AnnotationRound::labels(const std::string& doc_id) const {
  const auto it = records_.find(doc_id);
  if (it == records_.end()) {
    throw NotFoundError(fmt::format("document '{}' not in round '{}'", doc_id, name_));
  }
  std::vector<int> out;
  for (const auto& a : it->second) out.push_back(a.label);
  return out;
}

AnnotationRound AnnotationRound::with_min_annotations(std::size_t min_annotations) const {
  AnnotationRound out(name_);
  for (const auto& [doc, anns] : records_) {
    if (anns.size() >= min_annotations) out.records_.emplace(doc, anns);
  }
  return out;
}

AnnotationRound AnnotationRound::restricted_to(const std::set<std::string>& docs) const {
  AnnotationRound out(name_);
  for (const auto& [doc, anns] : records_) {
    if (docs.contains(doc)) out.records_.emplace(doc, anns);
  }
  return out;
}

// ---------------------------------------------------------------- metrics

double pairwise_agreement(const AnnotationRound& round) {
  double agree = 0.0;
  double total = 0.0;
  for (const auto& [_, anns] : round.records()) {
    const auto c = count_labels(anns);
    agree += choose2(c.ones) + choose2(c.total - c.ones);
    total += choose2(c.total);
  }
  if (total == 0.0) throw DataError("pairwise_agreement: no document has two annotations");
  return agree / total;
}

double krippendorff_alpha(const AnnotationRound& round, Diagnostics* diag) {
  // Binary coincidence matrix: o01 = o10 holds the disagreement mass, n0/n1 the marginals.
  double o01 = 0.0;
  double n0 = 0.0;
  double n1 = 0.0;
  for (const auto& [_, anns] : round.records()) {
    const auto c = count_labels(anns);
    if (c.total < 2) continue;
    const double ones = static_cast<double>(c.ones);
    const double zeros = static_cast<double>(c.total - c.ones);
    o01 += ones * zeros / static_cast<double>(c.total - 1);
    n0 += zeros;
    n1 += ones;
  }
  const double n = n0 + n1;
  if (n < 2.0) throw DataError("krippendorff_alpha: no unit has two annotations");
  const double expected = 2.0 * n0 * n1;  // sum over c != k of n_c * n_k
  if (expected == 0.0) {
    note(diag, "krippendorff_alpha: all values identical, expected disagreement is zero; alpha = 1");
    return 1.0;
  }
  const double observed = 2.0 * o01;  // o01 + o10
  return 1.0 - (n - 1.0) * observed / expected;
}

PxaResult pxa(const AnnotationRound& round_a, const AnnotationRound& round_b,
              const std::set<std::string>& docs) {
  PxaResult r;
  for (const auto& doc : docs) {
    const auto ia = round_a.records().find(doc);
    const auto ib = round_b.records().find(doc);
    if (ia == round_a.records().end() || ia->second.empty()) {
      throw NotFoundError(fmt::format("pxa: document '{}' missing from round '{}'", doc, round_a.name()));
    }
    if (ib == round_b.records().end() || ib->second.empty()) {
      throw NotFoundError(fmt::format("pxa: document '{}' missing from round '{}'", doc, round_b.name()));
    }
    const auto ca = count_labels(ia->second);
    const auto cb = count_labels(ib->second);
    r.agreeing_pairs += ca.ones * cb.ones + (ca.total - ca.ones) * (cb.total - cb.ones);
    r.total_pairs += ca.total * cb.total;
  }
  if (r.total_pairs == 0) throw DataError("pxa: empty document set");
  r.value = static_cast<double>(r.agreeing_pairs) / static_cast<double>(r.total_pairs);
  return r;
}

int majority_label(std::span<const int> labels, std::uint64_t seed) {
  if (labels.empty()) throw DataError("majority_label: empty input");
  std::size_t ones = 0;
  for (int v : labels) {
    if (v != 0 && v != 1) throw DataError(fmt::format("majority_label: label {} is not binary", v));
    ones += static_cast<std::size_t>(v);
  }
  const std::size_t zeros = labels.size() - ones;
  if (ones != zeros) return ones > zeros ? 1 : 0;
  return static_cast<int>(splitmix64(seed) >> 63);
}

AnnotatorSummary per_annotator_stats(const AnnotationRound& round) {
  struct Acc {
    std::size_t n = 0;
    std::size_t ones = 0;
    std::size_t n_conf = 0;
    double conf_sum = 0.0;
  };
  std::map<std::string, Acc> acc;
  AnnotatorSummary summary;
  for (const auto& [_, anns] : round.records()) {
    ++summary.annotations_per_doc[anns.size()];
    for (const auto& a : anns) {
      auto& s = acc[a.annotator];
      ++s.n;
      s.ones += static_cast<std::size_t>(a.label);
      if (a.confidence) {
        ++s.n_conf;
        s.conf_sum += *a.confidence;
      }
    }
  }
  for (const auto& [name, s] : acc) {
    AnnotatorStats st;
    st.annotator = name;
    st.n = s.n;
    const double n = static_cast<double>(s.n);
    st.mean_positive = static_cast<double>(s.ones) / n;
    // Sum of squared deviations of 0/1 values: n * p * (1 - p).
    st.stddev = s.n < 2 ? 0.0 : std::sqrt(n * st.mean_positive * (1.0 - st.mean_positive) / (n - 1.0));
    if (s.n_conf > 0) st.mean_confidence = s.conf_sum / static_cast<double>(s.n_conf);
    summary.annotators.push_back(std::move(st));
  }
  return summary;
}

AgreementReport agreement_report(const AnnotationRound& round, std::string subset_label,
                                 Diagnostics* diag) {
  AgreementReport r;
  r.round = round.name();
  r.subset = std::move(subset_label);
  r.num_docs = round.num_docs();
  r.num_annotations = round.num_annotations();
  std::size_t ones = 0;
  std::size_t eligible = 0;
  std::size_t unanimous = 0;
  std::size_t n_conf = 0;
  double conf_sum = 0.0;
  for (const auto& [_, anns] : round.records()) {
    const auto c = count_labels(anns);
    ones += c.ones;
    if (c.total >= 2) {
      ++eligible;
      if (c.ones == 0 || c.ones == c.total) ++unanimous;
    }
    for (const auto& a : anns) {
      if (a.confidence) {
        ++n_conf;
        conf_sum += *a.confidence;
      }
    }
  }
  if (r.num_annotations > 0) r.prop_positive = static_cast<double>(ones) / static_cast<double>(r.num_annotations);
  if (eligible > 0) {
    r.prop_docs_unanimous = static_cast<double>(unanimous) / static_cast<double>(eligible);
    r.pairwise_agreement = pairwise_agreement(round);
    r.krippendorff_alpha = krippendorff_alpha(round, diag);
  }
  if (n_conf > 0) r.mean_confidence = conf_sum / static_cast<double>(n_conf);
  return r;
}

// ---------------------------------------------------------------- CSV

namespace {

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& s, const std::filesystem::path& path) {
  if (s.empty()) return std::nullopt;
  const auto v = parse_double(s);
  if (!v) throw DataError(fmt::format("'{}': bad number '{}'", path.string(), s));
  return v;
}

}  // namespace

void write_agreement_csv(std::span<const AgreementReport> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << "round,subset,num_docs,num_annotations,prop_positive,prop_docs_unanimous,"
         "pairwise_agreement,krippendorff_alpha,mean_confidence\n";
  for (const auto& r : rows) {
    out << csv_escape(r.round) << ',' << csv_escape(r.subset) << ',' << r.num_docs << ','
        << r.num_annotations << ',' << format_double(r.prop_positive) << ',' << opt_cell(r.prop_docs_unanimous)
        << ',' << opt_cell(r.pairwise_agreement) << ',' << opt_cell(r.krippendorff_alpha) << ','
        << opt_cell(r.mean_confidence) << '\n';
  }
}

std::vector<AgreementReport> read_agreement_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  CsvReader reader(in);
  if (reader.header().size() != 9) throw DataError(fmt::format("'{}': unexpected header", path.string()));
  std::vector<AgreementReport> rows;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() != 9) throw DataError(fmt::format("{}:{}: expected 9 fields", path.string(), reader.line_number()));
    AgreementReport r;
    r.round = row[0];
    r.subset = row[1];
    const auto docs = parse_int(row[2]);
    const auto anns = parse_int(row[3]);
    const auto pos = parse_double(row[4]);
    if (!docs || !anns || !pos) throw DataError(fmt::format("{}:{}: bad number", path.string(), reader.line_number()));
    r.num_docs = static_cast<std::size_t>(*docs);
    r.num_annotations = static_cast<std::size_t>(*anns);
    r.prop_positive = *pos;
    r.prop_docs_unanimous = parse_opt(row[5], path);
    r.pairwise_agreement = parse_opt(row[6], path);
    r.krippendorff_alpha = parse_opt(row[7], path);
    r.mean_confidence = parse_opt(row[8], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace epu
