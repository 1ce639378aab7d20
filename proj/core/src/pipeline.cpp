#include "epu/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "epu/corpus.hpp"
#include "epu/csv.hpp"
#include "epu/embedding.hpp"
#include "epu/error.hpp"
#include "epu/lexicon.hpp"
#include "epu/seed.hpp"

namespace epu {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr std::size_t kBatchSize = 4096;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

ordered_json eval_json(const EvalReport& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}, {"accuracy", r.accuracy},
          {"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"tn", r.tn},
          {"precision_defined", r.precision_defined}, {"recall_defined", r.recall_defined}};
}

ordered_json opt_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<Gazetteer> load_filter(const PipelineConfig& c, Diagnostics* diag) {
  if (!c.filter_us) return std::nullopt;
  if (!c.gazetteer) throw ConfigError("filter_us is on but no gazetteer is configured");
  return Gazetteer::load(*c.gazetteer, diag);
}

/// Streams every corpus file in order, applying id de-duplication across files and the
/// optional US filter. `visit` sees kept documents only.
IngestResult stream_corpus(const PipelineConfig& c, const std::optional<Gazetteer>& gaz,
                           const std::function<void(Document&&)>& visit, Diagnostics* diag) {
  if (c.corpus.empty()) throw ConfigError("no corpus file configured");
  IngestResult result;
  std::unordered_set<std::string> ids;
  for (const auto& path : c.corpus) {
    CorpusReader reader(path, diag);
    while (auto doc = reader.next()) {
      if (!ids.insert(doc->id).second) {
        ++result.skipped;
        note(diag, fmt::format("{}: skipped record: id '{}' already seen in an earlier file", path.string(), doc->id));
        continue;
      }
      if (gaz && us_filter(*doc, *gaz, c.dateline_text_fallback) == FilterDecision::discard) {
        ++result.discarded_non_us;
        continue;
      }
      ++result.kept;
      ++result.totals[{month_of(doc->date), doc->outlet}];
      visit(std::move(*doc));
    }
    result.records += reader.records();
    result.skipped += reader.skipped();
  }
  return result;
}

ordered_json ingest_json(const IngestResult& r) {
  return {{"records", r.records}, {"skipped", r.skipped}, {"discarded_non_us", r.discarded_non_us},
          {"kept", r.kept}};
}

// ---------------------------------------------------------------- labels

std::map<std::string, std::vector<int>> load_labels(const std::vector<fs::path>& paths, Diagnostics* diag) {
  std::map<std::string, std::vector<int>> labels;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open label file '{}'", path.string()));
    CsvReader reader(in);
    const auto c_doc = reader.column("doc_id");
    const auto c_label = reader.column("label");
    if (!c_doc || !c_label) throw DataError(fmt::format("'{}': header must contain doc_id,label", path.string()));
    std::vector<std::string> row;
    while (reader.next(row)) {
      if (row.size() <= std::max(*c_doc, *c_label) || row[*c_doc].empty() ||
          (row[*c_label] != "0" && row[*c_label] != "1")) {
        note(diag, fmt::format("{}:{}: skipped label row", path.string(), reader.line_number()));
        continue;
      }
      labels[row[*c_doc]].push_back(row[*c_label] == "1" ? 1 : 0);
    }
  }
  return labels;
}

TrainedClassifier load_model_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open model file '{}'", path.string()));
  return load_model(in);
}

// ---------------------------------------------------------------- measurement scorers

struct Scorer {
  std::string name;
  Estimator estimator;
  std::optional<KeywordMatcher> matcher;  // keyword measurements
  bool hard_label = false;                // CC-LogReg
};

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}' for hashing", path.string()));
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

IngestResult cmd_ingest(const PipelineConfig& config, Diagnostics* diag) {
  const auto gaz = load_filter(config, diag);
  auto result = stream_corpus(config, gaz, [](Document&&) {}, diag);
  ensure_dir(config.out);
  write_totals_csv(result.totals, config.out / "totals.csv");
  write_text(config.out / "ingest.json", ingest_json(result).dump(2) + "\n");
  return result;
}

MeasureResult cmd_measure(const PipelineConfig& config, Diagnostics* diag) {
  MeasureResult result;
  if (config.measurements.empty()) {
    note(diag, "no measurements configured; nothing to do");
    return result;
  }

  // Resolve every resource before touching the corpus.
  const auto needs = [&](std::string_view prefix) {
    return std::any_of(config.measurements.begin(), config.measurements.end(),
                       [&](const std::string& m) { return m.starts_with(prefix) || m.ends_with(prefix); });
  };
  std::vector<KeywordBank> banks;
  for (const auto& m : config.measurements) {
    if (m.starts_with("Key") && !config.keywords) {
      throw ConfigError(fmt::format("measurement '{}' needs a keyword config ('keywords')", m));
    }
    if (m == "KeyExp" && !config.embeddings) {
      throw ConfigError("measurement 'KeyExp' needs word embeddings ('embeddings')");
    }
    if (m.ends_with("-LogReg") && !config.model && config.labels.empty()) {
      throw ConfigError(fmt::format("measurement '{}' needs a trained model ('model') or labeled data ('labels')", m));
    }
  }
  if (needs("Key")) banks = load_keyword_banks(*config.keywords);

  std::optional<TrainedClassifier> classifier;
  if (needs("-LogReg")) {
    if (config.model) {
      classifier = load_model_file(*config.model);
    } else {
      classifier = cmd_train(config, diag).classifier;
    }
  }

  std::vector<Scorer> scorers;
  for (const auto& m : config.measurements) {
    Scorer s{m, Estimator::KeywordCC, std::nullopt, false};
    if (m == "KeyOrg") {
      s.matcher.emplace(key_org(banks));
    } else if (m == "KeyEU") {
      s.matcher.emplace(key_eu(banks));
    } else if (m == "KeyExp") {
      const auto table = EmbeddingTable::load(*config.embeddings, diag);
      std::vector<KeywordBank> expanded;
      for (const char* name : {"economy", "uncertainty", "policy"}) {
        const auto& bank = find_bank(banks, name);
        if (std::find(config.expand_banks.begin(), config.expand_banks.end(), name) != config.expand_banks.end()) {
          const auto it = config.expansion_removal.find(name);
          expanded.push_back(expand_bank(bank, table, config.expansion_k,
                                         it == config.expansion_removal.end() ? std::set<std::string>{} : it->second));
        } else {
          expanded.push_back(bank);
        }
      }
      ensure_dir(config.out);
      save_keyword_banks(expanded, config.out / "keywords_keyexp.json");
      s.matcher.emplace(MeasurementConfig("KeyExp", std::move(expanded)));
    } else if (m == "CC-LogReg") {
      s.estimator = Estimator::CC;
      s.hard_label = true;
    } else if (m == "PCC-LogReg") {
      s.estimator = Estimator::PCC;
    } else if (m == "ImpLik-LogReg") {
      s.estimator = Estimator::ImpLik;
    }
    scorers.push_back(std::move(s));
  }

  // Score in batches; workers fill disjoint slices and the merge keeps document order.
  std::vector<std::vector<ScoredDocument>> scored(scorers.size());
  std::vector<Document> batch;
  std::vector<std::vector<double>> batch_scores(scorers.size());
  const std::size_t n_threads = std::max<std::size_t>(1, config.threads);

  const auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& doc = batch[i];
      std::optional<double> proba;
      for (std::size_t s = 0; s < scorers.size(); ++s) {
        const auto& sc = scorers[s];
        double v = 0.0;
        if (sc.matcher) {
          v = sc.matcher->matches_all(doc.tokens) ? 1.0 : 0.0;
        } else {
          if (!proba) proba = classifier->predict_proba(doc.tokens);
          v = sc.hard_label ? (*proba >= 0.5 ? 1.0 : 0.0) : *proba;
        }
        batch_scores[s][i] = v;
      }
    }
  };
  const auto flush = [&] {
    for (auto& v : batch_scores) v.assign(batch.size(), 0.0);
    if (n_threads == 1 || batch.size() < 2 * n_threads) {
      score_range(0, batch.size());
    } else {
      std::vector<std::jthread> workers;
      const std::size_t chunk = (batch.size() + n_threads - 1) / n_threads;
      for (std::size_t t = 0; t < n_threads; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(batch.size(), b + chunk);
        if (b < e) workers.emplace_back(score_range, b, e);
      }
    }
    for (std::size_t s = 0; s < scorers.size(); ++s) {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        scored[s].push_back({batch[i].id, batch[i].date, batch[i].outlet, batch_scores[s][i]});
      }
    }
    batch.clear();
  };

  const auto gaz = load_filter(config, diag);
  result.ingest = stream_corpus(
      config, gaz,
      [&](Document&& doc) {
        batch.push_back(std::move(doc));
        if (batch.size() == kBatchSize) flush();
      },
      diag);
  if (!batch.empty()) flush();

  const MonthlyTotals totals = config.totals ? read_totals_csv(*config.totals) : result.ingest.totals;

  AggregateOptions agg;
  agg.grid_step = config.implik_step;
  agg.outlet = config.outlet;
  agg.train_prior = config.train_prior.value_or(classifier ? classifier->model.train_prevalence : 0.5);

  ensure_dir(config.out / "scores");
  ensure_dir(config.out / "series");
  ordered_json manifest_measurements = ordered_json::array();
  for (std::size_t s = 0; s < scorers.size(); ++s) {
    const auto& name = scorers[s].name;
    auto series = aggregate_monthly(scored[s], totals, scorers[s].estimator, agg, diag);
    const auto scores_path = config.out / "scores" / (name + ".csv");
    const auto series_path = config.out / "series" / (name + ".csv");
    write_scored_csv(scored[s], scores_path);
    write_series_csv(series.points, series_path);
    result.written.push_back(scores_path);
    result.written.push_back(series_path);
    manifest_measurements.push_back({{"name", name},
                                     {"estimator", to_string(scorers[s].estimator)},
                                     {"scores", scores_path.string()},
                                     {"series", series_path.string()},
                                     {"months", series.points.size()}});
    result.series.emplace(name, std::move(series));
  }

  ordered_json resources = ordered_json::object();
  const auto add_resource = [&](const std::string& role, const fs::path& p) {
    resources[role].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  };
  for (const auto& p : config.corpus) add_resource("corpus", p);
  if (config.keywords && needs("Key")) add_resource("keywords", *config.keywords);
  if (config.embeddings && needs("KeyExp")) add_resource("embeddings", *config.embeddings);
  if (gaz) add_resource("gazetteer", *config.gazetteer);
  if (config.model && classifier) add_resource("model", *config.model);
  for (const auto& p : config.labels) {
    if (classifier && !config.model) add_resource("labels", p);
  }
  if (config.totals) add_resource("totals", *config.totals);

  ordered_json manifest;
  manifest["tool"] = "epu";
  manifest["format_version"] = 1;
  manifest["seed"] = config.seed;
  manifest["derived_seeds"] = {{"cv", derive_seed(config.seed, "cv")}};
  manifest["filter_us"] = config.filter_us;
  if (classifier) manifest["train_prior"] = agg.train_prior;
  manifest["implik_step"] = config.implik_step;
  manifest["documents"] = ingest_json(result.ingest);
  manifest["measurements"] = std::move(manifest_measurements);
  manifest["resources"] = std::move(resources);
  // Wall-clock field; the only part of the output that differs between identical runs.
  manifest["created_at"] = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
  write_text(config.out / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

TrainResult cmd_train(const PipelineConfig& config, Diagnostics* diag) {
  if (config.labels.empty()) throw ConfigError("training needs labeled data ('labels')");
  const auto labels = load_labels(config.labels, diag);

  struct Example {
    std::vector<std::string> tokens;
    int gold;
  };
  std::vector<Example> train;
  std::vector<Example> test;
  std::unordered_set<std::string> matched;
  // Training reads every labeled document; the US filter applies to measurement only.
  PipelineConfig unfiltered = config;
  unfiltered.filter_us = false;
  stream_corpus(
      unfiltered, std::nullopt,
      [&](Document&& doc) {
        const auto it = labels.find(doc.id);
        if (it == labels.end()) return;
        matched.insert(doc.id);
        const int gold = majority_label(it->second, derive_seed(config.seed, "gold:" + doc.id));
        (doc.date < config.split_date ? train : test).push_back({std::move(doc.tokens), gold});
      },
      diag);
  if (matched.size() < labels.size()) {
    note(diag, fmt::format("{} labeled documents are not in the corpus", labels.size() - matched.size()));
  }
  if (train.empty()) throw DataError(fmt::format("training split (before {}) is empty", to_string(config.split_date)));
  if (test.empty()) throw DataError(fmt::format("test split (from {}) is empty", to_string(config.split_date)));

  TrainResult r;
  r.n_train = train.size();
  r.n_test = test.size();
  std::vector<std::vector<std::string>> train_tokens;
  std::vector<int> y_train;
  for (auto& e : train) {
    train_tokens.push_back(e.tokens);
    y_train.push_back(e.gold);
  }
  const auto positives = std::count(y_train.begin(), y_train.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y_train.size())) {
    throw DataError("training labels contain a single class");
  }
  auto vocab = Vocabulary::build(train_tokens, config.min_df);
  if (vocab.empty()) throw DataError(fmt::format("vocabulary is empty at min_df={}", config.min_df));

  SparseMatrix x_train(vocab.size());
  for (const auto& t : train_tokens) x_train.add_row(featurize(t, vocab));

  // Inverse strengths C map to the mean-loss penalty as l2 = 1 / (C * n).
  for (double c : config.c_grid) r.l2_grid.push_back(1.0 / (c * static_cast<double>(r.n_train)));
  r.selection = select_l2(x_train, y_train, r.l2_grid, config.cv_folds, derive_seed(config.seed, "cv"), diag);
  r.classifier.model = fit_logreg(x_train, y_train, r.selection.best_l2, derive_seed(config.seed, "fit"));
  if (!r.classifier.model.converged) {
    note(diag, fmt::format("fit stopped after {} iterations with gradient norm {}", r.classifier.model.iterations,
                           r.classifier.model.gradient_norm));
  }
  r.classifier.vocab = std::move(vocab);

  const auto predict = [&](const std::vector<Example>& set, std::vector<int>& pred, std::vector<int>& gold) {
    for (const auto& e : set) {
      pred.push_back(r.classifier.predict_proba(e.tokens) >= 0.5 ? 1 : 0);
      gold.push_back(e.gold);
    }
  };
  std::vector<int> pred;
  std::vector<int> gold;
  predict(train, pred, gold);
  r.train_report = evaluate(pred, gold);
  pred.clear();
  gold.clear();
  predict(test, pred, gold);
  r.test_report = evaluate(pred, gold);

  ensure_dir(config.out);
  {
    std::ofstream out(config.out / "model.txt");
    if (!out) throw DataError("cannot write model file");
    save_model(r.classifier, out);
  }
  std::string csv = "split,n,precision,recall,f1,accuracy,tp,fp,fn,tn\n";
  for (const auto& [name, n, rep] : {std::tuple{"train", r.n_train, r.train_report}, std::tuple{"test", r.n_test, r.test_report}}) {
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", name, n, format_double(rep.precision),
                       format_double(rep.recall), format_double(rep.f1), format_double(rep.accuracy), rep.tp,
                       rep.fp, rep.fn, rep.tn);
  }
  write_text(config.out / "train_report.csv", csv);

  ordered_json cv = ordered_json::array();
  for (std::size_t i = 0; i < r.l2_grid.size(); ++i) {
    cv.push_back({{"c", config.c_grid[i]}, {"l2", r.l2_grid[i]}, {"mean_accuracy", opt_json(r.selection.mean_accuracy[i])}});
  }
  ordered_json report;
  report["n_train"] = r.n_train;
  report["n_test"] = r.n_test;
  report["split_date"] = to_string(config.split_date);
  report["vocab_size"] = r.classifier.vocab.size();
  report["min_df"] = config.min_df;
  report["selected_l2"] = r.selection.best_l2;
  report["train_prevalence"] = r.classifier.model.train_prevalence;
  report["iterations"] = r.classifier.model.iterations;
  report["converged"] = r.classifier.model.converged;
  report["cv"] = std::move(cv);
  report["train"] = eval_json(r.train_report);
  report["test"] = eval_json(r.test_report);
  write_text(config.out / "train_report.json", report.dump(2) + "\n");
  return r;
}

AgreeResult cmd_agree(const PipelineConfig& config, Diagnostics* diag) {
  if (config.annotations.empty()) throw ConfigError("no annotation files configured ('annotations')");
  std::vector<AnnotationRound> rounds;
  for (const auto& p : config.annotations) rounds.push_back(AnnotationRound::load(p, diag));

  AgreeResult r;
  ensure_dir(config.out);
  ordered_json json_rounds = ordered_json::array();
  for (const auto& round : rounds) {
    r.reports.push_back(agreement_report(round, "all", diag));
    const auto multi = round.with_min_annotations(2);
    if (multi.num_docs() > 0) r.reports.push_back(agreement_report(multi, "2+", diag));

    auto summary = per_annotator_stats(round);
    std::string csv = "annotator,mean_positive,std,n,mean_confidence\n";
    for (const auto& a : summary.annotators) {
      csv += fmt::format("{},{},{},{},{}\n", csv_escape(a.annotator), format_double(a.mean_positive),
                         format_double(a.stddev), a.n, a.mean_confidence ? format_double(*a.mean_confidence) : "");
    }
    write_text(config.out / fmt::format("annotators_{}.csv", round.name()), csv);
    std::string hist = "annotations,documents\n";
    for (const auto& [k, n] : summary.annotations_per_doc) hist += fmt::format("{},{}\n", k, n);
    write_text(config.out / fmt::format("annotations_per_doc_{}.csv", round.name()), hist);
    r.annotators.emplace(round.name(), std::move(summary));
    json_rounds.push_back({{"name", round.name()}, {"skipped_rows", round.skipped_rows()}});
  }
  write_agreement_csv(r.reports, config.out / "agreement.csv");

  if (!config.pxa_docs.empty()) {
    if (rounds.size() != 2) throw ConfigError("PXA needs exactly two annotation rounds");
    std::string csv = "doc_set,round_a,round_b,pxa,agreeing_pairs,total_pairs\n";
    for (const auto& p : config.pxa_docs) {
      std::ifstream in(p);
      if (!in) throw DataError(fmt::format("cannot open doc-set file '{}'", p.string()));
      std::set<std::string> docs;
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos || line[b] == '#') continue;
        docs.insert(line.substr(b, line.find_last_not_of(" \t") - b + 1));
      }
      const auto res = pxa(rounds[0], rounds[1], docs);
      csv += fmt::format("{},{},{},{},{},{}\n", csv_escape(p.stem().string()), csv_escape(rounds[0].name()),
                         csv_escape(rounds[1].name()), format_double(res.value), res.agreeing_pairs, res.total_pairs);
      r.pxa.emplace_back(p.stem().string(), res);
    }
    write_text(config.out / "pxa.csv", csv);
  }

  ordered_json j;
  j["rounds"] = std::move(json_rounds);
  j["reports"] = ordered_json::array();
  for (const auto& rep : r.reports) {
    j["reports"].push_back({{"round", rep.round}, {"subset", rep.subset}, {"num_docs", rep.num_docs},
                            {"num_annotations", rep.num_annotations}, {"prop_positive", rep.prop_positive},
                            {"prop_docs_unanimous", opt_json(rep.prop_docs_unanimous)},
                            {"pairwise_agreement", opt_json(rep.pairwise_agreement)},
                            {"krippendorff_alpha", opt_json(rep.krippendorff_alpha)},
                            {"mean_confidence", opt_json(rep.mean_confidence)}});
  }
  j["pxa"] = ordered_json::array();
  for (const auto& [name, res] : r.pxa) {
    j["pxa"].push_back({{"doc_set", name}, {"pxa", res.value}, {"agreeing_pairs", res.agreeing_pairs},
                        {"total_pairs", res.total_pairs}});
  }
  write_text(config.out / "agreement.json", j.dump(2) + "\n");
  return r;
}

CorrelationMatrix cmd_correlate(const PipelineConfig& config, Diagnostics* diag) {
  std::vector<fs::path> series_paths = config.series;
  if (series_paths.empty() && fs::is_directory(config.out / "series")) {
    for (const auto& entry : fs::directory_iterator(config.out / "series")) {
      if (entry.path().extension() == ".csv") series_paths.push_back(entry.path());
    }
    std::sort(series_paths.begin(), series_paths.end());
  }
  std::vector<MonthlySeries> all;
  for (const auto& p : series_paths) all.push_back(to_monthly(load_external_series(p, diag)));
  for (const auto& p : config.external) all.push_back(to_monthly(load_external_series(p, diag)));
  if (all.size() < 2) throw ConfigError("correlate needs at least two series ('series' / 'external')");
  auto matrix = correlation_matrix(all, diag);
  ensure_dir(config.out);
  write_matrix_csv(matrix, config.out / "correlations.csv");
  return matrix;
}

}  // namespace epu
