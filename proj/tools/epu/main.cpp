// epu: build EPU index series from a news corpus and audit annotation rounds.
//
//   epu ingest    --config run.ini
//   epu measure   --config run.ini --set measurements=KeyOrg,KeyEU
//   epu train     --config run.ini --seed 7
//   epu agree     --config run.ini --out audit/
//   epu correlate --config run.ini
//
// Every config key can be overridden with --set key=value; --seed, --out and
// --filter-us are shorthands for the matching keys.
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "epu/diagnostics.hpp"
#include "epu/error.hpp"
#include "epu/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool filter_us = false;
  bool quiet = false;
};

std::map<std::string, std::string> collect_overrides(const Options& o) {
  std::map<std::string, std::string> overrides;
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw epu::ConfigError(fmt::format("--set expects key=value, got '{}'", kv));
    }
    overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (o.seed) overrides["seed"] = std::to_string(*o.seed);
  if (o.out) overrides["out"] = *o.out;
  if (o.filter_us) overrides["filter_us"] = "true";
  return overrides;
}

void print_diagnostics(const epu::Diagnostics& diag, bool quiet) {
  if (quiet) return;
  for (const auto& m : diag.messages()) fmt::print(stderr, "epu: note: {}\n", m);
}

int run(const std::string& command, const Options& o) {
  epu::Diagnostics diag;
  int code = kExitOk;
  try {
    const auto config = epu::load_config(o.config, collect_overrides(o));
    if (command == "ingest") {
      const auto r = epu::cmd_ingest(config, &diag);
      fmt::print("records {}  skipped {}  non-US {}  kept {}\n", r.records, r.skipped, r.discarded_non_us, r.kept);
    } else if (command == "measure") {
      const auto r = epu::cmd_measure(config, &diag);
      if (r.series.empty()) fmt::print(stderr, "epu: warning: no measurements configured, nothing written\n");
      for (const auto& [name, s] : r.series) fmt::print("{}: {} months\n", name, s.points.size());
    } else if (command == "train") {
      const auto r = epu::cmd_train(config, &diag);
      fmt::print("train n={} acc={:.4f}\n", r.n_train, r.train_report.accuracy);
      fmt::print("test  n={} P={:.4f} R={:.4f} F1={:.4f} acc={:.4f}\n", r.n_test, r.test_report.precision,
                 r.test_report.recall, r.test_report.f1, r.test_report.accuracy);
    } else if (command == "agree") {
      const auto r = epu::cmd_agree(config, &diag);
      for (const auto& rep : r.reports) {
        fmt::print("{} [{}] docs={} anns={} pairwise={} alpha={}\n", rep.round, rep.subset, rep.num_docs,
                   rep.num_annotations,
                   rep.pairwise_agreement ? fmt::format("{:.4f}", *rep.pairwise_agreement) : "-",
                   rep.krippendorff_alpha ? fmt::format("{:.4f}", *rep.krippendorff_alpha) : "-");
      }
      for (const auto& [set, p] : r.pxa) fmt::print("pxa {} = {:.4f} ({} pairs)\n", set, p.value, p.total_pairs);
    } else if (command == "correlate") {
      const auto m = epu::cmd_correlate(config, &diag);
      fmt::print("{} series correlated\n", m.labels.size());
    }
  } catch (const epu::ConfigError& e) {
    fmt::print(stderr, "epu: config error: {}\n", e.what());
    code = kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "epu: error: {}\n", e.what());
    code = kExitData;
  }
  print_diagnostics(diag, o.quiet);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Economic policy uncertainty index construction"};
  app.require_subcommand(1);
  Options o;
  std::string chosen;
  for (const char* name : {"ingest", "measure", "train", "agree", "correlate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", o.config, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--set", o.sets, "override a config key (key=value), repeatable");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_flag("--filter-us", o.filter_us, "keep only documents with a US dateline");
    sub->add_flag("-q,--quiet", o.quiet, "suppress diagnostic notes");
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  return run(chosen, o);
}
