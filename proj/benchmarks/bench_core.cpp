#include <benchmark/benchmark.h>

#include <fmt/format.h>

#include "epu/agreement.hpp"
#include "epu/lexicon.hpp"
#include "epu/prevalence.hpp"
#include "epu/seed.hpp"
#include "epu/tokenizer.hpp"

namespace {

using namespace epu;

std::vector<std::string> texts(std::size_t count, std::size_t len) {
  const std::vector<std::string> keys{"economic", "uncertainty", "Congress", "the Fed", "White House"};
  Rng rng(1);
  std::vector<std::string> out;
  for (std::size_t d = 0; d < count; ++d) {
    std::string t;
    for (std::size_t k = 0; k < len; ++k) {
      t += rng.below(100) == 0 ? keys[rng.below(keys.size())] : fmt::format("word{}", rng.below(5000));
      t += ' ';
    }
    out.push_back(std::move(t));
  }
  return out;
}

void BM_Tokenize(benchmark::State& state) {
  const auto docs = texts(256, static_cast<std::size_t>(state.range(0)));
  std::size_t bytes = 0;
  for (const auto& d : docs) bytes += d.size();
  for (auto _ : state) {
    for (const auto& d : docs) benchmark::DoNotOptimize(tokenize(d));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * docs.size()));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes));
}
BENCHMARK(BM_Tokenize)->Arg(100)->Arg(500);

void BM_MatchTokens(benchmark::State& state) {
  const KeywordMatcher m(key_org(load_keyword_banks(EPU_DATA_DIR "/keywords_keyorg.json")));
  std::vector<std::vector<std::string>> docs;
  for (const auto& t : texts(256, static_cast<std::size_t>(state.range(0)))) docs.push_back(tokenize(t));
  for (auto _ : state) {
    for (const auto& d : docs) benchmark::DoNotOptimize(m.match_mask(d));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * docs.size()));
}
BENCHMARK(BM_MatchTokens)->Arg(100)->Arg(500);

void BM_NaiveScan(benchmark::State& state) {
  const auto cfg = key_org(load_keyword_banks(EPU_DATA_DIR "/keywords_keyorg.json"));
  std::vector<std::vector<std::string>> docs;
  for (const auto& t : texts(256, static_cast<std::size_t>(state.range(0)))) docs.push_back(tokenize(t));
  for (auto _ : state) {
    for (const auto& d : docs) {
      for (const auto& b : cfg.banks()) benchmark::DoNotOptimize(bank_matches(d, b));
    }
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * docs.size()));
}
BENCHMARK(BM_NaiveScan)->Arg(500);

void BM_MatchText(benchmark::State& state) {
  const KeywordMatcher m(key_org(load_keyword_banks(EPU_DATA_DIR "/keywords_keyorg.json")));
  const auto docs = texts(256, 500);
  for (auto _ : state) {
    for (const auto& d : docs) benchmark::DoNotOptimize(m.match_mask_text(d));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * docs.size()));
}
BENCHMARK(BM_MatchText);

void BM_ImplicitLikelihood(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> p(static_cast<std::size_t>(state.range(0)));
  for (auto& v : p) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(implicit_likelihood(p, 0.48));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_ImplicitLikelihood)->Arg(1000)->Arg(10000);

void BM_Pxa(benchmark::State& state) {
  Rng rng(3);
  AnnotationRound a("a"), b("b");
  std::set<std::string> docs;
  for (std::int64_t d = 0; d < state.range(0); ++d) {
    const auto id = fmt::format("d{}", d);
    docs.insert(id);
    for (int k = 0; k < 5; ++k) {
      a.add(id, {fmt::format("a{}", k), static_cast<int>(rng.below(2)), std::nullopt});
      b.add(id, {fmt::format("b{}", k), static_cast<int>(rng.below(2)), std::nullopt});
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(pxa(a, b, docs));
}
BENCHMARK(BM_Pxa)->Arg(200)->Arg(2000);

}  // namespace
BENCHMARK_MAIN();
