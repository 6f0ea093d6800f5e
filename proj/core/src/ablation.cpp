#include "focovil/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "focovil/errors.hpp"

namespace focovil::ablation {

using train::Ablation;

void AblationConfig::validate() const {
  model.validate();
  train.validate();
  if (preprocess.target_len < 2) throw InvalidConfig("preprocess.target_len must be >= 2");
  if (variants.empty()) throw InvalidConfig("ablation needs at least one variant");
  if (seeds.empty()) throw InvalidConfig("ablation needs at least one seed");
  if (threads < 0) throw InvalidConfig("threads must be >= 0");
}

RunResult run_variant(const skeleton::MultiViewCorpus& corpus, const AblationConfig& cfg,
                      Ablation variant, std::uint64_t seed) {
  const auto settings = train::settings_for(variant, cfg.train.loss);
  auto pre = cfg.preprocess;
  pre.align = settings.align;
  const auto parts = eval::split_corpus(skeleton::preprocess(corpus, pre), cfg.split);

  auto mcfg = cfg.model;
  mcfg.use_projection = settings.use_projection;
  mcfg.seed = seed;
  auto tcfg = cfg.train;
  tcfg.ablation = variant;
  tcfg.seed = seed;

  const auto data = train::make_training_set(parts.train);
  auto trained = train::train(data, model::ModelParams::initialize(mcfg), tcfg);

  const auto train_emb = eval::extract_embeddings(parts.train, trained.params);
  const auto test_emb = eval::extract_embeddings(parts.test, trained.params);
  test_emb.validate(true);
  std::vector<int> classes = test_emb.labels;
  std::sort(classes.begin(), classes.end());
  const auto k = static_cast<int>(std::unique(classes.begin(), classes.end()) - classes.begin());

  RunResult r;
  r.variant = variant;
  r.seed = seed;
  r.one_nn_accuracy = eval::one_nn_accuracy(train_emb, test_emb);
  r.gmm_purity = eval::purity(eval::gmm(test_emb.rows, k, seed).assignment, test_emb.labels);
  return r;
}

TrendCheck check_trend(const std::vector<VariantMean>& means) {
  auto find = [&](Ablation a) -> const VariantMean* {
    for (const auto& m : means) {
      if (m.variant == a) return &m;
    }
    return nullptr;
  };
  const auto* full = find(Ablation::Full);
  const auto* covil = find(Ablation::Covil);
  const auto* align = find(Ablation::AlignReconst);
  const auto* raw = find(Ablation::RawReconst);
  TrendCheck t;
  if (!full || !covil || !align || !raw) return t;
  t.evaluated = true;
  t.accuracy_ordered = full->one_nn_accuracy >= covil->one_nn_accuracy &&
                       covil->one_nn_accuracy >= align->one_nn_accuracy &&
                       align->one_nn_accuracy >= raw->one_nn_accuracy;
  t.purity_ordered = full->gmm_purity >= covil->gmm_purity &&
                     covil->gmm_purity >= align->gmm_purity && align->gmm_purity >= raw->gmm_purity;
  t.full_minus_align_points = 100.0 * (full->one_nn_accuracy - align->one_nn_accuracy);
  t.full_minus_raw_points = 100.0 * (full->one_nn_accuracy - raw->one_nn_accuracy);
  t.gaps_met = t.full_minus_align_points >= 3.0 && t.full_minus_raw_points >= 8.0;
  return t;
}

AblationTable run_ablation(const skeleton::MultiViewCorpus& corpus, const AblationConfig& cfg,
                           const RunCallback& on_run) {
  cfg.validate();
  corpus.validate();

  struct Job {
    Ablation variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto v : cfg.variants) {
    for (auto s : cfg.seeds) jobs.push_back({v, s});
  }

  AblationTable table;
  table.runs.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        table.runs[j] = run_variant(corpus, cfg, jobs[j].variant, jobs[j].seed);
        if (on_run) {
          std::lock_guard lock(mu);
          on_run(table.runs[j]);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(jobs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (auto v : cfg.variants) {
    VariantMean m;
    m.variant = v;
    int n = 0;
    for (const auto& r : table.runs) {
      if (r.variant != v) continue;
      m.one_nn_accuracy += r.one_nn_accuracy;
      m.gmm_purity += r.gmm_purity;
      ++n;
    }
    m.one_nn_accuracy /= n;
    m.gmm_purity /= n;
    table.means.push_back(m);
  }
  table.trend = check_trend(table.means);
  return table;
}

std::string table_to_csv(const AblationTable& t) {
  std::ostringstream out;
  char buf[128];
  out << "variant,seed,one_nn_accuracy,gmm_purity\n";
  for (const auto& r : t.runs) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.one_nn_accuracy, r.gmm_purity);
    out << train::to_string(r.variant) << ',' << r.seed << ',' << buf << '\n';
  }
  for (const auto& m : t.means) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", m.one_nn_accuracy, m.gmm_purity);
    out << train::to_string(m.variant) << ",mean," << buf << '\n';
  }
  const auto& c = t.trend;
  if (!c.evaluated) {
    out << "# trend not evaluated (needs full, covil, align_reconst, raw_reconst)\n";
  } else {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f", c.full_minus_align_points, c.full_minus_raw_points);
    out << "# trend accuracy_ordered=" << (c.accuracy_ordered ? "pass" : "fail")
        << " purity_ordered=" << (c.purity_ordered ? "pass" : "fail") << '\n'
        << "# gap points full-align,full-raw=" << buf << " " << (c.gaps_met ? "pass" : "fail")
        << '\n'
        << "# trend " << (c.passed() ? "PASS" : "FAIL") << '\n';
  }
  return out.str();
}

}  // namespace focovil::ablation
