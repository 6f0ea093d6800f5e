#include "commands.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "focovil/ablation.hpp"
#include "focovil/checkpoint.hpp"
#include "focovil/corpus_io.hpp"
#include "focovil/errors.hpp"
#include "focovil/evaluation.hpp"
#include "focovil/training.hpp"
#include "run_config.hpp"

namespace focovil::cli {

namespace fs = std::filesystem;

namespace {

// Errors raised while reading the config map to exit code 2 regardless of
// their type; everything after that maps by type.
struct ConfigFailure : Error {
  using Error::Error;
};

RunConfig config_or_fail(const fs::path& path, std::initializer_list<const char*> required) {
  try {
    return load_run_config(path, required);
  } catch (const Error& e) {
    throw ConfigFailure(e.what());
  }
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigFailure& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidConfig& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const ParseError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const NonFiniteValue& e) {
    err << "aborted: " << e.what() << '\n';
    return kNonFinite;
  } catch (const ShapeMismatch& e) {
    err << "shape mismatch: " << e.what() << '\n';
    return kShapeMismatch;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

skeleton::MultiViewCorpus load_corpus(const fs::path& path, const RunConfig& cfg) {
  auto corpus = io::read_corpus(path, cfg.landmarks);
  if (corpus.sequences.empty()) throw ParseError("corpus '" + path.string() + "' has no records");
  corpus.topology = cfg.topology(corpus.sequences.front().n_joints());
  try {
    corpus.validate();
  } catch (const Error& e) {
    throw ParseError("corpus '" + path.string() + "': " + e.what());
  }
  return corpus;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

int run_gen_data(const GenDataArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = config_or_fail(args.config, {"generator"});
    const auto corpus = synth::generate_corpus(cfg.generator);
    if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
    io::write_corpus(args.out, corpus);
    out << corpus.sequences.size() << " records written to " << args.out.string() << '\n';
    return kOk;
  });
}

int run_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = config_or_fail(args.config, {"model", "train"});
    if (args.ablation) {
      const auto a = train::parse_ablation(*args.ablation);
      if (!a) throw InvalidConfig("unknown ablation '" + *args.ablation + "'");
      cfg.train.ablation = *a;
    }
    const auto corpus = load_corpus(args.data, cfg);
    const auto settings = train::settings_for(cfg.train.ablation, cfg.train.loss);
    auto pre = cfg.preprocess;
    pre.align = settings.align;
    cfg.model.input_dim = 3 * corpus.topology.n_joints;
    cfg.model.use_projection = settings.use_projection;
    const std::string resolved = run_config_to_json(cfg);

    const auto parts = eval::split_corpus(skeleton::preprocess(corpus, pre), cfg.eval.split);
    const auto data = train::make_training_set(parts.train);

    fs::create_directories(args.out_dir);
    const fs::path ckpt_path = args.out_dir / kCheckpointFile;
    const fs::path log_path = args.out_dir / kEpochLogFile;

    auto params = model::ModelParams::initialize(cfg.model);
    std::optional<train::TrainState> resume;
    std::vector<std::string> kept;
    if (args.resume) {
      auto ckpt = model::load_checkpoint(ckpt_path);
      // Only the epoch budget may change between the interrupted run and its resumption.
      auto saved = nlohmann::json::parse(ckpt.run_config_json);
      auto current = nlohmann::json::parse(resolved);
      saved["train"].erase("epochs");
      current["train"].erase("epochs");
      if (saved != current) {
        throw InvalidConfig("checkpoint in '" + args.out_dir.string() +
                            "' was written with a different configuration");
      }
      params = std::move(ckpt.params);
      resume = train::TrainState{ckpt.epochs_completed,
                                 ckpt.optimizer.value_or(train::AdamState{})};
      kept = read_lines(log_path);
      if (static_cast<int>(kept.size()) < ckpt.epochs_completed) {
        throw IoError("epoch log is shorter than the checkpoint's epoch count");
      }
      kept.resize(static_cast<std::size_t>(ckpt.epochs_completed));
      out << "resuming after epoch " << ckpt.epochs_completed << '\n';
    }
    write_text(args.out_dir / kResolvedConfigFile, resolved);

    std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
    if (!log) throw IoError("cannot write '" + log_path.string() + "'");
    for (const auto& line : kept) log << line << '\n';
    log.flush();

    auto snapshot = [&](const model::ModelParams& p, const train::TrainState& state) {
      model::Checkpoint c;
      c.params = p;
      c.epochs_completed = state.epochs_completed;
      c.next_lr = train::lr_for_epoch(cfg.train, state.epochs_completed);
      c.optimizer = state.optimizer;
      c.run_config_json = resolved;
      model::save_checkpoint(ckpt_path, c);
    };
    train::TrainHooks hooks;
    hooks.on_epoch_end = [&](const train::EpochRecord& rec, const model::ModelParams& p,
                             const train::TrainState& state) {
      const auto line = train::epoch_record_to_json(rec);
      log << line << '\n';
      log.flush();
      snapshot(p, state);
      out << line << '\n';
    };

    out << "training " << train::to_string(cfg.train.ablation) << " on " << data.scenes.size()
        << " scenes (" << parts.train.sequences.size() << " sequences)\n";
    const auto result = train::train(data, params, cfg.train, hooks, resume);
    if (result.log.empty()) snapshot(result.params, result.state);
    out << "checkpoint: " << ckpt_path.string() << '\n';
    return kOk;
  });
}

int run_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto ckpt = model::load_checkpoint(args.checkpoint);
    RunConfig cfg;
    if (!ckpt.run_config_json.empty()) {
      try {
        cfg = parse_run_config(ckpt.run_config_json);
      } catch (const Error& e) {
        throw ConfigFailure(std::string("checkpoint run config: ") + e.what());
      }
    }
    if (args.split) {
      try {
        cfg.eval.split = eval::Split::parse(*args.split);
      } catch (const Error& e) {
        throw ConfigFailure(e.what());
      }
    }
    const auto corpus = load_corpus(args.data, cfg);
    const int input_dim = 3 * corpus.topology.n_joints;
    if (input_dim != ckpt.params.config.input_dim) {
      throw ShapeMismatch("data has " + std::to_string(input_dim) +
                          " values per frame, checkpoint expects " +
                          std::to_string(ckpt.params.config.input_dim));
    }
    auto pre = cfg.preprocess;
    pre.align = train::settings_for(cfg.train.ablation, cfg.train.loss).align;
    const auto all = eval::extract_embeddings(skeleton::preprocess(corpus, pre), ckpt.params);
    const auto idx = eval::split_indices(all.scene_ids, all.view_ids, cfg.eval.split);
    const auto report = eval::evaluate(all.subset(idx.train), all.subset(idx.test), cfg.eval);

    write_text(args.report, eval::report_to_json(report));
    fs::path emb_path = args.embeddings.value_or(
        args.report.parent_path() / (args.report.stem().string() + "_embeddings.csv"));
    std::ostringstream csv;
    eval::write_embeddings_csv(csv, all);
    write_text(emb_path, csv.str());
    out << eval::report_to_json(report);
    out << "report: " << args.report.string() << "\nembeddings: " << emb_path.string() << '\n';
    return kOk;
  });
}

int run_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = config_or_fail(args.config, {"model", "train"});
    const auto corpus = load_corpus(args.data, cfg);
    cfg.model.input_dim = 3 * corpus.topology.n_joints;
    fs::create_directories(args.out_dir);
    write_text(args.out_dir / kResolvedConfigFile, run_config_to_json(cfg));

    const auto table = ablation::run_ablation(
        corpus, cfg.ablation_config(), [&](const ablation::RunResult& r) {
          out << train::to_string(r.variant) << " seed " << r.seed
              << ": 1-NN " << r.one_nn_accuracy << ", GMM purity " << r.gmm_purity << '\n';
          out.flush();
        });
    const auto csv = ablation::table_to_csv(table);
    write_text(args.out_dir / kAblationTableFile, csv);
    out << csv;
    return kOk;
  });
}

}  // namespace focovil::cli
