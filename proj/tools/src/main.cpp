#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"

using namespace focovil::cli;

int main(int argc, char** argv) {
  CLI::App app{"focovil: view-invariant skeleton representation learning"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic multi-view corpus");
  gen_cmd->add_option("--config", gen.config, "Run config (JSON)")->required();
  gen_cmd->add_option("--out", gen.out, "Output corpus (JSONL)")->required();

  TrainArgs tr;
  std::string ablation;
  auto* train_cmd = app.add_subcommand("train", "Train one model variant");
  train_cmd->add_option("--config", tr.config, "Run config (JSON)")->required();
  train_cmd->add_option("--data", tr.data, "Corpus (JSONL)")->required();
  train_cmd->add_option("--out", tr.out_dir, "Output directory")->required();
  auto* ablation_opt = train_cmd->add_option(
      "--ablation", ablation,
      "raw_reconst | align_reconst | no_g | no_plus | no_minus | covil | full");
  train_cmd->add_flag("--resume", tr.resume, "Continue from the checkpoint in --out");

  EvalArgs ev;
  std::string split;
  std::string embeddings;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", ev.data, "Corpus (JSONL)")->required();
  auto* split_opt =
      eval_cmd->add_option("--split", split, "cross-view:V or scene-disjoint:PERCENT");
  eval_cmd->add_option("--report", ev.report, "Metrics report path (JSON)")->required();
  auto* emb_opt = eval_cmd->add_option("--embeddings", embeddings, "Embedding export path (CSV)");

  AblateArgs ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score every ablation variant");
  ablate_cmd->add_option("--config", ab.config, "Run config (JSON)")->required();
  ablate_cmd->add_option("--data", ab.data, "Corpus (JSONL)")->required();
  ablate_cmd->add_option("--out", ab.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*gen_cmd) return run_gen_data(gen, std::cout, std::cerr);
  if (*train_cmd) {
    if (*ablation_opt) tr.ablation = ablation;
    return run_train(tr, std::cout, std::cerr);
  }
  if (*eval_cmd) {
    if (*split_opt) ev.split = split;
    if (*emb_opt) ev.embeddings = embeddings;
    return run_eval(ev, std::cout, std::cerr);
  }
  return run_ablate(ab, std::cout, std::cerr);
}
