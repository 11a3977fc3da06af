#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "idsc/cli.hpp"
#include "idsc/errors.hpp"

namespace {

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.file, "flat `key = value` config file");
  cmd->add_option("--set", args.sets, "override one key, e.g. --set train.lr=1e-4");
}

std::string trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

idsc::RunConfig build_config(const ConfigArgs& args) {
  idsc::RunConfig cfg;
  if (!args.file.empty()) idsc::apply_config(cfg, idsc::read_config_file(args.file));
  for (const std::string& s : args.sets) {
    const size_t eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw idsc::UsageError("--set expects key=value, got '" + s + "'");
    }
    idsc::apply_config_entry(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  return cfg;
}

std::vector<int> parse_idr_list(const std::string& text) {
  std::vector<int> out;
  size_t pos = 0;
  while (pos <= text.size() && !text.empty()) {
    const size_t comma = text.find(',', pos);
    const std::string tok = trim(text.substr(pos, comma - pos));
    if (tok.empty()) throw idsc::UsageError("ablate: empty entry in --idr-sweep");
    size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      throw idsc::UsageError("ablate: bad IDR count '" + tok + "'");
    }
    if (used != tok.size() || v < 1) throw idsc::UsageError("ablate: bad IDR count '" + tok + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"internal-discretization depth estimation toolkit"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train on synthetic scenes, then evaluate held-out ones");
  ConfigArgs train_args;
  add_config_options(train, train_args);
  std::string train_out = "train_run";
  int train_steps = 0;
  uint64_t train_seed = 0;
  train->add_option("--out", train_out, "output directory (loss.csv, model.ckpt)");
  train->add_option("--steps", train_steps, "override train.steps");
  train->add_option("--seed", train_seed, "override model.seed");

  auto* eval = app.add_subcommand("eval", "evaluate raster pairs or a trained checkpoint");
  ConfigArgs eval_args;
  add_config_options(eval, eval_args);
  std::string eval_ckpt;
  std::vector<std::string> eval_preds, eval_gts;
  double eval_cap = 0.0;
  eval->add_option("--checkpoint", eval_ckpt, "evaluate this checkpoint on synthetic test scenes");
  eval->add_option("--pred", eval_preds, "prediction raster (repeatable, pairs with --gt)");
  eval->add_option("--gt", eval_gts, "ground-truth raster (repeatable)");
  eval->add_option("--cap", eval_cap, "override eval.depth_cap");

  auto* ablate = app.add_subcommand("ablate", "train and evaluate a grid of configurations");
  ConfigArgs ablate_args;
  add_config_options(ablate, ablate_args);
  std::string ablate_out = "ablate_run";
  bool ablate_flags = false;
  std::string ablate_idrs;
  ablate->add_option("--out", ablate_out, "output directory (ablate.csv)");
  ablate->add_flag("--flags-grid", ablate_flags, "8-way head x afp x msda grid");
  ablate->add_option("--idr-sweep", ablate_idrs, "comma-separated representation counts");

  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic and numeric gradients");
  std::string gc_which = "all";
  uint32_t gc_seed = 1234;
  double gc_tol = 2e-3;
  bool gc_corrupt = false;
  gradcheck->add_option("--which", gc_which, "block to check")
      ->check(CLI::IsMember({"all", "afp", "isd", "edd", "si_log"}));
  gradcheck->add_option("--seed", gc_seed, "instance seed");
  gradcheck->add_option("--tolerance", gc_tol, "max relative error accepted");
  gradcheck->add_flag("--corrupt", gc_corrupt, "bend one analytic gradient (failure-path hook)");

  auto* synth = app.add_subcommand("synth", "render synthetic scenes to raster files");
  ConfigArgs synth_args;
  add_config_options(synth, synth_args);
  std::string synth_out = "synth_data";
  synth->add_option("--out", synth_out, "output directory");

  auto* split = app.add_subcommand("split", "displacement-threshold split from a pose log");
  ConfigArgs split_args;
  add_config_options(split, split_args);
  std::string split_poses, split_out = "split_out";
  std::vector<std::string> split_test_scenes;
  split->add_option("--poses", split_poses, "tab-separated pose log")->required();
  split->add_option("--test-scenes", split_test_scenes, "scene ids for the test partition")
      ->delimiter(',');
  split->add_option("--out", split_out, "output directory (train.txt, test.txt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*train) {
      idsc::RunConfig cfg = build_config(train_args);
      if (train->count("--steps")) cfg.optim.total_steps = train_steps;
      if (train->count("--seed")) cfg.model.seed = train_seed;
      cfg.validate();
      std::cout << idsc::config_echo(cfg);
      return idsc::cmd_train(cfg, idsc::resolve_out_path(train_out), std::cout);
    }
    if (*eval) {
      const bool pairs = !eval_preds.empty() || !eval_gts.empty();
      if (pairs == !eval_ckpt.empty()) {
        throw idsc::UsageError("eval: pass either --checkpoint or --pred/--gt pairs");
      }
      idsc::RunConfig cfg = build_config(eval_args);
      if (eval->count("--cap")) cfg.eval_depth_cap = static_cast<float>(eval_cap);
      cfg.validate();
      std::cout << idsc::config_echo(cfg);
      if (pairs) return idsc::cmd_eval_pairs(eval_preds, eval_gts, cfg.eval_depth_cap, std::cout);
      return idsc::cmd_eval_checkpoint(cfg, eval_ckpt, std::cout);
    }
    if (*ablate) {
      if (ablate_flags && ablate->count("--idr-sweep")) {
        throw idsc::UsageError("ablate: choose --flags-grid or --idr-sweep, not both");
      }
      idsc::AblateMode mode = idsc::AblateMode::kSingle;
      std::vector<int> idrs;
      if (ablate_flags) {
        mode = idsc::AblateMode::kFlagGrid;
      } else if (ablate->count("--idr-sweep")) {
        mode = idsc::AblateMode::kIdrSweep;
        idrs = parse_idr_list(ablate_idrs);
        if (idrs.empty()) throw idsc::UsageError("ablate: empty grid");
      }
      idsc::RunConfig cfg = build_config(ablate_args);
      cfg.validate();
      std::cout << idsc::config_echo(cfg);
      return idsc::cmd_ablate(cfg, mode, idrs, idsc::resolve_out_path(ablate_out), std::cout);
    }
    if (*gradcheck) {
      return idsc::cmd_gradcheck(gc_which, gc_seed, gc_tol, gc_corrupt, std::cout);
    }
    if (*synth) {
      idsc::RunConfig cfg = build_config(synth_args);
      cfg.validate();
      std::cout << idsc::config_echo(cfg);
      return idsc::cmd_synth(cfg, idsc::resolve_out_path(synth_out), std::cout);
    }
    if (*split) {
      idsc::RunConfig cfg = build_config(split_args);
      cfg.validate();
      std::cout << idsc::config_echo(cfg);
      return idsc::cmd_split(cfg, split_poses, split_test_scenes,
                             idsc::resolve_out_path(split_out), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return idsc::exit_code_for(e);
  }
  return 0;
}
