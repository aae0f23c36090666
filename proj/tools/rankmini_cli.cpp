#include <CLI11.hpp>
#include <iostream>
#include <map>

#include "rankmini/config.hpp"
#include "rankmini/errors.hpp"
#include "rankmini/pipeline.hpp"

using namespace rankmini;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected name=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rankmini: sparse training, channel pruning and distillation of a pairwise quality network"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> assignments;
  std::map<std::string, std::string> key_flags;
  app.add_option("-c,--config", config_path, "key=value config file");
  app.add_option("--set", assignments, "override one key (key=value); repeatable");
  for (const auto& k : config_keys()) {
    const std::string name(k.name);
    app.add_option_function<std::string>(
           "--" + name, [&key_flags, name](const std::string& v) { key_flags[name] = v; }, std::string(k.doc))
        ->group("Config keys");
  }

  auto* gen = app.add_subcommand("gen-data", "generate pair datasets and evaluation sets");
  auto* teach = app.add_subcommand("train-teacher", "train the dense teacher");
  std::string resume;
  teach->add_option("--resume", resume, "continue from a teacher checkpoint");
  auto* sparsify = app.add_subcommand("sparsify", "L1-sparsify the teacher");
  std::string teacher_ckpt, sparse_ckpt, student_ckpt;
  sparsify->add_option("--teacher", teacher_ckpt, "teacher checkpoint (default <out_dir>/teacher.ckpt)");
  auto* prune = app.add_subcommand("prune", "channel-prune the sparse model into a student");
  prune->add_option("--sparse", sparse_ckpt, "sparse checkpoint (default <out_dir>/sparse.ckpt)");
  auto* distill = app.add_subcommand("distill", "train the student against the frozen teacher");
  bool freeze_check = false;
  distill->add_option("--teacher", teacher_ckpt, "teacher checkpoint");
  distill->add_option("--student", student_ckpt, "student checkpoint");
  distill->add_flag("--freeze-check", freeze_check, "verify the teacher hash is unchanged");
  auto* eval = app.add_subcommand("eval", "evaluate checkpoints on the evaluation sets");
  std::vector<std::string> model_args, eval_sets;
  std::string format = "table";
  eval->add_option("--model", model_args, "name=checkpoint; the first is the reference; repeatable");
  eval->add_option("--eval-set", eval_sets, "evaluation set file; repeatable (default: all in <out_dir>/data)");
  eval->add_option("--format", format, "table or csv")->check(CLI::IsMember({"table", "csv"}));
  auto* pipeline = app.add_subcommand("pipeline", "run every stage in order");
  auto* show = app.add_subcommand("config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    for (const auto& a : assignments) {
      const auto [k, v] = split_assignment(a);
      set_config_value(config, k, v);
    }
    for (const auto& [k, v] : key_flags) set_config_value(config, k, v);
    validate(config);

    std::cerr << "# effective config\n" << config_text(config);
    if (*show) {
      std::cout << config_text(config);
    } else if (*gen) {
      stage_gen_data(config, std::cerr);
    } else if (*teach) {
      stage_train_teacher(config, std::cerr, resume);
    } else if (*sparsify) {
      stage_sparsify(config, std::cerr, teacher_ckpt);
    } else if (*prune) {
      stage_prune(config, std::cerr, sparse_ckpt);
    } else if (*distill) {
      stage_distill(config, std::cerr, teacher_ckpt, student_ckpt, freeze_check);
    } else if (*eval) {
      std::vector<std::pair<std::string, std::string>> models;
      for (const auto& m : model_args) models.push_back(split_assignment(m));
      stage_eval(config, std::cout, models, format == "csv" ? ReportFormat::Csv : ReportFormat::Table, eval_sets);
    } else if (*pipeline) {
      run_pipeline(config, std::cerr);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
