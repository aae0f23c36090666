// Copyright 2026 The rankmini Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rankmini/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "rankmini/binary_io.hpp"
#include "rankmini/distill.hpp"
#include "rankmini/errors.hpp"
#include "rankmini/pruning.hpp"
#include "rankmini/rng.hpp"
#include "rankmini/training.hpp"

namespace rankmini {

PipelinePaths::PipelinePaths(const std::string& out_dir) : root(out_dir) {
  const std::filesystem::path r(out_dir);
  const auto at = [&](const std::string& rel) { return (r / rel).string(); };
  data_dir = at("data");
  train = at("data/train.rmds");
  val = at("data/val.rmds");
  test = at("data/test.rmds");
  manifest = at("data/manifest.txt");
  teacher = at("teacher.ckpt");
  teacher_log = at("teacher_log.csv");
  sparse = at("sparse.ckpt");
  sparse_log = at("sparse_log.csv");
  density = at("density.txt");
  student = at("student.ckpt");
  plan = at("plan.txt");
  distilled = at("distilled.ckpt");
  distill_log = at("distill_log.csv");
  eval_dir = at("eval");
}

std::string PipelinePaths::eval_set(data::DistortionKind kind) const {
  return (std::filesystem::path(data_dir) / ("eval_" + std::string(data::distortion_name(kind)) + ".rmev")).string();
}

void echo_config(const PipelineConfig& config, const std::string& stage) {
  io::write_file((std::filesystem::path(config.out_dir) / (stage + ".config.txt")).string(), config_text(config));
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string or_default(const std::string& given, const std::string& fallback) { return given.empty() ? fallback : given; }

data::PairDataset read_checked(const std::string& path, const PatchGeometry& geometry) {
  auto ds = data::read_dataset(path);
  if (ds.geometry != geometry)
    throw StructureError(path + ": patch geometry does not match the configured patch_* keys");
  return ds;
}

void save_model(const std::string& path, const Model<float>& model, std::map<std::string, std::string> meta) {
  save_checkpoint(path, {model.spec, model.params, std::move(meta)});
}

Model<float> load_model(const std::string& path, Checkpoint* full = nullptr) {
  auto ckpt = load_checkpoint(path);
  if (const auto v = validate_structure(ckpt.spec, ckpt.params); !v.empty())
    throw StructureError(path + ": " + v.front());
  Model<float> m{ckpt.spec, ckpt.params};
  if (full) *full = std::move(ckpt);
  return m;
}

std::string role_of(const Checkpoint& c) {
  const auto it = c.meta.find("role");
  return it == c.meta.end() ? std::string("?") : it->second;
}

[[noreturn]] void diverged(const std::string& stage, const std::string& message, const std::string& path,
                           const Model<float>& last_good, std::ostream& log) {
  const std::string rescue = path + ".last_good";
  save_model(rescue, last_good, {{"role", stage + "-last-good"}});
  log << stage << ": diverged (" << message << "); last good parameters in " << rescue << '\n';
  throw NumericalError(stage + " diverged: " + message);
}

}  // namespace

Corpus make_corpus(const PipelineConfig& c) {
  const auto train_src = data::generate_sources(c.train_sources, c.patch, mix_seed(c.seed, 1));
  const auto val_src = data::generate_sources(c.val_sources, c.patch, mix_seed(c.seed, 2));
  const auto test_src = data::generate_sources(c.val_sources, c.patch, mix_seed(c.seed, 3));
  Corpus out;
  out.train = data::make_pair_dataset(train_src, {c.train_pairs, c.levels, c.cross_content, mix_seed(c.seed, 4)});
  out.val = data::make_pair_dataset(val_src, {c.val_pairs, c.levels, c.cross_content, mix_seed(c.seed, 5)});
  out.test = data::make_pair_dataset(test_src, {c.test_pairs, c.levels, c.cross_content, mix_seed(c.seed, 6)});
  return out;
}

std::vector<data::EvalSet> make_eval_sets(const PipelineConfig& c) {
  data::EvalOptions opt;
  opt.sources = c.eval_sources;
  opt.frames = c.eval_frames;
  opt.height = c.eval_height;
  opt.width = c.eval_width;
  opt.levels = c.levels;
  opt.seed = mix_seed(c.seed, 7);
  std::vector<data::EvalSet> sets;
  for (auto kind : data::kAllDistortions) sets.push_back(data::make_eval_set(kind, opt));
  return sets;
}

void stage_gen_data(const PipelineConfig& config, std::ostream& log) {
  validate(config);
  const PipelinePaths p(config.out_dir);
  echo_config(config, "gen-data");
  const auto corpus = make_corpus(config);
  // the output location is not part of what the data depends on
  PipelineConfig located = config;
  located.out_dir.clear();
  const std::string provenance = config_text(located);
  std::ostringstream manifest;
  manifest << "# rankmini corpus\n";
  auto record = [&](const std::string& path) {
    const auto bytes = io::read_file(path);
    manifest << std::filesystem::path(path).filename().string() << ' ' << bytes.size() << ' '
             << hex64(io::fnv1a64(bytes)) << '\n';
  };
  for (const auto& [path, ds] : {std::pair{&p.train, &corpus.train}, std::pair{&p.val, &corpus.val},
                                 std::pair{&p.test, &corpus.test}}) {
    data::write_dataset(*path, *ds, provenance);
    record(*path);
    log << "wrote " << *path << " (" << ds->instances.size() << " instances)\n";
  }
  for (const auto& set : make_eval_sets(config)) {
    const auto path = p.eval_set(data::parse_distortion(set.name));
    data::write_eval_set(path, set);
    record(path);
    log << "wrote " << path << " (" << set.items.size() << " sequences)\n";
  }
  io::write_file(p.manifest, manifest.str());
}

void stage_train_teacher(const PipelineConfig& config, std::ostream& log, const std::string& resume) {
  validate(config);
  const PipelinePaths p(config.out_dir);
  echo_config(config, "train-teacher");
  const auto train = read_checked(p.train, config.patch);
  const auto val = read_checked(p.val, config.patch);

  Model<float> model;
  int start = 0;
  std::string prior_log;
  if (!resume.empty()) {
    Checkpoint ckpt;
    model = load_model(resume, &ckpt);
    if (role_of(ckpt) != "teacher") throw StructureError(resume + ": not a teacher checkpoint");
    if (model.spec != build_teacher_spec(config.teacher_config()))
      throw StructureError(resume + ": architecture differs from the configured teacher");
    start = std::stoi(ckpt.meta.count("epoch") ? ckpt.meta.at("epoch") : "0");
    try {
      prior_log = io::read_file(p.teacher_log);
    } catch (const FormatError&) {
    }
    log << "resuming teacher at epoch " << start << '\n';
  } else {
    model = build_teacher<float>(config.teacher_config());
  }

  const auto opt = config.teacher_optimizer();
  const auto result = train_ranking(model, train, val, opt, false, start, [&](const EpochRecord& r, const Model<float>&) {
    log << "teacher epoch " << r.epoch << " loss " << r.loss << " val_acc " << r.accuracy << '\n';
  });
  const int done = result.epochs.empty() ? start : result.epochs.back().epoch;
  auto csv = training_log_csv(result);
  if (!prior_log.empty()) csv = prior_log + csv.substr(csv.find('\n') + 1);
  io::write_file(p.teacher_log, csv);
  if (result.diverged) diverged("teacher", result.message, p.teacher, model, log);
  save_model(p.teacher, model, {{"role", "teacher"}, {"epoch", std::to_string(done)}});
  log << "teacher: " << count_params(model.params) << " params, test accuracy "
      << pair_accuracy(model.spec, model.params, read_checked(p.test, config.patch)) << '\n';
}

void stage_sparsify(const PipelineConfig& config, std::ostream& log, const std::string& teacher_path) {
  validate(config);
  const PipelinePaths p(config.out_dir);
  echo_config(config, "sparsify");
  const auto source = or_default(teacher_path, p.teacher);
  Checkpoint ckpt;
  Model<float> model = load_model(source, &ckpt);
  if (role_of(ckpt) != "teacher" || model.spec != build_teacher_spec(config.teacher_config()))
    throw StructureError(source + ": sparsify needs a teacher-shaped checkpoint (got role '" + role_of(ckpt) + "')");
  if (config.sparsify_from == "scratch") model.params = init_params<float>(model.spec, config.teacher_config().seed);

  const auto train = read_checked(p.train, config.patch);
  const auto val = read_checked(p.val, config.patch);
  const auto opt = config.sparse_optimizer();
  const std::size_t before = nonzero_weights(model.params);
  const auto result = train_sparse(model, train, val, opt, [&](const EpochRecord& r, const Model<float>&) {
    log << "sparsify epoch " << r.epoch << ' ' << phase_name(r.phase) << " loss " << r.loss << " nonzero "
        << r.nonzero << " val_acc " << r.accuracy << '\n';
  });
  io::write_file(p.sparse_log, training_log_csv(result));
  if (result.diverged) diverged("sparsify", result.message, p.sparse, model, log);
  const auto report = compute_density(model.params);
  io::write_file(p.density, format_density_report(report));
  save_model(p.sparse, model, {{"role", "sparse"}, {"epoch", std::to_string(opt.epochs)}});
  log << "sparsify: nonzero weights " << before << " -> " << report.nonzero << " (global density " << report.global
      << ")\n";
}

void stage_prune(const PipelineConfig& config, std::ostream& log, const std::string& sparse_path) {
  validate(config);
  const PipelinePaths p(config.out_dir);
  echo_config(config, "prune");
  const auto source = or_default(sparse_path, p.sparse);
  Checkpoint ckpt;
  const Model<float> sparse = load_model(source, &ckpt);
  if (role_of(ckpt) != "sparse") throw StructureError(source + ": prune needs a sparsified checkpoint");
  const auto report = compute_density(sparse.params);
  const auto plan = build_pruning_plan(sparse.spec, sparse.params, report);
  const auto student = prune_network(sparse.spec, sparse.params, plan);
  if (const auto v = validate_structure(student.spec, student.params); !v.empty())
    throw StructureError("pruned student is invalid: " + v.front());
  io::write_file(p.plan, format_pruning_plan(plan));
  save_model(p.student, student, {{"role", "student"}});

  const auto a = load_checkpoint(p.student);
  const auto b = load_checkpoint(source);
  const double ratio = static_cast<double>(count_params(a.params)) / static_cast<double>(count_params(b.params));
  log << "prune: params " << count_params(b.params) << " -> " << count_params(a.params) << ", retained "
      << format_percent(ratio) << " (ratio " << ratio << ")\n";
}

void stage_distill(const PipelineConfig& config, std::ostream& log, const std::string& teacher_path,
                   const std::string& student_path, bool freeze_check) {
  validate(config);
  const PipelinePaths p(config.out_dir);
  echo_config(config, "distill");
  Checkpoint tc, sc;
  const Model<float> teacher = load_model(or_default(teacher_path, p.teacher), &tc);
  Model<float> student = load_model(or_default(student_path, p.student), &sc);
  if (teacher.spec.input != student.spec.input)
    throw StructureError("teacher and student checkpoints disagree on input geometry");
  const auto train = read_checked(p.train, config.patch);
  const auto val = read_checked(p.val, config.patch);

  const auto hash_before = params_hash(teacher.params);
  const auto result = distill_train(teacher, student, train, val, config.distill_config(),
                                    [&](const DistillRecord& r, const Model<float>&) {
                                      log << "distill epoch " << r.epoch << " total " << r.total << " instance "
                                          << r.instance << " batch " << r.batch << " class " << r.cls
                                          << " ranking " << r.ranking << " val_acc " << r.accuracy << '\n';
                                    });
  io::write_file(p.distill_log, distill_log_csv(result));
  if (freeze_check) {
    const auto hash_after = params_hash(teacher.params);
    const auto reloaded = params_hash(load_checkpoint(or_default(teacher_path, p.teacher)).params);
    if (hash_after != hash_before || reloaded != hash_before)
      throw StructureError("teacher parameters changed during distillation");
    log << "freeze check: teacher hash " << hex64(hash_before) << " unchanged\n";
  }
  if (result.diverged) diverged("distill", result.message, p.distilled, student, log);
  save_model(p.distilled, student, {{"role", "distilled"}, {"epoch", std::to_string(config.distill_epochs)}});
  log << "distill: test accuracy " << pair_accuracy(student.spec, student.params, read_checked(p.test, config.patch))
      << '\n';
}

std::vector<EvalReport> stage_eval(const PipelineConfig& config, std::ostream& out,
                                   const std::vector<std::pair<std::string, std::string>>& models_in,
                                   ReportFormat format, const std::vector<std::string>& eval_paths) {
  validate(config);
  const PipelinePaths p(config.out_dir);
  echo_config(config, "eval");
  auto models = models_in;
  if (models.empty())
    models = {{"teacher", p.teacher}, {"student", p.student}, {"distilled", p.distilled}};
  std::vector<data::EvalSet> sets;
  if (eval_paths.empty())
    for (auto kind : data::kAllDistortions) sets.push_back(data::read_eval_set(p.eval_set(kind)));
  else
    for (const auto& path : eval_paths) sets.push_back(data::read_eval_set(path));

  std::vector<EvalReport> reports;
  for (const auto& [name, path] : models) {
    const auto model = load_model(path);
    reports.push_back(evaluate_model(name, model.spec, model.params, sets));
  }

  const std::filesystem::path dir(p.eval_dir);
  io::write_file((dir / "report.csv").string(), format_reports_csv(reports));
  std::string table = format_table(reports);
  std::string comparisons;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const auto c = compare_models(reports[i], reports.front());
    table += "\n" + reports[i].model + " vs " + reports.front().model + ":\n" + format_retention(c);
    comparisons += format_comparison_csv(c);
  }
  io::write_file((dir / "table.txt").string(), table);
  if (!comparisons.empty()) io::write_file((dir / "comparison.csv").string(), comparisons);
  out << (format == ReportFormat::Csv ? format_reports_csv(reports) + comparisons : table);
  return reports;
}

void run_pipeline(const PipelineConfig& config, std::ostream& log) {
  stage_gen_data(config, log);
  stage_train_teacher(config, log);
  stage_sparsify(config, log);
  stage_prune(config, log);
  stage_distill(config, log, {}, {}, true);
  stage_eval(config, log);
}

}  // namespace rankmini
