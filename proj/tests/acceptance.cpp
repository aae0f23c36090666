// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
//   acceptance [--work DIR] [--only N[,N...]]
//
// Criteria 6 and 7 run the default pipeline once (several minutes on one core).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rankmini/binary_io.hpp"
#include "rankmini/checkpoint.hpp"
#include "rankmini/config.hpp"
#include "rankmini/distill.hpp"
#include "rankmini/errors.hpp"
#include "rankmini/eval.hpp"
#include "rankmini/losses.hpp"
#include "rankmini/optim.hpp"
#include "rankmini/pipeline.hpp"
#include "rankmini/pruning.hpp"
#include "rankmini/rng.hpp"
#include "rankmini/stats.hpp"
#include "rankmini/training.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace rankmini;
using rankmini::testing::check_gradients;
using rankmini::testing::random_tensor;
using rankmini::testing::random_tensor_f;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failures of a criterion.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    if (failures_++ < 5) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
  Outcome outcome() const {
    if (failures_ == 0) return {true, std::to_string(checks_) + " checks" + (notes_.empty() ? "" : ", " + notes_)};
    return {false, std::to_string(failures_) + "/" + std::to_string(checks_) + " failed: " + messages_};
  }

 private:
  std::size_t checks_ = 0, failures_ = 0;
  std::string messages_, notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  Rng rng(101);
  double worst = 0.0;
  std::size_t coords = 0;
  auto record = [&](const std::string& what, const testing::GradCheck& r, std::size_t min_coords) {
    worst = std::max(worst, r.max_rel_error);
    coords += r.coordinates;
    c.expect(r.max_rel_error < 1e-4, what + " rel err " + fmt("%.3g", r.max_rel_error));
    c.expect(r.coordinates >= min_coords, what + " checked " + std::to_string(r.coordinates) + " coordinates");
  };

  for (std::size_t stride : {1, 2})
    for (std::size_t pad : {0, 1})
      record("conv2d",
             check_gradients({random_tensor({2, 3, 7, 7}, rng), random_tensor({4, 3, 3, 3}, rng),
                              random_tensor({4}, rng)},
                             [&](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
                               return ad::sum(t, ad::mul(t, ad::conv2d(t, v[0], v[1], v[2], stride, pad),
                                                         ad::conv2d(t, v[0], v[1], v[2], stride, pad)));
                             },
                             rng),
             44);
  record("dense",
         check_gradients({random_tensor({5, 6}, rng), random_tensor({4, 6}, rng), random_tensor({4}, rng)},
                         [](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
                           const auto y = ad::dense(t, v[0], v[1], v[2]);
                           return ad::sum(t, ad::mul(t, y, y));
                         },
                         rng),
         44);

  // keep activations away from their kinks
  auto away_from_zero = [&](Shape s) {
    auto x = random_tensor(std::move(s), rng);
    for (auto& v : x.values()) v = v < 0 ? v - 0.05 : v + 0.05;
    return x;
  };
  const auto weights = random_tensor({2, 3, 4, 4}, rng);
  using Unary = std::function<ad::Var(ad::Tape<double>&, ad::Var)>;
  const std::vector<std::pair<std::string, Unary>> unary{
      {"leaky_relu", [](ad::Tape<double>& t, ad::Var x) { return ad::leaky_relu(t, x); }},
      {"sigmoid", [](ad::Tape<double>& t, ad::Var x) { return ad::sigmoid(t, x); }},
      {"avg_pool", [](ad::Tape<double>& t, ad::Var x) { return ad::avg_pool(t, x, 2); }},
      {"global_avg_pool", [](ad::Tape<double>& t, ad::Var x) { return ad::global_avg_pool(t, x); }},
  };
  for (const auto& [name, op] : unary)
    record(name,
           check_gradients({away_from_zero({2, 3, 4, 4})},
                           [&, op = op](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
                             const auto y = op(t, v[0]);
                             const auto w = t.constant(Tensor<double>(t.value(y).shape(),
                                                                      std::vector<double>(weights.values().begin(),
                                                                                          weights.values().begin() +
                                                                                              t.value(y).numel())));
                             return ad::sum(t, ad::mul(t, y, w));
                           },
                           rng),
           20);
  record("concat/sub",
         check_gradients({random_tensor({2, 2, 3, 3}, rng), random_tensor({2, 2, 3, 3}, rng)},
                         [](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
                           const auto y = ad::concat_channels(t, ad::sub(t, v[0], v[1]), v[1]);
                           return ad::sum(t, ad::mul(t, y, ad::scale(t, y, 0.7)));
                         },
                         rng),
         40);

  // total distillation loss through a small teacher-shaped network
  TeacherConfig cfg;
  cfg.geometry = {1, 8, 8};
  cfg.widths = {3, 4};
  cfg.head_width = 5;
  const auto spec = build_teacher_spec(cfg);
  std::vector<Tensor<double>> inputs;
  for (const auto& e : init_params<double>(spec, 3).entries) {
    inputs.push_back(e.weight.value);
    inputs.push_back(random_tensor(e.bias.value.shape(), rng, -0.1, 0.1));
  }
  const Shape s{4, 1, 8, 8};
  const auto r1 = random_tensor(s, rng, 0, 1), d1 = random_tensor(s, rng, 0, 1);
  const auto r2 = random_tensor(s, rng, 0, 1), d2 = random_tensor(s, rng, 0, 1);
  const std::vector<double> teacher_p{0.9, 0.2, 0.6, 0.35};
  const std::vector<double> labels{1, 0, 1, 0};
  record("total loss end to end",
         check_gradients(inputs,
                         [&](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
                           ad::BoundParams bound;
                           for (std::size_t i = 0; i < v.size(); i += 2) bound.layers.push_back({v[i], v[i + 1]});
                           const auto pv = ad::forward_pair(t, spec, bound, t.constant(r1), t.constant(d1),
                                                            t.constant(r2), t.constant(d2));
                           return ad::distill_objective<double>(t, pv.p, teacher_p, labels, 0.1).total;
                         },
                         rng),
         [&] {
           // every tensor contributes min(numel, 20) coordinates
           std::size_t n = 0;
           for (const auto& x : inputs) n += std::min<std::size_t>(x.numel(), 20);
           return n;
         }());
  const double secs = seconds_since(t0);
  c.expect(secs < 60.0, "runtime " + fmt("%.1fs", secs));
  c.note(std::to_string(coords) + " coordinates, max rel err " + fmt("%.2e", worst));
  c.note(fmt("%.1fs", secs));
  return c.outcome();
}

Outcome loss_values() {
  Checker c;
  auto near = [&](double got, double want, const std::string& what) {
    c.expect(std::abs(got - want) <= 1e-9, what + " = " + fmt("%.12f", got) + " want " + fmt("%.12f", want));
  };
  // -(0.8 ln 0.6 + 0.2 ln 0.4)
  near(instance_loss({{0.8}, {0.6}, {}}), -(0.8 * std::log(0.6) + 0.2 * std::log(0.4)), "instance(0.8,0.6)");
  c.expect(std::abs(instance_loss({{0.8}, {0.6}, {}}) - 0.59192) < 5e-6, "instance rounds to 0.59192");
  // teacher (1, 0), student (0.5, 0.5): Gram difference [[0.75, -0.25], [-0.25, -0.25]], squared sum 0.75, / B
  near(batch_loss({{1.0, 0.0}, {0.5, 0.5}, {}}), 0.375, "batch B=2");
  // (1 - 0.5)^2
  near(class_loss({{1.0, 0.0}, {0.5, 0.5}, {}}), 0.25, "class");
  near(batch_loss({{1.0}, {0.5}, {}}), 0.5625, "batch B=1");
  return c.outcome();
}

Outcome prox_orthant() {
  Checker c;
  Rng rng(33);
  for (int k = 0; k < 100; ++k) {
    const double w = std::round(rng.uniform(-2.0, 2.0) * 1000.0) / 1000.0;
    const double t = std::round(rng.uniform(0.0, 1.0) * 1000.0) / 1000.0;
    double best = 0.0, best_val = 1e300;
    for (int i = -3000; i <= 3000; ++i) {
      const double x = i * 1e-3;
      const double v = 0.5 * (x - w) * (x - w) + t * std::abs(x);
      if (v < best_val) {
        best_val = v;
        best = x;
      }
    }
    c.expect(std::abs(soft_threshold(w, t) - best) < 1e-9,
             "prox w=" + fmt("%.3f", w) + " t=" + fmt("%.3f", t));
  }

  // constructed orthant cases: flipped coordinates (and those starting at zero) end at zero
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 40;
    ParameterSet<double> p;
    std::vector<double> start(n);
    for (auto& v : start) v = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < n; i += 7) start[i] = 0.0;
    p.entries.push_back({"l", {Tensor<double>({n}, start), std::nullopt}, {Tensor<double>({1}, 0.2), std::nullopt}});
    const auto ref = capture_signs(p);
    auto& w = p.entries[0].weight.value;
    std::vector<bool> flipped(n);
    for (std::size_t i = 0; i < n; ++i) {
      const bool flip = rng.uniform(0.0, 1.0) < 0.3;
      const double mag = rng.uniform(0.1, 0.9);
      const double sign = start[i] > 0 ? 1.0 : start[i] < 0 ? -1.0 : (rng.uniform(0, 1) < 0.5 ? 1.0 : -1.0);
      w[i] = (flip ? -sign : sign) * mag;
      flipped[i] = flip || start[i] == 0.0;
    }
    // lambda * eta below the smallest magnitude: no L1-induced flips
    orthant_step(p, ref, 1.0, 0.01);
    for (std::size_t i = 0; i < n; ++i) {
      if (flipped[i])
        c.expect(w[i] == 0.0, "flipped coordinate kept");
      else
        c.expect(w[i] != 0.0 && (w[i] > 0) == (start[i] > 0), "unflipped coordinate zeroed");
    }
    c.expect(p.entries[0].bias.value[0] == 0.2, "bias touched");
  }
  return c.outcome();
}

Outcome density() {
  Checker c;
  Rng rng(44);
  TeacherConfig cfg;
  cfg.geometry = {1, 16, 16};
  for (int k = 0; k < 20; ++k) {
    cfg.seed = 1000 + k;
    auto m = build_teacher<float>(cfg);
    const double keep = rng.uniform(0.0, 1.0);
    for (auto& e : m.params.entries)
      for (auto& v : e.weight.value.values())
        if (rng.uniform(0.0, 1.0) > keep) v = 0.0f;
    // through a checkpoint, as the pipeline does
    const auto back = decode_checkpoint(encode_checkpoint({m.spec, m.params, {}}));
    const auto report = compute_density(back.params);
    std::size_t nz_sum = 0, total_sum = 0;
    for (const auto& l : report.layers) {
      const auto& w = back.params.find(l.layer)->weight.value;
      std::size_t nz = 0;
      for (float v : w.values()) nz += v != 0.0f;
      c.expect(l.nonzero == nz && l.total == w.numel(), l.layer + " counts");
      // density * total reproduces the count exactly
      c.expect(static_cast<std::size_t>(std::llround(l.density * static_cast<double>(l.total))) == l.nonzero,
               l.layer + " density*total");
      c.expect(l.density == static_cast<double>(nz) / static_cast<double>(w.numel()), l.layer + " ratio");
      nz_sum += nz;
      total_sum += w.numel();
    }
    c.expect(report.nonzero == nz_sum && report.total == total_sum, "global counts");
  }
  return c.outcome();
}

Outcome pruning_preserves_function() {
  Checker c;
  Rng rng(55);
  TeacherConfig cfg;
  cfg.geometry = {1, 16, 16};
  cfg.widths = {8, 12, 16};
  cfg.head_width = 10;
  auto m = build_teacher<float>(cfg);
  for (auto& e : m.params.entries)
    for (auto& v : e.bias.value.values()) v = static_cast<float>(rng.uniform(-0.1, 0.1));

  // zero whole channels: output c of a producer and the matching input of its consumer
  const std::vector<std::pair<std::string, std::string>> links{
      {"conv1", "conv2"}, {"conv2", "conv3"}, {"conv3", "fc1"}, {"fc1", "fc2"}};
  std::map<std::string, std::size_t> live_in;
  for (const auto& [prod, cons] : links) {
    auto* p = m.params.find(prod);
    auto* q = m.params.find(cons);
    const std::size_t cout = p->weight.value.shape()[0];
    const std::size_t per_out = p->weight.value.numel() / cout;
    const std::size_t inner = q->weight.value.numel() / (q->weight.value.shape()[0] * cout);
    std::size_t dead = 0;
    for (std::size_t ch = 1; ch < cout; ch += 3) {
      for (std::size_t i = 0; i < per_out; ++i) p->weight.value[ch * per_out + i] = 0.0f;
      p->bias.value[ch] = 0.0f;
      for (std::size_t o = 0; o < q->weight.value.shape()[0]; ++o)
        for (std::size_t j = 0; j < inner; ++j) q->weight.value[(o * cout + ch) * inner + j] = 0.0f;
      ++dead;
    }
    live_in[cons] = cout - dead;
  }
  // ask each consumer to keep exactly its live inputs
  auto report = full_density(m.spec);
  for (auto& l : report.layers) {
    const auto it = live_in.find(l.layer);
    if (it == live_in.end()) continue;
    const std::size_t cin = m.spec.find(l.layer)->in_channels;
    l.nonzero = l.total / cin * it->second;
  }
  const auto plan = build_pruning_plan(m.spec, m.params, report);
  const auto pruned = prune_network(m.spec, m.params, plan);
  c.expect(count_params(pruned.params) < count_params(m.params), "nothing removed");
  c.expect(validate_structure(pruned.spec, pruned.params).empty(), "pruned structure invalid");

  const auto identity = prune_network(m.spec, m.params, build_pruning_plan(m.spec, m.params, full_density(m.spec)));
  c.expect(identity.spec == m.spec && identity.params == m.params, "identity plan changed the network");

  const auto loc = grid_patches(2, 32, 32, m.spec.input);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto r = random_tensor_f({2, 1, 32, 32}, rng, 0, 1), d = random_tensor_f({2, 1, 32, 32}, rng, 0, 1);
    const double full = sequence_quality(m.spec, m.params, r, d, loc);
    const double small = sequence_quality(pruned.spec, pruned.params, r, d, loc);
    worst = std::max(worst, std::abs(full - small));
    c.expect(std::abs(full - small) <= 1e-6, "patch " + std::to_string(k) + " differs by " + fmt("%.3g", full - small));
    c.expect(sequence_quality(identity.spec, identity.params, r, d, loc) == full, "identity output differs");
  }
  c.note("params " + std::to_string(count_params(m.params)) + " -> " + std::to_string(count_params(pruned.params)));
  c.note("max |diff| " + fmt("%.2e", worst));
  return c.outcome();
}

// ---------------------------------------------------------------------------

struct PipelineRun {
  bool ok = false;
  std::string error;
  double seconds = 0.0;
  PipelineConfig config;
  std::string out_dir;
};

PipelineRun run_default_pipeline(const std::string& work) {
  PipelineRun run;
  run.config.out_dir = (fs::path(work) / "default").string();
  run.out_dir = run.config.out_dir;
  fs::remove_all(run.out_dir);
  std::ofstream log((fs::path(work) / "default_pipeline.log").string());
  const auto t0 = std::chrono::steady_clock::now();
  try {
    run_pipeline(run.config, log);
    run.ok = true;
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.seconds = seconds_since(t0);
  return run;
}

// Value of a "# key a/b ratio r" line inside the section comparing `model`.
bool emitted_counts(const std::string& csv, const std::string& model, const std::string& key, std::size_t& a,
                    std::size_t& b) {
  std::istringstream in(csv);
  std::string line;
  bool section = false;
  while (std::getline(in, line)) {
    if (line.rfind("dataset,", 0) == 0) section = line.find("srocc_" + model + ",") != std::string::npos;
    if (section && line.rfind("# " + key + " ", 0) == 0) {
      unsigned long long x = 0, y = 0;
      if (std::sscanf(line.c_str() + key.size() + 3, "%llu/%llu", &x, &y) == 2) {
        a = x;
        b = y;
        return true;
      }
    }
  }
  return false;
}

Outcome compression(const PipelineRun& run) {
  Checker c;
  c.expect(run.ok, "pipeline failed: " + run.error);
  if (!run.ok) return c.outcome();
  const PipelinePaths paths(run.out_dir);
  const auto teacher = load_checkpoint(paths.teacher);
  const auto student = load_checkpoint(paths.distilled);
  const std::size_t pt = count_params(teacher.params), ps = count_params(student.params);
  const auto ft = count_flops(teacher.spec), fs_ = count_flops(student.spec);
  const double ratio = static_cast<double>(ps) / static_cast<double>(pt);
  c.expect(ratio <= 0.35, "student keeps " + format_percent(ratio) + " of parameters");

  const auto csv = io::read_file(paths.eval_dir + "/comparison.csv");
  std::size_t a = 0, b = 0;
  c.expect(emitted_counts(csv, "distilled", "params", a, b) && a == ps && b == pt,
           "emitted params line disagrees with checkpoints");
  c.expect(emitted_counts(csv, "distilled", "flops", a, b) && a == fs_ && b == ft,
           "emitted FLOPs line disagrees with checkpoints");
  const auto table = io::read_file(paths.eval_dir + "/table.txt");
  c.expect(table.find("params retained: " + format_percent(ratio)) != std::string::npos, "report lacks params ratio");
  c.expect(table.find("FLOPs retained:") != std::string::npos, "report lacks FLOPs ratio");
  c.expect(run.seconds < 1800.0, "pipeline took " + fmt("%.0fs", run.seconds));
  c.note("params " + std::to_string(ps) + "/" + std::to_string(pt) + " (" + format_percent(ratio) + ")");
  c.note("FLOPs " + format_percent(static_cast<double>(fs_) / static_cast<double>(ft)));
  c.note("pipeline " + fmt("%.0fs", run.seconds));
  return c.outcome();
}

Outcome distillation_benefit(const PipelineRun& run) {
  Checker c;
  c.expect(run.ok, "pipeline failed: " + run.error);
  if (!run.ok) return c.outcome();
  const PipelinePaths paths(run.out_dir);
  const auto train = data::read_dataset(paths.train);
  const auto val = data::read_dataset(paths.val);
  const auto test = data::read_dataset(paths.test);
  const auto teacher_ck = load_checkpoint(paths.teacher);
  const auto student_ck = load_checkpoint(paths.student);
  const Model<float> teacher{teacher_ck.spec, teacher_ck.params};

  // (a) paired repetitions: same student shape, same optimizer seed and budget
  int wins = 0;
  std::string accs;
  for (int rep = 0; rep < 3; ++rep) {
    const std::uint64_t seed = mix_seed(run.config.seed, 100 + rep);
    auto dcfg = run.config.distill_config();
    dcfg.optimizer.seed = seed;
    Model<float> distilled{student_ck.spec, student_ck.params};
    const auto dlog = distill_train(teacher, distilled, train, val, dcfg);
    Model<float> scratch{student_ck.spec, init_params<float>(student_ck.spec, seed)};
    auto scfg = dcfg.optimizer;
    scfg.lambda = 0.0;
    const auto slog = train_ranking(scratch, train, val, scfg);
    c.expect(!dlog.diverged && !slog.diverged, "repetition " + std::to_string(rep) + " diverged");
    const double ad = pair_accuracy(distilled.spec, distilled.params, test);
    const double as = pair_accuracy(scratch.spec, scratch.params, test);
    wins += ad >= as;
    accs += (accs.empty() ? "" : " ") + fmt("%.4f", ad) + "/" + fmt("%.4f", as);
  }
  c.expect(wins >= 2, "distilled >= scratch in only " + std::to_string(wins) + " of 3");

  // (b) SROCC retention recomputed from the emitted checkpoints and eval sets
  std::vector<data::EvalSet> sets;
  for (auto kind : data::kAllDistortions) sets.push_back(data::read_eval_set(paths.eval_set(kind)));
  const auto distilled_ck = load_checkpoint(paths.distilled);
  const auto rt = evaluate_model("teacher", teacher_ck.spec, teacher_ck.params, sets);
  const auto rd = evaluate_model("distilled", distilled_ck.spec, distilled_ck.params, sets);
  const double retention = rd.overall_srocc() / rt.overall_srocc();
  c.expect(retention >= 0.90, "SROCC retention " + fmt("%.4f", retention));
  c.note("test acc distilled/scratch " + accs);
  c.note("SROCC " + fmt("%.4f", rd.overall_srocc()) + "/" + fmt("%.4f", rt.overall_srocc()) + " retention " +
         format_percent(retention, 0));
  return c.outcome();
}

// ---------------------------------------------------------------------------

Outcome statistics() {
  Checker c;
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7};
  const std::vector<double> up{0.1, 0.5, 0.6, 2.0, 9.0, 9.5, 30.0};
  const std::vector<double> down(up.rbegin(), up.rend());
  c.expect(stats::srocc(x, up) == 1.0, "monotone SROCC");
  c.expect(stats::srocc(x, down) == -1.0, "antitone SROCC");

  Rng rng(88);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 3 + k % 12;
    std::vector<double> v(n);
    for (auto& e : v) e = std::floor(rng.uniform(0.0, 5.0));
    std::vector<double> want(n);
    for (std::size_t i = 0; i < n; ++i) {
      double less = 0, equal = 0;
      for (double e : v) {
        less += e < v[i];
        equal += e == v[i];
      }
      want[i] = less + (equal + 1.0) / 2.0;
    }
    c.expect(stats::average_ranks(v) == want, "rank vector " + std::to_string(k));
  }

  // published two-sided 95% critical values
  const std::vector<std::pair<std::size_t, double>> table{{20, 2.526}, {10, 4.026}};
  for (const auto& [n, crit] : table) {
    std::vector<double> base(n);
    for (std::size_t i = 0; i < n; ++i) base[i] = (i % 2 ? 1.0 : -1.0) * (1.0 + 0.05 * double(i));
    const std::string df = "(" + std::to_string(n - 1) + "," + std::to_string(n - 1) + ")";
    c.expect(std::abs(stats::f_quantile(0.975, double(n - 1), double(n - 1)) - crit) < 1e-3, "critical " + df);
    for (double ratio : {crit * 0.98, crit * 1.02}) {
      auto wide = base;
      for (auto& e : wide) e *= std::sqrt(ratio);
      const int want = ratio > crit ? 1 : 0;
      c.expect(stats::f_test(base, wide).verdict == want, "verdict " + df + " at ratio " + fmt("%.3f", ratio));
      c.expect(stats::f_test(wide, base).verdict == -want, "reverse verdict " + df);
    }
  }
  return c.outcome();
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    auto rel = fs::relative(e.path(), root).string();
    auto text = io::read_file(e.path().string());
    // config echoes name their own output directory
    if (rel.ends_with(".config.txt")) {
      const auto at = text.find("out_dir=");
      if (at != std::string::npos) text.erase(at, text.find('\n', at) - at);
    }
    files[rel] = std::move(text);
  }
  return files;
}

Outcome determinism(const std::string& work) {
  Checker c;
  PipelineConfig cfg;
  cfg.train_pairs = 256;
  cfg.val_pairs = 64;
  cfg.test_pairs = 64;
  cfg.train_sources = 16;
  cfg.val_sources = 4;
  cfg.eval_sources = 4;
  cfg.eval_frames = 2;
  cfg.widths = {8, 16, 32};
  cfg.head_width = 16;
  cfg.epochs = 3;
  cfg.sparse_epochs = 4;
  cfg.distill_epochs = 3;
  std::vector<std::map<std::string, std::string>> trees;
  for (const char* name : {"det_a", "det_b"}) {
    cfg.out_dir = (fs::path(work) / name).string();
    fs::remove_all(cfg.out_dir);
    std::ostringstream log;
    run_pipeline(cfg, log);
    trees.push_back(read_tree(cfg.out_dir));
  }
  c.expect(trees[0].size() == trees[1].size() && trees[0].size() >= 15, "artifact sets differ");
  for (const auto& [name, bytes] : trees[0]) {
    const auto it = trees[1].find(name);
    c.expect(it != trees[1].end() && it->second == bytes, name + " not byte-identical");
  }
  c.note(std::to_string(trees[0].size()) + " artifacts identical");

  // containers
  const PipelinePaths paths(cfg.out_dir);
  for (const auto& path : {paths.train, paths.test}) {
    const auto bytes = io::read_file(path);
    c.expect(data::encode_pair_dataset(data::decode_pair_dataset(bytes)) == bytes, path + " round trip");
    for (std::size_t cut : {std::size_t{0}, std::size_t{7}, bytes.size() / 3, bytes.size() - 1}) {
      bool threw = false;
      try {
        data::decode_pair_dataset(std::string_view(bytes).substr(0, cut));
      } catch (const FormatError&) {
        threw = true;
      }
      c.expect(threw, path + " truncated at " + std::to_string(cut) + " read silently");
    }
  }
  for (const auto& path : {paths.teacher, paths.student, paths.distilled}) {
    const auto bytes = io::read_file(path);
    c.expect(encode_checkpoint(decode_checkpoint(bytes)) == bytes, path + " round trip");
    for (std::size_t cut : {std::size_t{0}, std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
      bool threw = false;
      try {
        decode_checkpoint(std::string_view(bytes).substr(0, cut));
      } catch (const FormatError&) {
        threw = true;
      }
      c.expect(threw, path + " truncated at " + std::to_string(cut) + " read silently");
    }
  }
  const auto ev = io::read_file(paths.eval_set(data::DistortionKind::GaussianBlur));
  c.expect(data::encode_eval_set(data::decode_eval_set(ev)) == ev, "eval set round trip");
  return c.outcome();
}

}  // namespace

int main(int argc, char** argv) {
  std::string work = (fs::temp_directory_path() / "rankmini_acceptance").string();
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::istringstream in(argv[++i]);
      std::string tok;
      while (std::getline(in, tok, ',')) only.insert(std::stoi(tok));
    } else {
      std::cerr << "usage: acceptance [--work DIR] [--only N[,N...]]\n";
      return 2;
    }
  }
  fs::create_directories(work);
  auto wanted = [&](int n) { return only.empty() || only.count(n); };

  PipelineRun run;
  if (wanted(6) || wanted(7)) {
    std::cerr << "running the default pipeline in " << work << " ...\n";
    run = run_default_pipeline(work);
  }

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, gradients},
      {2, loss_values},
      {3, prox_orthant},
      {4, density},
      {5, pruning_preserves_function},
      {6, [&] { return compression(run); }},
      {7, [&] { return distillation_benefit(run); }},
      {8, statistics},
      {9, [&] { return determinism(work); }},
  };
  int failed = 0;
  for (const auto& [n, check] : criteria) {
    if (!wanted(n)) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
