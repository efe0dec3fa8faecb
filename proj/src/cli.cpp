/* Copyright 2026 The ValdNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "valdnet/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <optional>

#include "CLI11.hpp"
#include "valdnet/config.hpp"
#include "valdnet/data.hpp"
#include "valdnet/errors.hpp"
#include "valdnet/gradsuite.hpp"
#include "valdnet/image.hpp"
#include "valdnet/io.hpp"
#include "valdnet/kernels.hpp"
#include "valdnet/train.hpp"
#include "valdnet/weights.hpp"

namespace valdnet {

namespace fs = std::filesystem;

namespace {

// Single-owner guard on an output directory.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) : path_(dir / ".valdnet.lock") {
    fs::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw DataError("output directory " + dir.string() +
                      " is locked by another run (" + path_.string() + ")");
    }
  }
  ~DirectoryLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

struct Options {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> sets;
  std::optional<int> offset;
  std::optional<std::string> cell;
  std::vector<std::string> positional;
};

RunConfig resolve(const Options& o) {
  std::vector<std::string> overrides = o.sets;
  if (o.seed) overrides.push_back("train.seed=" + std::to_string(*o.seed));
  if (o.offset) overrides.push_back("model.flow_offset=" + std::to_string(*o.offset));
  if (o.cell) overrides.push_back("model.cell=\"" + *o.cell + "\"");
  std::optional<fs::path> path;
  if (o.config) path = *o.config;
  return load_run_config(path, overrides);
}

void need_positional(const Options& o, std::size_t n, const char* usage) {
  if (o.positional.size() != n) throw CLI::ValidationError(usage);
}

void need(bool present, const char* what) {
  if (!present) throw CLI::RequiredError(what);
}

int cmd_gen_synth(const Options& o, std::ostream& out) {
  need_positional(o, 0, "gen-synth takes no positional arguments");
  need(o.seed.has_value(), "--seed");
  need(o.out.has_value(), "--out");
  const RunConfig cfg = resolve(o);
  const fs::path dir(*o.out);
  DirectoryLock lock(dir);
  Manifest m = generate_synthetic(*o.seed, cfg.synth, dir);
  m = split_dataset(std::move(m), *o.seed);
  write_manifest(m, dir / "manifest.json");
  out << "wrote " << m.samples.size() << " samples ("
      << m.indices(Split::kTrain).size() << " train, "
      << m.indices(Split::kEval).size() << " eval) to "
      << (dir / "manifest.json").string() << "\n";
  return kExitOk;
}

int cmd_flow(const Options& o, std::ostream& out) {
  need_positional(o, 1, "usage: flow <manifest> --out <dir> [--offset k]");
  need(o.out.has_value(), "--out");
  const RunConfig cfg = resolve(o);
  const Manifest in = read_manifest(o.positional[0]);
  const fs::path dir = fs::absolute(*o.out);
  DirectoryLock lock(dir);
  Manifest result = in;
  result.root = dir;
  result.flow_offset = static_cast<int>(cfg.model.flow_offset);
  std::vector<std::string> errors(in.samples.size());
  const long count = static_cast<long>(in.samples.size());
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (long si = 0; si < count; ++si) {
    const VideoSample& s = in.samples[static_cast<std::size_t>(si)];
    VideoSample& r = result.samples[static_cast<std::size_t>(si)];
    try {
      const auto picks = uniform_sample_indices(s.frames.size(), cfg.model.frames);
      r.frames.clear();
      for (const std::string& f : s.frames) {
        r.frames.push_back(fs::relative(fs::absolute(in.resolve(f)), dir).string());
      }
      r.flows.clear();
      fs::create_directories(dir / s.id);
      for (std::size_t i = 0; i < picks.size(); ++i) {
        const auto [a, b] =
            flow_pair_indices(picks[i], cfg.model.flow_offset, s.frames.size());
        const Tensor ga = to_grayscale(
            resize(read_ppm_file(in.resolve(s.frames[a])), cfg.model.input_size));
        const Tensor gb = to_grayscale(
            resize(read_ppm_file(in.resolve(s.frames[b])), cfg.model.input_size));
        const std::string rel = s.id + "/flow_k" +
                                std::to_string(cfg.model.flow_offset) + "_" +
                                std::to_string(i) + ".flo";
        save_flo(estimate_flow(ga, gb, cfg.flow), dir / rel);
        r.flows.push_back(rel);
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(si)] = s.id + ": " + e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw DataError(e);
  }
  write_manifest(result, dir / "manifest.json");
  out << "wrote flows at offset " << cfg.model.flow_offset << " for "
      << result.samples.size() << " samples to " << (dir / "manifest.json").string()
      << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  need_positional(o, 1, "usage: train <manifest> --seed S --out <dir>");
  need(o.seed.has_value(), "--seed");
  need(o.out.has_value(), "--out");
  const RunConfig cfg = resolve(o);
  const Manifest m = read_manifest(o.positional[0]);
  const fs::path dir(*o.out);
  DirectoryLock lock(dir);
  const TrainResult r = train(m, cfg.model, cfg.train, cfg.flow, [&](const MetricsRow& row) {
    out << "epoch " << row.epoch << " train_loss=" << row.train_loss
        << " train_acc=" << row.train_acc << " eval_loss=" << row.eval_loss
        << " eval_acc=" << row.eval_acc << "\n";
    return true;
  });
  save_weights(r.weights, dir / "weights.vldw");
  write_file(dir / "metrics.csv", r.metrics.to_csv());
  write_file(dir / "config.json", run_config_to_json(cfg));
  out << "wrote " << (dir / "weights.vldw").string() << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  need_positional(o, 2, "usage: eval <manifest> <weights.vldw>");
  const RunConfig cfg = resolve(o);
  const Manifest m = read_manifest(o.positional[0]);
  const WeightStore w = load_weights(o.positional[1]);
  const auto samples = prepare_split(m, Split::kEval, cfg.model, cfg.flow);
  const EvalResult r = evaluate(samples, w, cfg.model);
  char line[128];
  std::snprintf(line, sizeof line, "eval_loss=%.6f eval_acc=%.6f samples=%zu\n", r.loss,
                r.accuracy, samples.size());
  out << line;
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  need_positional(o, 3, "usage: predict <manifest> <sample-id> <weights.vldw>");
  const RunConfig cfg = resolve(o);
  const Manifest m = read_manifest(o.positional[0]);
  const WeightStore w = load_weights(o.positional[2]);
  for (const VideoSample& s : m.samples) {
    if (s.id != o.positional[1]) continue;
    const double p = predict(w, cfg.model, prepare_sample(m, s, cfg.model, cfg.flow));
    char line[96];
    std::snprintf(line, sizeof line, "probability=%.6f label=%d\n", p, p >= 0.5 ? 1 : 0);
    out << line;
    return kExitOk;
  }
  throw DataError("no sample with id " + o.positional[1]);
}

int cmd_sample_indices(const Options& o, std::ostream& out) {
  need_positional(o, 2, "usage: sample-indices <N> <K>");
  resolve(o);
  std::size_t n = 0, k = 0;
  try {
    n = std::stoul(o.positional[0]);
    k = std::stoul(o.positional[1]);
  } catch (const std::exception&) {
    throw CLI::ValidationError("N and K must be non-negative integers");
  }
  const auto idx = uniform_sample_indices(n, k);
  for (std::size_t i = 0; i < idx.size(); ++i) out << (i ? "," : "") << idx[i];
  out << "\n";
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  need_positional(o, 0, "gradcheck takes no positional arguments");
  resolve(o);
  bool ok = true;
  for (const GradCheckCase& c : run_gradient_suite()) {
    char line[160];
    std::snprintf(line, sizeof line, "%s %-40s err=%.3e tol=%.0e\n",
                  c.passed() ? "PASS" : "FAIL", c.name.c_str(), c.error, c.threshold);
    out << line;
    ok = ok && c.passed();
  }
  return ok ? kExitOk : kExitNumeric;
}

void apply_thread_cap() {
  if (const char* env = std::getenv("VALDNET_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) kernels::set_max_threads(n);
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"valdnet: two-stream violence detection on RGB frames and optical flow"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Options o;
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const Options&, std::ostream&);
  };
  const Command commands[] = {
      {"gen-synth", "generate and split the synthetic motion dataset", cmd_gen_synth},
      {"flow", "precompute .flo files for a manifest at --offset", cmd_flow},
      {"train", "train a model; writes weights.vldw, metrics.csv, config.json",
       cmd_train},
      {"eval", "evaluate <manifest> <weights> on the eval split", cmd_eval},
      {"predict", "print probability and label for <manifest> <sample-id> <weights>",
       cmd_predict},
      {"sample-indices", "print the uniform sampler output for <N> <K>",
       cmd_sample_indices},
      {"gradcheck", "run the finite-difference gradient suite", cmd_gradcheck},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", o.config, "JSON run configuration");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--set", o.sets, "override key=value (repeatable)")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sub->add_option("--offset", o.offset, "flow frame offset k")->check(CLI::Range(1, 3));
    sub->add_option("--cell", o.cell, "recurrent cell")
        ->check(CLI::IsMember({"lstm", "gru"}));
    sub->add_option("args", o.positional, "positional arguments");
    subs.emplace_back(sub, &c);
  }

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  apply_thread_cap();
  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      return cmd->fn(o, out);
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n\n" << sub->help();
      return kExitUsage;
    } catch (const ContractError& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const NumericError& e) {
      err << "numeric error: " << e.what() << "\n";
      return kExitNumeric;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitData;
    }
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace valdnet
