#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "fusionette/binary_io.hpp"
#include "fusionette/embedding_store.hpp"
#include "fusionette/error.hpp"
#include "fusionette/label_map.hpp"
#include "fusionette/model.hpp"
#include "fusionette/parallel.hpp"
#include "fusionette/synthetic.hpp"
#include "fusionette/training.hpp"

#ifndef FUSIONETTE_VERSION
#define FUSIONETTE_VERSION "0.0.0"
#endif

namespace fusionette::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const char* version() { return FUSIONETTE_VERSION; }

namespace {

// ---- shared helpers -------------------------------------------------------

struct ArchFlags {
  std::size_t hidden = 256;
  std::size_t n_tok = 8;
  std::size_t n_tok_fused = 4;
  std::string activation = "relu";
  double lambda_init = 0.8;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--hidden", hidden, "Width h of each guided projection")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--n-tok", n_tok, "Tokens per modality for self/cross attention")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--n-tok-fused", n_tok_fused, "Tokens of the fused vector for DiffAttn")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--activation", activation, "Activation of the guided projections")
        ->capture_default_str()
        ->check(CLI::IsMember({"relu", "tanh"}));
    cmd.add_option("--lambda-init", lambda_init, "Initial DiffAttn lambda")->capture_default_str();
  }

  VariantSpec spec(Variant v, const DatasetSplit& data) const {
    VariantSpec s;
    s.variant = v;
    s.dim_image = data.dim_image;
    s.dim_text = data.dim_text;
    s.num_classes = data.num_classes;
    s.hidden = hidden;
    s.n_tok = n_tok;
    s.n_tok_fused = n_tok_fused;
    s.activation = parse_activation(activation);
    s.lambda_init = lambda_init;
    return s;
  }
};

struct TrainFlags {
  TrainConfig cfg;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--seed", cfg.seed, "Seed of the first run (run i uses seed + i)")
        ->capture_default_str();
    cmd.add_option("--runs", cfg.runs, "Independent runs per variant")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--lr", cfg.lr, "SGD learning rate")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd.add_option("--batch-size", cfg.batch_size, "Mini-batch size")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--max-epochs", cfg.max_epochs, "Epoch limit")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--patience", cfg.patience, "Early-stopping patience in epochs")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }
};

struct LoadedData {
  fs::path dir;
  DatasetFiles files;
  DatasetSplit train, validation, test;

  const DatasetSplit& operator[](SplitName s) const {
    switch (s) {
      case SplitName::Train: return train;
      case SplitName::Validation: return validation;
      case SplitName::Test: return test;
    }
    return train;
  }
};

LoadedData load_data(const fs::path& dir) {
  LoadedData d;
  d.dir = dir;
  d.files = discover_splits(dir);
  d.train = read_split(d.files.train);
  d.validation = read_split(d.files.validation);
  d.test = read_split(d.files.test);
  for (const auto* s : {&d.validation, &d.test}) {
    if (s->dim_image != d.train.dim_image || s->dim_text != d.train.dim_text ||
        s->num_classes != d.train.num_classes) {
      throw DimensionError("dataset splits in " + dir.string() +
                           " disagree on embedding widths or class count");
    }
  }
  return d;
}

std::string hex32(std::uint32_t v) {
  char buf[11];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

json dataset_json(const LoadedData& d) {
  json files = json::object();
  for (SplitName s : {SplitName::Train, SplitName::Validation, SplitName::Test}) {
    files[std::string(split_name_str(s))] = {{"path", d.files[s].string()},
                                             {"crc32", hex32(stored_crc(d.files[s]))},
                                             {"records", d[s].size()}};
  }
  return {{"dir", d.dir.string()},
          {"task_id", d.train.task_id},
          {"class_names", d.train.class_names},
          {"dim_image", d.train.dim_image},
          {"dim_text", d.train.dim_text},
          {"files", files}};
}

void write_text(const fs::path& path, const std::string& text) {
  io::write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                        text.size()));
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

json mean_json(const MultiRunReport& r) {
  return {{"accuracy", r.accuracy},
          {"macro_f1", r.macro_f1},
          {"weighted_f1", r.weighted_f1},
          {"per_class_f1", r.per_class_f1}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t run_workers(std::size_t jobs) {
  return std::min(jobs, thread_cap_from_env(hardware_threads()));
}

std::string model_file_name(Variant v, std::size_t run) {
  return std::string(variant_name(v)) + "_run" + std::to_string(run) + ".fusn";
}

// ---- gen-synth ------------------------------------------------------------

struct GenSynthArgs {
  std::string kind = "xor";
  std::size_t n = 4000;
  std::optional<std::size_t> n_val, n_test;
  std::size_t dim_image = 512;
  std::size_t dim_text = 512;
  std::uint64_t seed = 0;
  double scale = 1.0;
  double signal_std = SyntheticOptions{}.signal_std;
  std::string out;
};

int gen_synth(const GenSynthArgs& a, std::ostream& out) {
  SyntheticOptions o;
  o.kind = parse_synthetic_kind(a.kind);
  o.sizes.train = a.n;
  o.sizes.validation = a.n_val.value_or(std::max<std::size_t>(1, a.n / 8));
  o.sizes.test = a.n_test.value_or(std::max<std::size_t>(1, a.n / 8));
  o.dim_image = a.dim_image;
  o.dim_text = a.dim_text;
  o.seed = a.seed;
  o.scale = a.scale;
  o.signal_std = a.signal_std;
  const auto ds = gen_synthetic(o);

  const fs::path dir = a.out;
  ensure_dir(dir);
  json files = json::object();
  for (SplitName s : {SplitName::Train, SplitName::Validation, SplitName::Test}) {
    const std::string name(split_name_str(s));
    const fs::path path = dir / (name + ".mmeb");
    write_split(ds[s], path);
    files[name] = {{"path", path.filename().string()},
                   {"records", ds[s].size()},
                   {"crc32", hex32(stored_crc(path))}};
  }
  const json sidecar = {{"tool", "fusionette"},
                        {"version", version()},
                        {"kind", a.kind},
                        {"sizes", {{"train", o.sizes.train},
                                   {"validation", o.sizes.validation},
                                   {"test", o.sizes.test}}},
                        {"dim_image", o.dim_image},
                        {"dim_text", o.dim_text},
                        {"seed", o.seed},
                        {"scale", o.scale},
                        {"signal_std", o.signal_std},
                        {"files", files}};
  write_json(dir / "synthetic.json", sidecar);
  out << "wrote " << a.kind << " dataset (" << o.sizes.train << "/" << o.sizes.validation << "/"
      << o.sizes.test << ") to " << dir.string() << "\n";
  return kExitOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string variant = "guided_ca_diff_attn";
  std::string out;
  TrainFlags train;
  ArchFlags arch;
};

int train_cmd(const TrainArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Variant variant = parse_variant(a.variant);
  const auto data = load_data(a.data);
  const VariantSpec spec = a.arch.spec(variant, data.train);
  spec.validate();
  const TrainConfig& cfg = a.train.cfg;
  cfg.validate();
  const fs::path dir = a.out;
  ensure_dir(dir);

  const auto report = multi_run(spec, cfg, data.train, data.validation, data.test,
                                run_workers(cfg.runs));

  json runs = json::array();
  std::ostringstream csv;
  csv << "variant,task,run,accuracy,macro_f1,weighted_f1\n";
  const std::string task = std::to_string(data.train.task_id);
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const auto& r = report.runs[i];
    const std::string file = model_file_name(variant, i);
    save_model(r.model, dir / file);
    runs.push_back({{"run", i},
                    {"seed", r.seed},
                    {"model", file},
                    {"model_crc32", hex32(stored_crc(dir / file))},
                    {"test", to_json(r.test)},
                    {"history", to_json(r.history)}});
    csv << a.variant << ',' << task << ',' << i << ',' << pct(r.test.accuracy) << ','
        << pct(r.test.macro_f1) << ',' << pct(r.test.weighted_f1) << '\n';
  }
  csv << a.variant << ',' << task << ",mean," << pct(report.accuracy) << ','
      << pct(report.macro_f1) << ',' << pct(report.weighted_f1) << '\n';

  const json metrics = {{"variant", a.variant},
                        {"task_id", data.train.task_id},
                        {"runs", runs},
                        {"mean", mean_json(report)}};
  write_json(dir / "metrics.json", metrics);
  write_text(dir / "metrics.csv", csv.str());

  const json manifest = {{"tool", "fusionette"},
                         {"version", version()},
                         {"command", "train"},
                         {"spec", to_json(spec)},
                         {"train_config", to_json(cfg)},
                         {"dataset", dataset_json(data)},
                         {"runs", runs},
                         {"mean", mean_json(report)},
                         {"workers", run_workers(cfg.runs)},
                         {"wall_clock_seconds", seconds_since(t0)}};
  write_json(dir / "manifest.json", manifest);

  out << a.variant << ": accuracy " << pct(report.accuracy) << ", macro-F1 "
      << pct(report.macro_f1) << ", weighted-F1 " << pct(report.weighted_f1) << " (mean of "
      << report.runs.size() << " runs)\n";
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string data;
  std::string split = "test";
};

int eval_cmd(const EvalArgs& a, std::ostream& out) {
  const Model model = load_model(a.model);
  const auto files = discover_splits(a.data);
  const DatasetSplit split = read_split(files[parse_split_name(a.split)]);
  if (split.dim_image != model.spec.dim_image || split.dim_text != model.spec.dim_text ||
      split.num_classes != model.spec.num_classes) {
    throw DimensionError("model expects widths (" + std::to_string(model.spec.dim_image) + ", " +
                         std::to_string(model.spec.dim_text) + ") and " +
                         std::to_string(model.spec.num_classes) + " classes; the " + a.split +
                         " split has (" + std::to_string(split.dim_image) + ", " +
                         std::to_string(split.dim_text) + ") and " +
                         std::to_string(split.num_classes));
  }
  out << to_json(evaluate(model, split)).dump(2) << "\n";
  return kExitOk;
}

// ---- ablate ---------------------------------------------------------------

struct AblateArgs {
  std::string data;
  std::string variants = "all";
  std::string out;
  TrainFlags train;
  ArchFlags arch;
};

std::vector<Variant> parse_variant_list(const std::string& list) {
  if (list == "all") return {kAllVariants.begin(), kAllVariants.end()};
  std::vector<Variant> picked;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Variant v = parse_variant(item);
    if (std::find(picked.begin(), picked.end(), v) == picked.end()) picked.push_back(v);
  }
  if (picked.empty()) throw InvalidArgument("--variants selects no variant");
  // Fixed registry order regardless of how the list was written.
  std::sort(picked.begin(), picked.end(), [](Variant x, Variant y) {
    return std::find(kAllVariants.begin(), kAllVariants.end(), x) <
           std::find(kAllVariants.begin(), kAllVariants.end(), y);
  });
  return picked;
}

int ablate_cmd(const AblateArgs& a, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto variants = parse_variant_list(a.variants);
  const auto data = load_data(a.data);
  const TrainConfig& cfg = a.train.cfg;
  cfg.validate();
  const fs::path dir = a.out;
  ensure_dir(dir);

  std::vector<std::optional<MultiRunReport>> reports(variants.size());
  const std::size_t workers = std::min(variants.size(), thread_cap_from_env(variants.size()));
  const auto errors = run_jobs(variants.size(), workers, [&](std::size_t i) {
    const VariantSpec spec = a.arch.spec(variants[i], data.train);
    reports[i] = multi_run(spec, cfg, data.train, data.validation, data.test, 1);
  });

  std::ostringstream table, per_run;
  table << "variant,accuracy,macro_f1,weighted_f1\n";
  per_run << "variant,run,seed,accuracy,macro_f1,weighted_f1\n";
  json rows = json::array();
  json failures = json::array();
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const std::string name(variant_name(variants[i]));
    if (errors[i]) {
      std::string what = "unknown error";
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        what = e.what();
      }
      err << "ablate: " << name << " failed: " << what << "\n";
      failures.push_back({{"variant", name}, {"error", what}});
      continue;
    }
    const auto& r = *reports[i];
    table << name << ',' << pct(r.accuracy) << ',' << pct(r.macro_f1) << ','
          << pct(r.weighted_f1) << '\n';
    json runs = json::array();
    for (std::size_t k = 0; k < r.runs.size(); ++k) {
      const auto& run = r.runs[k];
      per_run << name << ',' << k << ',' << run.seed << ',' << pct(run.test.accuracy) << ','
              << pct(run.test.macro_f1) << ',' << pct(run.test.weighted_f1) << '\n';
      runs.push_back({{"run", k},
                      {"seed", run.seed},
                      {"test", to_json(run.test)},
                      {"history", to_json(run.history)}});
    }
    rows.push_back({{"variant", name},
                    {"spec", to_json(a.arch.spec(variants[i], data.train))},
                    {"mean", mean_json(r)},
                    {"runs", runs}});
  }
  write_text(dir / "ablation.csv", table.str());
  write_text(dir / "ablation_runs.csv", per_run.str());
  write_json(dir / "manifest.json", {{"tool", "fusionette"},
                                     {"version", version()},
                                     {"command", "ablate"},
                                     {"train_config", to_json(cfg)},
                                     {"dataset", dataset_json(data)},
                                     {"variants", rows},
                                     {"failures", failures},
                                     {"workers", workers},
                                     {"wall_clock_seconds", seconds_since(t0)}});
  out << table.str();
  return failures.empty() ? kExitOk : kExitPartial;
}

// ---- validate-counts ------------------------------------------------------

struct CountsArgs {
  std::string data;
  int task = 0;
  bool strict = false;
};

int counts_cmd(const CountsArgs& a, std::ostream& out) {
  const auto files = discover_splits(a.data);
  std::vector<SplitCount> observed;
  int task = a.task;
  for (SplitName s : {SplitName::Train, SplitName::Validation, SplitName::Test}) {
    const auto header = read_split_header(files[s]);
    if (task == 0) task = header.task_id;
    observed.push_back({s, header.count});
  }
  if (task < 1 || task > 3) {
    throw InvalidArgument("no published counts for task " + std::to_string(task) +
                          "; pass --task 1, 2 or 3");
  }
  const auto report = validate_counts(observed, table1_row(task));
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"split", split_name_str(c.split)},
                      {"expected", c.expected},
                      {"actual", c.actual},
                      {"delta", c.delta},
                      {"pass", c.pass}});
  }
  out << json{{"task_id", report.task_id},
              {"checks", checks},
              {"expected_total", report.expected_total},
              {"actual_total", report.actual_total},
              {"pass", report.pass}}
             .dump(2)
      << "\n";
  return (a.strict && !report.pass) ? kExitPartial : kExitOk;
}

int exit_code_for(const std::exception_ptr& e, std::ostream& err) {
  try {
    std::rethrow_exception(e);
  } catch (const UnknownVariantError& x) {
    err << "error: " << x.what() << "\n";
    return kExitUnknownVariant;
  } catch (const FormatError& x) {
    err << "format error: " << x.what() << "\n";
    return kExitFormat;
  } catch (const DimensionError& x) {
    err << "dimension error: " << x.what() << "\n";
    return kExitDimension;
  } catch (const TrainingError& x) {
    err << "training error: " << x.what() << "\n";
    return kExitTraining;
  } catch (const IoError& x) {
    err << "i/o error: " << x.what() << "\n";
    return kExitIo;
  } catch (const InvalidArgument& x) {
    err << "usage error: " << x.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& x) {
    err << "internal error: " << x.what() << "\n";
    return kExitPartial;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal crisis classifier: guided cross-attention and differential attention "
               "over frozen image/text embeddings",
               "fusionette"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  GenSynthArgs gs;
  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic train/validation/test dataset");
  gen->add_option("--kind", gs.kind, "separable | xor | noise")
      ->capture_default_str()
      ->check(CLI::IsMember({"separable", "xor", "noise"}));
  gen->add_option("--n", gs.n, "Training records")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--n-val", gs.n_val, "Validation records (default n/8)")
      ->check(CLI::PositiveNumber);
  gen->add_option("--n-test", gs.n_test, "Test records (default n/8)")->check(CLI::PositiveNumber);
  gen->add_option("--dim-image", gs.dim_image)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--dim-text", gs.dim_text)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gs.seed)->capture_default_str();
  gen->add_option("--scale", gs.scale, "Embedding standard deviation")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--signal-std", gs.signal_std,
                  "Standard deviation along the label-defining directions")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--out", gs.out, "Output directory")->required();

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train one variant for --runs seeds");
  tr->add_option("--data", ta.data, "Dataset directory")->required();
  tr->add_option("--variant", ta.variant)->capture_default_str();
  tr->add_option("--out", ta.out, "Output directory")->required();
  ta.train.add_to(*tr);
  ta.arch.add_to(*tr);

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Score a saved model on one split");
  ev->add_option("--model", ea.model, "Model file")->required();
  ev->add_option("--data", ea.data, "Dataset directory")->required();
  ev->add_option("--split", ea.split)
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "validation", "test"}));

  AblateArgs aa;
  auto* ab = app.add_subcommand("ablate", "Train and compare several variants");
  ab->add_option("--data", aa.data, "Dataset directory")->required();
  ab->add_option("--variants", aa.variants, "all or a comma-separated list")
      ->capture_default_str();
  ab->add_option("--out", aa.out, "Output directory")->required();
  aa.train.add_to(*ab);
  aa.arch.add_to(*ab);

  CountsArgs ca;
  auto* vc = app.add_subcommand("validate-counts",
                                "Compare a dataset's split sizes with the published counts");
  vc->add_option("--data", ca.data, "Dataset directory")->required();
  vc->add_option("--task", ca.task, "Task 1-3 (default: from the file headers)");
  vc->add_flag("--strict", ca.strict, "Exit 1 when a count differs");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return gen_synth(gs, out);
    if (*tr) return train_cmd(ta, out);
    if (*ev) return eval_cmd(ea, out);
    if (*ab) return ablate_cmd(aa, out, err);
    if (*vc) return counts_cmd(ca, out);
  } catch (...) {
    return exit_code_for(std::current_exception(), err);
  }
  return kExitUsage;
}

}  // namespace fusionette::cli
