#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "rada/errors.hpp"
#include "rada/eval.hpp"
#include "rada/structure.hpp"

#ifndef RADA_VERSION
#define RADA_VERSION "0.0.0"
#endif

namespace rada::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string code_version() { return std::string("rada ") + RADA_VERSION; }

void write_manifest(const fs::path& path, const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["config"] = m.config_text;
  j["duration_seconds"] = m.duration_seconds ? json(*m.duration_seconds) : json(nullptr);
  j["status"] = m.duration_seconds ? "complete" : "running";
  j["outputs"] = m.outputs;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

namespace {

using Clock = std::chrono::steady_clock;

class ManifestScope {
 public:
  ManifestScope(const ExperimentConfig& cfg, std::string command, std::vector<std::string> outputs)
      : path_(cfg.out / (command + ".manifest.json")), start_(Clock::now()) {
    manifest_.command = std::move(command);
    manifest_.config_text = cfg.to_text();
    manifest_.seed = cfg.train.seed;
    manifest_.version = code_version();
    manifest_.outputs = std::move(outputs);
    write_manifest(path_, manifest_);
  }

  void complete() {
    manifest_.duration_seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    write_manifest(path_, manifest_);
  }

 private:
  fs::path path_;
  Clock::time_point start_;
  RunManifest manifest_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

LabeledDataset load_required(const fs::path& path) {
  if (!fs::exists(path)) throw Error("missing dataset " + path.string() + " (run 'rada gen' first)");
  try {
    return load_dataset(path);
  } catch (const FormatError& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

struct DataPair {
  LabeledDataset source;
  LabeledDataset target;
};

DataPair load_pair(const ExperimentConfig& cfg) {
  DataPair p{load_required(cfg.data_dir() / "source.txt"), load_required(cfg.data_dir() / "target.txt")};
  for (const auto* ds : {&p.source, &p.target}) {
    if (ds->classes != cfg.gen.classes || ds->feature_dim() != cfg.gen.features)
      throw DimensionError("dataset shape (K=" + std::to_string(ds->classes) + ", F=" +
                           std::to_string(ds->feature_dim()) + ") does not match gen.classes/gen.features");
  }
  return p;
}

std::vector<std::string> structure_files() {
  return {"omega_y.csv", "omega_d.csv", "rho_y.csv", "rho_d.csv", "rho_heatmap.csv", "structure.csv"};
}

void write_structure(const fs::path& dir, const RadaModel& model, double eps0) {
  const auto sr = structure_report(model, eps0);
  write_matrix_csv(dir / "omega_y.csv", sr.omega_y.omega);
  write_matrix_csv(dir / "omega_d.csv", sr.omega_d.omega);
  write_matrix_csv(dir / "rho_y.csv", sr.rho_y);
  write_matrix_csv(dir / "rho_d.csv", sr.rho_d);
  write_matrix_csv(dir / "rho_heatmap.csv", combined_heatmap(sr.rho_y, sr.rho_d));
  auto out = open_out(dir / "structure.csv");
  out << "metric,value\n"
      << "kl_dy," << format_double(sr.kl_dy) << '\n'
      << "kl_yd," << format_double(sr.kl_yd) << '\n'
      << "loss_d2y," << format_double(sr.loss_d2y) << '\n'
      << "loss_y2d," << format_double(sr.loss_y2d) << '\n'
      << "shrink_y," << format_double(sr.omega_y.shrink_used) << '\n'
      << "shrink_d," << format_double(sr.omega_d.shrink_used) << '\n';
}

json epoch_json(const EpochRecord& e) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["epoch"] = e.epoch;
  j["label_loss"] = e.label_loss;
  j["domain_loss"] = e.domain_loss;
  j["structure_loss"] = opt(e.structure_loss);
  j["kl_dy"] = opt(e.kl_dy);
  j["kl_yd"] = opt(e.kl_yd);
  j["lambda_adv"] = e.lambda_adv;
  j["lr_backbone"] = e.lr_backbone;
  j["lr_heads"] = e.lr_heads;
  j["source_accuracy"] = e.source_accuracy;
  j["target_accuracy"] = opt(e.target_accuracy);
  j["shrink_events"] = e.shrink_events;
  return j;
}

void write_report_json(const fs::path& path, const TrainReport& report, bool append) {
  json all = json::array();
  if (append && fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    try {
      all = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(path.string() + ": " + e.what());
    }
  }
  for (const auto& e : report.epochs) all.push_back(epoch_json(e));
  open_out(path) << all.dump(2) << '\n';
}

bool same_layer_shapes(const NetworkParams& a, const NetworkParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l)
    if (a.layers[l].rows() != b.layers[l].rows() || a.layers[l].cols() != b.layers[l].cols()) return false;
  return true;
}

// ---------------------------------------------------------------------------

int cmd_gen(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_dir(cfg.out);
  ManifestScope manifest(cfg, "gen", {"source.txt", "target.txt", "ground_truth_precision.csv"});
  const auto pair = generate_pair(cfg.gen);
  save_dataset(pair.source, cfg.out / "source.txt");
  save_dataset(pair.target, cfg.out / "target.txt");
  write_matrix_csv(cfg.out / "ground_truth_precision.csv", pair.ground_truth_precision);
  manifest.complete();
  out << "generated " << pair.source.size() << " source and " << pair.target.size()
      << " target samples in " << cfg.out.string() << '\n';
  return kExitOk;
}

int cmd_train(const ExperimentConfig& cfg, bool resume, std::ostream& out) {
  const auto data = load_pair(cfg);
  const auto train = cfg.effective_train();
  const auto shape = cfg.effective_shape();
  const bool multi = shape.discriminator_branches == shape.classes;
  ensure_dir(cfg.out);

  TrainState state = TrainState::fresh(make_model(shape, train.seed));
  const fs::path ckpt_path = cfg.out / "checkpoint.txt";
  if (resume) {
    if (!fs::exists(ckpt_path)) throw Error("cannot resume: " + ckpt_path.string() + " not found");
    auto ck = load_checkpoint(ckpt_path);
    auto saved = ck.config.to_key_values();
    auto wanted = train.to_key_values();
    saved.erase("epochs");
    wanted.erase("epochs");
    for (const auto& [k, v] : wanted)
      if (saved[k] != v)
        throw ConfigError("train." + k, "differs from the checkpoint (" + saved[k] + " vs " + v + ")");
    if (!same_layer_shapes(ck.state.model.g_f, state.model.g_f) ||
        !same_layer_shapes(ck.state.model.g_y, state.model.g_y) ||
        !same_layer_shapes(ck.state.model.g_d, state.model.g_d))
      throw ConfigError("model", "architecture differs from the checkpoint");
    if (ck.state.epochs_completed > train.epochs)
      throw ConfigError("train.epochs", "checkpoint already has " + std::to_string(ck.state.epochs_completed) +
                                            " epochs");
    state = std::move(ck.state);
  }

  std::vector<std::string> outputs{"checkpoint.txt"};
  if (cfg.wants_format("csv")) outputs.push_back("report.csv");
  if (cfg.wants_format("json")) outputs.push_back("report.json");
  if (multi)
    for (auto& f : structure_files()) outputs.push_back(f);
  if (data.target.labeled()) outputs.push_back("confusion_target.csv");
  ManifestScope manifest(cfg, "train", outputs);

  const auto result = fit(std::move(state), data.source, data.target, train);
  save_checkpoint(ckpt_path, result.state, train);
  if (cfg.wants_format("csv")) write_report_csv(cfg.out / "report.csv", result.report, resume);
  if (cfg.wants_format("json")) write_report_json(cfg.out / "report.json", result.report, resume);
  if (multi) write_structure(cfg.out, result.state.model, train.eps0);
  if (data.target.labeled())
    write_confusion_csv(cfg.out / "confusion_target.csv", confusion(result.state.model, data.target));
  manifest.complete();

  out << "trained " << to_string(cfg.method) << " to epoch " << result.state.epochs_completed;
  if (!result.report.epochs.empty()) {
    const auto& last = result.report.epochs.back();
    out << ": source accuracy " << format_double(last.source_accuracy);
    if (last.target_accuracy) out << ", target accuracy " << format_double(*last.target_accuracy);
  }
  out << '\n';
  return kExitOk;
}

int cmd_eval(const ExperimentConfig& cfg, std::ostream& out) {
  const auto data = load_pair(cfg);
  const fs::path ckpt_path = cfg.out / "checkpoint.txt";
  if (!fs::exists(ckpt_path)) throw Error("missing checkpoint " + ckpt_path.string() + " (run 'rada train' first)");
  const auto ck = load_checkpoint(ckpt_path);
  const auto& model = ck.state.model;
  const bool multi = model.branches() == model.classes();

  std::vector<std::string> outputs{"eval.csv", "confusion_source.csv"};
  if (data.target.labeled()) outputs.push_back("confusion_target.csv");
  if (multi)
    for (auto& f : structure_files()) outputs.push_back(f);
  ManifestScope manifest(cfg, "eval", outputs);

  const auto pad = proxy_a_distance(extract_features(model, data.source.features),
                                    extract_features(model, data.target.features));
  auto csv = open_out(cfg.out / "eval.csv");
  csv << "metric,value\n";
  csv << "source_accuracy," << format_double(accuracy(model, data.source)) << '\n';
  if (data.target.labeled()) csv << "target_accuracy," << format_double(accuracy(model, data.target)) << '\n';
  csv << "pad_epsilon," << format_double(pad.epsilon) << '\n';
  csv << "pad_d_a," << format_double(pad.d_a) << '\n';
  csv.close();
  write_confusion_csv(cfg.out / "confusion_source.csv", confusion(model, data.source));
  if (data.target.labeled())
    write_confusion_csv(cfg.out / "confusion_target.csv", confusion(model, data.target));
  if (multi) write_structure(cfg.out, model, ck.config.eps0);
  manifest.complete();

  std::ifstream echo(cfg.out / "eval.csv");
  out << echo.rdbuf();
  return kExitOk;
}

int cmd_grad_check(const ExperimentConfig& cfg, std::ostream& out) {
  constexpr double kTolerance = 1e-4;
  constexpr std::size_t kRows = 12;
  ensure_dir(cfg.out);
  ManifestScope manifest(cfg, "grad-check", {"grad_check.csv"});

  const auto pair = generate_pair(cfg.gen);
  const auto train = cfg.effective_train();
  const auto model = make_model(cfg.effective_shape(), train.seed);
  SourceBatch sb{Matrix(kRows, cfg.gen.features), std::vector<int>(kRows)};
  TargetBatch tb{Matrix(kRows, cfg.gen.features)};
  for (std::size_t i = 0; i < kRows; ++i) {
    const std::size_t si = i * pair.source.size() / kRows;
    const std::size_t ti = i * pair.target.size() / kRows;
    std::copy(pair.source.features.row(si).begin(), pair.source.features.row(si).end(), sb.x.row(i).begin());
    std::copy(pair.target.features.row(ti).begin(), pair.target.features.row(ti).end(), tb.x.row(i).begin());
    sb.labels[i] = pair.source.labels[si];
  }

  auto csv = open_out(cfg.out / "grad_check.csv");
  csv << "direction,lambda_adv,lambda_r,feature_error,label_error,discriminator_error,pass\n";
  bool all_pass = true;
  for (auto dir : {StructureDirection::d_to_y, StructureDirection::y_to_d}) {
    for (double lambda_adv : {0.0, 0.5, 1.0}) {
      ObjectiveSettings s;
      s.lambda_adv = lambda_adv;
      s.lambda_r = train.lambda_r;
      s.direction = dir;
      s.eps0 = train.eps0;
      s.detach_target_weights = train.detach_target_weights;
      const auto r = grad_check(model, sb, tb, s);
      const bool pass = r.worst() <= kTolerance;
      all_pass = all_pass && pass;
      csv << to_string(dir) << ',' << format_double(lambda_adv) << ',' << format_double(s.lambda_r) << ','
          << format_double(r.feature_error) << ',' << format_double(r.label_error) << ','
          << format_double(r.discriminator_error) << ',' << (pass ? "true" : "false") << '\n';
      out << to_string(dir) << " lambda_adv=" << lambda_adv << " worst relative error " << r.worst()
          << (pass ? " ok" : " FAILED") << '\n';
    }
  }
  csv.close();
  manifest.complete();
  if (!all_pass) throw Error("gradient check exceeded tolerance 1e-4");
  return kExitOk;
}

int cmd_oracle_check(const ExperimentConfig& cfg, std::ostream& out) {
  constexpr std::size_t kCases = 20;
  ensure_dir(cfg.out);
  ManifestScope manifest(cfg, "oracle-check", {"oracle_check.csv"});

  std::mt19937_64 rng(cfg.train.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto csv = open_out(cfg.out / "oracle_check.csv");
  csv << "case,rows,classes,relative_frobenius,objective_closed_form,objective_oracle,oracle_steps,pass\n";
  bool all_pass = true;
  for (std::size_t c = 0; c < kCases; ++c) {
    const auto k = std::uniform_int_distribution<std::size_t>(3, 12)(rng);
    const auto d = std::uniform_int_distribution<std::size_t>(k + 2, 64)(rng);
    Matrix w(d, k);
    for (auto& v : w.values()) v = normal(rng);
    const auto closed = precision_from_weights(w);
    const auto oracle = precision_oracle(w);
    const double rel = frobenius_norm(closed.omega - oracle.precision.omega) / frobenius_norm(closed.omega);
    const double obj_closed = precision_objective(closed.omega, w);
    const double obj_oracle = precision_objective(oracle.precision.omega, w);
    const bool pass = rel <= 1e-4 && obj_closed <= obj_oracle + 1e-6;
    all_pass = all_pass && pass;
    csv << c << ',' << d << ',' << k << ',' << format_double(rel) << ',' << format_double(obj_closed) << ','
        << format_double(obj_oracle) << ',' << oracle.steps << ',' << (pass ? "true" : "false") << '\n';
  }
  csv.close();
  manifest.complete();
  out << (all_pass ? "closed form matches the oracle on all " : "closed form disagrees with the oracle in ")
      << kCases << " cases\n";
  if (!all_pass) throw Error("oracle check failed");
  return kExitOk;
}

int cmd_ablate(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds, std::size_t jobs,
               std::ostream& out) {
  if (seeds.size() < 3) throw ConfigError("seeds", "ablation needs at least three seeds");
  ensure_dir(cfg.out);
  ManifestScope manifest(cfg, "ablate", {"ablation_runs.csv", "ablation.csv"});
  const auto result = run_ablation(cfg, seeds, jobs);
  write_ablation_csv(cfg.out, result);
  manifest.complete();
  for (const auto& s : result.summary) {
    out << s.arm << ": target accuracy " << s.mean_target_accuracy << " +- " << s.sd_target_accuracy;
    if (s.failures) out << " (" << s.failures << " failed)";
    out << '\n';
  }
  return kExitOk;
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<std::string>& ablation_arms() {
  static const std::vector<std::string> arms{"source_only", "dann_single", "multiclass_only", "rada_d2y",
                                             "rada_y2d"};
  return arms;
}

const AblationSummary& AblationResult::arm(std::string_view name) const {
  for (const auto& s : summary)
    if (s.arm == name) return s;
  throw Error("no ablation arm named " + std::string(name));
}

namespace {

ExperimentConfig arm_config(const ExperimentConfig& base, const std::string& arm, std::uint64_t seed) {
  ExperimentConfig cfg = base;
  cfg.gen.seed = seed;
  cfg.train.seed = seed;
  if (arm == "rada_d2y" || arm == "rada_y2d") {
    cfg.method = Method::rada;
    cfg.train.direction = arm == "rada_d2y" ? StructureDirection::d_to_y : StructureDirection::y_to_d;
  } else {
    cfg.method = parse_method(arm);
  }
  return cfg;
}

AblationRun run_arm(const ExperimentConfig& cfg, const std::string& arm, std::uint64_t seed,
                    const GeneratedPair& pair) {
  AblationRun run;
  run.arm = arm;
  run.seed = seed;
  try {
    const auto model = make_model(cfg.effective_shape(), cfg.train.seed);
    const auto fitted = fit(model, pair.source, pair.target.without_labels(), cfg.effective_train());
    const auto& m = fitted.state.model;
    run.source_accuracy = accuracy(m, pair.source);
    run.target_accuracy = accuracy(m, pair.target);
    if (m.branches() == m.classes()) {
      const auto sr = structure_report(m, cfg.train.eps0);
      run.kl_dy = sr.kl_dy;
      run.kl_yd = sr.kl_yd;
    }
    run.pad = proxy_a_distance(extract_features(m, pair.source.features),
                               extract_features(m, pair.target.features))
                  .d_a;
    run.ok = true;
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  return run;
}

std::optional<double> mean_of(const std::vector<const AblationRun*>& runs,
                              std::optional<double> AblationRun::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto* r : runs)
    if (r->*field) {
      sum += *(r->*field);
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

AblationResult run_ablation(const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds_in,
                            std::size_t jobs) {
  if (seeds_in.size() < 3) throw ConfigError("seeds", "ablation needs at least three seeds");
  base.validate();
  auto seeds = seeds_in;
  std::sort(seeds.begin(), seeds.end());
  const auto& arms = ablation_arms();

  std::vector<std::uint64_t> unique_seeds = seeds;
  unique_seeds.erase(std::unique(unique_seeds.begin(), unique_seeds.end()), unique_seeds.end());
  std::map<std::uint64_t, GeneratedPair> pairs;
  for (auto s : unique_seeds) {
    GenConfig g = base.gen;
    g.seed = s;
    pairs.emplace(s, generate_pair(g));
  }

  AblationResult result;
  result.runs.resize(arms.size() * seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.runs.size(); i = next++) {
      const auto& arm = arms[i / seeds.size()];
      const auto seed = seeds[i % seeds.size()];
      result.runs[i] = run_arm(arm_config(base, arm, seed), arm, seed, pairs.at(seed));
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, result.runs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
  }

  for (std::size_t a = 0; a < arms.size(); ++a) {
    AblationSummary s;
    s.arm = arms[a];
    std::vector<const AblationRun*> ok;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const auto& r = result.runs[a * seeds.size() + i];
      ++s.runs;
      if (r.ok) ok.push_back(&r);
      else ++s.failures;
    }
    if (!ok.empty()) {
      for (const auto* r : ok) {
        s.mean_target_accuracy += r->target_accuracy;
        s.mean_pad += r->pad;
      }
      s.mean_target_accuracy /= static_cast<double>(ok.size());
      s.mean_pad /= static_cast<double>(ok.size());
      if (ok.size() > 1) {
        double ss = 0.0;
        for (const auto* r : ok) ss += (r->target_accuracy - s.mean_target_accuracy) * (r->target_accuracy - s.mean_target_accuracy);
        s.sd_target_accuracy = std::sqrt(ss / static_cast<double>(ok.size() - 1));
      }
      s.mean_kl_dy = mean_of(ok, &AblationRun::kl_dy);
      s.mean_kl_yd = mean_of(ok, &AblationRun::kl_yd);
    }
    result.summary.push_back(s);
  }
  return result;
}

void write_ablation_csv(const fs::path& dir, const AblationResult& result) {
  auto runs = open_out(dir / "ablation_runs.csv");
  runs << "method,seed,status,target_accuracy,source_accuracy,kl_dy,kl_yd,pad_d_a,error\n";
  for (const auto& r : result.runs) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    runs << r.arm << ',' << r.seed << ',' << (r.ok ? "ok" : "error") << ','
         << (r.ok ? format_double(r.target_accuracy) : "NA") << ','
         << (r.ok ? format_double(r.source_accuracy) : "NA") << ',' << optional_cell(r.kl_dy) << ','
         << optional_cell(r.kl_yd) << ',' << (r.ok ? format_double(r.pad) : "NA") << ',' << err << '\n';
  }
  auto summary = open_out(dir / "ablation.csv");
  summary << "method,runs,failures,mean_target_accuracy,sd_target_accuracy,mean_kl_dy,mean_kl_yd,mean_pad_d_a\n";
  for (const auto& s : result.summary) {
    const bool any = s.failures < s.runs;
    summary << s.arm << ',' << s.runs << ',' << s.failures << ','
            << (any ? format_double(s.mean_target_accuracy) : "NA") << ','
            << (any ? format_double(s.sd_target_accuracy) : "NA") << ',' << optional_cell(s.mean_kl_dy) << ','
            << optional_cell(s.mean_kl_yd) << ',' << (any ? format_double(s.mean_pad) : "NA") << '\n';
  }
}

// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relationship-aware adversarial domain adaptation on synthetic data", "rada"};
  app.set_version_flag("--version", code_version());

  bool print_defaults = false;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string method;
  std::string direction;
  bool resume = false;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t jobs = 0;

  app.add_flag("--print-defaults", print_defaults, "Print the default configuration and exit");
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Seed for data generation, initialisation and training");
    cmd->add_option("--out", out_dir, "Output directory");
    cmd->add_option("--method", method, "source_only | dann_single | multiclass_only | rada");
    cmd->add_option("--direction", direction, "Structure direction: d2y | y2d");
  };
  auto* gen = app.add_subcommand("gen", "Generate a source/target dataset pair");
  auto* train = app.add_subcommand("train", "Train the selected method");
  auto* ablate = app.add_subcommand("ablate", "Run every ablation arm over several seeds");
  auto* eval = app.add_subcommand("eval", "Evaluate a trained checkpoint");
  auto* gcheck = app.add_subcommand("grad-check", "Compare analytic and numeric objective gradients");
  auto* ocheck = app.add_subcommand("oracle-check", "Compare the closed-form precision with the iterative oracle");
  for (auto* cmd : {gen, train, ablate, eval, gcheck, ocheck}) add_common(cmd);
  train->add_flag("--resume", resume, "Continue from the checkpoint in the output directory");
  ablate->add_option("--seeds", seeds, "Seeds, comma separated")->delimiter(',');
  ablate->add_option("--jobs", jobs, "Worker threads (0 = hardware concurrency)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (print_defaults) {
      out << ExperimentConfig{}.to_text();
      return kExitOk;
    }
    if (app.get_subcommands().empty()) {
      err << app.help();
      return kExitConfig;
    }
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    if (seed) {
      cfg.gen.seed = *seed;
      cfg.train.seed = *seed;
    }
    if (!out_dir.empty()) cfg.out = out_dir;
    if (!method.empty()) cfg.method = parse_method(method);
    if (!direction.empty()) {
      try {
        cfg.train.direction = parse_direction(direction);
      } catch (const ConfigError& e) {
        throw ConfigError("direction", e.what());
      }
    }
    cfg.validate();

    if (gen->parsed()) return cmd_gen(cfg, out);
    if (train->parsed()) return cmd_train(cfg, resume, out);
    if (ablate->parsed()) return cmd_ablate(cfg, seeds, jobs, out);
    if (eval->parsed()) return cmd_eval(cfg, out);
    if (gcheck->parsed()) return cmd_grad_check(cfg, out);
    return cmd_oracle_check(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace rada::cli
