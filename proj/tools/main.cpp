// glycopredict: CGM + actigraphy fusion and one-year biomarker-change
// prediction. Subcommands cover each pipeline stage plus an end-to-end run.

#include "glyco/checkpoint.hpp"
#include "glyco/csv.hpp"
#include "glyco/errors.hpp"
#include "glyco/eval.hpp"
#include "glyco/ingest.hpp"
#include "glyco/log.hpp"
#include "glyco/model.hpp"
#include "glyco/runconfig.hpp"
#include "glyco/sync.hpp"
#include "glyco/synthgen.hpp"
#include "glyco/train.hpp"
#include "glyco/version.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace glyco;

namespace {

struct StagePaths {
  std::string manifest;
  std::string fused_dir;
  std::string predictions;
  std::string report;
  std::string out_dir;
  std::string out;
};

void run_synth(const RunConfig& cfg, const fs::path& out_dir) {
  SynthConfig sc;
  sc.n_patients = cfg.n_patients;
  sc.days = cfg.days;
  sc.cgm_interval = cfg.cgm_interval;
  sc.activity_epoch = cfg.activity_epoch;
  sc.seed = cfg.seed;
  sc.noise_sd = cfg.noise_sd;
  sc.dropout_rate = cfg.dropout;
  generate_cohort(sc, out_dir);
  echo_resolved_config(cfg, out_dir);
}

void run_ingest(const RunConfig& cfg, const fs::path& manifest) {
  LoadOptions opts{cfg.target_enum(), static_cast<std::size_t>(cfg.min_cgm_len)};
  Cohort cohort = load_cohort(manifest, opts);
  std::cout << "patient_id,status,reason\n";
  for (const auto& p : cohort.patients) std::cout << p.id << ",retained,\n";
  for (const auto& e : cohort.excluded)
    std::cout << e.patient_id << ",excluded," << e.reason << '\n';
}

struct SyncedCohort {
  std::vector<CohortExample> examples;
  std::size_t common_length = 0;
  int window_size = 0;
};

SyncedCohort fuse_cohort(const Cohort& cohort, const SyncConfig& sync_cfg) {
  SyncedCohort out;
  out.window_size = sync_cfg.window_size();
  std::vector<FusedSequence> fused;
  fused.reserve(cohort.patients.size());
  for (const auto& p : cohort.patients)
    fused.push_back(fuse_patient(p.cgm, p.activity, sync_cfg));
  auto truncated = truncate_cohort(std::move(fused));
  out.common_length = truncated.common_length;
  for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
    const auto& p = cohort.patients[i];
    out.examples.push_back(
        {p.id, std::move(truncated.sequences[i]), p.tabular, p.target});
  }
  return out;
}

void run_sync(const RunConfig& cfg, const fs::path& manifest, const fs::path& out_dir) {
  LoadOptions opts{cfg.target_enum(), static_cast<std::size_t>(cfg.min_cgm_len)};
  Cohort cohort = load_cohort(manifest, opts);
  if (cohort.patients.empty())
    raise(Errc::empty_input, "no patients retained from " + manifest.string());

  SyncConfig sync_cfg;
  sync_cfg.overlap_ratio = cfg.overlap_ratio;
  sync_cfg.cgm_interval = cfg.cgm_interval;
  sync_cfg.activity_epoch = cfg.activity_epoch;

  fs::create_directories(out_dir);
  SyncedCohort synced = fuse_cohort(cohort, sync_cfg);
  for (const auto& ex : synced.examples)
    write_fused_csv(ex.fused, out_dir / ("fused_" + ex.patient_id + ".csv"));

  std::ofstream summary(out_dir / "sync_summary.txt");
  if (!summary) raise(Errc::io_failure, "cannot write sync summary");
  summary << "patients = " << synced.examples.size() << '\n';
  summary << "window_size = " << synced.window_size << '\n';
  summary << "common_length = " << synced.common_length << '\n';
  echo_resolved_config(cfg, out_dir);
}

std::vector<CohortExample> load_fused_dir(const Cohort& cohort, const fs::path& fused_dir) {
  std::vector<FusedSequence> fused;
  fused.reserve(cohort.patients.size());
  for (const auto& p : cohort.patients) {
    const fs::path f = fused_dir / ("fused_" + p.id + ".csv");
    if (!fs::exists(f)) raise(Errc::patient_file_missing, f.string());
    fused.push_back(read_fused_csv(f, p.id));
  }
  auto truncated = truncate_cohort(std::move(fused));
  std::vector<CohortExample> examples;
  for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
    const auto& p = cohort.patients[i];
    examples.push_back({p.id, std::move(truncated.sequences[i]), p.tabular, p.target});
  }
  return examples;
}

void write_run_meta(const fs::path& path, const RunConfig& cfg,
                    const std::vector<CohortExample>& examples) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path.string());
  const bool deep = cfg.experiment_enum() != Experiment::wide_only;
  const std::size_t seq_len = deep ? examples.front().fused.samples.size() : 0;
  const std::size_t width =
      cfg.experiment_enum() == Experiment::deep_cgm_only ? 1 : 1 + kActivityFieldCount;
  out << "experiment = " << cfg.experiment << '\n';
  out << "target = " << cfg.target << '\n';
  out << "n_patients = " << examples.size() << '\n';
  out << "seq_len = " << seq_len << '\n';
  out << "seq_width = " << (deep ? width : 0) << '\n';
  out << "folds = " << cfg.folds << '\n';
  if (!out) raise(Errc::io_failure, "write failed: " + path.string());
}

std::map<std::string, std::string> read_key_value_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::config_error, "cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void run_train(const RunConfig& cfg, const fs::path& manifest,
               const std::optional<fs::path>& fused_dir, const fs::path& out_dir) {
  LoadOptions opts{cfg.target_enum(), static_cast<std::size_t>(cfg.min_cgm_len)};
  Cohort cohort = load_cohort(manifest, opts);
  if (cohort.patients.empty())
    raise(Errc::empty_input, "no patients retained from " + manifest.string());

  std::vector<CohortExample> examples;
  if (fused_dir) {
    examples = load_fused_dir(cohort, *fused_dir);
  } else {
    SyncConfig sync_cfg;
    sync_cfg.overlap_ratio = cfg.overlap_ratio;
    sync_cfg.cgm_interval = cfg.cgm_interval;
    sync_cfg.activity_epoch = cfg.activity_epoch;
    examples = fuse_cohort(cohort, sync_cfg).examples;
  }

  fs::create_directories(out_dir);
  CvResult cv = cross_validate(examples, cfg.train_config());
  for (std::size_t k = 0; k < cv.fold_params.size(); ++k)
    checkpoint_save(cv.fold_params[k], out_dir / ("fold_" + std::to_string(k) + ".ckpt"));
  write_predictions_csv(cv.predictions, out_dir / "predictions.csv");
  write_run_meta(out_dir / "run_meta.txt", cfg, examples);
  echo_resolved_config(cfg, out_dir);
}

void run_evaluate(const fs::path& predictions_path, const fs::path& out_path) {
  const auto predictions = read_predictions_csv(predictions_path);
  const auto meta = read_key_value_file(predictions_path.parent_path() / "run_meta.txt");

  ReportShape shape;
  shape.experiment = parse_experiment(meta.at("experiment"));
  shape.target = parse_target(meta.at("target"));
  shape.n_patients = static_cast<int>(predictions.size());
  shape.seq_len = std::stoi(meta.at("seq_len"));
  shape.seq_width = std::stoi(meta.at("seq_width"));

  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  emit_report({build_report(predictions, shape)}, out_path);
}

void run_report(const fs::path& report_csv, const std::optional<fs::path>& out_path) {
  const auto reports = read_report_csv(report_csv);
  const std::string table = render_report_table(reports);
  if (out_path) {
    std::ofstream out(*out_path);
    if (!out) raise(Errc::io_failure, "cannot write " + out_path->string());
    out << table;
  } else {
    std::cout << table;
  }
}

void run_pipeline(const RunConfig& cfg, const fs::path& out_dir) {
  const fs::path data_dir = out_dir / "data";
  const fs::path fused_dir = out_dir / "fused";
  const fs::path train_dir = out_dir / "train";
  const fs::path eval_dir = out_dir / "eval";

  run_synth(cfg, data_dir);
  run_sync(cfg, data_dir / "manifest.txt", fused_dir);
  run_train(cfg, data_dir / "manifest.txt", fused_dir, train_dir);
  run_evaluate(train_dir / "predictions.csv", eval_dir / "report.csv");
  echo_resolved_config(cfg, eval_dir);
  echo_resolved_config(cfg, out_dir);
  log::info("pipeline", "done", {{"report", (eval_dir / "report.csv").string()}});
}

// The config file is applied before CLI11 parses, so flags override it.
std::optional<std::string> scan_config_flag(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return std::nullopt;
}

void add_train_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--experiment", cfg.experiment,
                  "wide_only|deep_cgm_only|deep_cgm_activity|wide_and_deep");
  cmd->add_option("--target", cfg.target, "hba1c|hdl|ldl|triglycerides");
  cmd->add_option("--epochs", cfg.epochs, "training epochs");
  cmd->add_option("--folds", cfg.folds, "cross-validation folds");
  cmd->add_option("--lr", cfg.learning_rate, "learning rate");
  cmd->add_option("--hidden-dim", cfg.hidden_dim, "LSTM hidden width");
  cmd->add_flag("--wide-sigmoid", cfg.wide_sigmoid,
                "squash the wide branch (sensitivity check)");
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("--threads", cfg.threads, "max concurrent folds");
  cmd->add_option("--min-cgm-len", cfg.min_cgm_len, "CGM length exclusion floor");
  cmd->add_option("--overlap-ratio", cfg.overlap_ratio, "sync window overlap ratio");
}

} // namespace

static int run_main(int argc, char** argv) {
  RunConfig cfg;
  StagePaths paths;

  CLI::App app{"CGM/actigraphy fusion and one-year biomarker-change prediction"};
  app.set_version_flag("--version", std::string(kToolkitName) + " " + kToolkitVersion);
  app.require_subcommand(1);
  std::string config_file;
  const auto add_config_flag = [&config_file](CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key = value config file (flags win)");
  };
  add_config_flag(&app);

  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
  add_config_flag(synth);
  synth->add_option("--n-patients", cfg.n_patients, "cohort size");
  synth->add_option("--days", cfg.days, "recording days per patient");
  synth->add_option("--seed", cfg.seed, "random seed");
  synth->add_option("--noise-sd", cfg.noise_sd, "target-unit noise on planted deltas");
  synth->add_option("--dropout", cfg.dropout, "activity epoch dropout probability");
  synth->add_option("--out-dir", paths.out_dir, "output directory")->required();

  auto* ingest = app.add_subcommand("ingest", "validate a cohort manifest");
  add_config_flag(ingest);
  ingest->add_option("--manifest", paths.manifest, "cohort manifest")->required();
  ingest->add_option("--target", cfg.target, "biomarker target for exclusions");
  ingest->add_option("--min-cgm-len", cfg.min_cgm_len, "CGM length exclusion floor");

  auto* sync = app.add_subcommand("sync", "fuse CGM and activity streams");
  add_config_flag(sync);
  sync->add_option("--manifest", paths.manifest, "cohort manifest")->required();
  sync->add_option("--overlap-ratio", cfg.overlap_ratio, "window overlap ratio");
  sync->add_option("--out-dir", paths.out_dir, "output directory")->required();
  sync->add_option("--target", cfg.target, "biomarker target for exclusions");
  sync->add_option("--min-cgm-len", cfg.min_cgm_len, "CGM length exclusion floor");

  auto* train = app.add_subcommand("train", "cross-validated training");
  add_config_flag(train);
  train->add_option("--manifest", paths.manifest, "cohort manifest")->required();
  train->add_option("--fused-dir", paths.fused_dir, "reuse fused CSVs from sync");
  train->add_option("--out-dir", paths.out_dir, "output directory")->required();
  add_train_flags(train, cfg);

  auto* evaluate = app.add_subcommand("evaluate", "score out-of-fold predictions");
  add_config_flag(evaluate);
  evaluate->add_option("--predictions", paths.predictions, "predictions CSV from train")
      ->required();
  evaluate->add_option("--out", paths.out, "report CSV path (text table beside it)")
      ->required();

  auto* report = app.add_subcommand("report", "render a report CSV as a table");
  add_config_flag(report);
  report->add_option("--report", paths.report, "report CSV")->required();
  report->add_option("--out", paths.out, "write table here instead of stdout");

  auto* pipeline = app.add_subcommand("pipeline", "synth -> sync -> train -> evaluate");
  add_config_flag(pipeline);
  pipeline->add_option("--n-patients", cfg.n_patients, "cohort size");
  pipeline->add_option("--days", cfg.days, "recording days per patient");
  pipeline->add_option("--noise-sd", cfg.noise_sd, "planted noise sd");
  pipeline->add_option("--dropout", cfg.dropout, "activity dropout rate");
  pipeline->add_option("--out-dir", paths.out_dir, "run directory")->required();
  add_train_flags(pipeline, cfg);

  if (auto file = scan_config_flag(argc, argv)) {
    try {
      cfg.apply_file(*file);
    } catch (const Error& e) {
      std::cerr << e.what() << '\n';
      return 1;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << '\n';
    return 1;
  }

  try {
    if (synth->parsed()) run_synth(cfg, paths.out_dir);
    else if (ingest->parsed()) run_ingest(cfg, paths.manifest);
    else if (sync->parsed()) run_sync(cfg, paths.manifest, paths.out_dir);
    else if (train->parsed())
      run_train(cfg, paths.manifest,
                paths.fused_dir.empty() ? std::nullopt
                                        : std::optional<fs::path>(paths.fused_dir),
                paths.out_dir);
    else if (evaluate->parsed()) run_evaluate(paths.predictions, paths.out);
    else if (report->parsed())
      run_report(paths.report, paths.out.empty() ? std::nullopt
                                                 : std::optional<fs::path>(paths.out));
    else if (pipeline->parsed()) run_pipeline(cfg, paths.out_dir);
  } catch (const Error& e) {
    log::error("cli", "failed", {{"error", e.what()}});
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    log::error("cli", "failed", {{"error", e.what()}});
    return 2;
  }
  return 0;
}

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << '\n';
    return 2;
  }
}
