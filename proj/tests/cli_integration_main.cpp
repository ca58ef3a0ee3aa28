// Drives the built CLI binary end to end: exit codes, artifacts, flag/config
// precedence. Pass the binary path via --tool.

#include "glyco/eval.hpp"
#include "glyco/version.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "support.hpp"

namespace fs = std::filesystem;
using glyco::test::TempDir;

namespace {

std::string g_tool;
int g_failures = 0;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_tool(const std::string& args, const fs::path& scratch) {
  const fs::path out_file = scratch / "stdout.txt";
  const fs::path err_file = scratch / "stderr.txt";
  const std::string cmd =
      g_tool + " " + args + " >" + out_file.string() + " 2>" + err_file.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = glyco::test::read_file(out_file);
  r.err = glyco::test::read_file(err_file);
  return r;
}

void expect(bool ok, const std::string& what) {
  std::cout << (ok ? "[ok] " : "[FAILED] ") << what << '\n';
  if (!ok) ++g_failures;
}

} // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--tool") g_tool = argv[i + 1];
  if (g_tool.empty()) {
    std::cerr << "usage: cli_integration --tool <glycopredict binary>\n";
    return 2;
  }

  TempDir dir("cli");

  {
    const auto r = run_tool("--version", dir.path());
    expect(r.exit_code == 0, "--version exits 0");
    expect(r.out.find(glyco::kToolkitVersion) != std::string::npos,
           "--version prints the version string");
  }
  {
    const auto r = run_tool("--definitely-not-a-flag", dir.path());
    expect(r.exit_code == 1, "unknown flag exits 1");
    expect(r.err.find("Usage") != std::string::npos || r.err.find("-h") != std::string::npos,
           "unknown flag prints usage text");
  }
  {
    const auto r = run_tool("sync", dir.path());
    expect(r.exit_code == 1, "missing required flags exit 1");
  }

  const fs::path synth_dir = dir / "synth";
  {
    const auto r = run_tool(
        "synth --n-patients 6 --days 1 --seed 7 --out-dir " + synth_dir.string(),
        dir.path());
    expect(r.exit_code == 0, "synth exits 0");
    expect(fs::exists(synth_dir / "manifest.txt"), "synth writes the manifest");
    expect(fs::exists(synth_dir / "planted_truth.csv"), "synth writes planted_truth.csv");
    expect(fs::exists(synth_dir / "resolved_config.txt"),
           "synth echoes the resolved config");
  }
  {
    const auto r = run_tool(
        "ingest --manifest " + (synth_dir / "manifest.txt").string() + " --min-cgm-len 100",
        dir.path());
    expect(r.exit_code == 0, "ingest exits 0");
    expect(r.out.find("p0001,retained") != std::string::npos,
           "ingest reports retained patients");
  }
  {
    const auto r = run_tool("ingest --manifest " + (dir / "missing.txt").string(),
                            dir.path());
    expect(r.exit_code == 1, "missing manifest is a validation failure (exit 1)");
  }

  const fs::path pipe_dir = dir / "pipe";
  {
    const auto r = run_tool(
        "pipeline --n-patients 30 --epochs 5 --seed 7 --days 1 --folds 3 --hidden-dim 6 "
        "--min-cgm-len 100 --out-dir " + pipe_dir.string(),
        dir.path());
    expect(r.exit_code == 0, "pipeline smoke run exits 0");
    expect(fs::exists(pipe_dir / "eval" / "report.csv"), "pipeline writes the report CSV");
    expect(fs::exists(pipe_dir / "eval" / "report.txt"), "pipeline writes the text table");
    expect(fs::exists(pipe_dir / "train" / "fold_0.ckpt"), "pipeline writes checkpoints");
    expect(fs::exists(pipe_dir / "resolved_config.txt"),
           "pipeline echoes the resolved config");
    const auto reports = glyco::read_report_csv(pipe_dir / "eval" / "report.csv");
    expect(reports.size() == 1 && reports[0].n_records == 30,
           "report covers all 30 patients");
  }
  {
    const auto r = run_tool("report --report " + (pipe_dir / "eval" / "report.csv").string(),
                            dir.path());
    expect(r.exit_code == 0, "report exits 0");
    expect(r.out.find("Index") != std::string::npos &&
               r.out.find("HBA1c") != std::string::npos,
           "report renders the table to stdout");
  }
  {
    // config file sets the cohort size, the flag overrides it
    glyco::test::write_file(dir / "run.cfg", "n_patients = 4\ndays = 1\nseed = 3\n");
    const fs::path cfg_dir = dir / "from_config";
    auto r = run_tool("synth --config " + (dir / "run.cfg").string() + " --out-dir " +
                          cfg_dir.string(),
                      dir.path());
    expect(r.exit_code == 0, "synth with config file exits 0");
    expect(fs::exists(cfg_dir / "cgm_p0004.csv") && !fs::exists(cfg_dir / "cgm_p0005.csv"),
           "config file value applies");

    const fs::path flag_dir = dir / "flag_wins";
    r = run_tool("synth --config " + (dir / "run.cfg").string() +
                     " --n-patients 2 --out-dir " + flag_dir.string(),
                 dir.path());
    expect(r.exit_code == 0, "synth with config + flag exits 0");
    expect(fs::exists(flag_dir / "cgm_p0002.csv") && !fs::exists(flag_dir / "cgm_p0003.csv"),
           "command-line flag beats the config file");
  }
  {
    // Full-cadence week with activity dropout: trim shortens patients
    // differently, truncation evens them out.
    const fs::path week_dir = dir / "week";
    auto r = run_tool(
        "synth --n-patients 5 --days 7 --dropout 0.1 --seed 21 --out-dir " +
            week_dir.string(),
        dir.path());
    expect(r.exit_code == 0, "7-day synth exits 0");
    const fs::path week_fused = dir / "week_fused";
    r = run_tool("sync --manifest " + (week_dir / "manifest.txt").string() +
                     " --out-dir " + week_fused.string(),
                 dir.path());
    expect(r.exit_code == 0, "7-day sync exits 0");
    const std::string summary = glyco::test::read_file(week_fused / "sync_summary.txt");
    expect(summary.find("window_size = 20") != std::string::npos,
           "default cadences give window size 20");
    std::size_t common = 0;
    if (const auto pos = summary.find("common_length = "); pos != std::string::npos)
      common = std::stoul(summary.substr(pos + 16));
    expect(common > 2000 && common <= 2016, "common length is near the 7-day maximum");
    // every fused file has exactly common_length data rows
    for (int i = 1; i <= 5; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "fused_p%04d.csv", i);
      const std::string text = glyco::test::read_file(week_fused / name);
      const std::size_t rows =
          static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) - 1;
      if (rows != common) {
        expect(false, std::string(name) + " row count matches common_length");
        break;
      }
      if (i == 5) expect(true, "all fused files match common_length");
    }
  }
  {
    glyco::test::write_file(dir / "block", "not a directory");
    const auto r = run_tool(
        "evaluate --predictions " + (pipe_dir / "train" / "predictions.csv").string() +
            " --out " + (dir / "block" / "r.csv").string(),
        dir.path());
    expect(r.exit_code == 2, "unwritable output is a runtime failure (exit 2)");
  }
  {
    const auto r = run_tool("evaluate --predictions " + (dir / "nope.csv").string() +
                                " --out " + (dir / "r.csv").string(),
                            dir.path());
    expect(r.exit_code == 1, "missing predictions file exits 1");
  }

  std::cout << (g_failures == 0 ? "cli_integration: all checks passed\n"
                                : "cli_integration: FAILURES\n");
  return g_failures == 0 ? 0 : 1;
}
