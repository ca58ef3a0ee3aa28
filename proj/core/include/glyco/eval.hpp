#pragma once

#include "glyco/train.hpp"
#include "glyco/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace glyco {

enum class DeltaClass { improvement, deterioration };

// <= 0 is improvement (zero change counts as improvement), > 0 deterioration.
DeltaClass classify_delta(double delta);

double rmse(const std::vector<double>& preds, const std::vector<double>& targets);

// Fraction of records whose predicted and true deltas fall in the same class.
double classification_accuracy(const std::vector<double>& pred_deltas,
                               const std::vector<double>& true_deltas);

struct FoldMetrics {
  double rmse = 0.0;
  double accuracy = 0.0;
};

struct EvalReport {
  std::string index;        // biomarker label, e.g. "HBA1c"
  std::string signal;       // e.g. "C, A, D, L"
  std::string size;         // input shape, e.g. "[50 x 1445 x 9] + [50 x 8]"
  int n_records = 0;
  double rmse = 0.0;
  double rmse_std_across_folds = 0.0; // population sigma of per-fold RMSE
  double value_range = 0.0;           // max - min observed true delta
  double normalized_rmse = 0.0;       // rmse / value_range
  double accuracy = 0.0;
  std::vector<FoldMetrics> per_fold;
};

struct ReportShape {
  Experiment experiment = Experiment::wide_and_deep;
  BiomarkerTarget target = BiomarkerTarget::hba1c;
  int n_patients = 0;
  int seq_len = 0;   // 0 when the experiment has no deep branch
  int seq_width = 0;
};

std::string size_label(const ReportShape& shape);

// Aggregates out-of-fold predictions into a Table-1-style row.
EvalReport build_report(const std::vector<Prediction>& predictions,
                        const ReportShape& shape);

// Writes the machine-readable CSV (schema:
// index,signal,size,rmse,rmse_std,range,normalized_rmse,accuracy) and an
// aligned text table next to it (same stem, .txt).
void emit_report(const std::vector<EvalReport>& reports, const std::filesystem::path& csv_path);

std::vector<EvalReport> read_report_csv(const std::filesystem::path& path);

std::string render_report_table(const std::vector<EvalReport>& reports);

} // namespace glyco
