#include "glyco/eval.hpp"

#include "glyco/csv.hpp"
#include "glyco/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace glyco {

DeltaClass classify_delta(double delta) {
  return delta <= 0.0 ? DeltaClass::improvement : DeltaClass::deterioration;
}

double rmse(const std::vector<double>& preds, const std::vector<double>& targets) {
  if (preds.size() != targets.size())
    raise(Errc::length_mismatch, std::to_string(preds.size()) + " predictions vs " +
                                     std::to_string(targets.size()) + " targets");
  if (preds.empty()) raise(Errc::empty_input, "rmse of zero records");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double r = preds[i] - targets[i];
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(preds.size()));
}

double classification_accuracy(const std::vector<double>& pred_deltas,
                               const std::vector<double>& true_deltas) {
  if (pred_deltas.size() != true_deltas.size())
    raise(Errc::length_mismatch, "prediction/target length mismatch");
  if (pred_deltas.empty()) raise(Errc::empty_input, "accuracy of zero records");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred_deltas.size(); ++i)
    if (classify_delta(pred_deltas[i]) == classify_delta(true_deltas[i])) ++correct;
  return static_cast<double>(correct) / static_cast<double>(pred_deltas.size());
}

std::string size_label(const ReportShape& shape) {
  std::string deep, wide;
  if (shape.seq_len > 0)
    deep = "[" + std::to_string(shape.n_patients) + " x " + std::to_string(shape.seq_len) +
           " x " + std::to_string(shape.seq_width) + "]";
  if (shape.experiment == Experiment::wide_only ||
      shape.experiment == Experiment::wide_and_deep)
    wide = "[" + std::to_string(shape.n_patients) + " x " +
           std::to_string(kTabularFeatureCount) + "]";
  if (!deep.empty() && !wide.empty()) return deep + " + " + wide;
  return deep.empty() ? wide : deep;
}

EvalReport build_report(const std::vector<Prediction>& predictions,
                        const ReportShape& shape) {
  if (predictions.empty()) raise(Errc::empty_input, "no predictions to report");

  EvalReport report;
  report.index = target_table_label(shape.target);
  report.signal = experiment_signal_label(shape.experiment);
  report.size = size_label(shape);
  report.n_records = static_cast<int>(predictions.size());

  std::vector<double> preds, trues;
  preds.reserve(predictions.size());
  trues.reserve(predictions.size());
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_fold;
  for (const auto& p : predictions) {
    preds.push_back(p.pred_delta);
    trues.push_back(p.true_delta);
    by_fold[p.fold].first.push_back(p.pred_delta);
    by_fold[p.fold].second.push_back(p.true_delta);
  }

  report.rmse = rmse(preds, trues);
  report.accuracy = classification_accuracy(preds, trues);

  const auto [lo, hi] = std::minmax_element(trues.begin(), trues.end());
  report.value_range = *hi - *lo;
  report.normalized_rmse = report.value_range > 0.0 ? report.rmse / report.value_range : 0.0;

  double mean = 0.0;
  for (const auto& [fold, pt] : by_fold) {
    FoldMetrics fm;
    fm.rmse = rmse(pt.first, pt.second);
    fm.accuracy = classification_accuracy(pt.first, pt.second);
    report.per_fold.push_back(fm);
    mean += fm.rmse;
  }
  mean /= static_cast<double>(report.per_fold.size());
  double var = 0.0;
  for (const auto& fm : report.per_fold) var += (fm.rmse - mean) * (fm.rmse - mean);
  report.rmse_std_across_folds =
      std::sqrt(var / static_cast<double>(report.per_fold.size()));
  return report;
}

namespace {

constexpr const char* kReportHeader =
    "index,signal,size,rmse,rmse_std,range,normalized_rmse,accuracy";

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string percent2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", v * 100.0);
  return buf;
}

} // namespace

std::string render_report_table(const std::vector<EvalReport>& reports) {
  const std::vector<std::string> header = {"Index", "Signal", "Size",
                                           "RMSE",  "Normalized RMSE", "Accuracy"};
  std::vector<std::vector<std::string>> rows;
  rows.push_back(header);
  for (const auto& r : reports)
    rows.push_back({r.index, r.signal, r.size, fixed3(r.rmse), fixed3(r.normalized_rmse),
                    percent2(r.accuracy)});

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());

  std::ostringstream out;
  for (std::size_t ri = 0; ri < rows.size(); ++ri) {
    for (std::size_t i = 0; i < rows[ri].size(); ++i) {
      if (i) out << " | ";
      out << rows[ri][i];
      for (std::size_t pad = rows[ri][i].size(); pad < width[i]; ++pad) out << ' ';
    }
    out << '\n';
    if (ri == 0) {
      std::size_t total = 0;
      for (std::size_t i = 0; i < width.size(); ++i) total += width[i] + (i ? 3 : 0);
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

void emit_report(const std::vector<EvalReport>& reports,
                 const std::filesystem::path& csv_path) {
  if (reports.empty()) raise(Errc::empty_input, "no reports to emit");

  std::ofstream csv(csv_path);
  if (!csv) raise(Errc::io_failure, "cannot write " + csv_path.string());
  csv << kReportHeader << '\n';
  for (const auto& r : reports) {
    std::vector<std::string> fields = {r.index,
                                       r.signal,
                                       r.size,
                                       csv::format_double(r.rmse),
                                       csv::format_double(r.rmse_std_across_folds),
                                       csv::format_double(r.value_range),
                                       csv::format_double(r.normalized_rmse),
                                       csv::format_double(r.accuracy)};
    csv << csv::join_fields(fields) << '\n';
  }
  if (!csv) raise(Errc::io_failure, "write failed: " + csv_path.string());

  std::filesystem::path txt_path = csv_path;
  txt_path.replace_extension(".txt");
  std::ofstream txt(txt_path);
  if (!txt) raise(Errc::io_failure, "cannot write " + txt_path.string());
  txt << render_report_table(reports);
  if (!txt) raise(Errc::io_failure, "write failed: " + txt_path.string());
}

std::vector<EvalReport> read_report_csv(const std::filesystem::path& path) {
  csv::LineReader reader(path);
  std::string line;
  if (!reader.next(line) || line != kReportHeader)
    raise(Errc::malformed_row, path.string() + ": bad report header");
  std::vector<EvalReport> reports;
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto fields = csv::split_line(line);
    if (fields.size() != 8)
      raise(Errc::malformed_row,
            path.string() + ":" + std::to_string(reader.line_no()) + ": expected 8 fields");
    EvalReport r;
    r.index = fields[0];
    r.signal = fields[1];
    r.size = fields[2];
    r.rmse = csv::parse_double(fields[3], reader.line_no());
    r.rmse_std_across_folds = csv::parse_double(fields[4], reader.line_no());
    r.value_range = csv::parse_double(fields[5], reader.line_no());
    r.normalized_rmse = csv::parse_double(fields[6], reader.line_no());
    r.accuracy = csv::parse_double(fields[7], reader.line_no());
    // Leading dimension of the size label is the record count.
    std::size_t b = r.size.find('[');
    std::size_t e = r.size.find(' ', b == std::string::npos ? 0 : b);
    if (b != std::string::npos && e != std::string::npos)
      r.n_records = static_cast<int>(csv::parse_int(
          std::string_view(r.size).substr(b + 1, e - b - 1), reader.line_no()));
    reports.push_back(std::move(r));
  }
  if (reports.empty()) raise(Errc::empty_input, path.string() + " has no report rows");
  return reports;
}

} // namespace glyco
