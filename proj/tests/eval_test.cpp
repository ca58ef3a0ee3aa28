#include "glyco/eval.hpp"

#include "glyco/errors.hpp"
#include "glyco/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"

using namespace glyco;

TEST_CASE("rmse on known inputs") {
  CHECK(rmse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  CHECK(rmse({2.0}, {0.0}) == 2.0);
  // hand-summed: sqrt((1 + 4 + 4) / 3) = sqrt(3)
  CHECK(rmse({1.0, 0.0, -1.0}, {0.0, 2.0, 1.0}) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("rmse error paths") {
  try {
    rmse({1.0}, {1.0, 2.0});
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::length_mismatch);
  }
  try {
    rmse({}, {});
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_input);
  }
}

TEST_CASE("rmse properties") {
  rng::SplitMix64 rng(606);

  SUBCASE("non-negative, zero only at equality") {
    for (int iter = 0; iter < 20; ++iter) {
      std::vector<double> p(6), t(6);
      for (int i = 0; i < 6; ++i) {
        p[i] = rng.uniform(-3.0, 3.0);
        t[i] = rng.uniform(-3.0, 3.0);
      }
      const double e = rmse(p, t);
      CHECK(e >= 0.0);
      if (p != t) CHECK(e > 0.0);
      CHECK(rmse(p, p) == 0.0);
    }
  }
  SUBCASE("positive scaling scales rmse and keeps accuracy") {
    for (int iter = 0; iter < 20; ++iter) {
      std::vector<double> p(8), t(8);
      for (int i = 0; i < 8; ++i) {
        p[i] = rng.uniform(-3.0, 3.0);
        t[i] = rng.uniform(-3.0, 3.0);
      }
      const double k = rng.uniform(0.1, 10.0);
      std::vector<double> pk = p, tk = t;
      for (auto& v : pk) v *= k;
      for (auto& v : tk) v *= k;
      CHECK(rmse(pk, tk) == doctest::Approx(k * rmse(p, t)).epsilon(1e-12));
      CHECK(classification_accuracy(pk, tk) == classification_accuracy(p, t));
    }
  }
  SUBCASE("translation is detected") {
    for (int iter = 0; iter < 20; ++iter) {
      std::vector<double> p(8), t(8);
      double residual_sum = 0.0;
      for (int i = 0; i < 8; ++i) {
        p[i] = rng.uniform(-3.0, 3.0);
        t[i] = rng.uniform(-3.0, 3.0);
        residual_sum += p[i] - t[i];
      }
      double c = rng.uniform(0.5, 2.0);
      // rmse is unchanged only at c = 0 or c = -2*mean(residual); dodge both
      if (std::fabs(c + residual_sum / 4.0) < 1e-6) c += 1.0;
      std::vector<double> shifted = p;
      for (auto& v : shifted) v += c;
      CHECK(rmse(shifted, t) != rmse(p, t));
    }
  }
}

TEST_CASE("classify_delta boundary") {
  CHECK(classify_delta(0.0) == DeltaClass::improvement); // zero counts as improvement
  CHECK(classify_delta(-1.3) == DeltaClass::improvement);
  CHECK(classify_delta(0.0001) == DeltaClass::deterioration);
}

TEST_CASE("classification_accuracy") {
  CHECK(classification_accuracy({-1, 2, -3}, {-2, 1, -1}) == 1.0);
  CHECK(classification_accuracy({1, 1}, {-1, -1}) == 0.0);
  // enumerated: signs match for -1/-2 and +2/+3 only
  CHECK(classification_accuracy({-1, 1, 0, 2}, {-2, -1, 1, 3}) == 0.5);
  CHECK_THROWS_AS(classification_accuracy({1.0}, {}), Error);
}

TEST_CASE("build_report aggregates folds and ranges") {
  std::vector<Prediction> preds;
  // two folds of three, constructed residuals
  const double trues[6] = {-1.0, 0.5, 2.0, -0.5, 1.0, -2.0};
  const double errs[6] = {0.1, -0.2, 0.3, 0.0, -0.1, 0.2};
  for (int i = 0; i < 6; ++i)
    preds.push_back({"p" + std::to_string(i), i / 3, BiomarkerTarget::hba1c, trues[i],
                     trues[i] + errs[i]});

  ReportShape shape;
  shape.experiment = Experiment::wide_and_deep;
  shape.target = BiomarkerTarget::hba1c;
  shape.n_patients = 6;
  shape.seq_len = 12;
  shape.seq_width = 9;

  const EvalReport r = build_report(preds, shape);
  CHECK(r.index == "HBA1c");
  CHECK(r.signal == "C, A, D, L");
  CHECK(r.size == "[6 x 12 x 9] + [6 x 8]");
  CHECK(r.n_records == 6);
  CHECK(r.value_range == 4.0); // 2.0 - (-2.0)
  CHECK(r.normalized_rmse * r.value_range == doctest::Approx(r.rmse).epsilon(1e-12));
  CHECK(r.per_fold.size() == 2);
  // accuracy == correct / n exactly: one sign flip (fold 0, +0.5 stays +; all match
  // except none flipped here -> recount: -0.9,0.3,2.3,-0.5,0.9,-1.8 vs trues)
  CHECK(r.accuracy == 1.0);
}

TEST_CASE("emit_report writes CSV and table that round-trip") {
  test::TempDir dir("report");
  EvalReport r;
  r.index = "HBA1c";
  r.signal = "C, A";
  r.size = "[50 x 1445 x 9]";
  r.n_records = 50;
  r.rmse = 1.673;
  r.rmse_std_across_folds = 0.126;
  r.value_range = 10.078;
  r.normalized_rmse = 0.166;
  r.accuracy = 0.8604;

  const auto csv_path = dir / "report.csv";
  emit_report({r}, csv_path);
  CHECK(std::filesystem::exists(csv_path));
  CHECK(std::filesystem::exists(dir / "report.txt"));

  const std::string csv_text = test::read_file(csv_path);
  CHECK(std::count(csv_text.begin(), csv_text.end(), '\n') == 2); // header + one row

  const auto back = read_report_csv(csv_path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].index == r.index);
  CHECK(back[0].signal == r.signal);
  CHECK(back[0].size == r.size);
  CHECK(back[0].n_records == 50);
  CHECK(back[0].rmse == r.rmse);
  CHECK(back[0].rmse_std_across_folds == r.rmse_std_across_folds);
  CHECK(back[0].value_range == r.value_range);
  CHECK(back[0].normalized_rmse == r.normalized_rmse);
  CHECK(back[0].accuracy == r.accuracy);
}

TEST_CASE("the published summary table renders with its column layout") {
  // Fixture rows re-entered from the reference summary table.
  struct Row {
    const char* index;
    const char* signal;
    const char* size;
    double rmse, norm, acc;
  };
  const Row rows[] = {
      {"HBA1c", "C", "[50 x 1445 x 1]", 1.722, 0.170, 0.8123},
      {"HBA1c", "C, A", "[50 x 1445 x 9]", 1.673, 0.166, 0.8604},
      {"HBA1c", "D, L", "[50 x 8]", 2.444, 0.242, 0.7487},
      {"HBA1c", "C, A, D, L", "[50 x 1445 x 9] + [50 x 8]", 1.668, 0.165, 0.8604},
      {"HDL", "C, A", "[59 x 1445 x 9]", 6.220, 0.094, 0.8045},
      {"LDL", "C, A", "[59 x 1445 x 9]", 10.458, 0.070, 0.8139},
      {"TC", "C, A", "[59 x 1445 x 9]", 18.377, 0.029, 0.8921},
  };
  std::vector<EvalReport> reports;
  for (const Row& row : rows) {
    EvalReport r;
    r.index = row.index;
    r.signal = row.signal;
    r.size = row.size;
    r.rmse = row.rmse;
    r.normalized_rmse = row.norm;
    r.accuracy = row.acc;
    r.value_range = row.norm > 0 ? row.rmse / row.norm : 0.0;
    reports.push_back(r);
  }

  const std::string table = render_report_table(reports);
  CHECK(table.find("Index") != std::string::npos);
  CHECK(table.find("Signal") != std::string::npos);

  // The combined row keeps the column order Index | Signal | Size | RMSE |
  // normalized RMSE | Accuracy.
  const auto line_start = table.find("HBA1c | C, A, D, L");
  REQUIRE(line_start != std::string::npos);
  const auto line_end = table.find('\n', line_start);
  const std::string line = table.substr(line_start, line_end - line_start);
  const auto pos_rmse = line.find("1.668");
  const auto pos_norm = line.find("0.165", pos_rmse);
  const auto pos_acc = line.find("86.04%", pos_norm);
  CHECK(pos_rmse != std::string::npos);
  CHECK(pos_norm != std::string::npos);
  CHECK(pos_acc != std::string::npos);
}

TEST_CASE("normalized rmse is invariant under a consistent unit change") {
  rng::SplitMix64 rng(7171);
  std::vector<Prediction> preds;
  for (int i = 0; i < 10; ++i) {
    const double t = rng.uniform(-2.0, 2.0);
    preds.push_back({"p" + std::to_string(i), i % 2, BiomarkerTarget::hba1c, t,
                     t + rng.uniform(-0.5, 0.5)});
  }
  ReportShape shape;
  shape.n_patients = 10;
  shape.seq_len = 4;
  shape.seq_width = 9;

  const EvalReport base = build_report(preds, shape);
  auto scaled = preds;
  for (auto& p : scaled) {
    p.true_delta *= 18.0;
    p.pred_delta *= 18.0;
  }
  const EvalReport rescaled = build_report(scaled, shape);
  CHECK(rescaled.normalized_rmse == doctest::Approx(base.normalized_rmse).epsilon(1e-12));
  CHECK(rescaled.accuracy == base.accuracy);
}

TEST_CASE("size labels cover every experiment shape") {
  ReportShape s;
  s.n_patients = 50;
  s.seq_len = 1445;
  s.seq_width = 9;

  s.experiment = Experiment::wide_and_deep;
  CHECK(size_label(s) == "[50 x 1445 x 9] + [50 x 8]");

  s.experiment = Experiment::deep_cgm_activity;
  CHECK(size_label(s) == "[50 x 1445 x 9]");

  s.experiment = Experiment::deep_cgm_only;
  s.seq_width = 1;
  CHECK(size_label(s) == "[50 x 1445 x 1]");

  s.experiment = Experiment::wide_only;
  s.seq_len = 0;
  s.seq_width = 0;
  CHECK(size_label(s) == "[50 x 8]");
}
