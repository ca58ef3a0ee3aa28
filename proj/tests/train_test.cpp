#include "glyco/train.hpp"

#include "glyco/checkpoint.hpp"
#include "glyco/errors.hpp"
#include "glyco/log.hpp"
#include "glyco/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "support.hpp"

using namespace glyco;

namespace {

std::vector<CohortExample> toy_cohort(int n_patients, int seq_len, std::uint64_t seed) {
  rng::SplitMix64 rng(seed);
  std::vector<CohortExample> cohort;
  for (int i = 0; i < n_patients; ++i) {
    CohortExample ex;
    ex.patient_id = "p" + std::to_string(i + 1);
    const double level = rng.uniform(80.0, 200.0);
    for (int t = 0; t < seq_len; ++t) {
      FusedSample s;
      s.t = t * 300;
      s.glucose = level + rng.uniform(-5.0, 5.0);
      for (auto& v : s.avg_activity) v = rng.uniform(0.0, 50.0);
      ex.fused.samples.push_back(s);
    }
    ex.tabular = {1.7, rng.uniform(60.0, 110.0), rng.uniform(35.0, 75.0), 1.0,
                  150.0, 100.0, 50.0, 30.0};
    ex.target.target = BiomarkerTarget::hba1c;
    ex.target.baseline = 7.0;
    // Target tracks the glucose level, so the sequence carries real signal.
    ex.target.delta = (level - 140.0) / 40.0;
    ex.target.followup = ex.target.baseline + ex.target.delta;
    cohort.push_back(std::move(ex));
  }
  return cohort;
}

TrainConfig small_config(Experiment exp, int epochs = 3, int folds = 2) {
  TrainConfig c;
  c.epochs = epochs;
  c.folds = folds;
  c.learning_rate = 1e-3;
  c.seed = 11;
  c.experiment = exp;
  c.hidden_dim = 3;
  return c;
}

} // namespace


TEST_CASE("mse_loss values and gradient") {
  CHECK(mse_loss(2.0, 2.0) == 0.0);
  CHECK(mse_loss(3.0, 1.0) == 4.0);

  // finite-difference check of the analytic gradient at (3, 1)
  const double eps = 1e-6;
  const double numeric = (mse_loss(3.0 + eps, 1.0) - mse_loss(3.0 - eps, 1.0)) / (2 * eps);
  CHECK(mse_loss_grad(3.0, 1.0) == 4.0);
  CHECK(mse_loss_grad(3.0, 1.0) == doctest::Approx(numeric).epsilon(1e-8));
}

TEST_CASE("make_folds balances and is deterministic") {
  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.push_back("p" + std::to_string(i));

  SUBCASE("50 patients, 5 folds of 10") {
    const FoldAssignment a = make_folds(ids, 5, 3);
    std::map<int, int> sizes;
    for (int f : a.fold_of) ++sizes[f];
    REQUIRE(sizes.size() == 5);
    for (const auto& [fold, n] : sizes) CHECK(n == 10);
  }
  SUBCASE("7 patients into 5 folds gives sizes 2,2,1,1,1") {
    const std::vector<std::string> seven(ids.begin(), ids.begin() + 7);
    const FoldAssignment a = make_folds(seven, 5, 3);
    std::map<int, int> sizes;
    for (int f : a.fold_of) ++sizes[f];
    std::vector<int> observed;
    for (const auto& [fold, n] : sizes) observed.push_back(n);
    std::sort(observed.begin(), observed.end(), std::greater<>());
    CHECK(observed == std::vector<int>{2, 2, 1, 1, 1});
  }
  SUBCASE("same seed twice is identical") {
    CHECK(make_folds(ids, 5, 99).fold_of == make_folds(ids, 5, 99).fold_of);
  }
  SUBCASE("every patient lands in exactly one fold in range") {
    const FoldAssignment a = make_folds(ids, 7, 5);
    for (int f : a.fold_of) {
      CHECK(f >= 0);
      CHECK(f < 7);
    }
    CHECK(a.fold_of.size() == ids.size());
  }
  SUBCASE("more folds than patients") {
    const std::vector<std::string> three(ids.begin(), ids.begin() + 3);
    try {
      make_folds(three, 5, 0);
      FAIL("expected TooFewPatients");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::too_few_patients);
    }
  }
}

TEST_CASE("build_inputs shapes follow the experiment") {
  const auto cohort = toy_cohort(4, 6, 1);

  SUBCASE("deep_cgm_only uses width-1 glucose sequences") {
    const auto ex = build_inputs(cohort, Experiment::deep_cgm_only);
    REQUIRE(ex.size() == 4);
    CHECK(ex[0].seq->width == 1);
    CHECK(ex[0].seq->len == 6);
    CHECK(!ex[0].tabular);
    CHECK(ex[0].seq->data[0] == cohort[0].fused.samples[0].glucose);
  }
  SUBCASE("deep_cgm_activity uses width-9 sequences") {
    const auto ex = build_inputs(cohort, Experiment::deep_cgm_activity);
    CHECK(ex[0].seq->width == 9);
    CHECK(!ex[0].tabular);
  }
  SUBCASE("wide_only carries only the 8 scalars") {
    const auto ex = build_inputs(cohort, Experiment::wide_only);
    CHECK(!ex[0].seq);
    REQUIRE(ex[0].tabular);
    CHECK(ex[0].tabular->size() == 8);
  }
  SUBCASE("wide_and_deep carries both") {
    const auto ex = build_inputs(cohort, Experiment::wide_and_deep);
    CHECK(ex[0].seq->width == 9);
    CHECK(ex[0].tabular);
  }
  SUBCASE("missing fused data raises MissingModality") {
    auto broken = cohort;
    broken[2].fused.samples.clear();
    try {
      build_inputs(broken, Experiment::wide_and_deep);
      FAIL("expected MissingModality");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::missing_modality);
    }
  }
}

TEST_CASE("train_fold memorizes a single example") {
  log::enabled() = false;
  const auto cohort = toy_cohort(1, 8, 2);
  auto examples = build_inputs(cohort, Experiment::wide_and_deep);
  TrainConfig cfg = small_config(Experiment::wide_and_deep, 400, 2);
  cfg.learning_rate = 5e-3;
  cfg.hidden_dim = 4;
  const ModelParams params = train_fold(examples, cfg, 0);
  log::enabled() = true;

  const double pred = model_forward(params, &*examples[0].seq,
                                    std::span<const double>(*examples[0].tabular));
  CHECK(mse_loss(pred, examples[0].target_delta) < 1e-3);
}

TEST_CASE("train_fold is bitwise deterministic") {
  log::enabled() = false;
  const auto cohort = toy_cohort(4, 6, 3);
  const auto examples = build_inputs(cohort, Experiment::wide_and_deep);
  const TrainConfig cfg = small_config(Experiment::wide_and_deep);
  const ModelParams a = train_fold(examples, cfg, 1);
  const ModelParams b = train_fold(examples, cfg, 1);
  log::enabled() = true;
  CHECK(checkpoint_bytes(a) == checkpoint_bytes(b));
}

TEST_CASE("train_fold reports divergence") {
  log::enabled() = false;
  const auto cohort = toy_cohort(2, 4, 4);
  const auto examples = build_inputs(cohort, Experiment::wide_only);
  TrainConfig cfg = small_config(Experiment::wide_only, 50, 2);
  cfg.learning_rate = 1e200; // drives the affine branch to overflow
  try {
    train_fold(examples, cfg, 0);
    FAIL("expected DivergedLoss");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::diverged_loss);
  }
  log::enabled() = true;
}

TEST_CASE("config invariants are enforced") {
  TrainConfig cfg = small_config(Experiment::wide_only);
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config(Experiment::wide_only);
  cfg.folds = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("cross_validate produces one out-of-fold prediction per patient") {
  log::enabled() = false;
  const auto cohort = toy_cohort(10, 5, 5);
  TrainConfig cfg = small_config(Experiment::wide_and_deep, 2, 5);
  const CvResult cv = cross_validate(cohort, cfg);
  log::enabled() = true;

  CHECK(cv.predictions.size() == cohort.size());
  std::set<std::string> seen;
  for (const auto& p : cv.predictions) seen.insert(p.patient_id);
  CHECK(seen.size() == cohort.size());

  // No patient's prediction comes from a model trained on its own fold.
  for (std::size_t i = 0; i < cohort.size(); ++i)
    CHECK(cv.predictions[i].fold == cv.assignment.fold_of[i]);
}

TEST_CASE("leave-one-out degenerate case runs") {
  log::enabled() = false;
  const auto cohort = toy_cohort(4, 4, 6);
  TrainConfig cfg = small_config(Experiment::wide_only, 2, 4);
  const CvResult cv = cross_validate(cohort, cfg);
  log::enabled() = true;
  CHECK(cv.predictions.size() == 4);
}

TEST_CASE("held-out data cannot leak into a fold's checkpoint") {
  log::enabled() = false;
  const auto cohort = toy_cohort(8, 5, 7);
  TrainConfig cfg = small_config(Experiment::wide_and_deep, 2, 4);
  const CvResult base = cross_validate(cohort, cfg);

  // Perturb one patient and compare the checkpoints of the fold that held it out.
  auto perturbed = cohort;
  const std::size_t victim = 3;
  const int held_fold = base.assignment.fold_of[victim];
  for (auto& s : perturbed[victim].fused.samples) s.glucose += 37.5;
  perturbed[victim].tabular.weight_kg += 11.0;
  perturbed[victim].target.delta -= 2.0;
  const CvResult mutated = cross_validate(perturbed, cfg);
  log::enabled() = true;

  CHECK(checkpoint_bytes(base.fold_params[held_fold]) ==
        checkpoint_bytes(mutated.fold_params[held_fold]));
  // Sanity: folds that trained on the victim do change.
  bool other_changed = false;
  for (int k = 0; k < cfg.folds; ++k) {
    if (k == held_fold) continue;
    if (checkpoint_bytes(base.fold_params[k]) != checkpoint_bytes(mutated.fold_params[k]))
      other_changed = true;
  }
  CHECK(other_changed);
}

TEST_CASE("fold concurrency does not change results") {
  log::enabled() = false;
  const auto cohort = toy_cohort(6, 4, 8);
  TrainConfig cfg = small_config(Experiment::wide_and_deep, 2, 3);
  cfg.threads = 1;
  const CvResult serial = cross_validate(cohort, cfg);
  cfg.threads = 3;
  const CvResult parallel = cross_validate(cohort, cfg);
  log::enabled() = true;

  REQUIRE(serial.predictions.size() == parallel.predictions.size());
  for (std::size_t i = 0; i < serial.predictions.size(); ++i) {
    CHECK(serial.predictions[i].patient_id == parallel.predictions[i].patient_id);
    CHECK(serial.predictions[i].pred_delta == parallel.predictions[i].pred_delta);
  }
  for (int k = 0; k < cfg.folds; ++k)
    CHECK(checkpoint_bytes(serial.fold_params[k]) ==
          checkpoint_bytes(parallel.fold_params[k]));
}

TEST_CASE("predictions CSV round-trip") {
  test::TempDir dir("preds");
  std::vector<Prediction> preds = {
      {"p1", 0, BiomarkerTarget::hba1c, -0.5, -0.25},
      {"p2", 1, BiomarkerTarget::hba1c, 1.5, 0.75},
  };
  write_predictions_csv(preds, dir / "p.csv");
  const auto back = read_predictions_csv(dir / "p.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].patient_id == "p1");
  CHECK(back[0].true_delta == -0.5);
  CHECK(back[1].pred_delta == 0.75);
  CHECK(back[1].fold == 1);
}

TEST_CASE("every experiment cross-validates end to end") {
  log::enabled() = false;
  const auto cohort = toy_cohort(6, 5, 12);
  for (Experiment exp : {Experiment::wide_only, Experiment::deep_cgm_only,
                         Experiment::deep_cgm_activity, Experiment::wide_and_deep}) {
    TrainConfig cfg = small_config(exp, 2, 3);
    const CvResult cv = cross_validate(cohort, cfg);
    CHECK(cv.predictions.size() == cohort.size());
    for (const auto& p : cv.predictions) CHECK(std::isfinite(p.pred_delta));
    const ModelDims& dims = cv.fold_params[0].dims();
    switch (exp) {
      case Experiment::wide_only:
        CHECK(!dims.has_deep);
        CHECK(dims.has_wide);
        break;
      case Experiment::deep_cgm_only:
        CHECK(dims.input_dim == 1);
        CHECK(!dims.has_wide);
        break;
      case Experiment::deep_cgm_activity:
        CHECK(dims.input_dim == 9);
        CHECK(!dims.has_wide);
        break;
      case Experiment::wide_and_deep:
        CHECK(dims.input_dim == 9);
        CHECK(dims.has_wide);
        break;
    }
  }
  log::enabled() = true;
}
