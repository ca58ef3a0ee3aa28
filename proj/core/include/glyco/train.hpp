#pragma once

#include "glyco/model.hpp"
#include "glyco/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace glyco {

// The four experiment configurations: tabular only, glucose-only sequences,
// full fused sequences, and the combined wide-and-deep model.
enum class Experiment { wide_only, deep_cgm_only, deep_cgm_activity, wide_and_deep };

const char* experiment_key(Experiment e);          // CLI/config name
const char* experiment_signal_label(Experiment e); // report label, e.g. "C, A"
Experiment parse_experiment(const std::string& key);

struct TrainConfig {
  int epochs = 50;
  int folds = 5;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  Experiment experiment = Experiment::wide_and_deep;
  BiomarkerTarget target = BiomarkerTarget::hba1c;
  int hidden_dim = 64;
  bool wide_sigmoid = false;
  int threads = 1; // folds run concurrently up to this cap

  void validate() const; // folds >= 2, epochs >= 1, lr > 0
};

// Squared-error summand minimized during training; RMSE aggregates it.
double mse_loss(double pred, double target);
double mse_loss_grad(double pred, double target); // d loss / d pred

struct FoldAssignment {
  std::vector<int> fold_of; // parallel to the patient id list
  int folds = 0;
};

// Deterministic shuffled partition; a pure function of (seed, id list order).
// Fold sizes differ by at most one.
FoldAssignment make_folds(const std::vector<std::string>& patient_ids, int folds,
                          std::uint64_t seed);

// One patient after sync: the fused sequence plus tabular and target data.
struct CohortExample {
  std::string patient_id;
  FusedSequence fused;
  TabularFeatures tabular;
  BiomarkerDelta target;
};

struct TrainingExample {
  std::string patient_id;
  std::optional<SeqMatrix> seq;                          // per experiment
  std::optional<std::array<double, kTabularFeatureCount>> tabular;
  double target_delta = 0.0;
};

// Selects modalities per experiment: deep_cgm_only uses width-1 glucose
// sequences, the activity experiments width-9, wide experiments the 8 scalars.
std::vector<TrainingExample> build_inputs(const std::vector<CohortExample>& cohort,
                                          Experiment experiment);

// Adaptive-moment per-example updates (beta 0.9/0.999, eps 1e-8), examples
// reshuffled every epoch from the documented LCG stream; normalizers fitted
// on the training set only. Deterministic for a given (config, fold_index).
ModelParams train_fold(const std::vector<TrainingExample>& train_examples,
                       const TrainConfig& config, int fold_index);

struct Prediction {
  std::string patient_id;
  int fold = 0;
  BiomarkerTarget target = BiomarkerTarget::hba1c;
  double true_delta = 0.0;
  double pred_delta = 0.0;
};

struct CvResult {
  FoldAssignment assignment;
  std::vector<ModelParams> fold_params;  // one per fold
  std::vector<Prediction> predictions;   // out-of-fold, one per patient
};

CvResult cross_validate(const std::vector<CohortExample>& cohort, const TrainConfig& config);

// Predictions CSV: patient_id,fold,target,true_delta,pred_delta
void write_predictions_csv(const std::vector<Prediction>& predictions,
                           const std::filesystem::path& path);
std::vector<Prediction> read_predictions_csv(const std::filesystem::path& path);

} // namespace glyco
