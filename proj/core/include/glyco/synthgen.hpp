#pragma once

#include "glyco/ingest.hpp"
#include "glyco/rng.hpp"
#include "glyco/types.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace glyco {

// Synthetic cohorts with the clinical dataset's shapes and a planted linear
// relationship between per-patient signal statistics and the biomarker delta,
// so the pipeline's recovery can be measured against a known noise floor.
struct SynthConfig {
  int n_patients = 50;
  int days = 7;
  std::int64_t cgm_interval = 300;
  std::int64_t activity_epoch = 30;
  std::uint64_t seed = 0;
  double noise_sd = 0.3;     // target-unit noise on the planted relationship
  double dropout_rate = 0.0; // probability of a missing activity epoch

  // Signal-shape knobs (degenerate settings make the generator constant).
  double cgm_noise_sd = 5.0;        // mg/dL white noise
  int meals_per_day = 3;
  double meal_amp_lo = 30.0, meal_amp_hi = 80.0;          // mg/dL
  double circadian_amp_lo = 5.0, circadian_amp_hi = 15.0; // mg/dL
  double baseline_lo = 90.0, baseline_hi = 180.0;         // mg/dL

  int cgm_samples() const { return static_cast<int>(days * 86400 / cgm_interval); }
  int activity_epochs() const { return static_cast<int>(days * 86400 / activity_epoch); }

  void validate() const;
};

struct PatientState {
  int index = 0;
  std::string id;
  std::uint64_t cohort_seed = 0;
};

PatientState make_patient_state(int index, std::uint64_t cohort_seed);

// Per-patient baseline + three daily meal excursions + circadian sine + white
// noise, clamped to [40, 400] mg/dL, at the configured cadence.
CgmSeries generate_cgm(const PatientState& patient, const SynthConfig& config);

// Diurnal activity with exact posture partition (i_sit+i_std+i_lie+i_off ==
// epoch seconds); the epoch grid starts 0..270 s before cover_from so the
// activity span covers the CGM span when nothing is dropped.
ActivitySeries generate_activity(const PatientState& patient, const SynthConfig& config,
                                 Timestamp cover_from, Timestamp cover_to);

TabularFeatures generate_tabular(const PatientState& patient, const SynthConfig& config);

// The five generating features the planted map draws on.
struct GeneratingFeatures {
  double mean_glucose = 0.0;
  double glucose_variance = 0.0;
  double mean_activity_magnitude = 0.0; // mean of sqrt(dx^2+dy^2+dz^2)
  double age = 0.0;
  double weight = 0.0;

  std::array<double, 5> to_array() const {
    return {mean_glucose, glucose_variance, mean_activity_magnitude, age, weight};
  }
};

inline constexpr std::array<const char*, 5> kGeneratingFeatureNames = {
    "mean_glucose", "glucose_variance", "mean_activity_magnitude", "age", "weight"};

GeneratingFeatures compute_generating_features(const CgmSeries& cgm,
                                               const ActivitySeries& activity,
                                               const TabularFeatures& tabular);

// delta_i = sum_k coeffs[k] * f_ik + coeffs[5] (intercept) + N(0, noise_sd).
// Everything needed to reconstruct each delta exactly is recorded.
struct PlantedTruth {
  std::array<double, 6> coefficients{}; // five feature weights + intercept
  std::vector<GeneratingFeatures> features;
  std::vector<double> noise;
  std::vector<double> deltas;
  double achievable_rmse = 0.0; // == noise_sd, the irreducible error
};

// Defaults produce a delta spread of roughly +-2 HbA1c points, centered near
// zero, dominated by the mean-glucose term (calibrated against the default
// generator ranges).
std::array<double, 6> default_planted_coefficients();

PlantedTruth plant_targets(const std::vector<GeneratingFeatures>& features,
                           const std::array<double, 6>& coefficients, double noise_sd,
                           rng::SplitMix64& rng);

// HbA1c carries the planted delta; the other targets get unit-scaled copies.
inline constexpr double kTargetScaleHdl = 6.0;
inline constexpr double kTargetScaleLdl = 10.0;
inline constexpr double kTargetScaleTriglycerides = 18.0;

struct SynthResult {
  std::filesystem::path manifest_path;
  PlantedTruth truth;
};

// Writes per-patient CGM/activity CSVs, the cohort manifest, planted_truth.csv
// and planted_model.csv into out_dir.
SynthResult generate_cohort(const SynthConfig& config, const std::filesystem::path& out_dir);

void write_planted_truth(const PlantedTruth& truth, const std::vector<std::string>& ids,
                         const std::filesystem::path& truth_csv,
                         const std::filesystem::path& model_csv);

} // namespace glyco
