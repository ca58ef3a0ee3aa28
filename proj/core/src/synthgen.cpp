#include "glyco/synthgen.hpp"

#include "glyco/csv.hpp"
#include "glyco/errors.hpp"
#include "glyco/log.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace glyco {

namespace {

// Substream salts: per patient i the CGM stream is 4i, activity 4i+1, tabular
// 4i+2, biomarker baselines 4i+3; the cohort-level target-noise stream uses a
// fixed salt drawn after all patients.
constexpr std::uint64_t kNoiseStreamSalt = 0x6e6f697365ULL; // "noise"

constexpr double kClampLo = 40.0;
constexpr double kClampHi = 400.0;
constexpr std::array<double, 3> kMealHours = {7.5, 12.5, 18.5};

std::string patient_id_for(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "p%04d", index + 1);
  return buf;
}

double day_fraction(Timestamp t) {
  const std::int64_t mod = ((t % 86400) + 86400) % 86400;
  return static_cast<double>(mod) / 86400.0;
}

} // namespace

void SynthConfig::validate() const {
  if (n_patients < 1) raise(Errc::config_error, "n_patients must be >= 1");
  if (days < 1) raise(Errc::config_error, "days must be >= 1");
  if (cgm_interval <= 0 || activity_epoch <= 0)
    raise(Errc::config_error, "sensor cadences must be positive");
  if (cgm_interval % activity_epoch != 0)
    raise(Errc::config_error, "cgm_interval must be a multiple of activity_epoch");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    raise(Errc::config_error, "dropout_rate must lie in [0, 1)");
  if (noise_sd < 0.0 || cgm_noise_sd < 0.0)
    raise(Errc::config_error, "noise levels must be non-negative");
}

PatientState make_patient_state(int index, std::uint64_t cohort_seed) {
  return {index, patient_id_for(index), cohort_seed};
}

CgmSeries generate_cgm(const PatientState& patient, const SynthConfig& config) {
  config.validate();
  rng::SplitMix64 stream(
      rng::derive_seed(patient.cohort_seed, 4ULL * static_cast<std::uint64_t>(patient.index)));

  const double baseline = stream.uniform(config.baseline_lo, config.baseline_hi);
  const double circ_amp = stream.uniform(config.circadian_amp_lo, config.circadian_amp_hi);
  const double circ_phase = stream.uniform(0.0, 2.0 * std::numbers::pi);
  const Timestamp start = static_cast<Timestamp>(stream.bounded(300));

  struct Meal {
    Timestamp peak;
    double amplitude;
    double decay; // seconds
  };
  std::vector<Meal> meals;
  meals.reserve(static_cast<std::size_t>(config.days) * config.meals_per_day);
  for (int day = 0; day < config.days; ++day) {
    for (int m = 0; m < config.meals_per_day; ++m) {
      const double hour = kMealHours[static_cast<std::size_t>(m) % kMealHours.size()];
      const double amplitude = stream.uniform(config.meal_amp_lo, config.meal_amp_hi);
      const double jitter = stream.uniform(-2700.0, 2700.0);
      const double decay = stream.uniform(7200.0, 10800.0); // 2-3 h
      meals.push_back({start + static_cast<Timestamp>(day) * 86400 +
                           static_cast<Timestamp>(std::llround(hour * 3600.0 + jitter)),
                       amplitude, decay});
    }
  }

  CgmSeries series;
  series.patient_id = patient.id;
  series.nominal_spacing = config.cgm_interval;
  const int n = config.cgm_samples();
  series.samples.reserve(n);
  for (int k = 0; k < n; ++k) {
    const Timestamp t = start + static_cast<Timestamp>(k) * config.cgm_interval;
    double g = baseline +
               circ_amp * std::sin(2.0 * std::numbers::pi * day_fraction(t) + circ_phase);
    for (const Meal& meal : meals) {
      const double u = static_cast<double>(t - meal.peak);
      if (u < -3600.0 || u > 6.0 * meal.decay) continue;
      const double shape = u < 0.0 ? std::exp(-u * u / (2.0 * 1200.0 * 1200.0))
                                   : std::exp(-u / meal.decay);
      g += meal.amplitude * shape;
    }
    g += stream.normal(0.0, config.cgm_noise_sd);
    g = std::min(std::max(g, kClampLo), kClampHi);
    series.samples.push_back({t, g});
  }
  return series;
}

ActivitySeries generate_activity(const PatientState& patient, const SynthConfig& config,
                                 Timestamp cover_from, Timestamp cover_to) {
  config.validate();
  rng::SplitMix64 stream(rng::derive_seed(
      patient.cohort_seed, 4ULL * static_cast<std::uint64_t>(patient.index) + 1));

  const int count = config.activity_epochs();
  // Grid offset 0..270 s keeps the activity span covering the CGM span when
  // the cadences are the defaults and nothing is dropped.
  Timestamp max_offset = std::min<Timestamp>(
      270, static_cast<Timestamp>(count - 1) * config.activity_epoch -
               std::max<Timestamp>(cover_to - cover_from, 0));
  if (max_offset < 0) max_offset = 0;
  const Timestamp start =
      cover_from - static_cast<Timestamp>(stream.bounded(
                       static_cast<std::uint64_t>(max_offset) + 1));

  const double scale = stream.uniform(50.0, 250.0);
  const double L = static_cast<double>(config.activity_epoch);

  ActivitySeries series;
  series.patient_id = patient.id;
  series.epoch_length = config.activity_epoch;
  series.samples.reserve(count);
  for (int k = 0; k < count; ++k) {
    const Timestamp t = start + static_cast<Timestamp>(k) * config.activity_epoch;
    if (config.dropout_rate > 0.0 && stream.u01() < config.dropout_rate) continue;

    const double hour = day_fraction(t) * 24.0;
    const bool daytime = hour >= 7.0 && hour < 22.0;
    double level;
    if (daytime) {
      level = scale * (0.5 + 0.5 * std::sin(std::numbers::pi * (hour - 7.0) / 15.0));
      if (stream.u01() < 0.08) level *= stream.uniform(2.0, 5.0);
    } else {
      level = scale * 0.02;
    }

    ActivitySample s;
    s.dx = level * stream.uniform(0.7, 1.3);
    s.dy = level * stream.uniform(0.5, 1.1);
    s.dz = level * stream.uniform(0.3, 0.9);
    s.steps = daytime ? std::floor(level / 8.0 * stream.uniform(0.0, 1.5)) : 0.0;

    double w_sit, w_std, w_lie, w_off;
    if (daytime) {
      w_sit = stream.uniform(0.2, 0.7);
      w_std = stream.uniform(0.1, 0.6);
      w_lie = stream.uniform(0.0, 0.15);
      w_off = stream.uniform(0.0, 0.1);
    } else {
      w_sit = stream.uniform(0.0, 0.1);
      w_std = stream.uniform(0.0, 0.05);
      w_lie = stream.uniform(0.7, 1.0);
      w_off = stream.uniform(0.0, 0.2);
    }
    const double total = w_sit + w_std + w_lie + w_off;
    // Integer seconds with the remainder in i_off: the partition sums to the
    // epoch length exactly.
    s.i_sit = std::floor(L * w_sit / total);
    s.i_std = std::floor(L * w_std / total);
    s.i_lie = std::floor(L * w_lie / total);
    s.i_off = L - s.i_sit - s.i_std - s.i_lie;

    series.samples.push_back({t, s});
  }
  return series;
}

TabularFeatures generate_tabular(const PatientState& patient, const SynthConfig& config) {
  config.validate();
  rng::SplitMix64 stream(rng::derive_seed(
      patient.cohort_seed, 4ULL * static_cast<std::uint64_t>(patient.index) + 2));
  TabularFeatures t;
  t.height_m = stream.uniform(1.50, 1.95);
  t.weight_kg = stream.uniform(55.0, 120.0);
  t.age_years = stream.uniform(33.0, 78.0); // cohort age range
  t.waist_m = stream.uniform(0.70, 1.30);
  t.triglycerides_mg_dl = stream.uniform(80.0, 300.0);
  t.ldl_mg_dl = stream.uniform(60.0, 190.0);
  t.hdl_mg_dl = stream.uniform(30.0, 90.0);
  t.vldl_mg_dl = stream.uniform(10.0, 50.0);
  return t;
}

GeneratingFeatures compute_generating_features(const CgmSeries& cgm,
                                               const ActivitySeries& activity,
                                               const TabularFeatures& tabular) {
  GeneratingFeatures f;
  double sum = 0.0;
  for (const auto& s : cgm.samples) sum += s.glucose;
  f.mean_glucose = sum / static_cast<double>(cgm.samples.size());
  double var = 0.0;
  for (const auto& s : cgm.samples) {
    const double d = s.glucose - f.mean_glucose;
    var += d * d;
  }
  f.glucose_variance = var / static_cast<double>(cgm.samples.size());

  double mag = 0.0;
  for (const auto& e : activity.samples)
    mag += std::sqrt(e.sample.dx * e.sample.dx + e.sample.dy * e.sample.dy +
                     e.sample.dz * e.sample.dz);
  f.mean_activity_magnitude = mag / static_cast<double>(activity.samples.size());

  f.age = tabular.age_years;
  f.weight = tabular.weight_kg;
  return f;
}

std::array<double, 6> default_planted_coefficients() {
  // Raw-scale weights over (mean glucose, glucose variance, mean activity
  // magnitude, age, weight) plus an intercept centering the cohort near zero;
  // calibrated against the default generator's observed feature means
  // (~158, ~425, ~130, ~57.7, ~87.8) for a ~1 HbA1c-point delta sd.
  return {0.035, 0.0008, -0.006, 0.02, 0.012, -7.29};
}

PlantedTruth plant_targets(const std::vector<GeneratingFeatures>& features,
                           const std::array<double, 6>& coefficients, double noise_sd,
                           rng::SplitMix64& rng) {
  PlantedTruth truth;
  truth.coefficients = coefficients;
  truth.features = features;
  truth.achievable_rmse = noise_sd;
  truth.noise.reserve(features.size());
  truth.deltas.reserve(features.size());
  for (const auto& f : features) {
    const auto x = f.to_array();
    double delta = coefficients[5];
    for (std::size_t k = 0; k < x.size(); ++k) delta += coefficients[k] * x[k];
    const double noise = rng.normal(0.0, noise_sd);
    truth.noise.push_back(noise);
    truth.deltas.push_back(delta + noise);
  }
  return truth;
}

void write_planted_truth(const PlantedTruth& truth, const std::vector<std::string>& ids,
                         const std::filesystem::path& truth_csv,
                         const std::filesystem::path& model_csv) {
  {
    std::ofstream out(truth_csv);
    if (!out) raise(Errc::io_failure, "cannot write " + truth_csv.string());
    out << "patient_id";
    for (const char* name : kGeneratingFeatureNames) out << ',' << name;
    out << ",noise,delta\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out << ids[i];
      for (double v : truth.features[i].to_array()) out << ',' << csv::format_double(v);
      out << ',' << csv::format_double(truth.noise[i]) << ','
          << csv::format_double(truth.deltas[i]) << '\n';
    }
    if (!out) raise(Errc::io_failure, "write failed: " + truth_csv.string());
  }
  {
    std::ofstream out(model_csv);
    if (!out) raise(Errc::io_failure, "cannot write " + model_csv.string());
    out << "term,value\n";
    for (std::size_t k = 0; k < kGeneratingFeatureNames.size(); ++k)
      out << kGeneratingFeatureNames[k] << ',' << csv::format_double(truth.coefficients[k])
          << '\n';
    out << "intercept," << csv::format_double(truth.coefficients[5]) << '\n';
    out << "achievable_rmse," << csv::format_double(truth.achievable_rmse) << '\n';
    if (!out) raise(Errc::io_failure, "write failed: " + model_csv.string());
  }
}

SynthResult generate_cohort(const SynthConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);

  Manifest manifest;
  manifest.dir = out_dir;
  std::vector<GeneratingFeatures> features;
  std::vector<std::string> ids;

  for (int i = 0; i < config.n_patients; ++i) {
    const PatientState patient = make_patient_state(i, config.seed);
    CgmSeries cgm = generate_cgm(patient, config);
    ActivitySeries activity = generate_activity(patient, config, cgm.samples.front().t,
                                                cgm.samples.back().t);
    TabularFeatures tabular = generate_tabular(patient, config);

    const std::string cgm_file = "cgm_" + patient.id + ".csv";
    const std::string act_file = "activity_" + patient.id + ".csv";
    write_cgm_csv(cgm, out_dir / cgm_file);
    write_activity_csv(activity, out_dir / act_file);

    features.push_back(compute_generating_features(cgm, activity, tabular));
    ids.push_back(patient.id);

    ManifestEntry entry;
    entry.patient_id = patient.id;
    entry.cgm_file = cgm_file;
    entry.activity_file = act_file;
    entry.tabular = tabular;
    manifest.entries.push_back(std::move(entry));
  }

  rng::SplitMix64 noise_stream(rng::derive_seed(config.seed, kNoiseStreamSalt));
  PlantedTruth truth =
      plant_targets(features, default_planted_coefficients(), config.noise_sd, noise_stream);

  for (int i = 0; i < config.n_patients; ++i) {
    ManifestEntry& entry = manifest.entries[static_cast<std::size_t>(i)];
    rng::SplitMix64 stream(
        rng::derive_seed(config.seed, 4ULL * static_cast<std::uint64_t>(i) + 3));
    const double delta = truth.deltas[static_cast<std::size_t>(i)];

    auto add_target = [&entry](const char* key, double baseline, double delta_scaled) {
      ManifestEntry::TargetPair pair;
      pair.baseline = baseline;
      pair.followup = baseline + delta_scaled;
      pair.delta = *pair.followup - baseline;
      entry.targets[key] = pair;
    };
    add_target("hba1c", stream.uniform(6.0, 10.5), delta);
    add_target("hdl", entry.tabular.hdl_mg_dl, kTargetScaleHdl * delta);
    add_target("ldl", entry.tabular.ldl_mg_dl, kTargetScaleLdl * delta);
    add_target("triglycerides", entry.tabular.triglycerides_mg_dl,
               kTargetScaleTriglycerides * delta);
  }

  const auto manifest_path = out_dir / "manifest.txt";
  write_manifest(manifest, manifest_path);
  write_planted_truth(truth, ids, out_dir / "planted_truth.csv",
                      out_dir / "planted_model.csv");
  log::info("synth", "cohort_written",
            {{"patients", std::to_string(config.n_patients)},
             {"dir", out_dir.string()}});
  return {manifest_path, std::move(truth)};
}

} // namespace glyco
