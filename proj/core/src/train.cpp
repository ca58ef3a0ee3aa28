#include "glyco/train.hpp"

#include "glyco/csv.hpp"
#include "glyco/errors.hpp"
#include "glyco/log.hpp"
#include "glyco/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

namespace glyco {

const char* experiment_key(Experiment e) {
  switch (e) {
    case Experiment::wide_only: return "wide_only";
    case Experiment::deep_cgm_only: return "deep_cgm_only";
    case Experiment::deep_cgm_activity: return "deep_cgm_activity";
    case Experiment::wide_and_deep: return "wide_and_deep";
  }
  return "wide_and_deep";
}

const char* experiment_signal_label(Experiment e) {
  switch (e) {
    case Experiment::wide_only: return "D, L";
    case Experiment::deep_cgm_only: return "C";
    case Experiment::deep_cgm_activity: return "C, A";
    case Experiment::wide_and_deep: return "C, A, D, L";
  }
  return "C, A, D, L";
}

Experiment parse_experiment(const std::string& key) {
  if (key == "wide_only") return Experiment::wide_only;
  if (key == "deep_cgm_only") return Experiment::deep_cgm_only;
  if (key == "deep_cgm_activity") return Experiment::deep_cgm_activity;
  if (key == "wide_and_deep") return Experiment::wide_and_deep;
  raise(Errc::config_error,
        "unknown experiment '" + key +
            "' (expected wide_only|deep_cgm_only|deep_cgm_activity|wide_and_deep)");
}

void TrainConfig::validate() const {
  if (epochs < 1) raise(Errc::config_error, "epochs must be >= 1");
  if (folds < 2) raise(Errc::config_error, "folds must be >= 2");
  if (!(learning_rate > 0.0)) raise(Errc::config_error, "learning_rate must be > 0");
  if (hidden_dim < 1) raise(Errc::config_error, "hidden_dim must be >= 1");
  if (threads < 1) raise(Errc::config_error, "threads must be >= 1");
}

double mse_loss(double pred, double target) {
  const double r = pred - target;
  return r * r;
}

double mse_loss_grad(double pred, double target) { return 2.0 * (pred - target); }

FoldAssignment make_folds(const std::vector<std::string>& patient_ids, int folds,
                          std::uint64_t seed) {
  if (folds < 1 || patient_ids.size() < static_cast<std::size_t>(folds))
    raise(Errc::too_few_patients,
          std::to_string(patient_ids.size()) + " patients cannot fill " +
              std::to_string(folds) + " folds");
  std::vector<std::size_t> order(patient_ids.size());
  std::iota(order.begin(), order.end(), 0);
  rng::Lcg64 stream(rng::derive_seed(seed, 0x666f6c64 /* "fold" */));
  rng::shuffle(order, stream);

  FoldAssignment a;
  a.folds = folds;
  a.fold_of.assign(patient_ids.size(), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    a.fold_of[order[pos]] = static_cast<int>(pos % folds);
  return a;
}

std::vector<TrainingExample> build_inputs(const std::vector<CohortExample>& cohort,
                                          Experiment experiment) {
  const bool wants_seq =
      experiment != Experiment::wide_only;
  const bool wants_tab =
      experiment == Experiment::wide_only || experiment == Experiment::wide_and_deep;
  const bool glucose_only = experiment == Experiment::deep_cgm_only;

  std::vector<TrainingExample> examples;
  examples.reserve(cohort.size());
  for (const auto& patient : cohort) {
    TrainingExample ex;
    ex.patient_id = patient.patient_id;
    ex.target_delta = patient.target.delta;
    if (wants_seq) {
      if (patient.fused.samples.empty())
        raise(Errc::missing_modality,
              "patient " + patient.patient_id + " has no fused sequence");
      SeqMatrix m;
      m.len = patient.fused.samples.size();
      m.width = glucose_only ? 1 : 1 + kActivityFieldCount;
      m.data.reserve(m.len * m.width);
      for (const auto& s : patient.fused.samples) {
        m.data.push_back(s.glucose);
        if (!glucose_only)
          m.data.insert(m.data.end(), s.avg_activity.begin(), s.avg_activity.end());
      }
      ex.seq = std::move(m);
    }
    if (wants_tab) ex.tabular = patient.tabular.to_array();
    examples.push_back(std::move(ex));
  }
  return examples;
}

namespace {

ModelDims dims_for(const TrainConfig& config, const std::vector<TrainingExample>& examples) {
  ModelDims d;
  d.has_deep = config.experiment != Experiment::wide_only;
  d.has_wide = config.experiment == Experiment::wide_only ||
               config.experiment == Experiment::wide_and_deep;
  d.hidden_dim = config.hidden_dim;
  d.wide_sigmoid = config.wide_sigmoid;
  if (d.has_deep) {
    if (examples.empty() || !examples.front().seq)
      raise(Errc::missing_modality, "experiment requires sequences");
    d.input_dim = static_cast<int>(examples.front().seq->width);
    d.seq_len = static_cast<int>(examples.front().seq->len);
  } else {
    d.input_dim = 0;
    d.seq_len = 0;
  }
  return d;
}

// Population z-score statistics over the training set only; a zero-variance
// feature gets std 1 so it normalizes to a constant 0.
void fit_normalizers(ModelParams& params, const std::vector<TrainingExample>& examples) {
  const ModelDims& d = params.dims();
  if (d.has_deep) {
    const std::size_t width = static_cast<std::size_t>(d.input_dim);
    std::vector<double> sum(width, 0.0), sumsq(width, 0.0);
    std::size_t count = 0;
    for (const auto& ex : examples) {
      const auto& m = *ex.seq;
      for (std::size_t t = 0; t < m.len; ++t)
        for (std::size_t j = 0; j < width; ++j) sum[j] += m.data[t * width + j];
      count += m.len;
    }
    for (std::size_t j = 0; j < width; ++j) sum[j] /= static_cast<double>(count);
    for (const auto& ex : examples) {
      const auto& m = *ex.seq;
      for (std::size_t t = 0; t < m.len; ++t)
        for (std::size_t j = 0; j < width; ++j) {
          const double dlt = m.data[t * width + j] - sum[j];
          sumsq[j] += dlt * dlt;
        }
    }
    for (std::size_t j = 0; j < width; ++j) {
      const double var = sumsq[j] / static_cast<double>(count);
      params.seq_norm[j].mean = sum[j];
      params.seq_norm[j].std = var > 0.0 ? std::sqrt(var) : 1.0;
    }
  }
  if (d.has_wide) {
    const std::size_t width = static_cast<std::size_t>(d.wide_dim);
    std::vector<double> sum(width, 0.0), sumsq(width, 0.0);
    for (const auto& ex : examples)
      for (std::size_t j = 0; j < width; ++j) sum[j] += (*ex.tabular)[j];
    for (std::size_t j = 0; j < width; ++j) sum[j] /= static_cast<double>(examples.size());
    for (const auto& ex : examples)
      for (std::size_t j = 0; j < width; ++j) {
        const double dlt = (*ex.tabular)[j] - sum[j];
        sumsq[j] += dlt * dlt;
      }
    for (std::size_t j = 0; j < width; ++j) {
      const double var = sumsq[j] / static_cast<double>(examples.size());
      params.tab_norm[j].mean = sum[j];
      params.tab_norm[j].std = var > 0.0 ? std::sqrt(var) : 1.0;
    }
  }
}

struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(ModelParams& params, const std::vector<double>& grads, double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    auto values = params.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grads[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grads[i] * grads[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
    }
    params.mark_mutated();
  }
};

} // namespace

ModelParams train_fold(const std::vector<TrainingExample>& train_examples,
                       const TrainConfig& config, int fold_index) {
  config.validate();
  if (train_examples.empty())
    raise(Errc::too_few_patients, "training set for fold " + std::to_string(fold_index) +
                                      " is empty");

  const std::uint64_t fold_seed = config.seed + static_cast<std::uint64_t>(fold_index);
  ModelDims dims = dims_for(config, train_examples);
  ModelParams params = ModelParams::random_init(dims, fold_seed);
  fit_normalizers(params, train_examples);

  AdamState adam(params.values().size());
  std::vector<std::size_t> order(train_examples.size());
  std::iota(order.begin(), order.end(), 0);

  Tape tape;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng::Lcg64 stream(rng::derive_seed(fold_seed, 0x65706f63ULL /* "epoc" */ + epoch));
    std::iota(order.begin(), order.end(), 0);
    rng::shuffle(order, stream);

    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const TrainingExample& ex = train_examples[idx];
      const SeqMatrix* seq = ex.seq ? &*ex.seq : nullptr;
      std::span<const double> tab =
          ex.tabular ? std::span<const double>(*ex.tabular) : std::span<const double>{};
      const double pred = model_forward(params, seq, tab, &tape);
      const double loss = mse_loss(pred, ex.target_delta);
      if (!std::isfinite(loss))
        raise(Errc::diverged_loss,
              "non-finite loss at fold " + std::to_string(fold_index) + " epoch " +
                  std::to_string(epoch) + " patient " + ex.patient_id + " (pred " +
                  csv::format_double(pred) + ")");
      epoch_loss += loss;
      const auto grads = model_backward(params, tape, mse_loss_grad(pred, ex.target_delta));
      adam.step(params, grads, config.learning_rate);
    }
    if ((epoch + 1) % 10 == 0 || epoch + 1 == config.epochs)
      log::info("train", "epoch",
                {{"fold", std::to_string(fold_index)},
                 {"epoch", std::to_string(epoch + 1)},
                 {"mean_loss",
                  csv::format_double(epoch_loss / static_cast<double>(order.size()))}});
  }
  return params;
}

CvResult cross_validate(const std::vector<CohortExample>& cohort, const TrainConfig& config) {
  config.validate();
  std::vector<std::string> ids;
  ids.reserve(cohort.size());
  for (const auto& p : cohort) ids.push_back(p.patient_id);

  CvResult result;
  result.assignment = make_folds(ids, config.folds, config.seed);

  const auto all_examples = build_inputs(cohort, config.experiment);
  std::vector<std::vector<Prediction>> fold_preds(config.folds);
  result.fold_params.reserve(config.folds);
  for (int k = 0; k < config.folds; ++k)
    result.fold_params.emplace_back(ModelParams(dims_for(config, all_examples)));

  auto run_fold = [&](int k) {
    std::vector<TrainingExample> train_set;
    for (std::size_t i = 0; i < all_examples.size(); ++i)
      if (result.assignment.fold_of[i] != k) train_set.push_back(all_examples[i]);
    ModelParams params = train_fold(train_set, config, k);

    for (std::size_t i = 0; i < all_examples.size(); ++i) {
      if (result.assignment.fold_of[i] != k) continue;
      const TrainingExample& ex = all_examples[i];
      const SeqMatrix* seq = ex.seq ? &*ex.seq : nullptr;
      std::span<const double> tab =
          ex.tabular ? std::span<const double>(*ex.tabular) : std::span<const double>{};
      fold_preds[k].push_back({ex.patient_id, k, config.target, ex.target_delta,
                               model_forward(params, seq, tab)});
    }
    result.fold_params[k] = std::move(params);
  };

  const int workers = std::min(config.threads, config.folds);
  if (workers <= 1) {
    for (int k = 0; k < config.folds; ++k) run_fold(k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int k = next.fetch_add(1); k < config.folds; k = next.fetch_add(1)) run_fold(k);
      });
    for (auto& th : pool) th.join();
  }

  // Reassemble in cohort order so output is independent of scheduling.
  for (std::size_t i = 0; i < all_examples.size(); ++i) {
    const int k = result.assignment.fold_of[i];
    for (const auto& p : fold_preds[k])
      if (p.patient_id == all_examples[i].patient_id) {
        result.predictions.push_back(p);
        break;
      }
  }
  return result;
}

void write_predictions_csv(const std::vector<Prediction>& predictions,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path.string());
  out << "patient_id,fold,target,true_delta,pred_delta\n";
  for (const auto& p : predictions)
    out << p.patient_id << ',' << p.fold << ',' << target_key(p.target) << ','
        << csv::format_double(p.true_delta) << ',' << csv::format_double(p.pred_delta)
        << '\n';
  if (!out) raise(Errc::io_failure, "write failed: " + path.string());
}

std::vector<Prediction> read_predictions_csv(const std::filesystem::path& path) {
  csv::LineReader reader(path);
  std::string line;
  if (!reader.next(line) || line != "patient_id,fold,target,true_delta,pred_delta")
    raise(Errc::malformed_row, path.string() + ": bad predictions header");
  std::vector<Prediction> preds;
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto fields = csv::split_line(line);
    if (fields.size() != 5)
      raise(Errc::malformed_row,
            path.string() + ":" + std::to_string(reader.line_no()) + ": expected 5 fields");
    Prediction p;
    p.patient_id = fields[0];
    p.fold = static_cast<int>(csv::parse_int(fields[1], reader.line_no()));
    p.target = parse_target(fields[2]);
    p.true_delta = csv::parse_double(fields[3], reader.line_no());
    p.pred_delta = csv::parse_double(fields[4], reader.line_no());
    preds.push_back(std::move(p));
  }
  if (preds.empty()) raise(Errc::empty_input, path.string() + " has no predictions");
  return preds;
}

} // namespace glyco
