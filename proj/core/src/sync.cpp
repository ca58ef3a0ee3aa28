#include "glyco/sync.hpp"

#include "glyco/csv.hpp"
#include "glyco/errors.hpp"
#include "glyco/log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace glyco {

int SyncConfig::window_size() const {
  return compute_window_size(cgm_interval, activity_epoch, overlap_ratio);
}

int compute_window_size(std::int64_t cgm_interval, std::int64_t activity_epoch,
                        double overlap_ratio) {
  if (cgm_interval <= 0 || activity_epoch <= 0 || !(overlap_ratio > 0.0))
    raise(Errc::non_positive_input, "window-size inputs must be positive");
  if (cgm_interval < activity_epoch)
    raise(Errc::non_positive_input, "cgm_interval must be >= activity_epoch");
  double ratio = (static_cast<double>(cgm_interval) / static_cast<double>(activity_epoch)) /
                 overlap_ratio;
  long long w = std::llround(ratio); // half away from zero
  if (w < 1) raise(Errc::zero_window, "window size rounds to zero");
  return static_cast<int>(w);
}

CgmSeries trim_uncovered_cgm(const CgmSeries& cgm, const ActivitySeries& act) {
  if (cgm.samples.empty() || act.samples.empty())
    raise(Errc::empty_series, "trim requires non-empty series");
  const Timestamp lo = act.samples.front().t;
  const Timestamp hi = act.samples.back().t;

  CgmSeries out;
  out.patient_id = cgm.patient_id;
  out.nominal_spacing = cgm.nominal_spacing;
  for (const auto& s : cgm.samples)
    if (s.t >= lo && s.t <= hi) out.samples.push_back(s);
  if (out.samples.empty())
    raise(Errc::empty_after_trim,
          "no CGM point of " + cgm.patient_id + " lies inside the activity span [" +
              std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return out;
}

std::vector<std::size_t> nearest_activity_window(const ActivitySeries& act, Timestamp t,
                                                 int w) {
  const auto& samples = act.samples;
  if (w <= 0) raise(Errc::non_positive_input, "window size must be positive");
  if (samples.size() < static_cast<std::size_t>(w))
    raise(Errc::insufficient_activity_samples,
          "need " + std::to_string(w) + " activity samples, have " +
              std::to_string(samples.size()));

  // First epoch at or after t, then grow the window outward. On equal
  // distances the earlier epoch wins, so the left candidate is taken first.
  auto it = std::lower_bound(samples.begin(), samples.end(), t,
                             [](const ActivityEpoch& e, Timestamp v) { return e.t < v; });
  std::size_t right = static_cast<std::size_t>(it - samples.begin());
  std::size_t left = right; // window is [left, right)
  for (int k = 0; k < w; ++k) {
    const bool can_left = left > 0;
    const bool can_right = right < samples.size();
    if (can_left && can_right) {
      const Timestamp dl = t - samples[left - 1].t;
      const Timestamp dr = samples[right].t - t;
      if (dl <= dr) --left;
      else ++right;
    } else if (can_left) {
      --left;
    } else {
      ++right;
    }
  }
  std::vector<std::size_t> indices(static_cast<std::size_t>(w));
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = left + i;
  return indices;
}

std::array<double, kActivityFieldCount> average_window(
    const ActivitySeries& act, const std::vector<std::size_t>& indices) {
  if (indices.empty()) raise(Errc::empty_window, "cannot average an empty window");
  std::array<double, kActivityFieldCount> sum{};
  for (std::size_t idx : indices) {
    if (idx >= act.samples.size())
      raise(Errc::dimension_mismatch, "window index out of range");
    const auto v = act.samples[idx].sample.to_array();
    for (int i = 0; i < kActivityFieldCount; ++i) sum[i] += v[i];
  }
  const double n = static_cast<double>(indices.size());
  for (int i = 0; i < kActivityFieldCount; ++i) sum[i] /= n;
  return sum;
}

FusedSequence fuse_patient(const CgmSeries& cgm, const ActivitySeries& act,
                           const SyncConfig& config, FuseStats* stats) {
  const int w = config.window_size();
  CgmSeries trimmed = trim_uncovered_cgm(cgm, act);
  if (stats) stats->trimmed_cgm = cgm.samples.size() - trimmed.samples.size();

  // A gap-free window of w epochs spans (w-1) * epoch_length seconds.
  const std::int64_t nominal_extent = static_cast<std::int64_t>(w - 1) * act.epoch_length;

  FusedSequence fused;
  fused.patient_id = cgm.patient_id;
  fused.samples.reserve(trimmed.samples.size());
  std::size_t wide = 0;
  for (const auto& point : trimmed.samples) {
    auto indices = nearest_activity_window(act, point.t, w);
    const std::int64_t extent = act.samples[indices.back()].t - act.samples[indices.front()].t;
    if (nominal_extent > 0 && extent > 2 * nominal_extent) ++wide;
    fused.samples.push_back({point.t, point.glucose, average_window(act, indices)});
  }
  if (wide > 0) {
    log::warn("sync", "wide_windows",
              {{"patient", cgm.patient_id}, {"count", std::to_string(wide)}});
    if (stats) stats->wide_windows = wide;
  }
  return fused;
}

TruncateResult truncate_cohort(std::vector<FusedSequence> sequences, TruncatePolicy policy) {
  TruncateResult result;
  if (sequences.empty()) return result;
  std::size_t min_len = sequences.front().samples.size();
  for (const auto& s : sequences) min_len = std::min(min_len, s.samples.size());
  for (auto& s : sequences) {
    if (s.samples.size() > min_len) {
      if (policy == TruncatePolicy::earliest_prefix) {
        s.samples.resize(min_len);
      } else {
        s.samples.erase(s.samples.begin(),
                        s.samples.begin() + (s.samples.size() - min_len));
      }
    }
  }
  result.sequences = std::move(sequences);
  result.common_length = min_len;
  return result;
}

namespace {
constexpr const char* kFusedHeader =
    "timestamp,glucose,dx,dy,dz,steps,i_sit,i_std,i_lie,i_off";
}

void write_fused_csv(const FusedSequence& seq, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path.string());
  out << kFusedHeader << '\n';
  for (const auto& s : seq.samples) {
    out << s.t << ',' << csv::format_double(s.glucose);
    for (double v : s.avg_activity) out << ',' << csv::format_double(v);
    out << '\n';
  }
  if (!out) raise(Errc::io_failure, "write failed: " + path.string());
}

FusedSequence read_fused_csv(const std::filesystem::path& path, const std::string& patient_id) {
  csv::LineReader reader(path);
  std::string line;
  if (!reader.next(line) || line != kFusedHeader)
    raise(Errc::malformed_row, path.string() + ": bad fused header");
  FusedSequence seq;
  seq.patient_id = patient_id;
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto fields = csv::split_line(line);
    if (fields.size() != 10)
      raise(Errc::malformed_row, path.string() + ":" + std::to_string(reader.line_no()) +
                                     ": expected 10 fields");
    FusedSample s;
    s.t = csv::parse_int(fields[0], reader.line_no());
    s.glucose = csv::parse_double(fields[1], reader.line_no());
    for (int i = 0; i < kActivityFieldCount; ++i)
      s.avg_activity[i] = csv::parse_double(fields[2 + i], reader.line_no());
    if (!seq.samples.empty() && s.t <= seq.samples.back().t)
      raise(Errc::non_monotonic_timestamps,
            path.string() + ":" + std::to_string(reader.line_no()));
    seq.samples.push_back(s);
  }
  if (seq.samples.empty()) raise(Errc::empty_series, path.string());
  return seq;
}

} // namespace glyco
