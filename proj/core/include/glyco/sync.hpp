#pragma once

#include "glyco/types.hpp"

#include <filesystem>
#include <vector>

namespace glyco {

// Moving-average synchronization of the two sensor streams. Each retained CGM
// point gets the elementwise mean of the |W| nearest activity epochs, where
// |W| = round((cgm_interval / activity_epoch) / overlap_ratio).
struct SyncConfig {
  double overlap_ratio = 0.5;     // portion of a window shared with the next one
  std::int64_t cgm_interval = 300;
  std::int64_t activity_epoch = 30;

  int window_size() const; // derived, >= 1
};

// round half away from zero; errors: NonPositiveInput, ZeroWindow.
int compute_window_size(std::int64_t cgm_interval, std::int64_t activity_epoch,
                        double overlap_ratio);

// Keeps CGM points lying within [first activity timestamp, last activity
// timestamp], i.e. with a recorded activity epoch both before and after.
CgmSeries trim_uncovered_cgm(const CgmSeries& cgm, const ActivitySeries& act);

// Indices (ascending) of the w activity epochs closest to t by |theta - t|;
// ties break toward the earlier timestamp.
std::vector<std::size_t> nearest_activity_window(const ActivitySeries& act, Timestamp t,
                                                 int w);

// Elementwise mean over the eight fields, accumulated in index order.
std::array<double, kActivityFieldCount> average_window(const ActivitySeries& act,
                                                       const std::vector<std::size_t>& indices);

struct FuseStats {
  std::size_t trimmed_cgm = 0;   // CGM points dropped by the span test
  std::size_t wide_windows = 0;  // windows spanning > 2x the nominal extent
};

FusedSequence fuse_patient(const CgmSeries& cgm, const ActivitySeries& act,
                           const SyncConfig& config, FuseStats* stats = nullptr);

enum class TruncatePolicy { earliest_prefix, latest_suffix };

struct TruncateResult {
  std::vector<FusedSequence> sequences;
  std::size_t common_length = 0;
};

// Shortens every sequence to the cohort minimum (earliest prefix by default;
// latest suffix kept as a sensitivity alternative).
TruncateResult truncate_cohort(std::vector<FusedSequence> sequences,
                               TruncatePolicy policy = TruncatePolicy::earliest_prefix);

// Fused per-patient CSV: timestamp,glucose,dx,dy,dz,steps,i_sit,i_std,i_lie,i_off
void write_fused_csv(const FusedSequence& seq, const std::filesystem::path& path);
FusedSequence read_fused_csv(const std::filesystem::path& path, const std::string& patient_id);

} // namespace glyco
