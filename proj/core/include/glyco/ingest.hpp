#pragma once

#include "glyco/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace glyco {

// CSV schemas (headers are bit-exact):
//   CGM:      patient_id,timestamp_utc,glucose_mg_dl
//   Activity: patient_id,timestamp_utc,dx,dy,dz,steps,i_sit,i_std,i_lie,i_off

CgmSeries parse_cgm_csv(const std::filesystem::path& path);
ActivitySeries parse_activity_csv(const std::filesystem::path& path,
                                  std::int64_t epoch_length = 30);

void write_cgm_csv(const CgmSeries& series, const std::filesystem::path& path);
void write_activity_csv(const ActivitySeries& series, const std::filesystem::path& path);

// One manifest entry, as written: file paths are relative to the manifest's
// directory; biomarker followups are optional (patients lacking the selected
// target's followup are excluded by load_cohort).
struct ManifestEntry {
  std::string patient_id;
  std::string cgm_file;
  std::string activity_file;
  TabularFeatures tabular;
  struct TargetPair {
    double baseline = 0.0;
    std::optional<double> followup;
    std::optional<double> delta; // redundant; checked against followup - baseline
  };
  std::map<std::string, TargetPair> targets; // keyed by target_key()
};

struct Manifest {
  std::filesystem::path dir;
  std::vector<ManifestEntry> entries;
};

Manifest parse_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

struct LoadOptions {
  BiomarkerTarget target = BiomarkerTarget::hba1c;
  // Patients with fewer CGM samples than this are excluded (clinical default 1445).
  std::size_t min_cgm_len = 1445;
};

// Loads every patient in the manifest, applying the exclusion rules:
// missing followup for the selected target, or CGM shorter than the floor.
// Exclusions are logged and reported; retained + excluded == manifest size.
Cohort load_cohort(const std::filesystem::path& manifest_path, const LoadOptions& options);

} // namespace glyco
