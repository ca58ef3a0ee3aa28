#pragma once

#include "glyco/errors.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace glyco {

// UTC seconds; strictly increasing within any one series.
using Timestamp = std::int64_t;

struct CgmSample {
  Timestamp t = 0;
  double glucose = 0.0; // mg/dL, finite and > 0

  bool operator==(const CgmSample&) const = default;
};

struct CgmSeries {
  std::string patient_id;
  std::vector<CgmSample> samples;
  // Modal inter-sample gap in seconds (0 when the series has a single point).
  std::int64_t nominal_spacing = 0;

  bool operator==(const CgmSeries&) const = default;
};

inline constexpr int kActivityFieldCount = 8;
inline constexpr std::array<const char*, kActivityFieldCount> kActivityFieldNames = {
    "dx", "dy", "dz", "steps", "i_sit", "i_std", "i_lie", "i_off"};

// One 30-second actigraphy epoch: movement counts on three axes, steps, and
// inclinometer/off-body seconds.
struct ActivitySample {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  double steps = 0.0;
  double i_sit = 0.0;
  double i_std = 0.0;
  double i_lie = 0.0;
  double i_off = 0.0;

  std::array<double, kActivityFieldCount> to_array() const {
    return {dx, dy, dz, steps, i_sit, i_std, i_lie, i_off};
  }
  static ActivitySample from_array(const std::array<double, kActivityFieldCount>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
  }

  bool operator==(const ActivitySample&) const = default;
};

struct ActivityEpoch {
  Timestamp t = 0;
  ActivitySample sample;

  bool operator==(const ActivityEpoch&) const = default;
};

struct ActivitySeries {
  std::string patient_id;
  std::int64_t epoch_length = 30; // seconds
  std::vector<ActivityEpoch> samples;

  bool operator==(const ActivitySeries&) const = default;
};

inline constexpr int kTabularFeatureCount = 8;

// The eight wide-branch scalars, fixed order.
struct TabularFeatures {
  double height_m = 0.0;
  double weight_kg = 0.0;
  double age_years = 0.0;
  double waist_m = 0.0;
  double triglycerides_mg_dl = 0.0;
  double ldl_mg_dl = 0.0;
  double hdl_mg_dl = 0.0;
  double vldl_mg_dl = 0.0;

  std::array<double, kTabularFeatureCount> to_array() const {
    return {height_m,           weight_kg, age_years, waist_m,
            triglycerides_mg_dl, ldl_mg_dl, hdl_mg_dl, vldl_mg_dl};
  }

  bool operator==(const TabularFeatures&) const = default;
};

enum class BiomarkerTarget { hba1c, hdl, ldl, triglycerides };

const char* target_key(BiomarkerTarget t);       // manifest/CSV key, e.g. "hba1c"
const char* target_table_label(BiomarkerTarget t); // report label, e.g. "HBA1c"
const char* target_unit(BiomarkerTarget t);
BiomarkerTarget parse_target(const std::string& key);

// One-year change for one biomarker; delta is stored redundantly and checked
// against followup - baseline on load.
struct BiomarkerDelta {
  BiomarkerTarget target = BiomarkerTarget::hba1c;
  double baseline = 0.0;
  double followup = 0.0;
  double delta = 0.0;

  bool operator==(const BiomarkerDelta&) const = default;
};

struct PatientRecord {
  std::string id;
  CgmSeries cgm;
  ActivitySeries activity;
  TabularFeatures tabular;
  BiomarkerDelta target;
};

struct Exclusion {
  std::string patient_id;
  std::string reason;
};

struct Cohort {
  std::vector<PatientRecord> patients;
  std::vector<Exclusion> excluded;
};

// One synchronized sample: the CGM reading plus the window-averaged activity
// vector at that CGM time point (9 features total).
struct FusedSample {
  Timestamp t = 0;
  double glucose = 0.0;
  std::array<double, kActivityFieldCount> avg_activity{};

  bool operator==(const FusedSample&) const = default;
};

struct FusedSequence {
  std::string patient_id;
  std::vector<FusedSample> samples;

  bool operator==(const FusedSequence&) const = default;
};

inline const char* target_key(BiomarkerTarget t) {
  switch (t) {
    case BiomarkerTarget::hba1c: return "hba1c";
    case BiomarkerTarget::hdl: return "hdl";
    case BiomarkerTarget::ldl: return "ldl";
    case BiomarkerTarget::triglycerides: return "triglycerides";
  }
  return "hba1c";
}

inline const char* target_table_label(BiomarkerTarget t) {
  switch (t) {
    case BiomarkerTarget::hba1c: return "HBA1c";
    case BiomarkerTarget::hdl: return "HDL";
    case BiomarkerTarget::ldl: return "LDL";
    case BiomarkerTarget::triglycerides: return "TC";
  }
  return "HBA1c";
}

inline const char* target_unit(BiomarkerTarget t) {
  return t == BiomarkerTarget::hba1c ? "%" : "mg/dL";
}

inline BiomarkerTarget parse_target(const std::string& key) {
  if (key == "hba1c") return BiomarkerTarget::hba1c;
  if (key == "hdl") return BiomarkerTarget::hdl;
  if (key == "ldl") return BiomarkerTarget::ldl;
  if (key == "triglycerides") return BiomarkerTarget::triglycerides;
  raise(Errc::config_error, "unknown biomarker target '" + key +
                                "' (expected hba1c|hdl|ldl|triglycerides)");
}

} // namespace glyco
