#pragma once

#include <stdexcept>
#include <string>

namespace glyco {

enum class Errc {
  // ingest
  malformed_row,
  non_monotonic_timestamps,
  non_positive_glucose,
  empty_series,
  negative_field,
  inclinometer_exceeds_epoch,
  manifest_missing,
  invalid_manifest,
  patient_file_missing,
  inconsistent_patient_ids,
  // sync
  non_positive_input,
  zero_window,
  empty_after_trim,
  insufficient_activity_samples,
  empty_window,
  // net
  dimension_mismatch,
  length_mismatch,
  stale_tape,
  corrupt_checkpoint,
  version_mismatch,
  // train
  too_few_patients,
  missing_modality,
  diverged_loss,
  // eval / io / config
  empty_input,
  io_failure,
  config_error,
};

const char* errc_name(Errc code);

// Validation errors (bad inputs, violated preconditions) map to exit code 1;
// runtime failures (I/O, numeric divergence, corruption) map to exit code 2.
bool is_validation_error(Errc code);

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::malformed_row: return "MalformedRow";
    case Errc::non_monotonic_timestamps: return "NonMonotonicTimestamps";
    case Errc::non_positive_glucose: return "NonPositiveGlucose";
    case Errc::empty_series: return "EmptySeries";
    case Errc::negative_field: return "NegativeField";
    case Errc::inclinometer_exceeds_epoch: return "InclinometerExceedsEpoch";
    case Errc::manifest_missing: return "ManifestMissing";
    case Errc::invalid_manifest: return "InvalidManifest";
    case Errc::patient_file_missing: return "PatientFileMissing";
    case Errc::inconsistent_patient_ids: return "InconsistentPatientIds";
    case Errc::non_positive_input: return "NonPositiveInput";
    case Errc::zero_window: return "ZeroWindow";
    case Errc::empty_after_trim: return "EmptyAfterTrim";
    case Errc::insufficient_activity_samples: return "InsufficientActivitySamples";
    case Errc::empty_window: return "EmptyWindow";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::stale_tape: return "StaleTape";
    case Errc::corrupt_checkpoint: return "CorruptCheckpoint";
    case Errc::version_mismatch: return "VersionMismatch";
    case Errc::too_few_patients: return "TooFewPatients";
    case Errc::missing_modality: return "MissingModality";
    case Errc::diverged_loss: return "DivergedLoss";
    case Errc::empty_input: return "EmptyInput";
    case Errc::io_failure: return "IoFailure";
    case Errc::config_error: return "ConfigError";
  }
  return "UnknownError";
}

inline bool is_validation_error(Errc code) {
  switch (code) {
    case Errc::io_failure:
    case Errc::diverged_loss:
    case Errc::corrupt_checkpoint:
    case Errc::stale_tape:
      return false;
    default:
      return true;
  }
}

} // namespace glyco
