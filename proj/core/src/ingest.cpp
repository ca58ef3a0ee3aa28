#include "glyco/ingest.hpp"

#include "glyco/csv.hpp"
#include "glyco/errors.hpp"
#include "glyco/log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace glyco {

namespace {

constexpr const char* kCgmHeader = "patient_id,timestamp_utc,glucose_mg_dl";
constexpr const char* kActivityHeader =
    "patient_id,timestamp_utc,dx,dy,dz,steps,i_sit,i_std,i_lie,i_off";

std::string loc(const std::filesystem::path& path, int line_no) {
  return path.filename().string() + ":" + std::to_string(line_no);
}

void check_header(csv::LineReader& reader, const char* expected) {
  std::string line;
  if (!reader.next(line))
    raise(Errc::empty_series, reader.path().string() + " is empty");
  if (line != expected)
    raise(Errc::malformed_row,
          loc(reader.path(), reader.line_no()) + ": header mismatch, expected '" +
              expected + "', got '" + line + "'");
}

void check_monotonic(const std::filesystem::path& path, int line_no, Timestamp prev,
                     Timestamp next, bool have_prev) {
  if (!have_prev) return;
  if (next <= prev)
    raise(Errc::non_monotonic_timestamps,
          loc(path, line_no) + ": timestamp " + std::to_string(next) +
              (next == prev ? " duplicates " : " precedes ") + std::to_string(prev));
}

void check_same_patient(const std::filesystem::path& path, int line_no,
                        const std::string& expected, const std::string& got) {
  if (!expected.empty() && got != expected)
    raise(Errc::inconsistent_patient_ids,
          loc(path, line_no) + ": patient_id '" + got + "' differs from '" + expected + "'");
}

// Most frequent inter-sample gap; ties go to the smaller gap. 0 for n < 2.
std::int64_t modal_gap(const std::vector<Timestamp>& ts) {
  if (ts.size() < 2) return 0;
  std::map<std::int64_t, std::size_t> counts;
  for (std::size_t i = 1; i < ts.size(); ++i) ++counts[ts[i] - ts[i - 1]];
  std::int64_t best_gap = 0;
  std::size_t best_count = 0;
  for (const auto& [gap, count] : counts) {
    if (count > best_count) {
      best_gap = gap;
      best_count = count;
    }
  }
  return best_gap;
}

} // namespace

CgmSeries parse_cgm_csv(const std::filesystem::path& path) {
  csv::LineReader reader(path);
  check_header(reader, kCgmHeader);

  CgmSeries series;
  std::vector<Timestamp> ts;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto fields = csv::split_line(line);
    if (fields.size() != 3)
      raise(Errc::malformed_row,
            loc(path, reader.line_no()) + ": expected 3 fields, got " +
                std::to_string(fields.size()));
    check_same_patient(path, reader.line_no(), series.patient_id, fields[0]);
    if (series.patient_id.empty()) series.patient_id = fields[0];

    Timestamp t = csv::parse_int(fields[1], reader.line_no());
    double glucose = csv::parse_double(fields[2], reader.line_no());
    check_monotonic(path, reader.line_no(), ts.empty() ? 0 : ts.back(), t, !ts.empty());
    if (!std::isfinite(glucose) || glucose <= 0.0)
      raise(Errc::non_positive_glucose,
            loc(path, reader.line_no()) + ": glucose " + csv::format_double(glucose));

    ts.push_back(t);
    series.samples.push_back({t, glucose});
  }
  if (series.samples.empty())
    raise(Errc::empty_series, path.string() + " has no data rows");
  series.nominal_spacing = modal_gap(ts);
  return series;
}

ActivitySeries parse_activity_csv(const std::filesystem::path& path, std::int64_t epoch_length) {
  if (epoch_length <= 0)
    raise(Errc::non_positive_input, "epoch_length must be positive");
  csv::LineReader reader(path);
  check_header(reader, kActivityHeader);

  ActivitySeries series;
  series.epoch_length = epoch_length;
  std::string line;
  std::size_t gaps = 0;
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto fields = csv::split_line(line);
    if (fields.size() != 10)
      raise(Errc::malformed_row,
            loc(path, reader.line_no()) + ": expected 10 fields, got " +
                std::to_string(fields.size()));
    check_same_patient(path, reader.line_no(), series.patient_id, fields[0]);
    if (series.patient_id.empty()) series.patient_id = fields[0];

    Timestamp t = csv::parse_int(fields[1], reader.line_no());
    std::array<double, kActivityFieldCount> v{};
    for (int i = 0; i < kActivityFieldCount; ++i) {
      v[i] = csv::parse_double(fields[2 + i], reader.line_no());
      if (!std::isfinite(v[i]) || v[i] < 0.0)
        raise(Errc::negative_field,
              loc(path, reader.line_no()) + ": " + kActivityFieldNames[i] + " = " +
                  csv::format_double(v[i]));
    }
    // The four inclinometer durations are seconds within one epoch.
    for (int i = 4; i < kActivityFieldCount; ++i) {
      if (v[i] > static_cast<double>(epoch_length))
        raise(Errc::inclinometer_exceeds_epoch,
              loc(path, reader.line_no()) + ": " + kActivityFieldNames[i] + " = " +
                  csv::format_double(v[i]) + " > epoch " + std::to_string(epoch_length));
    }
    if (!series.samples.empty()) {
      check_monotonic(path, reader.line_no(), series.samples.back().t, t, true);
      if (t - series.samples.back().t != epoch_length) ++gaps;
    }
    series.samples.push_back({t, ActivitySample::from_array(v)});
  }
  if (series.samples.empty())
    raise(Errc::empty_series, path.string() + " has no data rows");
  if (gaps > 0)
    log::warn("ingest", "activity_gaps",
              {{"patient", series.patient_id}, {"count", std::to_string(gaps)}});
  return series;
}

void write_cgm_csv(const CgmSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path.string());
  out << kCgmHeader << '\n';
  for (const auto& s : series.samples)
    out << series.patient_id << ',' << s.t << ',' << csv::format_double(s.glucose) << '\n';
  if (!out) raise(Errc::io_failure, "write failed: " + path.string());
}

void write_activity_csv(const ActivitySeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path.string());
  out << kActivityHeader << '\n';
  for (const auto& e : series.samples) {
    out << series.patient_id << ',' << e.t;
    for (double v : e.sample.to_array()) out << ',' << csv::format_double(v);
    out << '\n';
  }
  if (!out) raise(Errc::io_failure, "write failed: " + path.string());
}

namespace {

// Manifest: "[patient <id>]" sections of "key = value" lines, '#' comments.
struct RawEntry {
  std::string id;
  std::map<std::string, std::string> kv;
  int line_no = 0;
};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double entry_double(const RawEntry& e, const std::string& key, const std::string& file) {
  auto it = e.kv.find(key);
  if (it == e.kv.end())
    raise(Errc::invalid_manifest,
          file + ": patient " + e.id + " missing key '" + key + "'");
  return csv::parse_double(it->second, e.line_no);
}

std::string entry_string(const RawEntry& e, const std::string& key, const std::string& file) {
  auto it = e.kv.find(key);
  if (it == e.kv.end())
    raise(Errc::invalid_manifest,
          file + ": patient " + e.id + " missing key '" + key + "'");
  return it->second;
}

} // namespace

Manifest parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::manifest_missing, "cannot open manifest " + path.string());

  std::vector<RawEntry> raw;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      std::string inner = trim(t.substr(1, t.size() - 2));
      if (inner.rfind("patient", 0) != 0)
        raise(Errc::invalid_manifest,
              path.string() + ":" + std::to_string(line_no) + ": unknown section '" + t + "'");
      std::string id = trim(inner.substr(7));
      if (id.empty())
        raise(Errc::invalid_manifest,
              path.string() + ":" + std::to_string(line_no) + ": empty patient id");
      raw.push_back({id, {}, line_no});
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos || raw.empty())
      raise(Errc::invalid_manifest,
            path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
    raw.back().kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }

  Manifest manifest;
  manifest.dir = path.parent_path();
  for (const auto& e : raw) {
    for (const auto& seen : manifest.entries)
      if (seen.patient_id == e.id)
        raise(Errc::invalid_manifest,
              path.filename().string() + ": duplicate patient id '" + e.id + "'");
    ManifestEntry entry;
    entry.patient_id = e.id;
    const std::string file = path.filename().string();
    entry.cgm_file = entry_string(e, "cgm", file);
    entry.activity_file = entry_string(e, "activity", file);
    entry.tabular.height_m = entry_double(e, "height_m", file);
    entry.tabular.weight_kg = entry_double(e, "weight_kg", file);
    entry.tabular.age_years = entry_double(e, "age_years", file);
    entry.tabular.waist_m = entry_double(e, "waist_m", file);
    entry.tabular.triglycerides_mg_dl = entry_double(e, "triglycerides_mg_dl", file);
    entry.tabular.ldl_mg_dl = entry_double(e, "ldl_mg_dl", file);
    entry.tabular.hdl_mg_dl = entry_double(e, "hdl_mg_dl", file);
    entry.tabular.vldl_mg_dl = entry_double(e, "vldl_mg_dl", file);

    const auto& tab = entry.tabular;
    if (!(std::isfinite(tab.height_m) && tab.height_m > 0 && tab.weight_kg > 0 &&
          tab.age_years > 0 && tab.waist_m > 0))
      raise(Errc::invalid_manifest,
            file + ": patient " + e.id + " has non-positive anthropometrics");

    for (BiomarkerTarget t : {BiomarkerTarget::hba1c, BiomarkerTarget::hdl,
                              BiomarkerTarget::ldl, BiomarkerTarget::triglycerides}) {
      std::string key = target_key(t);
      auto base = e.kv.find(key + "_baseline");
      if (base == e.kv.end()) continue;
      ManifestEntry::TargetPair pair;
      pair.baseline = csv::parse_double(base->second, e.line_no);
      if (auto f = e.kv.find(key + "_followup"); f != e.kv.end())
        pair.followup = csv::parse_double(f->second, e.line_no);
      if (auto d = e.kv.find(key + "_delta"); d != e.kv.end())
        pair.delta = csv::parse_double(d->second, e.line_no);
      if (pair.delta && pair.followup && *pair.delta != *pair.followup - pair.baseline)
        raise(Errc::invalid_manifest,
              file + ": patient " + e.id + " " + key + "_delta " +
                  csv::format_double(*pair.delta) + " != followup - baseline " +
                  csv::format_double(*pair.followup - pair.baseline));
      entry.targets[key] = pair;
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path.string());
  out << "# cohort manifest\n";
  for (const auto& e : manifest.entries) {
    out << "\n[patient " << e.patient_id << "]\n";
    out << "cgm = " << e.cgm_file << '\n';
    out << "activity = " << e.activity_file << '\n';
    const auto tab = e.tabular.to_array();
    constexpr std::array<const char*, kTabularFeatureCount> keys = {
        "height_m", "weight_kg", "age_years", "waist_m",
        "triglycerides_mg_dl", "ldl_mg_dl", "hdl_mg_dl", "vldl_mg_dl"};
    for (int i = 0; i < kTabularFeatureCount; ++i)
      out << keys[i] << " = " << csv::format_double(tab[i]) << '\n';
    for (const auto& [key, pair] : e.targets) {
      out << key << "_baseline = " << csv::format_double(pair.baseline) << '\n';
      if (pair.followup)
        out << key << "_followup = " << csv::format_double(*pair.followup) << '\n';
      if (pair.delta) out << key << "_delta = " << csv::format_double(*pair.delta) << '\n';
    }
  }
  if (!out) raise(Errc::io_failure, "write failed: " + path.string());
}

Cohort load_cohort(const std::filesystem::path& manifest_path, const LoadOptions& options) {
  Manifest manifest = parse_manifest(manifest_path);
  const std::string key = target_key(options.target);

  Cohort cohort;
  for (const auto& entry : manifest.entries) {
    auto target_it = entry.targets.find(key);
    if (target_it == entry.targets.end() || !target_it->second.followup) {
      cohort.excluded.push_back({entry.patient_id, "missing_" + key + "_followup"});
      log::info("ingest", "excluded",
                {{"patient", entry.patient_id}, {"reason", "missing_followup"}});
      continue;
    }

    auto cgm_path = manifest.dir / entry.cgm_file;
    auto act_path = manifest.dir / entry.activity_file;
    if (!std::filesystem::exists(cgm_path))
      raise(Errc::patient_file_missing, cgm_path.string());
    if (!std::filesystem::exists(act_path))
      raise(Errc::patient_file_missing, act_path.string());

    CgmSeries cgm = parse_cgm_csv(cgm_path);
    if (cgm.patient_id != entry.patient_id)
      raise(Errc::inconsistent_patient_ids,
            cgm_path.string() + ": file says '" + cgm.patient_id + "', manifest says '" +
                entry.patient_id + "'");
    if (cgm.samples.size() < options.min_cgm_len) {
      cohort.excluded.push_back(
          {entry.patient_id, "cgm_too_short_" + std::to_string(cgm.samples.size())});
      log::info("ingest", "excluded",
                {{"patient", entry.patient_id},
                 {"reason", "cgm_too_short"},
                 {"len", std::to_string(cgm.samples.size())}});
      continue;
    }

    ActivitySeries activity = parse_activity_csv(act_path);
    if (activity.patient_id != entry.patient_id)
      raise(Errc::inconsistent_patient_ids,
            act_path.string() + ": file says '" + activity.patient_id + "', manifest says '" +
                entry.patient_id + "'");

    const auto& pair = target_it->second;
    BiomarkerDelta delta;
    delta.target = options.target;
    delta.baseline = pair.baseline;
    delta.followup = *pair.followup;
    delta.delta = pair.delta ? *pair.delta : *pair.followup - pair.baseline;

    cohort.patients.push_back(
        {entry.patient_id, std::move(cgm), std::move(activity), entry.tabular, delta});
  }
  log::info("ingest", "cohort_loaded",
            {{"manifest", manifest_path.filename().string()},
             {"retained", std::to_string(cohort.patients.size())},
             {"excluded", std::to_string(cohort.excluded.size())}});
  return cohort;
}

} // namespace glyco
