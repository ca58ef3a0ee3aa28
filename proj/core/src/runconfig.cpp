#include "glyco/runconfig.hpp"

#include "glyco/csv.hpp"
#include "glyco/errors.hpp"
#include "glyco/version.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace glyco {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::int64_t to_int(const std::string& key, const std::string& value) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    raise(Errc::config_error, key + ": not an integer: '" + value + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    raise(Errc::config_error, key + ": not a non-negative integer: '" + value + "'");
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    raise(Errc::config_error, key + ": not a number: '" + value + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  raise(Errc::config_error, key + ": not a boolean: '" + value + "'");
}

} // namespace

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.folds = folds;
  t.learning_rate = learning_rate;
  t.seed = seed;
  t.experiment = experiment_enum();
  t.target = target_enum();
  t.hidden_dim = hidden_dim;
  t.wide_sigmoid = wide_sigmoid;
  t.threads = threads;
  return t;
}

std::string RunConfig::serialize() const {
  std::ostringstream out; // keys in sorted order
  out << "activity_epoch = " << activity_epoch << '\n';
  out << "cgm_interval = " << cgm_interval << '\n';
  out << "days = " << days << '\n';
  out << "dropout = " << csv::format_double(dropout) << '\n';
  out << "epochs = " << epochs << '\n';
  out << "experiment = " << experiment << '\n';
  out << "folds = " << folds << '\n';
  out << "hidden_dim = " << hidden_dim << '\n';
  out << "learning_rate = " << csv::format_double(learning_rate) << '\n';
  out << "min_cgm_len = " << min_cgm_len << '\n';
  out << "n_patients = " << n_patients << '\n';
  out << "noise_sd = " << csv::format_double(noise_sd) << '\n';
  out << "overlap_ratio = " << csv::format_double(overlap_ratio) << '\n';
  out << "seed = " << seed << '\n';
  out << "target = " << target << '\n';
  out << "threads = " << threads << '\n';
  out << "wide_sigmoid = " << (wide_sigmoid ? "true" : "false") << '\n';
  return out.str();
}

void RunConfig::apply_pair(const std::string& key, const std::string& value) {
  if (key == "n_patients") n_patients = static_cast<int>(to_int(key, value));
  else if (key == "days") days = static_cast<int>(to_int(key, value));
  else if (key == "cgm_interval") cgm_interval = to_int(key, value);
  else if (key == "activity_epoch") activity_epoch = to_int(key, value);
  else if (key == "noise_sd") noise_sd = to_double(key, value);
  else if (key == "dropout") dropout = to_double(key, value);
  else if (key == "target") target = value;
  else if (key == "min_cgm_len") min_cgm_len = to_int(key, value);
  else if (key == "overlap_ratio") overlap_ratio = to_double(key, value);
  else if (key == "experiment") experiment = value;
  else if (key == "epochs") epochs = static_cast<int>(to_int(key, value));
  else if (key == "folds") folds = static_cast<int>(to_int(key, value));
  else if (key == "learning_rate") learning_rate = to_double(key, value);
  else if (key == "hidden_dim") hidden_dim = static_cast<int>(to_int(key, value));
  else if (key == "wide_sigmoid") wide_sigmoid = to_bool(key, value);
  else if (key == "seed") seed = to_uint(key, value);
  else if (key == "threads") threads = static_cast<int>(to_int(key, value));
  else raise(Errc::config_error, "unknown config key '" + key + "'");
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::config_error, "cannot open config file " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      raise(Errc::config_error,
            path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
    apply_pair(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

void echo_resolved_config(const RunConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "resolved_config.txt");
  if (!out) raise(Errc::io_failure, "cannot write resolved config in " + dir.string());
  out << "# " << kToolkitName << ' ' << kToolkitVersion << '\n';
  out << config.serialize();
  if (!out) raise(Errc::io_failure, "write failed in " + dir.string());
}

} // namespace glyco
