#pragma once

#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace glyco::log {

// Structured single-line records on stderr; data never goes here.
// Format: level=<level> module=<module> event=<event> k1=v1 k2=v2 ...

using Fields = std::vector<std::pair<std::string, std::string>>;

inline bool& enabled() {
  static bool on = true;
  return on;
}

inline void emit(std::string_view level, std::string_view module, std::string_view event,
                 const Fields& fields = {}) {
  if (!enabled()) return;
  std::ostringstream line;
  line << "level=" << level << " module=" << module << " event=" << event;
  for (const auto& [k, v] : fields) line << ' ' << k << '=' << v;
  std::cerr << line.str() << '\n';
}

inline void info(std::string_view module, std::string_view event, const Fields& fields = {}) {
  emit("info", module, event, fields);
}

inline void warn(std::string_view module, std::string_view event, const Fields& fields = {}) {
  emit("warn", module, event, fields);
}

inline void error(std::string_view module, std::string_view event, const Fields& fields = {}) {
  emit("error", module, event, fields);
}

} // namespace glyco::log
