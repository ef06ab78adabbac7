#pragma once

#include <map>
#include <string>
#include <vector>

#include "ambient/mixture.hpp"
#include "ambient/schedule.hpp"

namespace ambient {

/// Flat key=value run configuration with dotted prefixes. Parsing applies the
/// full key schema: unknown keys are rejected, missing keys take defaults,
/// and every value is rewritten to a canonical form so that echo is stable
/// under parse/echo round trips.
class RunConfig {
 public:
  RunConfig();  // defaults only

  static RunConfig parse_text(const std::string& text);
  static RunConfig load_file(const std::string& path);

  void set(const std::string& key, const std::string& value);  // validates + canonicalizes

  /// Applies ATW_SEED to every *.seed key when the variable is set.
  void apply_env();

  const std::string& raw(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  /// Canonical echo: sorted "key = value" lines, defaults included.
  std::string echo() const;

 private:
  std::map<std::string, std::string> values_;
};

ScheduleSpec schedule_spec_from(const RunConfig& cfg);
GaussianMixture mixture_from(const RunConfig& cfg);
bool has_mixture(const RunConfig& cfg);

}  // namespace ambient
