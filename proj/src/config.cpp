#include "disparity/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "disparity/errors.hpp"

namespace disparity {
namespace {

std::string trim_copy(const std::string& s) {
  size_t begin = 0;
  size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) {
    ++begin;
  }
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) {
    --end;
  }
  return s.substr(begin, end - begin);
}

// Applies an EmConfig field; returns false when the field name is unknown.
bool apply_em_entry(EmConfig& em, const std::string& field,
                    const std::string& value) {
  if (field == "num_components") {
    em.num_components = static_cast<int>(parse_int_value(value));
  } else if (field == "max_iters") {
    em.max_iters = static_cast<int>(parse_int_value(value));
  } else if (field == "rel_tol") {
    em.rel_tol = parse_double_value(value);
  } else if (field == "variance_floor") {
    em.variance_floor = parse_double_value(value);
  } else if (field == "seed") {
    em.seed = static_cast<std::uint64_t>(parse_int_value(value));
  } else if (field == "num_restarts") {
    em.num_restarts = static_cast<int>(parse_int_value(value));
  } else {
    return false;
  }
  return true;
}

}  // namespace

void ClassifierConfig::validate() const {
  em_speaker.validate();
  em_test.validate();
  scoring.validate();
  // FeatureConfig::validate needs a sample rate, so it runs at use time.
}

bool parse_bool_value(const std::string& text) {
  std::string s = trim_copy(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw DataError("expected a boolean, got '" + text + "'");
}

long long parse_int_value(const std::string& text) {
  const std::string s = trim_copy(text);
  try {
    size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("expected an integer, got '" + text + "'");
  }
}

double parse_double_value(const std::string& text) {
  const std::string s = trim_copy(text);
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("expected a number, got '" + text + "'");
  }
}

void apply_config_entry(ClassifierConfig& config, const std::string& key,
                        const std::string& value) {
  const std::string k = trim_copy(key);
  const std::string v = trim_copy(value);

  if (k == "use_pct") {
    config.use_pct = parse_bool_value(v);
    return;
  }

  const size_t dot = k.find('.');
  if (dot == std::string::npos) {
    throw DataError("unknown config key '" + k + "'");
  }
  const std::string section = k.substr(0, dot);
  const std::string field = k.substr(dot + 1);

  if (section == "feature") {
    FeatureConfig& f = config.features;
    if (field == "window_size") {
      f.window_size = parse_double_value(v);
    } else if (field == "window_shift") {
      f.window_shift = parse_double_value(v);
    } else if (field == "num_filters") {
      f.num_filters = static_cast<int>(parse_int_value(v));
    } else if (field == "num_ceps") {
      f.num_ceps = static_cast<int>(parse_int_value(v));
    } else if (field == "min_freq") {
      f.min_freq = parse_double_value(v);
    } else if (field == "max_freq") {
      f.max_freq = parse_double_value(v);
    } else if (field == "use_delta") {
      f.use_delta = parse_bool_value(v);
    } else if (field == "include_c0") {
      f.include_c0 = parse_bool_value(v);
    } else if (field == "pre_emphasis") {
      f.pre_emphasis = parse_double_value(v);
    } else if (field == "window_function") {
      f.window_function = parse_window_function(v);
    } else {
      throw DataError("unknown config key '" + k + "'");
    }
    return;
  }
  if (section == "em") {
    const bool known = apply_em_entry(config.em_speaker, field, v);
    if (known) apply_em_entry(config.em_test, field, v);
    if (!known) throw DataError("unknown config key '" + k + "'");
    return;
  }
  if (section == "em_speaker") {
    if (!apply_em_entry(config.em_speaker, field, v)) {
      throw DataError("unknown config key '" + k + "'");
    }
    return;
  }
  if (section == "em_test") {
    if (!apply_em_entry(config.em_test, field, v)) {
      throw DataError("unknown config key '" + k + "'");
    }
    return;
  }
  if (section == "scoring") {
    ScoringConfig& s = config.scoring;
    if (field == "measure") {
      s.measure = parse_measure(v);
    } else if (field == "estimator") {
      s.estimator = parse_estimator(v);
    } else if (field == "beta") {
      s.beta = parse_double_value(v);
    } else if (field == "trim_low") {
      s.trim.low_frac = parse_double_value(v);
    } else if (field == "trim_high") {
      s.trim.high_frac = parse_double_value(v);
    } else {
      throw DataError("unknown config key '" + k + "'");
    }
    return;
  }
  throw DataError("unknown config key '" + k + "'");
}

ClassifierConfig parse_config_text(const std::string& text,
                                   ClassifierConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim_copy(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(line_no) +
                      " is not 'key = value': '" + line + "'");
    }
    try {
      apply_config_entry(base, line.substr(0, eq), line.substr(eq + 1));
    } catch (const DataError& e) {
      throw DataError("config line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return base;
}

ClassifierConfig load_config_file(const std::string& path,
                                  ClassifierConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), std::move(base));
}

}  // namespace disparity
