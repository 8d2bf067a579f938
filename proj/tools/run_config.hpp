#pragma once

// JSON run configuration for the command-line tool.
//
// Resolution order: built-in defaults, then the config file, then flags.
// Objects merge key by key; arrays and scalars replace wholesale.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wattcast/wattcast.hpp"

namespace wattcast::cli {

using json = nlohmann::ordered_json;
using experiment::Family;

inline constexpr const char* kConfigEnvVar = "WATTCAST_CONFIG";

inline json default_config() {
  return json::parse(R"({
    "data": [],
    "cleaning": {
      "cutoff": {"alpha": 0, "beta": 10000},
      "zscore": {"window": "7d", "omega": 3},
      "aggregation": {"bin": "5m", "start": "2020-01-01T00:10:00Z", "end": "2021-12-01T00:00:00Z"}
    },
    "split": {"train_end": "2021-03-01T00:00:00Z", "val_end": "2021-06-01T00:00:00Z", "context_prefix": true},
    "windows": [12, 288, 2016],
    "families": ["LSTM", "CNN", "CNN_LSTM", "TCN"],
    "grids": {},
    "search": {"n_iter": 10},
    "train": {"max_epochs": 100, "patience": 10},
    "hyperparameters": {},
    "seed": 0,
    "jobs": 1,
    "out": "wattcast-out"
  })");
}

/// Objects whose keys are user-defined; not checked against the defaults.
inline bool is_free_form(const std::string& pointer) {
  return pointer == "/grids" || pointer == "/hyperparameters" || pointer == "/data";
}

namespace detail {

inline void check_keys(const json& given, const json& reference, const std::string& at) {
  if (!given.is_object() || !reference.is_object() || is_free_form(at)) return;
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string path = at + "/" + it.key();
    if (!reference.contains(it.key())) throw ConfigError("config: unknown key '" + path + "'");
    check_keys(it.value(), reference.at(it.key()), path);
  }
}

inline void list_missing(const json& given, const json& reference, const std::string& at,
                         std::vector<std::string>& out) {
  for (auto it = reference.begin(); it != reference.end(); ++it) {
    const std::string path = at + "/" + it.key();
    if (!given.is_object() || !given.contains(it.key()))
      out.push_back(path);
    else if (it.value().is_object() && !is_free_form(path) && !it.value().empty())
      list_missing(given.at(it.key()), it.value(), path, out);
  }
}

inline void merge(json& base, const json& patch) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object())
      merge(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

}  // namespace detail

/// The effective configuration plus provenance for the manifest.
struct LoadedConfig {
  json effective;
  std::string source;                     ///< config file path, empty if none
  std::vector<std::string> defaults_applied;  ///< JSON pointers not set by the file
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
}

/// Loads `path` (or $WATTCAST_CONFIG when `path` is empty) over the defaults.
/// A manifest written by a previous run is accepted and its config reused.
inline LoadedConfig load_config(std::string path) {
  if (path.empty())
    if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') path = env;
  LoadedConfig out;
  out.effective = default_config();
  json file = json::object();
  if (!path.empty()) {
    file = read_json_file(path);
    if (file.is_object() && file.value("tool", "") == "wattcast" && file.contains("config")) file = file["config"];
    if (!file.is_object()) throw ConfigError("config '" + path + "': top level must be an object");
    detail::check_keys(file, out.effective, "");
    out.source = path;
  }
  detail::list_missing(file, out.effective, "", out.defaults_applied);
  detail::merge(out.effective, file);
  return out;
}

// --- typed views -------------------------------------------------------------

/// "300", 300, "300s", "5m", "12h", "7d".
inline Seconds parse_duration(const json& j, const std::string& what) {
  if (j.is_number()) {
    const double v = j.get<double>();
    if (!(v > 0) || v != std::floor(v)) throw ConfigError(what + ": duration must be a positive whole number of seconds");
    return Seconds{static_cast<long long>(v)};
  }
  if (!j.is_string()) throw ConfigError(what + ": expected a duration such as \"5m\" or \"7d\"");
  const std::string s = j.get<std::string>();
  std::size_t used = 0;
  long long n = 0;
  try {
    n = std::stoll(s, &used);
  } catch (const std::logic_error&) {
    throw ConfigError(what + ": bad duration '" + s + "'");
  }
  const std::string unit = s.substr(used);
  long long scale = 0;
  if (unit.empty() || unit == "s") scale = 1;
  else if (unit == "m" || unit == "min") scale = 60;
  else if (unit == "h") scale = 3600;
  else if (unit == "d") scale = 86400;
  if (scale == 0 || n <= 0) throw ConfigError(what + ": bad duration '" + s + "'");
  return Seconds{n * scale};
}

inline Timestamp parse_time_field(const json& j, const std::string& what) {
  if (!j.is_string()) throw ConfigError(what + ": expected a timestamp string");
  try {
    return parse_timestamp(j.get<std::string>());
  } catch (const ParseError& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

template <class T>
T get_number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + ": expected a number");
  if constexpr (std::is_integral_v<T>) {
    const double v = j.get<double>();
    if (v < 0 || v != std::floor(v)) throw ConfigError(what + ": expected a non-negative integer");
    return static_cast<T>(j.get<std::uint64_t>());
  } else {
    return j.get<T>();
  }
}

struct DataSource {
  std::string name;
  std::optional<std::string> csv;
  CsvSchema schema;
  std::optional<SynthConfig> synthetic;
  bool cleaned = false;  ///< already the output of `clean`; benchmark skips cleaning
};

/// Split boundary given as a timestamp or as a fraction of the series.
struct SplitPoint {
  std::optional<Timestamp> at;
  double fraction = 0.0;

  Timestamp resolve(const TimeSeries& s) const {
    if (at) return *at;
    if (s.size() < 3) throw ConfigError("split: series too short for a fractional split");
    auto i = static_cast<std::size_t>(fraction * static_cast<double>(s.size()));
    i = std::clamp<std::size_t>(i, 1, s.size() - 1);
    return s[i].timestamp;
  }
};

struct RunConfig {
  std::vector<DataSource> data;
  CutoffConfig cutoff;
  ZScoreConfig zscore;
  Seconds bin{300};
  std::optional<Timestamp> agg_start, agg_end;  ///< nullopt = "auto"
  SplitPoint train_end, val_end;
  bool context_prefix = true;
  std::vector<std::size_t> windows;
  std::vector<Family> families;
  std::map<Family, std::map<std::string, std::vector<double>>> grids;
  std::size_t n_iter = 10;
  experiment::TrainConfig train;
  std::map<std::string, double> hyperparameters;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out;
};

namespace detail {

inline SynthConfig parse_synth(const json& j, std::uint64_t default_seed, const std::string& at) {
  SynthConfig c;
  c.seed = default_seed;
  if (!j.is_object()) throw ConfigError(at + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string k = it.key(), what = at + "/" + k;
    const json& v = it.value();
    if (k == "start") c.start = parse_time_field(v, what);
    else if (k == "end") c.end = parse_time_field(v, what);
    else if (k == "cadence_seconds") c.cadence_seconds = get_number<double>(v, what);
    else if (k == "jitter") c.jitter = get_number<double>(v, what);
    else if (k == "base_load") c.base_load = get_number<double>(v, what);
    else if (k == "daily_amplitude") c.daily_amplitude = get_number<double>(v, what);
    else if (k == "weekly_amplitude") c.weekly_amplitude = get_number<double>(v, what);
    else if (k == "noise_sigma") c.noise_sigma = get_number<double>(v, what);
    else if (k == "outlier_rate") c.outlier_rate = get_number<double>(v, what);
    else if (k == "gap_rate") c.gap_rate = get_number<double>(v, what);
    else if (k == "gap_min_readings") c.gap_min_readings = get_number<std::size_t>(v, what);
    else if (k == "gap_max_readings") c.gap_max_readings = get_number<std::size_t>(v, what);
    else if (k == "seed") c.seed = get_number<std::uint64_t>(v, what);
    else throw ConfigError("config: unknown key '" + what + "'");
  }
  c.validate();
  return c;
}

inline SplitPoint parse_split_point(const json& j, const std::string& what) {
  SplitPoint p;
  if (j.is_number()) {
    p.fraction = j.get<double>();
    if (!(p.fraction > 0.0 && p.fraction < 1.0)) throw ConfigError(what + ": fraction must lie in (0, 1)");
  } else {
    p.at = parse_time_field(j, what);
  }
  return p;
}

inline std::optional<Timestamp> parse_time_or_auto(const json& j, const std::string& what) {
  if (j.is_string() && j.get<std::string>() == "auto") return std::nullopt;
  return parse_time_field(j, what);
}

}  // namespace detail

inline RunConfig parse_run_config(const json& j) {
  RunConfig c;
  c.seed = get_number<std::uint64_t>(j.at("seed"), "/seed");
  c.jobs = get_number<std::size_t>(j.at("jobs"), "/jobs");
  if (c.jobs == 0) throw ConfigError("/jobs: must be at least 1");
  c.out = j.at("out").get<std::string>();

  const json& data = j.at("data");
  if (!data.is_array()) throw ConfigError("/data: expected an array of sources");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string at = "/data/" + std::to_string(i);
    const json& d = data[i];
    if (!d.is_object()) throw ConfigError(at + ": expected an object");
    DataSource src;
    for (auto it = d.begin(); it != d.end(); ++it) {
      const std::string k = it.key();
      if (k == "name") src.name = it.value().get<std::string>();
      else if (k == "csv") src.csv = it.value().get<std::string>();
      else if (k == "timestamp_column") src.schema.timestamp_column = it.value().get<std::string>();
      else if (k == "value_column") src.schema.value_column = it.value().get<std::string>();
      else if (k == "cleaned") {
        if (!it.value().is_boolean()) throw ConfigError(at + "/cleaned: expected true or false");
        src.cleaned = it.value().get<bool>();
      } else if (k == "synthetic") src.synthetic = detail::parse_synth(it.value(), c.seed, at + "/synthetic");
      else throw ConfigError("config: unknown key '" + at + "/" + k + "'");
    }
    if (src.csv.has_value() == src.synthetic.has_value())
      throw ConfigError(at + ": exactly one of 'csv' or 'synthetic' is required");
    if (src.name.empty())
      src.name = src.csv ? std::filesystem::path(*src.csv).stem().string() : "synthetic" + std::to_string(i);
    c.data.push_back(std::move(src));
  }

  const json& cl = j.at("cleaning");
  c.cutoff.alpha = get_number<double>(cl.at("cutoff").at("alpha"), "/cleaning/cutoff/alpha");
  c.cutoff.beta = get_number<double>(cl.at("cutoff").at("beta"), "/cleaning/cutoff/beta");
  c.cutoff.validate();
  c.zscore.window = parse_duration(cl.at("zscore").at("window"), "/cleaning/zscore/window");
  c.zscore.omega = get_number<double>(cl.at("zscore").at("omega"), "/cleaning/zscore/omega");
  c.zscore.validate();
  const json& agg = cl.at("aggregation");
  c.bin = parse_duration(agg.at("bin"), "/cleaning/aggregation/bin");
  c.agg_start = detail::parse_time_or_auto(agg.at("start"), "/cleaning/aggregation/start");
  c.agg_end = detail::parse_time_or_auto(agg.at("end"), "/cleaning/aggregation/end");

  const json& sp = j.at("split");
  c.train_end = detail::parse_split_point(sp.at("train_end"), "/split/train_end");
  c.val_end = detail::parse_split_point(sp.at("val_end"), "/split/val_end");
  if (!c.train_end.at && !c.val_end.at && !(c.train_end.fraction < c.val_end.fraction))
    throw ConfigError("/split: train_end fraction must be below val_end fraction");
  c.context_prefix = sp.at("context_prefix").get<bool>();

  for (const auto& w : j.at("windows")) {
    const auto n = get_number<std::size_t>(w, "/windows");
    if (n == 0) throw ConfigError("/windows: window lengths must be positive");
    c.windows.push_back(n);
  }
  if (c.windows.empty()) throw ConfigError("/windows: at least one window is required");
  for (const auto& f : j.at("families")) c.families.push_back(models::parse_family(f.get<std::string>()));
  if (c.families.empty()) throw ConfigError("/families: at least one family is required");

  for (auto it = j.at("grids").begin(); it != j.at("grids").end(); ++it) {
    const Family f = models::parse_family(it.key());
    for (auto d = it.value().begin(); d != it.value().end(); ++d) {
      const std::string what = "/grids/" + it.key() + "/" + d.key();
      if (std::find(std::begin(experiment::kKnownDimensions), std::end(experiment::kKnownDimensions), d.key()) ==
          std::end(experiment::kKnownDimensions))
        throw ConfigError(what + ": unknown hyperparameter");
      std::vector<double> vals;
      if (d.value().is_number()) vals.push_back(d.value().get<double>());
      else
        for (const auto& v : d.value()) vals.push_back(get_number<double>(v, what));
      if (vals.empty()) throw ConfigError(what + ": empty value list");
      c.grids[f][d.key()] = std::move(vals);
    }
  }
  c.n_iter = get_number<std::size_t>(j.at("search").at("n_iter"), "/search/n_iter");
  c.train.max_epochs = get_number<std::size_t>(j.at("train").at("max_epochs"), "/train/max_epochs");
  c.train.patience = get_number<std::size_t>(j.at("train").at("patience"), "/train/patience");
  c.train.validate();
  for (auto it = j.at("hyperparameters").begin(); it != j.at("hyperparameters").end(); ++it)
    c.hyperparameters[it.key()] = get_number<double>(it.value(), "/hyperparameters/" + it.key());
  return c;
}

// --- per-series resolution ---------------------------------------------------

inline TimeSeries load_source(const DataSource& src) {
  if (src.csv) {
    try {
      return read_csv(*src.csv, src.schema).series.with_label(src.name);
    } catch (const ParseError& e) {
      throw ParseError(*src.csv + ": " + e.what());
    }
  }
  return generate_synthetic(*src.synthetic).with_label(src.name);
}

/// "auto" start/end snap inward to whole bins covering the readings.
inline AggregationConfig resolve_aggregation(const RunConfig& c, const TimeSeries& raw) {
  AggregationConfig agg;
  agg.bin = c.bin;
  const auto w = c.bin.count();
  if (raw.empty() && (!c.agg_start || !c.agg_end)) throw ConfigError("aggregation: 'auto' needs a non-empty series");
  if (c.agg_start) {
    agg.start = *c.agg_start;
  } else {
    const auto t = raw.front().timestamp.time_since_epoch().count();
    agg.start = Timestamp{Seconds{(t + w - 1) / w * w}};
  }
  if (c.agg_end) {
    agg.end = *c.agg_end;
  } else {
    const auto t = raw.back().timestamp.time_since_epoch().count();
    agg.end = Timestamp{Seconds{t / w * w}};
  }
  agg.validate();
  return agg;
}

inline SplitSpec resolve_split(const RunConfig& c, const TimeSeries& cleaned) {
  return {c.train_end.resolve(cleaned), c.val_end.resolve(cleaned)};
}

inline experiment::MatrixConfig matrix_config(const RunConfig& c) {
  experiment::MatrixConfig m;
  m.cutoff = c.cutoff;
  m.zscore = c.zscore;
  m.context_prefix = c.context_prefix;
  m.windows = c.windows;
  m.families = c.families;
  m.grid_overrides = c.grids;
  m.train = c.train;
  m.n_iter = c.n_iter;
  m.seed = c.seed;
  m.jobs = c.jobs;
  return m;
}

}  // namespace wattcast::cli
