#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "wattcast/error.hpp"

namespace wattcast::models {

enum class Family { lstm, cnn, cnn_lstm, tcn };

inline constexpr Family kAllFamilies[] = {Family::lstm, Family::cnn, Family::cnn_lstm, Family::tcn};

/// Canonical identifier used in configs and CSV files.
inline std::string_view family_id(Family f) {
  switch (f) {
    case Family::lstm: return "LSTM";
    case Family::cnn: return "CNN";
    case Family::cnn_lstm: return "CNN_LSTM";
    case Family::tcn: return "TCN";
  }
  return "?";
}

/// Name as printed in result tables.
inline std::string_view family_display_name(Family f) { return f == Family::cnn_lstm ? "CNN-LSTM" : family_id(f); }

inline Family parse_family(std::string_view s) {
  for (Family f : kAllFamilies)
    if (s == family_id(f) || s == family_display_name(f)) return f;
  if (s == "lstm") return Family::lstm;
  if (s == "cnn") return Family::cnn;
  if (s == "cnn_lstm" || s == "cnn-lstm") return Family::cnn_lstm;
  if (s == "tcn") return Family::tcn;
  throw ConfigError("unknown model family '" + std::string(s) + "'");
}

/// Receptive field of `levels` TCN blocks with dilations 1, 2, ..., 2^(levels-1)
/// and two convolutions per block.
inline std::size_t tcn_receptive_field(std::size_t kernel, std::size_t levels) {
  return 1 + 2 * (kernel - 1) * ((std::size_t{1} << levels) - 1);
}

/// Smallest block count whose receptive field covers `n_timesteps`.
inline std::size_t tcn_levels_for(std::size_t kernel, std::size_t n_timesteps) {
  if (kernel < 2) throw ConfigError("TCN: kernel size must be >= 2 to grow a receptive field");
  std::size_t levels = 1;
  while (tcn_receptive_field(kernel, levels) < n_timesteps) ++levels;
  return levels;
}

/// Architecture description. Each family reads the fields it needs:
///   LSTM      lstm_layers, lstm_units, mlp_units, dropout
///   CNN       conv_blocks, filters, kernel_size, mlp_units, dropout
///   CNN_LSTM  filters, kernel_size, lstm_layers, lstm_units, mlp_units, dropout
///   TCN       filters (channels), kernel_size, dropout; depth from n_timesteps
struct ModelSpec {
  Family family = Family::lstm;
  std::size_t n_timesteps = 12;
  std::uint64_t seed = 0;

  std::size_t lstm_layers = 2;
  std::size_t lstm_units = 64;
  std::size_t mlp_units = 32;
  double dropout = 0.0;
  std::size_t conv_blocks = 2;
  std::size_t filters = 32;
  std::size_t kernel_size = 3;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;

  /// CNN pools by 2 between consecutive blocks.
  std::size_t cnn_output_length() const {
    std::size_t t = n_timesteps;
    for (std::size_t i = 1; i < conv_blocks; ++i) t /= 2;
    return t;
  }

  std::size_t tcn_levels() const { return tcn_levels_for(kernel_size, n_timesteps); }

  void validate() const {
    if (n_timesteps == 0) throw ConfigError("model: n_timesteps must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model: dropout must lie in [0, 1)");
    switch (family) {
      case Family::lstm:
        if (lstm_layers == 0 || lstm_units == 0 || mlp_units == 0)
          throw ConfigError("LSTM: layer count and sizes must be positive");
        break;
      case Family::cnn:
        if (conv_blocks == 0 || filters == 0 || kernel_size == 0 || mlp_units == 0)
          throw ConfigError("CNN: block count and sizes must be positive");
        if (cnn_output_length() == 0)
          throw ConfigError("CNN: " + std::to_string(conv_blocks) + " blocks pool a window of " +
                            std::to_string(n_timesteps) + " down to zero length");
        break;
      case Family::cnn_lstm:
        if (filters == 0 || kernel_size == 0 || lstm_layers == 0 || lstm_units == 0 || mlp_units == 0)
          throw ConfigError("CNN_LSTM: sizes must be positive");
        break;
      case Family::tcn:
        if (filters == 0) throw ConfigError("TCN: channel count must be positive");
        (void)tcn_levels();
        break;
    }
  }
};

/// `key=value` lines, one per field, fixed order.
inline std::string to_key_value(const ModelSpec& s) {
  std::ostringstream os;
  os << "family=" << family_id(s.family) << '\n'
     << "n_timesteps=" << s.n_timesteps << '\n'
     << "seed=" << s.seed << '\n'
     << "lstm_layers=" << s.lstm_layers << '\n'
     << "lstm_units=" << s.lstm_units << '\n'
     << "mlp_units=" << s.mlp_units << '\n';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", s.dropout);
  os << "dropout=" << buf << '\n'
     << "conv_blocks=" << s.conv_blocks << '\n'
     << "filters=" << s.filters << '\n'
     << "kernel_size=" << s.kernel_size << '\n';
  return os.str();
}

inline ModelSpec parse_key_value(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("model spec: expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  ModelSpec s;
  const auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(std::string("model spec: missing key '") + key + "'");
    return it->second;
  };
  try {
    s.family = parse_family(get("family"));
    s.n_timesteps = std::stoull(get("n_timesteps"));
    s.seed = std::stoull(get("seed"));
    s.lstm_layers = std::stoull(get("lstm_layers"));
    s.lstm_units = std::stoull(get("lstm_units"));
    s.mlp_units = std::stoull(get("mlp_units"));
    s.dropout = std::stod(get("dropout"));
    s.conv_blocks = std::stoull(get("conv_blocks"));
    s.filters = std::stoull(get("filters"));
    s.kernel_size = std::stoull(get("kernel_size"));
  } catch (const std::logic_error& e) {
    throw ParseError(std::string("model spec: bad numeric value (") + e.what() + ")");
  }
  return s;
}

inline void save_spec(const ModelSpec& s, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << to_key_value(s);
}

inline ModelSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_key_value(in);
}

}  // namespace wattcast::models
