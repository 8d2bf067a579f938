// wattcast command-line tool: synth, clean, prepare, train, tune, evaluate,
// benchmark, report.

#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace wattcast;
using namespace wattcast::cli;
using experiment::Family;

namespace {

bool g_quiet = false;

void note(const std::string& msg) {
  if (!g_quiet) std::cerr << msg << '\n';
}

// --- flag overrides ------------------------------------------------------------

enum class Kind { integer, number, text, time_or_fraction, int_list, text_list, csv_inputs, clear_flag, set_flag, assignment, grid };

/// A command-line flag that writes into the effective config at `pointer`.
/// A `*` path segment applies the value to every element of that array.
struct Override {
  CLI::Option* option = nullptr;
  std::string pointer;
  Kind kind{};
  std::string value;
  std::vector<std::string> values;
  bool flag = false;
};

json to_json(Kind kind, const std::string& s, const std::string& name) {
  try {
    std::size_t used = 0;
    switch (kind) {
      case Kind::integer: {
        const auto v = std::stoull(s, &used);
        if (used != s.size()) break;
        return json(v);
      }
      case Kind::number: {
        const double v = std::stod(s, &used);
        if (used != s.size()) break;
        return json(v);
      }
      case Kind::time_or_fraction:
        try {
          const double v = std::stod(s, &used);
          if (used == s.size()) return json(v);
        } catch (const std::logic_error&) {
        }
        return json(s);
      default: return json(s);
    }
  } catch (const std::logic_error&) {
  }
  throw ConfigError(name + ": cannot parse '" + s + "'");
}

void set_at(json& root, const std::string& pointer, const json& value) {
  const auto star = pointer.find("/*/");
  if (star == std::string::npos) {
    root[json::json_pointer(pointer)] = value;
    return;
  }
  json& arr = root[json::json_pointer(pointer.substr(0, star))];
  for (auto& el : arr) set_at(el, pointer.substr(star + 2), value);
}

/// Splits "a=1", "b=2,3" style arguments.
std::pair<std::string, std::string> split_assignment(const std::string& s, const std::string& name) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(name + ": expected key=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

class Overrides {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& pointer, Kind kind, const std::string& help) {
    Override& o = items_.emplace_back();
    o.pointer = pointer;
    o.kind = kind;
    switch (kind) {
      case Kind::int_list:
      case Kind::text_list:
      case Kind::csv_inputs:
      case Kind::assignment:
      case Kind::grid: o.option = app->add_option(flag, o.values, help); break;
      case Kind::clear_flag:
      case Kind::set_flag: o.option = app->add_flag(flag, o.flag, help); break;
      default: o.option = app->add_option(flag, o.value, help); break;
    }
  }

  /// Fixed value applied after the config file, below any flag.
  void add_default(const std::string& pointer, const std::string& value) { defaults_.emplace_back(pointer, value); }

  void apply(json& cfg) const {
    for (const auto& [pointer, value] : defaults_) set_at(cfg, pointer, value);
    for (const auto& o : items_) {
      if (o.option->count() == 0) continue;
      const std::string name = o.option->get_name();
      switch (o.kind) {
        case Kind::clear_flag: set_at(cfg, o.pointer, false); break;
        case Kind::set_flag: set_at(cfg, o.pointer, true); break;
        case Kind::int_list: {
          json arr = json::array();
          for (const auto& v : o.values) arr.push_back(to_json(Kind::integer, v, name));
          set_at(cfg, o.pointer, arr);
          break;
        }
        case Kind::text_list: set_at(cfg, o.pointer, json(o.values)); break;
        case Kind::csv_inputs: {
          json arr = json::array();
          for (const auto& v : o.values) arr.push_back({{"name", fs::path(v).stem().string()}, {"csv", v}});
          set_at(cfg, o.pointer, arr);
          break;
        }
        case Kind::assignment:
          for (const auto& v : o.values) {
            const auto [k, val] = split_assignment(v, name);
            set_at(cfg, o.pointer + "/" + k, to_json(Kind::number, val, name));
          }
          break;
        case Kind::grid:
          // FAMILY:key=v1,v2
          for (const auto& v : o.values) {
            const auto colon = v.find(':');
            if (colon == std::string::npos) throw ConfigError(name + ": expected FAMILY:key=v1,v2, got '" + v + "'");
            const std::string fam(models::family_id(models::parse_family(v.substr(0, colon))));
            const auto [k, list] = split_assignment(v.substr(colon + 1), name);
            json arr = json::array();
            std::stringstream ss(list);
            for (std::string item; std::getline(ss, item, ',');) arr.push_back(to_json(Kind::number, item, name));
            set_at(cfg, o.pointer + "/" + fam + "/" + k, arr);
          }
          break;
        default: set_at(cfg, o.pointer, to_json(o.kind, o.value, name)); break;
      }
    }
  }

 private:
  std::deque<Override> items_;
  std::vector<std::pair<std::string, std::string>> defaults_;
};

// --- shared plumbing -------------------------------------------------------------

struct Common {
  std::string config;
  Overrides overrides;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, std::string("JSON config file (default: $") + kConfigEnvVar + ")");
  c.overrides.add(app, "--seed", "/seed", Kind::integer, "master seed");
  c.overrides.add(app, "--jobs", "/jobs", Kind::integer, "worker threads for the random search");
  c.overrides.add(app, "--out", "/out", Kind::text, "output directory");
}

void add_input(CLI::App* app, Common& c, const std::string& help) {
  c.overrides.add(app, "--input", "/data", Kind::csv_inputs, help);
}

void add_cleaning(CLI::App* app, Common& c) {
  auto& o = c.overrides;
  o.add(app, "--alpha", "/cleaning/cutoff/alpha", Kind::number, "cutoff lower bound (W)");
  o.add(app, "--beta", "/cleaning/cutoff/beta", Kind::number, "cutoff upper bound (W)");
  o.add(app, "--zscore-window", "/cleaning/zscore/window", Kind::text, "trailing z-score window, e.g. 7d");
  o.add(app, "--omega", "/cleaning/zscore/omega", Kind::number, "z-score threshold");
  o.add(app, "--bin", "/cleaning/aggregation/bin", Kind::text, "aggregation bin width, e.g. 5m");
  o.add(app, "--agg-start", "/cleaning/aggregation/start", Kind::text, "first bin start, or 'auto'");
  o.add(app, "--agg-end", "/cleaning/aggregation/end", Kind::text, "aggregation end, or 'auto'");
}

void add_split(CLI::App* app, Common& c) {
  auto& o = c.overrides;
  o.add(app, "--train-end", "/split/train_end", Kind::time_or_fraction, "end of training (timestamp or fraction)");
  o.add(app, "--val-end", "/split/val_end", Kind::time_or_fraction, "end of validation (timestamp or fraction)");
  o.add(app, "--no-context-prefix", "/split/context_prefix", Kind::clear_flag,
        "window validation/test without the preceding context");
  o.add(app, "--window", "/windows", Kind::int_list, "context window length(s)");
}

void add_training(CLI::App* app, Common& c) {
  c.overrides.add(app, "--max-epochs", "/train/max_epochs", Kind::integer, "epoch budget");
  c.overrides.add(app, "--patience", "/train/patience", Kind::integer, "early-stopping patience");
}

void add_search(CLI::App* app, Common& c) {
  c.overrides.add(app, "--n-iter", "/search/n_iter", Kind::integer, "random search iterations");
  c.overrides.add(app, "--grid", "/grids", Kind::grid, "grid override FAMILY:key=v1,v2 (repeatable)");
}

struct Context {
  std::string command;
  LoadedConfig loaded;
  RunConfig cfg;
  fs::path out;
  std::vector<std::string> outputs;  ///< relative to `out`

  fs::path file(const std::string& rel) {
    outputs.push_back(rel);
    const fs::path p = out / rel;
    fs::create_directories(p.parent_path());
    return p;
  }
};

Context make_context(const std::string& command, const Common& common, bool default_synthetic = false) {
  Context ctx;
  ctx.command = command;
  ctx.loaded = load_config(common.config);
  common.overrides.apply(ctx.loaded.effective);
  if (default_synthetic && ctx.loaded.effective["data"].empty())
    ctx.loaded.effective["data"] = json::array({{{"name", "synthetic"}, {"synthetic", json::object()}}});
  ctx.cfg = parse_run_config(ctx.loaded.effective);
  ctx.out = ctx.cfg.out;
  return ctx;
}

void require_data(const Context& ctx) {
  if (!ctx.cfg.data.empty()) return;
  std::string msg = "missing required key '/data' (give --input or a config with data sources)";
  msg += "\n  defaults applied:";
  for (const auto& d : ctx.loaded.defaults_applied)
    if (d != "/data") msg += " " + d;
  throw ConfigError(msg);
}

std::string utc_now() {
  return format_timestamp(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

std::vector<std::string> g_argv;

/// Written last, so its presence marks a completed run. The timestamp lives
/// only here; every other artifact is a pure function of config and inputs.
void write_manifest(const Context& ctx, const json& extra = json::object()) {
  json m;
  m["tool"] = "wattcast";
  m["command"] = ctx.command;
  m["version"] = WATTCAST_VERSION;
  m["compiler"] = __VERSION__;
  m["cplusplus"] = __cplusplus;
  m["created_utc"] = utc_now();
  m["seed"] = ctx.cfg.seed;
  m["arguments"] = g_argv;
  m["config_file"] = ctx.loaded.source;
  m["defaults_applied"] = ctx.loaded.defaults_applied;
  m["config"] = ctx.loaded.effective;
  if (!extra.empty()) m["inputs"] = extra;
  m["outputs"] = ctx.outputs;
  fs::create_directories(ctx.out);
  std::ofstream(ctx.out / "manifest.json", std::ios::trunc) << m.dump(2) << '\n';
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& p) { return read_json_file(p.string()); }

std::string num(double v) { return format_value(v, -1); }

TimeSeries clean_series(const RunConfig& c, const TimeSeries& raw, const std::string& stage) {
  TimeSeries s = cutoff_filter(raw, c.cutoff);
  if (stage == "cutoff") return s;
  s = zscore_substitute(s, c.zscore);
  if (stage == "zscore") return s;
  return aggregate(s, resolve_aggregation(c, raw));
}

// --- synth -----------------------------------------------------------------------

int cmd_synth(Context& ctx) {
  std::size_t written = 0;
  for (const auto& src : ctx.cfg.data) {
    if (!src.synthetic) {
      note("synth: skipping CSV source '" + src.name + "'");
      continue;
    }
    const SynthResult r = generate_synthetic_logged(*src.synthetic);
    write_csv(r.series, ctx.file(src.name + ".csv").string());
    std::ofstream log(ctx.file(src.name + ".outliers.csv"), std::ios::trunc);
    log << "timestamp,kind\n";
    for (const auto& o : r.outliers)
      log << format_timestamp(r.series[o.index].timestamp) << ',' << (o.kind == OutlierKind::spike ? "spike" : "negative")
          << '\n';
    note("synth: " + src.name + ": " + std::to_string(r.series.size()) + " readings, " +
         std::to_string(r.outliers.size()) + " outliers");
    ++written;
  }
  if (written == 0) throw ConfigError("synth: no synthetic data sources configured");
  write_manifest(ctx);
  return 0;
}

// --- clean -----------------------------------------------------------------------

int cmd_clean(Context& ctx, const std::string& stage) {
  require_data(ctx);
  json summary = json::array();
  for (const auto& src : ctx.cfg.data) {
    const TimeSeries raw = load_source(src);
    const TimeSeries cut = cutoff_filter(raw, ctx.cfg.cutoff);
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) clamped += raw[i].value != cut[i].value;
    const TimeSeries out = clean_series(ctx.cfg, raw, stage);
    write_csv(out, ctx.file(src.name + ".csv").string());
    note("clean: " + src.name + ": " + std::to_string(raw.size()) + " readings -> " + std::to_string(out.size()) +
         " rows (" + std::to_string(clamped) + " clamped, stage " + stage + ")");
    summary.push_back({{"name", src.name}, {"readings", raw.size()}, {"clamped", clamped}, {"rows", out.size()}});
  }
  write_manifest(ctx, {{"stage", stage}, {"series", summary}});
  return 0;
}

// --- prepare ---------------------------------------------------------------------

void write_prepared(Context& ctx, const std::string& dir, const TimeSeries& cleaned, std::size_t window) {
  const SplitSpec sp = resolve_split(ctx.cfg, cleaned);
  const PreparedData d = prepare(cleaned, sp, {.n_timesteps = window, .context_prefix = ctx.cfg.context_prefix});
  write_window_tensor(d.train, ctx.file(dir + "/train.bin").string());
  write_window_tensor(d.validation, ctx.file(dir + "/validation.bin").string());
  write_window_tensor(d.test, ctx.file(dir + "/test.bin").string());
  // Target timestamps of the test split, for plots and error inspection.
  const Splits parts = split(cleaned, sp);
  const std::size_t skip = ctx.cfg.context_prefix ? 0 : window;
  std::ofstream tt(ctx.file(dir + "/test_targets.csv"), std::ios::trunc);
  tt << "timestamp,value_watts\n";
  for (std::size_t i = skip; i < parts.test.size(); ++i)
    tt << format_timestamp(parts.test[i].timestamp) << ',' << num(parts.test[i].value) << '\n';
  write_json(ctx.file(dir + "/meta.json"), {{"series", cleaned.label()},
                                            {"window", window},
                                            {"train_end", format_timestamp(sp.train_end)},
                                            {"val_end", format_timestamp(sp.val_end)},
                                            {"context_prefix", ctx.cfg.context_prefix},
                                            {"scaler", {{"min", d.scaler.min()}, {"max", d.scaler.max()}}},
                                            {"samples",
                                             {{"train", d.train.n_samples},
                                              {"validation", d.validation.n_samples},
                                              {"test", d.test.n_samples}}}});
  note("prepare: " + dir + ": " + std::to_string(d.train.n_samples) + "/" + std::to_string(d.validation.n_samples) +
       "/" + std::to_string(d.test.n_samples) + " samples");
}

int cmd_prepare(Context& ctx, bool force_clean) {
  require_data(ctx);
  for (const auto& src : ctx.cfg.data) {
    const TimeSeries raw = load_source(src);
    // Synthetic sources are raw readings; CSV inputs are taken as cleaned.
    const TimeSeries cleaned = (src.synthetic || force_clean) ? clean_series(ctx.cfg, raw, "all") : raw;
    for (std::size_t w : ctx.cfg.windows) write_prepared(ctx, src.name + "/w" + std::to_string(w), cleaned, w);
  }
  write_manifest(ctx);
  return 0;
}

// --- train / tune / evaluate -------------------------------------------------------

struct PreparedDir {
  PreparedData data;
  json meta;
};

PreparedDir load_prepared(const fs::path& dir, bool with_test) {
  if (!fs::exists(dir / "meta.json")) throw IoError("'" + dir.string() + "' is not a prepared data directory");
  PreparedDir p;
  p.meta = read_json(dir / "meta.json");
  p.data.scaler = Scaler(p.meta["scaler"]["min"].get<double>(), p.meta["scaler"]["max"].get<double>());
  p.data.train = read_window_tensor((dir / "train.bin").string());
  p.data.validation = read_window_tensor((dir / "validation.bin").string());
  if (with_test) p.data.test = read_window_tensor((dir / "test.bin").string());
  return p;
}

void write_history(const fs::path& p, const experiment::TrainHistory& h) {
  std::ofstream out(p, std::ios::trunc);
  out << "epoch,train_mse,val_mse\n";
  for (const auto& e : h.epochs) out << e.epoch << ',' << num(e.train_mse) << ',' << num(e.val_mse) << '\n';
}

void save_model(Context& ctx, models::Forecaster& m) {
  models::save_spec(m.spec(), ctx.file("model.spec").string());
  nn::save_params(m.params().all(), ctx.file("model.bin").string());
}

int cmd_train(Context& ctx, const std::string& data_dir, const std::string& family) {
  const PreparedDir p = load_prepared(data_dir, false);
  experiment::ModelSpec base;
  base.family = models::parse_family(family);
  base.n_timesteps = p.data.train.n_timesteps;
  experiment::TrialConfig trial;
  for (const auto& [k, v] : ctx.cfg.hyperparameters) trial.values.emplace_back(k, v);
  trial.seed = ctx.cfg.seed;
  const auto [spec, choice] = experiment::apply_trial(base, trial);
  models::Forecaster model(spec);
  const auto h =
      experiment::train(model, p.data.train, p.data.validation, ctx.cfg.train, choice.learning_rate, choice.batch_size,
                        ctx.cfg.seed);
  const auto s = experiment::score_watts(p.data.scaler, p.data.validation.targets, model.predict(p.data.validation));
  save_model(ctx, model);
  write_history(ctx.file("history.csv"), h);
  write_json(ctx.file("metrics.json"), {{"family", family_id(spec.family)},
                                        {"window", spec.n_timesteps},
                                        {"parameters", model.parameter_count()},
                                        {"learning_rate", choice.learning_rate},
                                        {"batch_size", choice.batch_size},
                                        {"epochs", h.epochs.size()},
                                        {"best_epoch", h.best_epoch},
                                        {"val_mae_watts", s.mae},
                                        {"val_rmse_watts", s.rmse}});
  note("train: " + std::string(family_id(spec.family)) + " val MAE " + num(s.mae) + " W, RMSE " + num(s.rmse) +
       " W after " + std::to_string(h.epochs.size()) + " epochs");
  write_manifest(ctx, {{"data", data_dir}, {"family", family}});
  return 0;
}

void write_trials(std::ostream& out, const std::string& prefix, const experiment::SearchResult& r) {
  for (const auto& t : r.trials) {
    out << prefix << t.index << ',' << t.config.grid_index << ',' << t.config.seed << ",\"" << t.config.canonical()
        << "\"," << (t.ok ? "ok" : "failed") << ',' << (t.ok ? num(t.val_mae) : "") << ','
        << (t.ok ? num(t.val_rmse) : "") << ',' << t.history.epochs.size() << ',' << t.history.best_epoch << ','
        << (t.index == r.best ? 1 : 0) << '\n';
  }
}

constexpr const char* kTrialsHeader = "trial,grid_index,seed,config,status,val_mae_watts,val_rmse_watts,epochs,best_epoch,best";

int cmd_tune(Context& ctx, const std::string& data_dir, const std::string& family) {
  const PreparedDir p = load_prepared(data_dir, false);
  experiment::ModelSpec base;
  base.family = models::parse_family(family);
  base.n_timesteps = p.data.train.n_timesteps;
  auto grid = experiment::default_grid(base.family);
  if (auto it = ctx.cfg.grids.find(base.family); it != ctx.cfg.grids.end()) grid = grid.with_overrides(it->second);
  auto r = experiment::random_search(base, grid, p.data, ctx.cfg.train,
                                     {.n_iter = ctx.cfg.n_iter, .master_seed = ctx.cfg.seed, .jobs = ctx.cfg.jobs});
  {
    std::ofstream out(ctx.file("trials.csv"), std::ios::trunc);
    out << kTrialsHeader << '\n';
    write_trials(out, "", r);
  }
  auto& best = r.trials[r.best];
  if (!best.ok || !best.model) throw Error("tune: every trial failed; first error: " + best.error);
  save_model(ctx, *best.model);
  write_history(ctx.file("history.csv"), best.history);
  write_json(ctx.file("metrics.json"), {{"family", family_id(base.family)},
                                        {"window", base.n_timesteps},
                                        {"grid_size", grid.cardinality()},
                                        {"best_trial", best.index},
                                        {"best_config", best.config.canonical()},
                                        {"val_mae_watts", best.val_mae},
                                        {"val_rmse_watts", best.val_rmse}});
  note("tune: best " + best.config.canonical() + " val MAE " + num(best.val_mae) + " W");
  write_manifest(ctx, {{"data", data_dir}, {"family", family}});
  return 0;
}

std::vector<std::string> read_target_times(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line.substr(0, line.find(',')));
  return out;
}

int cmd_evaluate(Context& ctx, const std::string& data_dir, const std::string& model_dir) {
  const PreparedDir p = load_prepared(data_dir, true);
  models::Forecaster model(models::load_spec((fs::path(model_dir) / "model.spec").string()));
  nn::load_params(model.params().all(), (fs::path(model_dir) / "model.bin").string());
  const auto& test = p.data.test;
  const auto pred = model.predict(test);
  const auto base = experiment::persistence_forecast(test);
  const auto s = experiment::score_watts(p.data.scaler, test.targets, pred);
  const auto sb = experiment::score_watts(p.data.scaler, test.targets, base);
  const auto times = read_target_times(fs::path(data_dir) / "test_targets.csv");
  const auto actual = p.data.scaler.invert(test.targets);
  const auto predicted = p.data.scaler.invert(pred);
  const auto persisted = p.data.scaler.invert(base);
  {
    std::ofstream out(ctx.file("predictions.csv"), std::ios::trunc);
    out << "timestamp,actual_watts,predicted_watts,persistence_watts\n";
    for (std::size_t i = 0; i < actual.size(); ++i)
      out << (i < times.size() ? times[i] : std::to_string(i)) << ',' << num(actual[i]) << ',' << num(predicted[i])
          << ',' << num(persisted[i]) << '\n';
  }
  write_json(ctx.file("metrics.json"), {{"family", family_id(model.spec().family)},
                                        {"window", model.spec().n_timesteps},
                                        {"samples", test.n_samples},
                                        {"test_mae_watts", s.mae},
                                        {"test_rmse_watts", s.rmse},
                                        {"persistence_mae_watts", sb.mae},
                                        {"persistence_rmse_watts", sb.rmse}});
  std::cout << "MAE " << num(s.mae) << " W, RMSE " << num(s.rmse) << " W (persistence MAE " << num(sb.mae)
            << " W, RMSE " << num(sb.rmse) << " W)\n";
  write_manifest(ctx, {{"data", data_dir}, {"model", model_dir}});
  return 0;
}

// --- benchmark / report ------------------------------------------------------------

std::string cell_stem(const experiment::CellPredictions& p) {
  return p.series + "__" + std::string(models::family_id(models::parse_family(p.algorithm))) + "__w" +
         std::to_string(p.window);
}

int cmd_benchmark(Context& ctx) {
  require_data(ctx);
  experiment::EvalReport report;
  std::ofstream trials(ctx.file("trials.csv"), std::ios::trunc);
  trials << "series,algorithm,window," << kTrialsHeader << '\n';
  for (const auto& src : ctx.cfg.data) {
    const TimeSeries raw = load_source(src);
    const TimeSeries cleaned = src.cleaned ? raw : clean_series(ctx.cfg, raw, "all");
    experiment::MatrixConfig mc = matrix_config(ctx.cfg);
    mc.clean_input = false;
    mc.split = resolve_split(ctx.cfg, cleaned);
    note("benchmark: " + src.name + ": " + std::to_string(cleaned.size()) + " bins, train < " +
         format_timestamp(mc.split.train_end) + " <= val < " + format_timestamp(mc.split.val_end) + " <= test");
    const auto r = experiment::run_matrix({cleaned}, mc, [](const std::string& s) { note("  " + s); });
    for (std::size_t i = 0; i < r.predictions.size(); ++i) {
      const auto& p = r.predictions[i];
      std::ofstream out(ctx.file("predictions/" + cell_stem(p) + ".csv"), std::ios::trunc);
      out << "timestamp,actual_watts,predicted_watts\n";
      for (std::size_t j = 0; j < p.actual.size(); ++j)
        out << format_timestamp(p.times[j]) << ',' << num(p.actual[j]) << ',' << num(p.predicted[j]) << '\n';
      write_trials(trials, p.series + "," + p.algorithm + "," + std::to_string(p.window) + ",", r.searches[i]);
    }
    for (const auto& row : r.report.rows) {
      if (!row.ok()) note("  failed: " + row.algorithm + " window " + std::to_string(row.window) + ": " + row.status);
      report.rows.push_back(row);
    }
  }
  experiment::write_report_csv(report, ctx.file("report.csv").string());
  const std::string table = experiment::format_report_table(report);
  std::ofstream(ctx.file("report.txt"), std::ios::trunc) << table;
  std::cout << table;
  write_manifest(ctx);
  std::size_t failed = 0;
  for (const auto& row : report.rows) failed += !row.ok();
  if (failed > 0) note("benchmark: " + std::to_string(failed) + " of " + std::to_string(report.rows.size()) + " cells failed");
  return 0;
}

/// Predicted vs actual over the first `points` rows of a predictions CSV.
void write_plot(const fs::path& csv_in, const fs::path& svg_out, const fs::path& csv_out, std::size_t points) {
  std::ifstream in(csv_in);
  std::string header, line;
  std::getline(in, header);
  std::vector<std::string> rows;
  std::vector<double> actual, predicted;
  while (rows.size() < points && std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string t, a, p;
    std::getline(ss, t, ',');
    std::getline(ss, a, ',');
    std::getline(ss, p, ',');
    rows.push_back(t + ',' + a + ',' + p);
    actual.push_back(std::stod(a));
    predicted.push_back(std::stod(p));
  }
  std::ofstream c(csv_out, std::ios::trunc);
  c << "timestamp,actual_watts,predicted_watts\n";
  for (const auto& r : rows) c << r << '\n';

  const double W = 900, H = 320, pad = 50;
  double lo = 0, hi = 1;
  if (!actual.empty()) {
    lo = std::min(*std::min_element(actual.begin(), actual.end()), *std::min_element(predicted.begin(), predicted.end()));
    hi = std::max(*std::max_element(actual.begin(), actual.end()), *std::max_element(predicted.begin(), predicted.end()));
    if (hi == lo) hi = lo + 1;
  }
  const auto polyline = [&](const std::vector<double>& v, const char* colour) {
    std::string pts;
    char buf[64];
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double x = pad + (W - 2 * pad) * (v.size() > 1 ? static_cast<double>(i) / static_cast<double>(v.size() - 1) : 0);
      const double y = H - pad - (H - 2 * pad) * (v[i] - lo) / (hi - lo);
      std::snprintf(buf, sizeof buf, "%.1f,%.1f ", x, y);
      pts += buf;
    }
    return std::string("<polyline fill=\"none\" stroke=\"") + colour + "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
  };
  std::ofstream s(svg_out, std::ios::trunc);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"320\" viewBox=\"0 0 900 320\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"50\" y=\"25\" font-family=\"sans-serif\" font-size=\"14\">" << csv_in.stem().string()
    << " (first " << actual.size() << " test bins)</text>\n"
    << "<line x1=\"50\" y1=\"270\" x2=\"850\" y2=\"270\" stroke=\"#888\"/>\n"
    << "<line x1=\"50\" y1=\"50\" x2=\"50\" y2=\"270\" stroke=\"#888\"/>\n"
    << "<text x=\"5\" y=\"55\" font-family=\"sans-serif\" font-size=\"10\">" << num(std::round(hi)) << "</text>\n"
    << "<text x=\"5\" y=\"270\" font-family=\"sans-serif\" font-size=\"10\">" << num(std::round(lo)) << "</text>\n"
    << polyline(actual, "#1f77b4") << polyline(predicted, "#d62728")
    << "<text x=\"700\" y=\"25\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#1f77b4\">actual</text>\n"
    << "<text x=\"760\" y=\"25\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d62728\">predicted</text>\n"
    << "</svg>\n";
}

int cmd_report(Context& ctx, const std::string& input, std::size_t plot_points) {
  const fs::path dir(input);
  const auto report = experiment::read_report_csv((dir / "report.csv").string());
  const std::string table = experiment::format_report_table(report);
  std::cout << table;
  std::ofstream(ctx.file("report.txt"), std::ios::trunc) << table;
  std::size_t plots = 0;
  if (fs::exists(dir / "predictions")) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir / "predictions"))
      if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string stem = f.stem().string();
      write_plot(f, ctx.file("plots/" + stem + ".svg"), ctx.file("plots/" + stem + ".csv"), plot_points);
      ++plots;
    }
  }
  note("report: " + std::to_string(report.rows.size()) + " rows, " + std::to_string(plots) + " plots");
  write_manifest(ctx, {{"benchmark", input}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  g_argv.assign(argv + 1, argv + argc);
  CLI::App app{"wattcast: short-term energy consumption forecasting pipeline"};
  app.set_version_flag("--version", WATTCAST_VERSION);
  app.require_subcommand(1);
  app.add_flag("-q,--quiet", g_quiet, "suppress progress messages");

  Common c_synth, c_clean, c_prepare, c_train, c_tune, c_eval, c_bench, c_report;

  auto* synth = app.add_subcommand("synth", "generate synthetic raw meter readings");
  add_common(synth, c_synth);
  c_synth.overrides.add(synth, "--start", "/data/*/synthetic/start", Kind::text, "first reading");
  c_synth.overrides.add(synth, "--end", "/data/*/synthetic/end", Kind::text, "end of the series");
  c_synth.overrides.add(synth, "--cadence", "/data/*/synthetic/cadence_seconds", Kind::number, "mean seconds between readings");
  c_synth.overrides.add(synth, "--outlier-rate", "/data/*/synthetic/outlier_rate", Kind::number, "outlier probability per reading");
  c_synth.overrides.add(synth, "--gap-rate", "/data/*/synthetic/gap_rate", Kind::number, "dropout start probability per reading");
  c_synth.overrides.add(synth, "--noise", "/data/*/synthetic/noise_sigma", Kind::number, "Gaussian noise sigma (W)");

  auto* clean = app.add_subcommand("clean", "cutoff, z-score substitution and aggregation");
  add_common(clean, c_clean);
  add_input(clean, c_clean, "raw CSV file(s); replaces the configured data sources");
  add_cleaning(clean, c_clean);
  std::string stage = "all";
  clean->add_option("--stage", stage, "stop after this stage")
      ->check(CLI::IsMember({"cutoff", "zscore", "aggregate", "all"}));

  auto* prep = app.add_subcommand("prepare", "split, normalize and window cleaned series");
  add_common(prep, c_prepare);
  add_input(prep, c_prepare, "cleaned CSV file(s)");
  add_cleaning(prep, c_prepare);
  add_split(prep, c_prepare);
  bool force_clean = false;
  prep->add_flag("--clean", force_clean, "clean CSV inputs before preparing");

  std::string data_dir, family, model_dir;
  auto* train = app.add_subcommand("train", "train one model on a prepared window directory");
  add_common(train, c_train);
  add_training(train, c_train);
  train->add_option("--data", data_dir, "prepared directory (from 'prepare')")->required();
  train->add_option("--family", family, "LSTM, CNN, CNN_LSTM or TCN")->required();
  c_train.overrides.add(train, "--set", "/hyperparameters", Kind::assignment,
                        "hyperparameter key=value, e.g. lstm_units=64 (repeatable)");

  auto* tune = app.add_subcommand("tune", "random search on a prepared window directory");
  add_common(tune, c_tune);
  add_training(tune, c_tune);
  add_search(tune, c_tune);
  tune->add_option("--data", data_dir, "prepared directory (from 'prepare')")->required();
  tune->add_option("--family", family, "LSTM, CNN, CNN_LSTM or TCN")->required();

  auto* eval = app.add_subcommand("evaluate", "score a trained model on the test split");
  add_common(eval, c_eval);
  eval->add_option("--data", data_dir, "prepared directory (from 'prepare')")->required();
  eval->add_option("--model", model_dir, "directory holding model.spec and model.bin")->required();

  auto* bench = app.add_subcommand("benchmark", "full series x family x window protocol");
  add_common(bench, c_bench);
  add_input(bench, c_bench, "raw CSV file(s); replaces the configured data sources");
  add_cleaning(bench, c_bench);
  add_split(bench, c_bench);
  add_training(bench, c_bench);
  add_search(bench, c_bench);
  c_bench.overrides.add(bench, "--family", "/families", Kind::text_list, "families to run (repeatable)");
  c_bench.overrides.add(bench, "--cleaned", "/data/*/cleaned", Kind::set_flag,
                        "inputs are already cleaned (output of 'clean'); skip cleaning");

  std::string report_input;
  std::size_t plot_points = 2016;
  auto* rep = app.add_subcommand("report", "result table and prediction plots for a benchmark directory");
  add_common(rep, c_report);
  rep->add_option("--input", report_input, "benchmark output directory")->required();
  rep->add_option("--plot-points", plot_points, "test bins per plot")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth->parsed()) {
      auto ctx = make_context("synth", c_synth, true);
      return cmd_synth(ctx);
    }
    if (clean->parsed()) {
      auto ctx = make_context("clean", c_clean);
      return cmd_clean(ctx, stage);
    }
    if (prep->parsed()) {
      auto ctx = make_context("prepare", c_prepare);
      return cmd_prepare(ctx, force_clean);
    }
    if (train->parsed()) {
      auto ctx = make_context("train", c_train);
      return cmd_train(ctx, data_dir, family);
    }
    if (tune->parsed()) {
      auto ctx = make_context("tune", c_tune);
      return cmd_tune(ctx, data_dir, family);
    }
    if (eval->parsed()) {
      auto ctx = make_context("evaluate", c_eval);
      return cmd_evaluate(ctx, data_dir, model_dir);
    }
    if (bench->parsed()) {
      auto ctx = make_context("benchmark", c_bench);
      return cmd_benchmark(ctx);
    }
    if (rep->parsed()) {
      // Without --out the report lands in the benchmark directory.
      if (rep->get_option("--out")->count() == 0) c_report.overrides.add_default("/out", report_input);
      auto ctx = make_context("report", c_report);
      return cmd_report(ctx, report_input, plot_points);
    }
  } catch (const std::exception& e) {
    std::cerr << "wattcast: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
