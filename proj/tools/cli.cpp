#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "llfilter/adaptive.hpp"
#include "llfilter/error.hpp"
#include "llfilter/examples.hpp"
#include "llfilter/experiment.hpp"
#include "llfilter/filter.hpp"
#include "llfilter/io.hpp"
#include "llfilter/simulate.hpp"

namespace llf::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string example;
  std::string model_file;
  std::string grid = "adaptive";
  int beta = 1;
  std::optional<double> rtol;
  std::optional<double> rtol_y;
  std::optional<double> atol_y;
  std::optional<double> rtol_p;
  std::optional<double> atol_p;
  std::optional<std::string> h_min;
  std::optional<std::string> h_max;
  std::uint64_t seed = 1;
  std::optional<int> n;
  std::string hs = "1/16,1/32,1/64,1/128";
  std::string out = ".";
  int workers = 0;
  std::string path_delta = "1/1000";
  int batches = 20;
  double alpha = 0.1;
  std::string series;
  int realization = 0;
  std::string target = "filter-mean";
  bool no_adaptive = false;
  bool no_conventional = false;
};

void add_model_options(CLI::App* cmd, Options& o) {
  auto* ex = cmd->add_option("--example", o.example,
                             "Benchmark model id (ex1, ex2, ex3, ex4)");
  auto* mf = cmd->add_option("--model", o.model_file,
                             "JSON model file with an 'example' field");
  ex->excludes(mf);
  mf->excludes(ex);
  cmd->add_option("--seed", o.seed,
                  "Random seed (LLFILTER_SEED overrides when set)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--path-delta", o.path_delta,
                  "Path simulation step, e.g. 1/1000");
}

void add_filter_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--beta", o.beta, "Linearization order (1 or 2)")
      ->check(CLI::IsMember({1, 2}));
  cmd->add_option("--rtol", o.rtol, "Sets both --rtol-y and --rtol-p");
  cmd->add_option("--rtol-y", o.rtol_y, "Relative tolerance for the mean");
  cmd->add_option("--atol-y", o.atol_y, "Absolute tolerance for the mean");
  cmd->add_option("--rtol-p", o.rtol_p,
                  "Relative tolerance for the second moment");
  cmd->add_option("--atol-p", o.atol_p,
                  "Absolute tolerance for the second moment");
  cmd->add_option("--h-min", o.h_min, "Smallest adaptive half-step");
  cmd->add_option("--h-max", o.h_max, "Largest adaptive half-step");
}

void add_bench_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--n", o.n, "Number of realizations")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--hs", o.hs, "Comma-separated stepsizes, e.g. 1/16,1/32");
  cmd->add_option("--workers", o.workers,
                  "Worker threads (0: available cores)");
  cmd->add_option("--batches", o.batches, "Number of batches L");
  cmd->add_option("--alpha", o.alpha, "Significance level");
}

std::uint64_t resolve_seed(std::uint64_t flag) {
  const char* env = std::getenv("LLFILTER_SEED");
  if (env == nullptr || *env == '\0') return flag;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("LLFILTER_SEED is not an integer: '") + env +
                      "'");
  }
}

struct Problem {
  ExampleSetup setup;
  AdaptiveConfig adaptive;
  std::string source;
};

Problem resolve_problem(const Options& o) {
  AdaptiveConfig cfg;
  Problem p;
  if (!o.model_file.empty()) {
    const ModelFile mf = load_model_file(o.model_file, cfg);
    p.setup = make_example(mf.example, mf.params);
    cfg = mf.adaptive;
    p.source = o.model_file;
  } else if (!o.example.empty()) {
    if (!is_example_id(o.example)) {
      throw ConfigError("unknown example id '" + o.example + "'");
    }
    p.setup = make_example(o.example);
    p.source = o.example;
  } else {
    throw ConfigError("one of --example or --model is required");
  }
  if (o.rtol) cfg.rtol_y = cfg.rtol_p = *o.rtol;
  if (o.rtol_y) cfg.rtol_y = *o.rtol_y;
  if (o.atol_y) cfg.atol_y = *o.atol_y;
  if (o.rtol_p) cfg.rtol_p = *o.rtol_p;
  if (o.atol_p) cfg.atol_p = *o.atol_p;
  if (o.h_min) cfg.h_min = parse_stepsize(*o.h_min);
  if (o.h_max) cfg.h_max = parse_stepsize(*o.h_max);
  cfg.validate();
  p.adaptive = cfg;
  return p;
}

fs::path output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  fn(os);
  os.flush();
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

json adaptive_json(const AdaptiveConfig& c) {
  return {{"rtol_y", c.rtol_y},
          {"atol_y", c.atol_y},
          {"rtol_P", c.rtol_p},
          {"atol_P", c.atol_p},
          {"h_min", c.h_min},
          {"h_max", c.h_max ? json(*c.h_max) : json("interval/2")},
          {"prs", c.prs}};
}

ObservationSeries simulate_series(const ExampleSetup& s, std::uint64_t seed,
                                  int index, double delta, Path* path_out) {
  RngStream rng(seed, static_cast<std::uint64_t>(index));
  const PathGrid grid =
      make_path_grid(s.obs.times.front(), s.obs.times.back(), delta);
  Path path = s.path_scheme == PathScheme::kEuler
                  ? euler_path(s.model, grid, s.init.x0, rng)
                  : ll_path(s.model, grid, s.init.x0, rng);
  ObservationSeries series = observe(path, s.obs, rng);
  if (path_out) *path_out = std::move(path);
  return series;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const Problem p = resolve_problem(o);
  const std::uint64_t seed = resolve_seed(o.seed);
  const double delta = parse_stepsize(o.path_delta);
  const int n = o.n.value_or(1);
  const fs::path dir = output_dir(o.out);
  json files = json::array();
  for (int i = 0; i < n; ++i) {
    Path path;
    const ObservationSeries series =
        simulate_series(p.setup, seed, i, delta, &path);
    const fs::path pf = dir / ("path_" + std::to_string(i) + ".csv");
    const fs::path sf = dir / ("series_" + std::to_string(i) + ".csv");
    write_file(pf, [&](std::ostream& os) { write_path_csv(os, path); });
    write_file(sf, [&](std::ostream& os) { write_series_csv(os, series); });
    files.push_back(pf.string());
    files.push_back(sf.string());
  }
  const json summary = {{"command", "simulate"},
                        {"model", p.source},
                        {"seed", seed},
                        {"n", n},
                        {"path_delta", delta},
                        {"files", files}};
  write_file(dir / "summary.json",
             [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
  out << summary.dump() << '\n';
  return 0;
}

int cmd_filter(const Options& o, std::ostream& out) {
  const Problem p = resolve_problem(o);
  const std::uint64_t seed = resolve_seed(o.seed);
  const Order beta = order_from_int(o.beta);
  const bool adaptive = o.grid == "adaptive";
  const bool tol_flags = o.rtol || o.rtol_y || o.atol_y || o.rtol_p ||
                         o.atol_p || o.h_min || o.h_max;
  if (!adaptive && tol_flags) {
    throw ConfigError(
        "tolerance and --h-min/--h-max flags apply only to --grid adaptive");
  }

  ObservationSeries series;
  if (!o.series.empty()) {
    std::ifstream in(o.series);
    if (!in) throw IoError("cannot open series file '" + o.series + "'");
    series = read_series_csv(in);
  } else {
    series = simulate_series(p.setup, seed, o.realization,
                             parse_stepsize(o.path_delta), nullptr);
  }

  const ExampleSetup& s = p.setup;
  FilterRun run;
  json grid;
  if (adaptive) {
    run = run_adaptive_filter(s.model, s.obs, series, s.init, p.adaptive, beta);
    grid = "adaptive";
  } else if (o.grid == "conventional") {
    run = run_ll_filter(s.model, s.obs, series, s.init,
                        GridSpec::conventional(), beta);
    grid = "conventional";
  } else {
    const double h = parse_stepsize(o.grid);
    run = run_ll_filter(s.model, s.obs, series, s.init, GridSpec::uniform(h),
                        beta);
    grid = format_stepsize(h);
  }

  long accepted = 0;
  long failed = 0;
  for (const auto& st : run.steps) {
    accepted += st.accepted_steps;
    failed += st.failed_steps;
  }
  const fs::path dir = output_dir(o.out);
  write_file(dir / "filter_run.csv",
             [&](std::ostream& os) { write_filter_run_csv(os, run); });
  json summary = {{"command", "filter"},
                  {"model", s.id},
                  {"grid", grid},
                  {"beta", o.beta},
                  {"seed", seed},
                  {"accepted_steps", accepted},
                  {"failed_steps", failed},
                  {"file", (dir / "filter_run.csv").string()}};
  if (o.series.empty()) {
    summary["realization"] = o.realization;
  } else {
    summary["series"] = o.series;
  }
  if (adaptive) summary["adaptive"] = adaptive_json(p.adaptive);
  write_file(dir / "summary.json",
             [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
  out << summary.dump() << '\n';
  return 0;
}

ExperimentConfig experiment_config(const Options& o, const Problem& p) {
  ExperimentConfig cfg;
  cfg.n_realizations = o.n.value_or(200);
  cfg.batches = o.batches;
  cfg.alpha = o.alpha;
  cfg.hs = parse_stepsize_list(o.hs);
  cfg.adaptive_cfg = p.adaptive;
  cfg.beta = order_from_int(o.beta);
  cfg.seed = resolve_seed(o.seed);
  cfg.path_delta = parse_stepsize(o.path_delta);
  cfg.workers = o.workers;
  return cfg;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const Problem p = resolve_problem(o);
  ExperimentConfig cfg = experiment_config(o, p);
  cfg.adaptive = !o.no_adaptive;
  cfg.conventional = !o.no_conventional;
  const fs::path dir = output_dir(o.out);
  const ExperimentResult r = run_example_experiment(p.setup, cfg);
  for (ErrorKind kind : kErrorKinds) {
    write_file(dir / ("table_" + error_kind_name(kind) + ".csv"),
               [&](std::ostream& os) { write_error_table_csv(os, r, kind); });
  }
  write_file(dir / "steps.csv",
             [&](std::ostream& os) { write_steps_csv(os, r); });
  const std::string summary = experiment_summary_json(r);
  write_file(dir / "summary.json",
             [&](std::ostream& os) { os << summary << '\n'; });
  out << json::parse(summary).dump() << '\n';
  return 0;
}

int cmd_convergence(const Options& o, std::ostream& out) {
  const Problem p = resolve_problem(o);
  const ErrorKind kind = error_kind_from_name(o.target);
  ExperimentConfig cfg = experiment_config(o, p);
  cfg.adaptive = false;
  cfg.conventional = false;
  if (cfg.hs.size() < 2) {
    throw ConfigError("convergence needs at least two stepsizes in --hs");
  }
  const fs::path dir = output_dir(o.out);
  const ExperimentResult r = run_example_experiment(p.setup, cfg);
  const std::string name = error_kind_name(kind);
  write_file(dir / ("order_" + name + ".csv"),
             [&](std::ostream& os) { write_order_csv(os, r, kind); });
  write_file(dir / ("table_" + name + ".csv"),
             [&](std::ostream& os) { write_error_table_csv(os, r, kind); });
  write_file(dir / "summary.json", [&](std::ostream& os) {
    os << experiment_summary_json(r) << '\n';
  });

  const auto& bh = r.beta_hat[static_cast<std::size_t>(kind)];
  json rows = json::array();
  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < bh.size(); ++k) {
    rows.push_back({{"row", r.row_label(kind, k)},
                    {"beta_hat", std::isfinite(bh[k]) ? json(bh[k]) : json()}});
    if (std::isfinite(bh[k])) {
      sum += bh[k];
      ++count;
    }
  }
  const json report = {{"command", "convergence"},
                       {"model", r.example},
                       {"target", name},
                       {"n", cfg.n_realizations},
                       {"seed", cfg.seed},
                       {"rows", rows},
                       {"mean_beta_hat", count ? json(sum / count) : json()}};
  out << report.dump() << '\n';
  return 0;
}

void report_error(std::ostream& err, const std::string& kind,
                  const std::string& message) {
  err << json{{"error", {{"kind", kind}, {"message", message}}}}.dump()
      << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Local linearization filters for continuous-discrete models",
               "llfilter"};
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Simulate paths and observations");
  add_model_options(sim, o);
  sim->add_option("--n", o.n, "Number of realizations")
      ->check(CLI::PositiveNumber);

  auto* filt = app.add_subcommand("filter", "Run one filter on one series");
  add_model_options(filt, o);
  add_filter_options(filt, o);
  filt->add_option("--grid", o.grid, "Stepsize h, 'adaptive' or 'conventional'");
  filt->add_option("--series", o.series,
                   "Observation CSV (t_k, z_*) instead of a simulated one");
  filt->add_option("--realization", o.realization,
                   "Realization index of the simulated series");

  auto* bench = app.add_subcommand("bench", "Monte Carlo error tables");
  add_model_options(bench, o);
  add_filter_options(bench, o);
  add_bench_options(bench, o);
  bench->add_flag("--no-adaptive", o.no_adaptive, "Skip the adaptive filter");
  bench->add_flag("--no-conventional", o.no_conventional,
                  "Skip the conventional filter");

  auto* conv = app.add_subcommand("convergence", "Estimate convergence order");
  add_model_options(conv, o);
  add_filter_options(conv, o);
  add_bench_options(conv, o);
  conv->add_option("--target", o.target,
                   "filter-mean, filter-var, prediction-mean or prediction-var");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o, out);
    if (filt->parsed()) return cmd_filter(o, out);
    if (bench->parsed()) return cmd_bench(o, out);
    return cmd_convergence(o, out);
  } catch (const ConfigError& e) {
    report_error(err, e.kind(), e.what());
    return 2;
  } catch (const Error& e) {
    report_error(err, e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return 1;
  }
}

}  // namespace llf::cli
