#include "llfilter/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "llfilter/error.hpp"
#include "llfilter/io.hpp"
#include "llfilter/simulate.hpp"

namespace llf {

std::string error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFilterMean: return "filter_mean";
    case ErrorKind::kFilterVariance: return "filter_variance";
    case ErrorKind::kPredictionMean: return "prediction_mean";
    case ErrorKind::kPredictionVariance: return "prediction_variance";
  }
  return "unknown";
}

ErrorKind error_kind_from_name(const std::string& name) {
  std::string s = name;
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "filter_mean") return ErrorKind::kFilterMean;
  if (s == "filter_variance" || s == "filter_var") {
    return ErrorKind::kFilterVariance;
  }
  if (s == "prediction_mean" || s == "pred_mean") {
    return ErrorKind::kPredictionMean;
  }
  if (s == "prediction_variance" || s == "prediction_var" || s == "pred_var") {
    return ErrorKind::kPredictionVariance;
  }
  throw ConfigError("unknown error type '" + name + "'");
}

const VariantSummary& ExperimentResult::variant(const std::string& label) const {
  for (const auto& v : variants) {
    if (v.label == label) return v;
  }
  throw ConfigError("experiment has no variant '" + label + "'");
}

std::string ExperimentResult::row_label(ErrorKind kind, std::size_t k) const {
  const bool filt =
      kind == ErrorKind::kFilterMean || kind == ErrorKind::kFilterVariance;
  const std::string next = "t" + std::to_string(k + 1);
  return filt ? next + "/" + next : next + "/t" + std::to_string(k);
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// errors[kind][k] for one filter run against the reference run.
using RunErrors = std::array<std::vector<double>, 4>;

struct VariantOutcome {
  bool ok = false;
  RunErrors errors;
  std::vector<long> accepted;
  std::vector<long> failed;
};

struct RealizationOutcome {
  bool path_ok = false;
  bool reference_ok = false;
  std::vector<VariantOutcome> variants;
};

RunErrors compare(const FilterRun& run, const FilterRun& ref) {
  RunErrors e;
  for (std::size_t k = 0; k < ref.steps.size(); ++k) {
    const FilterStep& a = run.steps[k];
    const FilterStep& b = ref.steps[k];
    e[0].push_back((a.y_filt - b.y_filt).norm());
    e[1].push_back((a.v_filt - b.v_filt).norm());
    e[2].push_back((a.y_pred - b.y_pred).norm());
    e[3].push_back((a.v_pred - b.v_pred).norm());
  }
  return e;
}

struct VariantPlan {
  std::string label;
  std::optional<double> h;
  bool is_adaptive = false;
};

std::vector<VariantPlan> plan_variants(const ExperimentConfig& cfg) {
  std::vector<VariantPlan> plans;
  if (cfg.conventional) plans.push_back({"conventional", std::nullopt, false});
  for (double h : cfg.hs) {
    plans.push_back({"h=" + format_stepsize(h), h, false});
  }
  if (cfg.adaptive) plans.push_back({"adaptive", std::nullopt, true});
  return plans;
}

bool is_numerical_failure(const std::exception& ex) {
  return dynamic_cast<const DivergenceError*>(&ex) != nullptr ||
         dynamic_cast<const SingularInnovationError*>(&ex) != nullptr;
}

RealizationOutcome run_realization(const ExampleSetup& setup,
                                   const ExperimentConfig& cfg,
                                   const AdaptiveConfig& ref_cfg,
                                   const std::vector<VariantPlan>& plans,
                                   int index) {
  RealizationOutcome out;
  out.variants.resize(plans.size());
  RngStream rng(cfg.seed, static_cast<std::uint64_t>(index));
  const PathGrid grid = make_path_grid(setup.obs.times.front(),
                                       setup.obs.times.back(), cfg.path_delta);

  ObservationSeries series;
  try {
    const Path path = setup.path_scheme == PathScheme::kEuler
                          ? euler_path(setup.model, grid, setup.init.x0, rng)
                          : ll_path(setup.model, grid, setup.init.x0, rng);
    series = observe(path, setup.obs, rng);
    out.path_ok = true;
  } catch (const Error& ex) {
    if (!is_numerical_failure(ex)) throw;
    return out;
  }

  FilterRun ref;
  try {
    ref = setup.exact
              ? run_exact_lmv_filter(*setup.exact, setup.obs, series, setup.init)
              : run_adaptive_filter(setup.model, setup.obs, series, setup.init,
                                    ref_cfg, Order::kOne);
    out.reference_ok = true;
  } catch (const Error& ex) {
    if (!is_numerical_failure(ex)) throw;
    return out;
  }

  for (std::size_t v = 0; v < plans.size(); ++v) {
    const VariantPlan& plan = plans[v];
    VariantOutcome& o = out.variants[v];
    try {
      FilterRun run;
      if (plan.is_adaptive) {
        run = run_adaptive_filter(setup.model, setup.obs, series, setup.init,
                                  cfg.adaptive_cfg, cfg.beta);
      } else {
        const GridSpec g =
            plan.h ? GridSpec::uniform(*plan.h) : GridSpec::conventional();
        run = run_ll_filter(setup.model, setup.obs, series, setup.init, g,
                            cfg.beta);
      }
      o.errors = compare(run, ref);
      for (const auto& s : run.steps) {
        o.accepted.push_back(s.accepted_steps);
        o.failed.push_back(s.failed_steps);
      }
      o.ok = true;
    } catch (const Error& ex) {
      if (!is_numerical_failure(ex)) throw;
    }
  }
  return out;
}

void summarize(VariantSummary& summary, const std::vector<RealizationOutcome>& all,
               std::size_t v, const std::vector<int>& used, int batches,
               double alpha, std::size_t rows) {
  summary.used = static_cast<int>(used.size());
  for (auto& c : summary.ci) c.assign(rows, ConfidenceEstimate{kNaN, kNaN, 0, 0, alpha});
  summary.mean_accepted.assign(rows, 0.0);
  summary.mean_failed.assign(rows, 0.0);
  if (used.empty()) return;

  for (int i : used) {
    const VariantOutcome& o = all[static_cast<std::size_t>(i)].variants[v];
    for (std::size_t k = 0; k < rows; ++k) {
      summary.mean_accepted[k] += static_cast<double>(o.accepted[k]);
      summary.mean_failed[k] += static_cast<double>(o.failed[k]);
    }
  }
  for (std::size_t k = 0; k < rows; ++k) {
    summary.mean_accepted[k] /= static_cast<double>(used.size());
    summary.mean_failed[k] /= static_cast<double>(used.size());
  }

  const int count = static_cast<int>(used.size());
  const int l = std::min(batches, count);
  if (l < 2) return;
  const int kk = count / l;
  for (std::size_t kind = 0; kind < 4; ++kind) {
    for (std::size_t k = 0; k < rows; ++k) {
      std::vector<double> errs;
      errs.reserve(static_cast<std::size_t>(l * kk));
      for (int j = 0; j < l * kk; ++j) {
        const VariantOutcome& o =
            all[static_cast<std::size_t>(used[static_cast<std::size_t>(j)])]
                .variants[v];
        errs.push_back(o.errors[kind][k]);
      }
      summary.ci[kind][k] = batch_ci(errs, l, kk, alpha);
    }
  }
}

}  // namespace

ExperimentResult run_example_experiment(const ExampleSetup& setup,
                                        const ExperimentConfig& cfg) {
  if (cfg.n_realizations < 1) throw ConfigError("experiment: n must be >= 1");
  if (cfg.batches < 2) throw ConfigError("experiment: need at least 2 batches");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw ConfigError("experiment: alpha must lie in (0, 1)");
  }
  for (double h : cfg.hs) {
    if (!(h > 0.0)) throw ConfigError("experiment: stepsizes must be positive");
  }
  cfg.adaptive_cfg.validate();
  const AdaptiveConfig ref_cfg = cfg.reference_cfg.value_or(setup.reference);
  ref_cfg.validate();

  const auto start = std::chrono::steady_clock::now();
  const std::vector<VariantPlan> plans = plan_variants(cfg);
  const int n = cfg.n_realizations;
  int workers = cfg.workers > 0
                    ? cfg.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, n);

  std::vector<RealizationOutcome> outcomes(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        outcomes[static_cast<std::size_t>(i)] =
            run_realization(setup, cfg, ref_cfg, plans, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult r;
  r.example = setup.id;
  r.config = cfg;
  r.reference_cfg = ref_cfg;
  r.exact_reference = setup.exact.has_value();
  r.obs_times = setup.obs.times;
  r.workers = workers;
  const std::size_t rows = setup.obs.times.size() - 1;

  std::vector<int> base;
  for (int i = 0; i < n; ++i) {
    const auto& o = outcomes[static_cast<std::size_t>(i)];
    if (!o.path_ok) {
      ++r.path_failures;
    } else if (!o.reference_ok) {
      ++r.reference_failures;
    } else {
      base.push_back(i);
    }
  }

  // Fixed-h variants share one realization set so the slope fit compares
  // like with like.
  std::vector<int> fixed_set;
  for (int i : base) {
    bool all_ok = true;
    for (std::size_t v = 0; v < plans.size(); ++v) {
      if (plans[v].h) all_ok = all_ok && outcomes[static_cast<std::size_t>(i)].variants[v].ok;
    }
    if (all_ok) fixed_set.push_back(i);
  }

  for (std::size_t v = 0; v < plans.size(); ++v) {
    VariantSummary s;
    s.label = plans[v].label;
    s.h = plans[v].h;
    std::vector<int> own;
    for (int i : base) {
      if (outcomes[static_cast<std::size_t>(i)].variants[v].ok) {
        own.push_back(i);
      } else {
        ++s.diverged;
      }
    }
    const std::vector<int>& used = plans[v].h ? fixed_set : own;
    s.excluded = n - static_cast<int>(used.size());
    summarize(s, outcomes, v, used, cfg.batches, cfg.alpha, rows);
    r.variants.push_back(std::move(s));
  }

  for (ErrorKind kind : kErrorKinds) {
    const auto ki = static_cast<std::size_t>(kind);
    r.beta_hat[ki].assign(rows, kNaN);
    for (std::size_t k = 0; k < rows; ++k) {
      std::vector<double> hs;
      std::vector<double> errs;
      bool ok = true;
      for (const auto& s : r.variants) {
        if (!s.h) continue;
        const double e = s.ci[ki][k].mean;
        ok = ok && std::isfinite(e) && e > 0.0;
        hs.push_back(*s.h);
        errs.push_back(e);
      }
      if (ok && hs.size() >= 2) r.beta_hat[ki][k] = fit_order(hs, errs);
    }
  }

  r.wall_seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return r;
}

namespace {

std::string cell(double x) { return std::isfinite(x) ? format_double(x) : ""; }

}  // namespace

void write_error_table_csv(std::ostream& os, const ExperimentResult& r,
                           ErrorKind kind) {
  const auto ki = static_cast<std::size_t>(kind);
  CsvWriter csv(os);
  csv.row({"row_label", "variant", "mean", "delta", "beta_hat"});
  const std::size_t rows = r.obs_times.size() - 1;
  for (std::size_t k = 0; k < rows; ++k) {
    for (const auto& s : r.variants) {
      const ConfidenceEstimate& ci = s.ci[ki][k];
      csv.row({r.row_label(kind, k), s.label, cell(ci.mean), cell(ci.delta),
               s.h ? cell(r.beta_hat[ki][k]) : ""});
    }
  }
}

void write_steps_csv(std::ostream& os, const ExperimentResult& r) {
  CsvWriter csv(os);
  csv.row({"variant", "k", "t", "mean_accepted", "mean_failed"});
  for (const auto& s : r.variants) {
    if (s.h || s.label == "conventional") continue;
    for (std::size_t k = 0; k < s.mean_accepted.size(); ++k) {
      csv.row({s.label, std::to_string(k), format_double(r.obs_times[k + 1]),
               format_double(s.mean_accepted[k]),
               format_double(s.mean_failed[k])});
    }
  }
}

void write_order_csv(std::ostream& os, const ExperimentResult& r,
                     ErrorKind kind) {
  const auto ki = static_cast<std::size_t>(kind);
  CsvWriter csv(os);
  csv.row({"row_label", "beta_hat"});
  for (std::size_t k = 0; k < r.beta_hat[ki].size(); ++k) {
    csv.row({r.row_label(kind, k), cell(r.beta_hat[ki][k])});
  }
}

namespace {

nlohmann::json adaptive_json(const AdaptiveConfig& c) {
  nlohmann::json j;
  j["rtol_y"] = c.rtol_y;
  j["atol_y"] = c.atol_y;
  j["rtol_P"] = c.rtol_p;
  j["atol_P"] = c.atol_p;
  j["h_min"] = c.h_min;
  j["h_max"] = c.h_max ? nlohmann::json(*c.h_max) : nlohmann::json("interval/2");
  j["prs"] = c.prs;
  j["max_steps"] = c.max_steps;
  return j;
}

}  // namespace

std::string experiment_summary_json(const ExperimentResult& r) {
  nlohmann::json j;
  const ExperimentConfig& c = r.config;
  j["example"] = r.example;
  j["seed"] = c.seed;
  j["n"] = c.n_realizations;
  j["batches"] = c.batches;
  j["alpha"] = c.alpha;
  j["beta"] = to_int(c.beta);
  j["path_delta"] = c.path_delta;
  std::vector<std::string> hs;
  for (double h : c.hs) hs.push_back(format_stepsize(h));
  j["hs"] = hs;
  j["adaptive"] = adaptive_json(c.adaptive_cfg);
  j["reference"] = r.exact_reference ? nlohmann::json("exact")
                                     : adaptive_json(r.reference_cfg);
  j["path_failures"] = r.path_failures;
  j["reference_failures"] = r.reference_failures;
  nlohmann::json variants = nlohmann::json::array();
  for (const auto& s : r.variants) {
    variants.push_back({{"variant", s.label},
                        {"used", s.used},
                        {"excluded", s.excluded},
                        {"diverged", s.diverged}});
  }
  j["variants"] = variants;
  j["workers"] = r.workers;
  j["wall_seconds"] = r.wall_seconds;
  return j.dump(2);
}

}  // namespace llf
