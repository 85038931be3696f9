#pragma once

// Experiment harness: configuration, T and M sweeps, single and noisy runs,
// and the CSV/metadata writers used by the command-line tool.

#include <algorithm>
#include <exception>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "trotterbound/bounds.hpp"
#include "trotterbound/errors.hpp"
#include "trotterbound/hamiltonian.hpp"
#include "trotterbound/noisy.hpp"
#include "trotterbound/pauli.hpp"
#include "trotterbound/state.hpp"

namespace trotterbound {

// --- configuration -------------------------------------------------------------

struct ScheduleSpec {
  ScheduleFn::Kind kind;
  ScheduleFn bind(double T) const {
    return std::visit(
        [&](const auto& k) -> ScheduleFn {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, ScheduleFn::Constant>) {
            return ScheduleFn::constant(k.value, T);
          } else if constexpr (std::is_same_v<K, ScheduleFn::LinearRamp>) {
            return ScheduleFn::linear_ramp(k.a, k.b, T);
          } else {
            return ScheduleFn::piecewise_polynomial(k.breakpoints, k.coefficients, T);
          }
        },
        kind);
  }
};

struct CustomGroupSpec {
  ScheduleSpec schedule;
  std::string operator_path;
  PauliSum base{1};
  std::optional<bool> commuting;
};

struct ModelSpec {
  std::string name = "tfi_annealing";  // or "custom"
  bool periodic = true;
  std::vector<CustomGroupSpec> groups;
};

struct TSweep {
  std::vector<double> T_list;
  std::optional<std::size_t> fixed_M;  // empty means M = round(T^2)
};
struct MSweep {
  double T = 6.0;
  std::vector<std::size_t> M_list;
};
struct SingleRun {
  double T = 1.0;
  std::size_t M = 4;
};
struct NoisyRun {
  double T = 1.0;
  std::size_t M = 8;
  double gamma = 0.02;
};
using SweepSpec = std::variant<TSweep, MSweep, SingleRun, NoisyRun>;

inline std::string sweep_kind(const SweepSpec& s) {
  static constexpr const char* names[] = {"t_sweep", "m_sweep", "single", "noisy"};
  return names[s.index()];
}

struct InitialStateSpec {
  std::string kind = "plus_state";  // all_zeros | plus_state | file
  std::string path;
};

struct ExperimentConfig {
  ModelSpec model;
  std::size_t L = 8;
  SweepSpec sweep = TSweep{};
  InitialStateSpec initial_state;
  double reference_tol = 1e-12;
  bool frozen_slice = false;
  std::string output_path;
  std::size_t thread_count = 1;
};

/// M = T^2 rounded to the nearest integer, at least one.
inline std::size_t t_squared_slices(double T) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(T * T)));
}

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                           const std::string& where) {
  if (!obj.is_object()) throw ConfigError(fmt::format("{} must be an object", where));
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end())
      throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}.{}: {}", where, key, e.what()));
  }
}

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(fmt::format("{} requires '{}'", where, key));
  return get_or<T>(obj, key, T{}, where);
}

inline ScheduleSpec parse_schedule(const json& j, const std::string& where) {
  const auto kind = require<std::string>(j, "kind", where);
  if (kind == "constant") {
    reject_unknown(j, {"kind", "c"}, where);
    return {ScheduleFn::Constant{require<double>(j, "c", where)}};
  }
  if (kind == "linear_ramp") {
    reject_unknown(j, {"kind", "a", "b"}, where);
    return {ScheduleFn::LinearRamp{require<double>(j, "a", where), require<double>(j, "b", where)}};
  }
  if (kind == "piecewise_polynomial") {
    reject_unknown(j, {"kind", "breakpoints", "coefficients"}, where);
    return {ScheduleFn::PiecewisePolynomial{
        require<std::vector<double>>(j, "breakpoints", where),
        require<std::vector<std::vector<double>>>(j, "coefficients", where)}};
  }
  throw ConfigError(fmt::format("{}: unknown schedule kind '{}'", where, kind));
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

/// Parses the JSON configuration. Relative paths resolve against `base_dir`.
inline ExperimentConfig parse_config(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir = ".") {
  using detail::get_or;
  using detail::require;
  detail::reject_unknown(j, {"model", "L", "sweep", "initial_state", "reference_tol", "frozen_slice",
                             "output_path", "thread_count"},
                         "config");
  ExperimentConfig cfg;
  cfg.L = get_or<std::size_t>(j, "L", cfg.L, "config");
  cfg.reference_tol = get_or<double>(j, "reference_tol", cfg.reference_tol, "config");
  cfg.frozen_slice = get_or<bool>(j, "frozen_slice", cfg.frozen_slice, "config");
  cfg.output_path = get_or<std::string>(j, "output_path", "", "config");
  cfg.thread_count = get_or<std::size_t>(j, "thread_count", cfg.thread_count, "config");

  if (j.contains("model")) {
    const auto& m = j.at("model");
    detail::reject_unknown(m, {"name", "periodic", "groups"}, "model");
    cfg.model.name = require<std::string>(m, "name", "model");
    cfg.model.periodic = get_or<bool>(m, "periodic", true, "model");
    if (cfg.model.name == "custom") {
      if (!m.contains("groups") || !m.at("groups").is_array() || m.at("groups").empty())
        throw ConfigError("custom model needs a non-empty 'groups' list");
      for (std::size_t i = 0; i < m.at("groups").size(); ++i) {
        const auto& g = m.at("groups").at(i);
        const std::string where = fmt::format("model.groups[{}]", i);
        detail::reject_unknown(g, {"schedule", "operator", "commuting"}, where);
        CustomGroupSpec spec;
        if (!g.contains("schedule")) throw ConfigError(where + " requires 'schedule'");
        spec.schedule = detail::parse_schedule(g.at("schedule"), where + ".schedule");
        spec.operator_path = detail::resolve(base_dir, require<std::string>(g, "operator", where)).string();
        if (g.contains("commuting")) spec.commuting = get_or<bool>(g, "commuting", false, where);
        std::ifstream in(spec.operator_path);
        if (!in) throw ConfigError(fmt::format("{}: cannot open operator file '{}'", where, spec.operator_path));
        try {
          spec.base = read_pauli_sum(in, cfg.L);
        } catch (const Error& e) {
          throw ConfigError(fmt::format("{}: {}", where, e.what()));
        }
        cfg.model.groups.push_back(std::move(spec));
      }
    } else if (cfg.model.name == "tfi_annealing") {
      if (m.contains("groups")) throw ConfigError("'groups' is only valid for the custom model");
    } else {
      throw ConfigError(fmt::format("unknown model '{}'", cfg.model.name));
    }
  }

  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    const auto kind = require<std::string>(s, "kind", "sweep");
    if (kind == "t_sweep") {
      detail::reject_unknown(s, {"kind", "T_list", "M_rule"}, "sweep");
      TSweep t;
      t.T_list = require<std::vector<double>>(s, "T_list", "sweep");
      if (s.contains("M_rule")) {
        const auto& rule = s.at("M_rule");
        if (rule.is_string() && rule.get<std::string>() == "t_squared") {
        } else if (rule.is_object()) {
          detail::reject_unknown(rule, {"fixed"}, "sweep.M_rule");
          t.fixed_M = require<std::size_t>(rule, "fixed", "sweep.M_rule");
        } else {
          throw ConfigError("sweep.M_rule must be \"t_squared\" or {\"fixed\": M}");
        }
      }
      cfg.sweep = t;
    } else if (kind == "m_sweep") {
      detail::reject_unknown(s, {"kind", "T", "M_list"}, "sweep");
      cfg.sweep = MSweep{require<double>(s, "T", "sweep"),
                         require<std::vector<std::size_t>>(s, "M_list", "sweep")};
    } else if (kind == "single") {
      detail::reject_unknown(s, {"kind", "T", "M"}, "sweep");
      cfg.sweep = SingleRun{require<double>(s, "T", "sweep"), require<std::size_t>(s, "M", "sweep")};
    } else if (kind == "noisy") {
      detail::reject_unknown(s, {"kind", "T", "M", "gamma"}, "sweep");
      cfg.sweep = NoisyRun{require<double>(s, "T", "sweep"), require<std::size_t>(s, "M", "sweep"),
                           require<double>(s, "gamma", "sweep")};
    } else {
      throw ConfigError(fmt::format("unknown sweep kind '{}'", kind));
    }
  }

  if (j.contains("initial_state")) {
    const auto& is = j.at("initial_state");
    if (is.is_string()) {
      cfg.initial_state.kind = is.get<std::string>();
      if (cfg.initial_state.kind != "all_zeros" && cfg.initial_state.kind != "plus_state")
        throw ConfigError(fmt::format("unknown initial state '{}'", cfg.initial_state.kind));
    } else {
      detail::reject_unknown(is, {"file"}, "initial_state");
      cfg.initial_state = {"file", detail::resolve(base_dir, require<std::string>(is, "file", "initial_state")).string()};
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("config '{}': {}", path.string(), e.what()));
  }
  return parse_config(j, path.parent_path().empty() ? "." : path.parent_path());
}

/// Range checks that do not depend on running anything.
inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.L == 0) throw ConfigError("L must be positive");
  if (!(cfg.reference_tol > 0.0)) throw ConfigError("reference_tol must be positive");
  if (cfg.thread_count == 0) throw ConfigError("thread_count must be at least 1");
  if (cfg.model.name == "tfi_annealing" && cfg.model.periodic && cfg.L < 3)
    throw ConfigError("periodic TFI chain needs L >= 3");
  auto check_T = [](double T) {
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError(fmt::format("T = {} must be positive", T));
  };
  auto check_M = [](std::size_t M) {
    if (M == 0) throw ConfigError("M must be at least 1");
  };
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, TSweep>) {
          for (double T : s.T_list) check_T(T);
          if (s.fixed_M) check_M(*s.fixed_M);
        } else if constexpr (std::is_same_v<S, MSweep>) {
          check_T(s.T);
          for (auto M : s.M_list) check_M(M);
        } else if constexpr (std::is_same_v<S, SingleRun>) {
          check_T(s.T);
          check_M(s.M);
        } else {
          check_T(s.T);
          check_M(s.M);
          if (!(s.gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
          if (s.gamma * s.T / static_cast<double>(s.M) > 1.0)
            throw ConfigError("gamma T / M must not exceed one");
        }
      },
      cfg.sweep);
}

/// Hamiltonian of the configured model with total time T.
inline GroupedHamiltonian build_model(const ExperimentConfig& cfg, double T) {
  if (cfg.model.name == "tfi_annealing") return build_tfi_annealing(cfg.L, T, cfg.model.periodic);
  std::vector<HamiltonianGroup> groups;
  for (const auto& g : cfg.model.groups) groups.emplace_back(g.schedule.bind(T), g.base, g.commuting);
  return {cfg.L, T, std::move(groups)};
}

inline StateVector build_initial_state(const ExperimentConfig& cfg) {
  if (cfg.initial_state.kind == "all_zeros") return StateVector::all_zeros(cfg.L);
  if (cfg.initial_state.kind == "plus_state") return StateVector::plus_state(cfg.L);
  std::ifstream in(cfg.initial_state.path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open initial state '{}'", cfg.initial_state.path));
  auto psi = read_state(in);
  if (psi.n_qubits() != cfg.L)
    throw ConfigError(fmt::format("initial state has {} qubits, config L = {}", psi.n_qubits(), cfg.L));
  psi.check_norm();
  return psi;
}

// --- CSV -------------------------------------------------------------------------

inline constexpr const char* kStepHeader = "n,t_n,L_exact,L_approx,L_conv,abs_expectation_A,norm_A";
inline constexpr const char* kSummaryHeader =
    "L,T,M,overlap_ref,bound_exact,bound_approx,bound_conv,sum_L_exact,sum_L_approx,sum_L_conv,"
    "reference_tol,valid";
inline constexpr const char* kNoisyExtraHeader = "gamma,p_per_step,bures_final,purity_final,rank_warning";

inline std::string csv_num(double x) { return fmt::format("{:.17g}", x); }

inline void write_step_csv(std::ostream& os, const BoundReport& rep) {
  os << kStepHeader << '\n';
  for (const auto& s : rep.per_step)
    os << fmt::format("{},{},{},{},{},{},{}\n", s.n, csv_num(s.t_n), csv_num(s.L_exact),
                      csv_num(s.L_approx), csv_num(s.L_conv), csv_num(std::abs(s.expectation_A)),
                      csv_num(s.norm_A));
}

inline std::string summary_fields(const BoundReport& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}", r.L, csv_num(r.T), r.M,
                     r.overlap_ref ? csv_num(*r.overlap_ref) : std::string{}, csv_num(r.bound_exact),
                     csv_num(r.bound_approx), csv_num(r.bound_conv), csv_num(r.sum_L_exact),
                     csv_num(r.sum_L_approx), csv_num(r.sum_L_conv), csv_num(r.reference_tol),
                     r.valid ? "true" : "false");
}

// --- sweep execution ---------------------------------------------------------------

/// Outcome of one sweep point: a report, or the error that stopped it.
struct PointResult {
  std::size_t L = 0;
  double T = 0.0;
  std::size_t M = 0;
  std::optional<BoundReport> report;
  std::optional<NoisyReport> noisy;
  std::string error_tag;      // empty on success
  std::string error_message;
};

inline std::string error_tag_of(const std::exception& e) {
  if (dynamic_cast<const CapacityError*>(&e)) return "error:capacity";
  if (dynamic_cast<const ConvergenceError*>(&e)) return "error:convergence";
  if (dynamic_cast<const NumericalHealthError*>(&e)) return "error:numerical_health";
  if (dynamic_cast<const DimensionError*>(&e)) return "error:dimension";
  if (dynamic_cast<const ArgumentError*>(&e)) return "error:argument";
  if (dynamic_cast<const ConfigError*>(&e)) return "error:config";
  return "error:internal";
}

inline std::string summary_row(const PointResult& p) {
  if (p.report) return summary_fields(*p.report);
  return fmt::format("{},{},{},,,,,,,,,{}", p.L, csv_num(p.T), p.M, p.error_tag);
}

/// Runs `jobs[i]()` on up to `threads` workers; results keep job order.
template <typename Result>
std::vector<Result> run_pool(const std::vector<std::function<Result()>>& jobs, std::size_t threads) {
  std::vector<Result> out(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) out[i] = jobs[i]();
  };
  const std::size_t n = std::min(std::max<std::size_t>(threads, 1), std::max<std::size_t>(jobs.size(), 1));
  if (n <= 1) {
    worker();
    return out;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  return out;
}

inline PipelineOptions pipeline_options(const ExperimentConfig& cfg) {
  PipelineOptions o;
  o.reference_tol = cfg.reference_tol;
  o.frozen_slice = cfg.frozen_slice;
  return o;
}

/// The shared initial state, or the error that prevented building it. A
/// failure here (capacity, unreadable dump) is reported on every point.
struct InitialState {
  std::optional<StateVector> psi;
  std::exception_ptr error;
};

inline InitialState prepare_initial_state(const ExperimentConfig& cfg) {
  try {
    return {build_initial_state(cfg), nullptr};
  } catch (...) {
    return {std::nullopt, std::current_exception()};
  }
}

/// One noiseless point, errors captured into the result.
inline PointResult run_point(const ExperimentConfig& cfg, double T, std::size_t M, const InitialState& init) {
  PointResult p{cfg.L, T, M, {}, {}, {}, {}};
  try {
    if (init.error) std::rethrow_exception(init.error);
    p.report = run_bound_pipeline(build_model(cfg, T), *init.psi, M, pipeline_options(cfg)).report;
  } catch (const std::exception& e) {
    p.error_tag = error_tag_of(e);
    p.error_message = e.what();
  }
  return p;
}

struct SweepOutput {
  std::vector<PointResult> points;
  std::vector<std::string> warnings;
};

/// One row per T in config order; M = round(T^2) unless fixed.
inline SweepOutput run_t_sweep(const ExperimentConfig& cfg) {
  const auto& s = std::get<TSweep>(cfg.sweep);
  const auto psi0 = prepare_initial_state(cfg);
  std::vector<std::function<PointResult()>> jobs;
  for (double T : s.T_list) {
    const std::size_t M = s.fixed_M ? *s.fixed_M : t_squared_slices(T);
    jobs.emplace_back([&cfg, T, M, &psi0] { return run_point(cfg, T, M, psi0); });
  }
  return {run_pool(jobs, cfg.thread_count), {}};
}

/// One row per distinct M, ascending.
inline SweepOutput run_m_sweep(const ExperimentConfig& cfg) {
  const auto& s = std::get<MSweep>(cfg.sweep);
  SweepOutput out;
  std::vector<std::size_t> Ms = s.M_list;
  std::sort(Ms.begin(), Ms.end());
  const auto last = std::unique(Ms.begin(), Ms.end());
  if (last != Ms.end())
    out.warnings.push_back(fmt::format("removed {} duplicate M value(s)", std::distance(last, Ms.end())));
  Ms.erase(last, Ms.end());
  const auto psi0 = prepare_initial_state(cfg);
  std::vector<std::function<PointResult()>> jobs;
  for (std::size_t M : Ms) jobs.emplace_back([&cfg, T = s.T, M, &psi0] { return run_point(cfg, T, M, psi0); });
  out.points = run_pool(jobs, cfg.thread_count);
  return out;
}

inline PointResult run_single(const ExperimentConfig& cfg) {
  const auto& s = std::get<SingleRun>(cfg.sweep);
  return run_point(cfg, s.T, s.M, prepare_initial_state(cfg));
}

inline PointResult run_noisy(const ExperimentConfig& cfg) {
  const auto& s = std::get<NoisyRun>(cfg.sweep);
  PointResult p{cfg.L, s.T, s.M, {}, {}, {}, {}};
  try {
    NoisyPipelineOptions o;
    o.reference_tol = cfg.reference_tol;
    o.frozen_slice = cfg.frozen_slice;
    auto res = run_noisy_pipeline(build_model(cfg, s.T), build_initial_state(cfg), s.M, s.gamma, o);
    p.report = res.report.bounds;
    p.noisy = std::move(res.report);
  } catch (const std::exception& e) {
    p.error_tag = error_tag_of(e);
    p.error_message = e.what();
  }
  return p;
}

inline void write_summary_csv(std::ostream& os, const std::vector<PointResult>& points) {
  os << kSummaryHeader << '\n';
  for (const auto& p : points) os << summary_row(p) << '\n';
}

inline void write_noisy_summary_csv(std::ostream& os, const PointResult& p) {
  os << kSummaryHeader << ',' << kNoisyExtraHeader << '\n';
  if (p.noisy) {
    const auto& n = *p.noisy;
    os << summary_fields(n.bounds)
       << fmt::format(",{},{},{},{},{}\n", csv_num(n.gamma), csv_num(n.p_per_step),
                      csv_num(n.bures_final), csv_num(n.purity_final), n.rank_warning ? "true" : "false");
  } else {
    os << summary_row(p) << ",,,,,\n";
  }
}

/// Run metadata as JSON: configuration echo and provenance per point.
inline nlohmann::json metadata(const ExperimentConfig& cfg, const std::vector<PointResult>& points,
                               const std::vector<std::string>& warnings = {}) {
  nlohmann::json j;
  j["sweep"] = sweep_kind(cfg.sweep);
  j["model"] = cfg.model.name;
  j["L"] = cfg.L;
  j["initial_state"] = cfg.initial_state.kind;
  if (cfg.initial_state.kind == "file") j["initial_state_path"] = cfg.initial_state.path;
  j["reference_tol"] = cfg.reference_tol;
  j["frozen_slice"] = cfg.frozen_slice;
  j["warnings"] = warnings;
  j["points"] = nlohmann::json::array();
  for (const auto& p : points) {
    nlohmann::json q{{"T", p.T}, {"M", p.M}};
    if (p.report) {
      q["norm_method"] = to_string(p.report->norm_method);
      q["reference_slices"] = p.report->reference_slices;
      q["ratio_exact_to_approx"] =
          p.report->sum_L_approx > 0 ? nlohmann::json(p.report->sum_L_exact / p.report->sum_L_approx)
                                     : nlohmann::json(nullptr);
    } else {
      q["error"] = p.error_tag;
      q["message"] = p.error_message;
    }
    j["points"].push_back(std::move(q));
  }
  return j;
}

}  // namespace trotterbound
