// Command-line harness: T and M sweeps, single and noisy runs, self-test.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "trotterbound/experiments.hpp"

namespace tb = trotterbound;

namespace {

enum Exit : int { kOk = 0, kInternal = 1, kConfig = 2, kHealth = 3, kCapacity = 4 };

int exit_code_of(const std::exception& e) {
  if (dynamic_cast<const tb::CapacityError*>(&e)) return kCapacity;
  if (dynamic_cast<const tb::NumericalHealthError*>(&e)) return kHealth;
  if (dynamic_cast<const tb::ConvergenceError*>(&e)) return kHealth;
  if (dynamic_cast<const tb::ConfigError*>(&e)) return kConfig;
  if (dynamic_cast<const tb::ArgumentError*>(&e)) return kConfig;
  if (dynamic_cast<const tb::DimensionError*>(&e)) return kConfig;
  return kInternal;
}

int exit_code_of_tag(const std::string& tag) {
  if (tag.empty()) return kOk;
  if (tag == "error:capacity") return kCapacity;
  if (tag == "error:numerical_health" || tag == "error:convergence") return kHealth;
  if (tag == "error:internal") return kInternal;
  return kConfig;
}

struct Flags {
  std::string config;
  std::string out;
  std::string steps;
  std::optional<std::size_t> threads;
  std::optional<double> tol;
  bool frozen = false;
  std::optional<std::size_t> L;
  std::optional<double> T;
  std::optional<std::size_t> M;
  std::optional<double> gamma;
  std::optional<std::string> initial;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON configuration file");
  sub->add_option("--out", f.out, "summary CSV path (default: stdout)");
  sub->add_option("--threads", f.threads, "worker threads for sweep points");
  sub->add_option("--tol", f.tol, "reference refinement tolerance");
  sub->add_flag("--frozen-slice", f.frozen, "use exp(-i dt H(t_n)) as the slice reference");
  sub->add_option("--L", f.L, "number of qubits");
  sub->add_option("--initial", f.initial, "initial state: plus_state or all_zeros");
}

tb::ExperimentConfig build_config(const std::string& command, const Flags& f) {
  nlohmann::json j = nlohmann::json::object();
  std::filesystem::path base = ".";
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw tb::ConfigError(fmt::format("cannot open config '{}'", f.config));
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw tb::ConfigError(fmt::format("config '{}': {}", f.config, e.what()));
    }
    const auto parent = std::filesystem::path(f.config).parent_path();
    if (!parent.empty()) base = parent;
  }
  auto cfg = tb::parse_config(j, base);

  static const std::map<std::string, std::string> kind_of{
      {"sweep-t", "t_sweep"}, {"sweep-m", "m_sweep"}, {"single", "single"}, {"noisy", "noisy"}};
  const std::string want = kind_of.at(command);
  if (j.is_object() && j.contains("sweep")) {
    if (tb::sweep_kind(cfg.sweep) != want)
      throw tb::ConfigError(fmt::format("config sweep kind '{}' does not match subcommand '{}'",
                                        tb::sweep_kind(cfg.sweep), command));
  } else if (want == "t_sweep") {
    cfg.sweep = tb::TSweep{{1, 2, 3, 4, 5, 6, 7, 8}, std::nullopt};
  } else if (want == "m_sweep") {
    cfg.sweep = tb::MSweep{6.0, {36, 72, 144, 288, 576}};
  } else if (want == "single") {
    cfg.sweep = tb::SingleRun{};
  } else {
    cfg.sweep = tb::NoisyRun{};
  }
  if (want == "noisy" && !j.contains("L")) cfg.L = 4;

  if (f.L) cfg.L = *f.L;
  if (f.threads) cfg.thread_count = *f.threads;
  if (f.tol) cfg.reference_tol = *f.tol;
  if (f.frozen) cfg.frozen_slice = true;
  if (!f.out.empty()) cfg.output_path = f.out;
  if (f.initial) {
    if (*f.initial != "plus_state" && *f.initial != "all_zeros")
      throw tb::ConfigError(fmt::format("unknown initial state '{}'", *f.initial));
    cfg.initial_state = {*f.initial, {}};
  }
  std::visit(
      [&](auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, tb::MSweep>) {
          if (f.T) s.T = *f.T;
        } else if constexpr (std::is_same_v<S, tb::SingleRun>) {
          if (f.T) s.T = *f.T;
          if (f.M) s.M = *f.M;
        } else if constexpr (std::is_same_v<S, tb::NoisyRun>) {
          if (f.T) s.T = *f.T;
          if (f.M) s.M = *f.M;
          if (f.gamma) s.gamma = *f.gamma;
        }
      },
      cfg.sweep);
  tb::validate_config(cfg);
  return cfg;
}

// Writes to `path` or, when empty, to stdout.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw tb::ConfigError(fmt::format("cannot write '{}'", path));
  write(os);
}

std::string steps_path(const std::string& out, const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  if (out.empty()) return {};
  std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + "_steps.csv")).string();
}

void write_metadata(const tb::ExperimentConfig& cfg, const std::vector<tb::PointResult>& points,
                    const std::vector<std::string>& warnings) {
  if (cfg.output_path.empty()) return;
  std::ofstream os(cfg.output_path + ".meta.json");
  os << tb::metadata(cfg, points, warnings).dump(2) << '\n';
}

void print_point(const tb::PointResult& p) {
  if (!p.report) {
    fmt::print(stderr, "  T={:<6g} M={:<5} {} ({})\n", p.T, p.M, p.error_tag, p.error_message);
    return;
  }
  const auto& r = *p.report;
  fmt::print(stderr, "  T={:<6g} M={:<5} overlap={:.6f} exact={:.6f} approx={:.6f} conv={:.6f}{}\n", r.T,
             r.M, r.overlap_ref.value_or(std::nan("")), r.bound_exact, r.bound_approx, r.bound_conv,
             r.valid ? "" : "  INVALID");
}

int first_failure(const std::vector<tb::PointResult>& points) {
  for (const auto& p : points)
    if (!p.error_tag.empty()) return exit_code_of_tag(p.error_tag);
  return kOk;
}

int run_sweep(const tb::ExperimentConfig& cfg, bool by_T) {
  const auto res = by_T ? tb::run_t_sweep(cfg) : tb::run_m_sweep(cfg);
  for (const auto& w : res.warnings) fmt::print(stderr, "warning: {}\n", w);
  emit(cfg.output_path, [&](std::ostream& os) { tb::write_summary_csv(os, res.points); });
  write_metadata(cfg, res.points, res.warnings);
  fmt::print(stderr, "{} (L={}, {} point(s))\n", by_T ? "T sweep" : "M sweep", cfg.L, res.points.size());
  for (const auto& p : res.points) print_point(p);
  return first_failure(res.points);
}

int run_single_cmd(const tb::ExperimentConfig& cfg, const std::string& steps) {
  const auto p = tb::run_single(cfg);
  emit(cfg.output_path, [&](std::ostream& os) { tb::write_summary_csv(os, {p}); });
  const auto sp = steps_path(cfg.output_path, steps);
  if (p.report && !sp.empty()) emit(sp, [&](std::ostream& os) { tb::write_step_csv(os, *p.report); });
  write_metadata(cfg, {p}, {});
  fmt::print(stderr, "single run (L={})\n", cfg.L);
  print_point(p);
  return exit_code_of_tag(p.error_tag);
}

int run_noisy_cmd(const tb::ExperimentConfig& cfg, const std::string& steps) {
  const auto p = tb::run_noisy(cfg);
  emit(cfg.output_path, [&](std::ostream& os) { tb::write_noisy_summary_csv(os, p); });
  const auto sp = steps_path(cfg.output_path, steps);
  if (p.report && !sp.empty()) emit(sp, [&](std::ostream& os) { tb::write_step_csv(os, *p.report); });
  write_metadata(cfg, {p}, {});
  fmt::print(stderr, "noisy run (L={})\n", cfg.L);
  print_point(p);
  if (p.noisy)
    fmt::print(stderr, "  gamma={} p={} bures={:.6f} purity={:.6f}{}\n", p.noisy->gamma, p.noisy->p_per_step,
               p.noisy->bures_final, p.noisy->purity_final,
               p.noisy->rank_warning ? "  (rank-deficient state met)" : "");
  return exit_code_of_tag(p.error_tag);
}

// Quick internal consistency checks; prints one line per check.
int selftest() {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok, const std::string& detail = {}) {
    fmt::print("{} {}{}\n", ok ? "ok  " : "FAIL", name, detail.empty() ? "" : "  " + detail);
    if (!ok) ++failures;
  };

  const auto zz = tb::PauliString::parse("ZZ");
  const auto xi = tb::PauliString::parse("XI");
  const auto prod = tb::multiply_strings(zz, xi);
  check("Z.X = iY on one site", prod.product.str() == "YZ" && std::abs(prod.phase - tb::cplx(0, 1)) < 1e-15);

  for (std::size_t L : {3, 5}) {
    const auto h = tb::build_tfi_annealing(L, 2.0);
    const auto shape = tb::tfi_commutator_shape(L);
    const double s = 0.25;
    const auto diff = h.cross_commutator_A(1.0) - shape * tb::cplx(0.0, -2.0 * s);
    check(fmt::format("closed-form commutator L={}", L), diff.one_norm() < 1e-14);
  }

  const auto h = tb::build_tfi_annealing(3, 2.0);
  const auto psi0 = tb::StateVector::plus_state(3);
  const auto res = tb::run_bound_pipeline(h, psi0, 4);
  const auto& r = res.report;
  check("bound validity L=3 T=2 M=4", r.valid,
        fmt::format("overlap {:.6f} >= exact {:.6f}", *r.overlap_ref, r.bound_exact));
  bool dominance = true;
  for (const auto& s : r.per_step) dominance &= s.L_conv >= s.L_approx - 1e-12;
  check("L_conv >= L_approx per step", dominance);

  const auto noisy = tb::run_noisy_pipeline(h, psi0, 4, 0.0);
  check("gamma = 0 reduces to the pure pipeline",
        std::abs(noisy.report.bounds.bound_exact - r.bound_exact) < 1e-9 &&
            std::abs(noisy.report.bounds.bound_conv - r.bound_conv) < 1e-9);
  const auto noisy2 = tb::run_noisy_pipeline(h, psi0, 4, 0.1);
  check("noisy bound validity gamma=0.1", noisy2.report.bounds.valid);

  fmt::print("{}\n", failures == 0 ? "selftest passed" : fmt::format("{} check(s) failed", failures));
  return failures == 0 ? kOk : kHealth;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"State-dependent Trotter error bounds"};
  app.require_subcommand(1);
  Flags f;
  auto* st = app.add_subcommand("sweep-t", "bounds against total time T, M = T^2 by default");
  auto* sm = app.add_subcommand("sweep-m", "bounds against slice count M at fixed T");
  auto* si = app.add_subcommand("single", "one run with per-step angles");
  auto* sn = app.add_subcommand("noisy", "depolarizing-noise run with Bures angles");
  app.add_subcommand("selftest", "quick internal consistency checks");
  for (auto* sub : {st, sm, si, sn}) add_common(sub, f);
  sm->add_option("--T", f.T, "total time");
  for (auto* sub : {si, sn}) {
    sub->add_option("--T", f.T, "total time");
    sub->add_option("--M", f.M, "slice count");
    sub->add_option("--steps", f.steps, "per-step CSV path (default: <out stem>_steps.csv)");
  }
  sn->add_option("--gamma", f.gamma, "depolarizing rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "selftest") return selftest();
    const auto cfg = build_config(command, f);
    if (command == "sweep-t") return run_sweep(cfg, true);
    if (command == "sweep-m") return run_sweep(cfg, false);
    if (command == "single") return run_single_cmd(cfg, f.steps);
    return run_noisy_cmd(cfg, f.steps);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code_of(e);
  }
}
