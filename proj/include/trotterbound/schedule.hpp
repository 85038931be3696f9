#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "trotterbound/errors.hpp"

namespace trotterbound {

/// Closed-form scalar schedule f(t) on [0, T].
class ScheduleFn {
 public:
  struct Constant {
    double value;
  };
  /// a + b * t / T
  struct LinearRamp {
    double a;
    double b;
  };
  /// Piece j covers [breakpoints[j], breakpoints[j+1]] and evaluates
  /// sum_k coefficients[j][k] * (t - breakpoints[j])^k.
  struct PiecewisePolynomial {
    std::vector<double> breakpoints;
    std::vector<std::vector<double>> coefficients;
  };
  using Kind = std::variant<Constant, LinearRamp, PiecewisePolynomial>;

  static ScheduleFn constant(double c, double total_time) { return {Constant{c}, total_time}; }
  static ScheduleFn linear_ramp(double a, double b, double total_time) {
    return {LinearRamp{a, b}, total_time};
  }
  static ScheduleFn piecewise_polynomial(std::vector<double> breakpoints,
                                         std::vector<std::vector<double>> coefficients,
                                         double total_time) {
    return {PiecewisePolynomial{std::move(breakpoints), std::move(coefficients)}, total_time};
  }

  double total_time() const { return total_time_; }
  const Kind& kind() const { return kind_; }

  double operator()(double t) const {
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) {
            return k.value;
          } else if constexpr (std::is_same_v<K, LinearRamp>) {
            return k.a + k.b * (t / total_time_);
          } else {
            std::size_t j = 0;
            while (j + 2 < k.breakpoints.size() && t >= k.breakpoints[j + 1]) ++j;
            const double x = t - k.breakpoints[j];
            double acc = 0.0;
            const auto& c = k.coefficients[j];
            for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
            return acc;
          }
        },
        kind_);
  }

  /// Same schedule multiplied by `c`.
  ScheduleFn scaled(double c) const {
    ScheduleFn out = *this;
    std::visit(
        [&](auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) {
            k.value *= c;
          } else if constexpr (std::is_same_v<K, LinearRamp>) {
            k.a *= c;
            k.b *= c;
          } else {
            for (auto& piece : k.coefficients)
              for (auto& x : piece) x *= c;
          }
        },
        out.kind_);
    return out;
  }

  std::string describe() const {
    return std::visit(
        [&](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) {
            return fmt::format("constant({})", k.value);
          } else if constexpr (std::is_same_v<K, LinearRamp>) {
            return fmt::format("linear_ramp({} + {}*t/T)", k.a, k.b);
          } else {
            return fmt::format("piecewise_polynomial({} pieces)", k.coefficients.size());
          }
        },
        kind_);
  }

 private:
  ScheduleFn(Kind kind, double total_time) : kind_(std::move(kind)), total_time_(total_time) {
    if (!(total_time > 0.0) || !std::isfinite(total_time))
      throw ArgumentError("schedule total time must be positive and finite");
    if (auto* pp = std::get_if<PiecewisePolynomial>(&kind_)) validate(*pp);
  }

  void validate(const PiecewisePolynomial& pp) const {
    const auto& bp = pp.breakpoints;
    if (bp.size() < 2) throw ArgumentError("piecewise polynomial needs at least two breakpoints");
    if (pp.coefficients.size() + 1 != bp.size())
      throw ArgumentError(fmt::format("{} breakpoints need {} coefficient lists, got {}", bp.size(),
                                      bp.size() - 1, pp.coefficients.size()));
    for (std::size_t j = 0; j + 1 < bp.size(); ++j)
      if (!(bp[j] < bp[j + 1])) throw ArgumentError("breakpoints must be strictly increasing");
    const double slack = 1e-12 * total_time_;
    if (std::abs(bp.front()) > slack || std::abs(bp.back() - total_time_) > slack)
      throw ArgumentError("breakpoints must cover [0, T]");
    for (const auto& c : pp.coefficients)
      if (c.empty()) throw ArgumentError("empty polynomial piece");
  }

  Kind kind_;
  double total_time_;
};

}  // namespace trotterbound
