#pragma once

// Symbolic Pauli-string algebra: single-site multiplication table, canonical
// sums, commutators and the `<re> <im> <letters>` text format.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "trotterbound/errors.hpp"

namespace trotterbound {

using cplx = std::complex<double>;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char to_char(Pauli p) {
  static constexpr std::array<char, 4> names{'I', 'X', 'Y', 'Z'};
  return names[static_cast<std::size_t>(p)];
}

inline Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I': return Pauli::I;
    case 'X': return Pauli::X;
    case 'Y': return Pauli::Y;
    case 'Z': return Pauli::Z;
    default:
      throw ArgumentError(fmt::format("invalid Pauli letter '{}'", c));
  }
}

namespace detail {

// Product of two single-site Paulis as (power of i, letter):
// a*b = i^power * letter.
struct SiteProduct {
  int i_power;
  Pauli letter;
};

constexpr SiteProduct site_product(Pauli a, Pauli b) {
  if (a == Pauli::I) return {0, b};
  if (b == Pauli::I) return {0, a};
  if (a == b) return {0, Pauli::I};
  // Cyclic X -> Y -> Z -> X gives +i, anticyclic gives -i.
  const int ia = static_cast<int>(a);
  const int ib = static_cast<int>(b);
  const int third = 6 - ia - ib;
  const bool cyclic = (ib - ia + 3) % 3 == 1;
  return {cyclic ? 1 : 3, static_cast<Pauli>(third)};
}

inline cplx i_power(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

}  // namespace detail

/// Tensor product of single-site Pauli letters. Letter 0 is the leftmost
/// Kronecker factor (most significant bit of a basis index).
class PauliString {
 public:
  PauliString() = default;

  explicit PauliString(std::size_t n_qubits) : letters_(n_qubits, Pauli::I) {
    if (n_qubits == 0) throw ArgumentError("PauliString needs at least one qubit");
  }

  explicit PauliString(std::vector<Pauli> letters) : letters_(std::move(letters)) {
    if (letters_.empty()) throw ArgumentError("PauliString needs at least one qubit");
  }

  static PauliString parse(std::string_view text) {
    std::vector<Pauli> letters;
    letters.reserve(text.size());
    for (char c : text) letters.push_back(pauli_from_char(c));
    return PauliString(std::move(letters));
  }

  /// Single letter `p` on `site` (0-based), identity elsewhere.
  static PauliString single(std::size_t n_qubits, std::size_t site, Pauli p) {
    PauliString s(n_qubits);
    s.set(site, p);
    return s;
  }

  std::size_t n_qubits() const { return letters_.size(); }
  Pauli operator[](std::size_t site) const { return letters_.at(site); }
  void set(std::size_t site, Pauli p) { letters_.at(site) = p; }
  const std::vector<Pauli>& letters() const { return letters_; }

  bool is_identity() const {
    for (Pauli p : letters_)
      if (p != Pauli::I) return false;
    return true;
  }

  std::string str() const {
    std::string out;
    out.reserve(letters_.size());
    for (Pauli p : letters_) out.push_back(to_char(p));
    return out;
  }

  /// Bit masks in basis-index convention: site k maps to bit (n-1-k).
  std::uint64_t x_mask() const {
    std::uint64_t m = 0;
    const std::size_t n = letters_.size();
    for (std::size_t k = 0; k < n; ++k)
      if (letters_[k] == Pauli::X || letters_[k] == Pauli::Y) m |= std::uint64_t{1} << (n - 1 - k);
    return m;
  }
  std::uint64_t z_mask() const {
    std::uint64_t m = 0;
    const std::size_t n = letters_.size();
    for (std::size_t k = 0; k < n; ++k)
      if (letters_[k] == Pauli::Z || letters_[k] == Pauli::Y) m |= std::uint64_t{1} << (n - 1 - k);
    return m;
  }
  int y_count() const {
    int c = 0;
    for (Pauli p : letters_) c += (p == Pauli::Y);
    return c;
  }

  /// True when the two strings commute (even number of anticommuting sites).
  bool commutes_with(const PauliString& other) const {
    check_same_size(other);
    int anti = 0;
    for (std::size_t k = 0; k < letters_.size(); ++k) {
      const Pauli a = letters_[k], b = other.letters_[k];
      anti += (a != Pauli::I && b != Pauli::I && a != b);
    }
    return anti % 2 == 0;
  }

  void check_same_size(const PauliString& other) const {
    if (other.n_qubits() != n_qubits())
      throw DimensionError(fmt::format("Pauli strings on {} and {} qubits", n_qubits(),
                                       other.n_qubits()));
  }

  friend bool operator==(const PauliString&, const PauliString&) = default;
  friend auto operator<=>(const PauliString&, const PauliString&) = default;

 private:
  std::vector<Pauli> letters_;
};

/// Result of multiplying two strings: a * b = phase * product.
struct StringProduct {
  cplx phase;
  PauliString product;
};

inline StringProduct multiply_strings(const PauliString& a, const PauliString& b) {
  a.check_same_size(b);
  std::vector<Pauli> out(a.n_qubits());
  int power = 0;
  for (std::size_t k = 0; k < a.n_qubits(); ++k) {
    const auto site = detail::site_product(a[k], b[k]);
    power += site.i_power;
    out[k] = site.letter;
  }
  return {detail::i_power(power), PauliString(std::move(out))};
}

struct PauliTerm {
  cplx coefficient;
  PauliString string;
};

/// Coefficients below this magnitude are dropped when terms merge.
inline constexpr double kCanonicalThreshold = 1e-14;

/// Canonical complex-weighted sum of Pauli strings on a fixed qubit count.
/// Terms are unique, lexicographically ordered, and never negligible.
class PauliSum {
 public:
  explicit PauliSum(std::size_t n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits == 0) throw ArgumentError("PauliSum needs at least one qubit");
  }

  PauliSum(std::size_t n_qubits, const std::vector<PauliTerm>& terms) : PauliSum(n_qubits) {
    for (const auto& t : terms) add(t.coefficient, t.string);
    prune();
  }

  static PauliSum from_string(cplx coefficient, const PauliString& s) {
    PauliSum out(s.n_qubits());
    out.add(coefficient, s);
    out.prune();
    return out;
  }

  std::size_t n_qubits() const { return n_qubits_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  std::vector<PauliTerm> terms() const {
    std::vector<PauliTerm> out;
    out.reserve(terms_.size());
    for (const auto& [s, c] : terms_) out.push_back({c, s});
    return out;
  }

  /// Coefficient of `s`, zero when absent.
  cplx coefficient(const PauliString& s) const {
    auto it = terms_.find(s);
    return it == terms_.end() ? cplx{} : it->second;
  }

  bool all_real(double tol = 0.0) const {
    for (const auto& [s, c] : terms_)
      if (std::abs(c.imag()) > tol) return false;
    return true;
  }
  bool all_imaginary(double tol = 0.0) const {
    for (const auto& [s, c] : terms_)
      if (std::abs(c.real()) > tol) return false;
    return true;
  }

  /// Sum of coefficient magnitudes, an upper bound on the spectral norm.
  double one_norm() const {
    double s = 0.0;
    for (const auto& [str, c] : terms_) s += std::abs(c);
    return s;
  }

  PauliSum& operator+=(const PauliSum& other) {
    check_same_size(other);
    for (const auto& [s, c] : other.terms_) add(c, s);
    prune();
    return *this;
  }
  PauliSum& operator-=(const PauliSum& other) {
    check_same_size(other);
    for (const auto& [s, c] : other.terms_) add(-c, s);
    prune();
    return *this;
  }
  PauliSum& operator*=(cplx scale) {
    for (auto& [s, c] : terms_) c *= scale;
    prune();
    return *this;
  }

  friend PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
  friend PauliSum operator-(PauliSum a, const PauliSum& b) { return a -= b; }
  friend PauliSum operator*(PauliSum a, cplx s) { return a *= s; }
  friend PauliSum operator*(cplx s, PauliSum a) { return a *= s; }

  friend PauliSum operator*(const PauliSum& a, const PauliSum& b) {
    a.check_same_size(b);
    PauliSum out(a.n_qubits());
    for (const auto& [sa, ca] : a.terms_) {
      for (const auto& [sb, cb] : b.terms_) {
        auto prod = multiply_strings(sa, sb);
        out.add(ca * cb * prod.phase, prod.product);
      }
    }
    out.prune();
    return out;
  }

  friend bool operator==(const PauliSum& a, const PauliSum& b) {
    return a.n_qubits_ == b.n_qubits_ && a.terms_ == b.terms_;
  }

  void check_same_size(const PauliSum& other) const {
    if (other.n_qubits_ != n_qubits_)
      throw DimensionError(
          fmt::format("Pauli sums on {} and {} qubits", n_qubits_, other.n_qubits_));
  }

  auto begin() const { return terms_.begin(); }
  auto end() const { return terms_.end(); }

 private:
  void add(cplx c, const PauliString& s) {
    if (s.n_qubits() != n_qubits_)
      throw DimensionError(
          fmt::format("term on {} qubits added to a {}-qubit sum", s.n_qubits(), n_qubits_));
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw ArgumentError("Pauli term coefficient is not finite");
    terms_[s] += c;
  }

  void prune() {
    std::erase_if(terms_, [](const auto& kv) { return std::abs(kv.second) < kCanonicalThreshold; });
  }

  std::size_t n_qubits_;
  std::map<PauliString, cplx> terms_;
};

/// ab - ba, computed string-wise: commuting string pairs cancel exactly and
/// anticommuting pairs contribute twice their product.
inline PauliSum commutator(const PauliSum& a, const PauliSum& b) {
  a.check_same_size(b);
  std::vector<PauliTerm> acc;
  for (const auto& [sa, ca] : a) {
    for (const auto& [sb, cb] : b) {
      if (sa.commutes_with(sb)) continue;
      auto prod = multiply_strings(sa, sb);
      acc.push_back({2.0 * ca * cb * prod.phase, std::move(prod.product)});
    }
  }
  return PauliSum(a.n_qubits(), acc);
}

// Text format: one term per line, `<re> <im> <letters>`.

inline void write_pauli_sum(std::ostream& os, const PauliSum& sum) {
  for (const auto& [s, c] : sum) os << fmt::format("{:.17g} {:.17g} {}\n", c.real(), c.imag(), s.str());
}

inline std::string to_text(const PauliSum& sum) {
  std::ostringstream os;
  write_pauli_sum(os, sum);
  return os.str();
}

/// Parses the term-per-line format. Blank lines and `#` comments are skipped.
/// `n_qubits` of zero infers the count from the first term.
inline PauliSum read_pauli_sum(std::istream& is, std::size_t n_qubits = 0) {
  std::vector<PauliTerm> terms;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double re = 0, im = 0;
    std::string letters;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string extra;
    if (!(ls >> re >> im >> letters) || (ls >> extra))
      throw ArgumentError(fmt::format("malformed Pauli term on line {}", line_no));
    auto s = PauliString::parse(letters);
    if (n_qubits == 0) n_qubits = s.n_qubits();
    if (s.n_qubits() != n_qubits)
      throw DimensionError(fmt::format("line {}: {} letters, expected {}", line_no, s.n_qubits(),
                                       n_qubits));
    terms.push_back({{re, im}, std::move(s)});
  }
  if (n_qubits == 0) throw ArgumentError("empty Pauli sum with unknown qubit count");
  return PauliSum(n_qubits, terms);
}

inline PauliSum parse_pauli_sum(const std::string& text, std::size_t n_qubits = 0) {
  std::istringstream is(text);
  return read_pauli_sum(is, n_qubits);
}

}  // namespace trotterbound
