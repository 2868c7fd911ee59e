#pragma once

// Polynomial potential mini-language.
//
//   expr     := term { ('+' | '-') term }
//   term     := factor { ('*' | '/') factor }
//   factor   := ('+' | '-') factor | power
//   power    := primary [ '^' exponent ]
//   exponent := ['+' | '-'] digits
//   primary  := number | 'i' | 'x' | '(' expr ')'
//   number   := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]
//             | '.' digits [exponent part]
//
// Whitespace is ignored between tokens. Division is only allowed by a
// non-zero constant; negative exponents and division by x are NonPolynomial.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "ptqm/errors.hpp"
#include "ptqm/linop.hpp"

namespace ptqm {

/// V(x) = Σ_k coefficients[k]·x^k. Trailing zero coefficients are trimmed;
/// the zero polynomial has a single zero coefficient.
struct PolyPotential {
  std::vector<Complex> coefficients{Complex{0.0, 0.0}};

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
  Complex operator()(double x) const {
    Complex acc = 0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
  bool operator==(const PolyPotential&) const = default;
};

inline constexpr int kMaxPotentialDegree = 64;

namespace detail {

inline std::vector<Complex> poly_trim(std::vector<Complex> c) {
  while (c.size() > 1 && c.back() == Complex{0.0, 0.0}) c.pop_back();
  if (c.empty()) c.push_back(Complex{0.0, 0.0});
  return c;
}

inline std::vector<Complex> poly_add(const std::vector<Complex>& a, const std::vector<Complex>& b, double sign) {
  std::vector<Complex> out(std::max(a.size(), b.size()), Complex{0.0, 0.0});
  for (std::size_t k = 0; k < a.size(); ++k) out[k] += a[k];
  for (std::size_t k = 0; k < b.size(); ++k) out[k] += sign * b[k];
  return poly_trim(std::move(out));
}

inline std::vector<Complex> poly_mul(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  std::vector<Complex> out(a.size() + b.size() - 1, Complex{0.0, 0.0});
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return poly_trim(std::move(out));
}

class PotentialParser {
 public:
  explicit PotentialParser(std::string_view src) : src_(src) {}

  std::vector<Complex> parse() {
    auto value = expr();
    skip_ws();
    if (pos_ != src_.size()) throw SyntaxError(pos_, "operator or end of input");
    return value;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  std::vector<Complex> check_degree(std::vector<Complex> p, std::size_t at) {
    if (static_cast<int>(p.size()) - 1 > kMaxPotentialDegree) {
      fail(ErrorKind::NonPolynomial,
           "degree exceeds " + std::to_string(kMaxPotentialDegree) + " at offset " + std::to_string(at));
    }
    return p;
  }

  std::vector<Complex> expr() {
    auto acc = term();
    for (char c = peek(); c == '+' || c == '-'; c = peek()) {
      ++pos_;
      acc = poly_add(acc, term(), c == '+' ? 1.0 : -1.0);
    }
    return acc;
  }

  std::vector<Complex> term() {
    auto acc = factor();
    for (char c = peek(); c == '*' || c == '/'; c = peek()) {
      const std::size_t at = pos_++;
      auto rhs = factor();
      if (c == '*') {
        acc = check_degree(poly_mul(acc, rhs), at);
      } else {
        if (rhs.size() != 1) fail(ErrorKind::NonPolynomial, "division by a non-constant at offset " + std::to_string(at));
        if (rhs[0] == Complex{0.0, 0.0}) fail(ErrorKind::NonPolynomial, "division by zero at offset " + std::to_string(at));
        for (auto& v : acc) v /= rhs[0];
        acc = poly_trim(std::move(acc));
      }
    }
    return acc;
  }

  std::vector<Complex> factor() {
    const char c = peek();
    if (c == '+' || c == '-') {
      ++pos_;
      auto inner = factor();
      if (c == '-') {
        for (auto& v : inner) v = -v;
      }
      return inner;
    }
    return power();
  }

  std::vector<Complex> power() {
    auto base = primary();
    if (peek() != '^') return base;
    const std::size_t at = pos_++;
    skip_ws();
    bool negative = false;
    if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
      negative = src_[pos_] == '-';
      ++pos_;
    }
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (start == pos_) throw SyntaxError(pos_, "integer exponent");
    if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E')) {
      fail(ErrorKind::NonPolynomial, "non-integer exponent at offset " + std::to_string(start));
    }
    if (negative) fail(ErrorKind::NonPolynomial, "negative exponent at offset " + std::to_string(start));
    if (pos_ - start > 3) fail(ErrorKind::NonPolynomial, "exponent too large at offset " + std::to_string(start));
    const int e = std::stoi(std::string(src_.substr(start, pos_ - start)));
    if ((static_cast<int>(base.size()) - 1) * e > kMaxPotentialDegree) {
      fail(ErrorKind::NonPolynomial,
           "degree exceeds " + std::to_string(kMaxPotentialDegree) + " at offset " + std::to_string(at));
    }
    std::vector<Complex> out{Complex{1.0, 0.0}};
    for (int k = 0; k < e; ++k) out = poly_mul(out, base);
    return out;
  }

  std::vector<Complex> primary() {
    const char c = peek();
    if (c == 'x') {
      ++pos_;
      return {Complex{0.0, 0.0}, Complex{1.0, 0.0}};
    }
    if (c == 'i') {
      ++pos_;
      return {Complex{0.0, 1.0}};
    }
    if (c == '(') {
      ++pos_;
      auto inner = expr();
      if (peek() != ')') throw SyntaxError(pos_, "')'");
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return {Complex{number(), 0.0}};
    throw SyntaxError(pos_, "expression");
  }

  double number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      const std::size_t from = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      return pos_ - from;
    };
    std::size_t count = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      count += digits();
    }
    if (count == 0) throw SyntaxError(start, "digits");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) throw SyntaxError(pos_, "exponent digits");
    }
    double value = 0;
    const auto* first = src_.data() + start;
    const auto* last = src_.data() + pos_;
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) throw SyntaxError(start, "finite number");
    return value;
  }
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline PolyPotential parse_potential(std::string_view src) {
  detail::PotentialParser parser(src);
  return PolyPotential{parser.parse()};
}

/// Canonical text form; parse_potential(format_potential(p)) == p for finite
/// coefficients.
inline std::string format_potential(const PolyPotential& p) {
  std::string out;
  for (std::size_t k = 0; k < p.coefficients.size(); ++k) {
    const Complex c = p.coefficients[k];
    if (c == Complex{0.0, 0.0} && p.coefficients.size() > 1) continue;
    if (!out.empty()) out += " + ";
    out += "(" + detail::format_double(c.real()) + " + " + detail::format_double(c.imag()) + "*i)";
    if (k == 1) out += "*x";
    if (k > 1) out += "*x^" + std::to_string(k);
  }
  return out;
}

}  // namespace ptqm
