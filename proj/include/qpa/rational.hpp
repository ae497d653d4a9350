#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qpa {

/// Exact fraction over 64-bit integers, always in lowest terms with a
/// positive denominator. Arithmetic goes through 128-bit intermediates and
/// throws std::overflow_error if the reduced result no longer fits.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num_(value), den_(1) {}  // NOLINT(implicit)

  Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::domain_error("zero denominator");
    *this = reduce(num, den);
  }

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }

  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  std::string to_string() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

  /// Accepts "p", "p/q" or "-p/q".
  static std::optional<Rational> parse(std::string_view text) {
    auto parse_int = [](std::string_view s) -> std::optional<std::int64_t> {
      if (s.empty()) return std::nullopt;
      std::size_t pos = 0;
      bool neg = false;
      if (s[0] == '-' || s[0] == '+') {
        neg = s[0] == '-';
        pos = 1;
      }
      if (pos == s.size()) return std::nullopt;
      std::int64_t v = 0;
      for (; pos < s.size(); ++pos) {
        if (s[pos] < '0' || s[pos] > '9') return std::nullopt;
        if (v > (INT64_MAX - 9) / 10) return std::nullopt;
        v = v * 10 + (s[pos] - '0');
      }
      return neg ? -v : v;
    };
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) {
      auto v = parse_int(text);
      if (!v) return std::nullopt;
      return Rational(*v);
    }
    auto p = parse_int(text.substr(0, slash));
    auto q = parse_int(text.substr(slash + 1));
    if (!p || !q || *q == 0) return std::nullopt;
    return Rational(*p, *q);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                     static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                     static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("division by zero");
    return from_wide(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Rational& operator+=(const Rational& b) { return *this = *this + b; }
  Rational& operator-=(const Rational& b) { return *this = *this - b; }
  Rational& operator*=(const Rational& b) { return *this = *this * b; }

  friend bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num_) * b.den_ <=> static_cast<__int128>(b.num_) * a.den_;
  }

 private:
  static Rational reduce(std::int64_t num, std::int64_t den) {
    return from_wide(num, den);
  }

  static Rational from_wide(__int128 num, __int128 den) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    __int128 a = num < 0 ? -num : num;
    __int128 b = den;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    const __int128 g = a == 0 ? 1 : a;
    num /= g;
    den /= g;
    if (num > INT64_MAX || num < INT64_MIN || den > INT64_MAX) {
      throw std::overflow_error("rational overflow");
    }
    Rational r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace qpa
