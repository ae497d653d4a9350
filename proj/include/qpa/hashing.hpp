#pragma once

// Two-universal hash families on bit strings with enumerable seed spaces.
//
// Bit conventions: a bit string stores bit i in byte i / 8 at position i % 8
// (little-endian), and its hex form lists the bytes in order. An input value
// z in [0, 2^n) is the bit string whose bit j is (z >> j) & 1.

#include <array>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qpa/error.hpp"
#include "qpa/rational.hpp"

namespace qpa {

inline constexpr std::uint64_t kDefaultSeedCap = std::uint64_t{1} << 24;

class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t size) : size_(size), bytes_((size + 7) / 8, 0) {}

  static BitString from_uint(std::uint64_t value, std::size_t size) {
    BitString b(size);
    for (std::size_t i = 0; i < size && i < 64; ++i) b.set(i, (value >> i) & 1U);
    return b;
  }

  /// "1011" means bit 0 = 1, bit 1 = 0, ...
  static BitString from_binary(std::string_view text) {
    BitString b(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] != '0' && text[i] != '1') raise(ErrorKind::ParseError, "bit string must contain only 0 and 1");
      b.set(i, text[i] == '1');
    }
    return b;
  }

  static BitString from_hex(std::string_view hex, std::size_t size) {
    if (hex.size() != 2 * ((size + 7) / 8)) {
      raise(ErrorKind::LengthMismatch, "hex string of length " + std::to_string(hex.size()) + " for " +
                                           std::to_string(size) + " bits");
    }
    auto nibble = [](char c) -> unsigned {
      if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
      if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
      if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
      raise(ErrorKind::ParseError, std::string("invalid hex digit '") + c + "'");
    };
    BitString b(size);
    for (std::size_t k = 0; k < b.bytes_.size(); ++k) {
      b.bytes_[k] = static_cast<std::uint8_t>(nibble(hex[2 * k]) << 4 | nibble(hex[2 * k + 1]));
    }
    if (size % 8 != 0 && !b.bytes_.empty()) {
      const auto mask = static_cast<std::uint8_t>((1U << (size % 8)) - 1U);
      if ((b.bytes_.back() & ~mask) != 0) raise(ErrorKind::LengthMismatch, "hex string has bits beyond the length");
    }
    return b;
  }

  std::size_t size() const noexcept { return size_; }

  bool operator[](std::size_t i) const { return (bytes_[i / 8] >> (i % 8)) & 1U; }

  void set(std::size_t i, bool bit) {
    const auto mask = static_cast<std::uint8_t>(1U << (i % 8));
    if (bit) {
      bytes_[i / 8] |= mask;
    } else {
      bytes_[i / 8] &= static_cast<std::uint8_t>(~mask);
    }
  }

  std::uint64_t to_uint() const {
    if (size_ > 64) raise(ErrorKind::LengthMismatch, "bit string longer than 64 bits");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < size_; ++i) v |= static_cast<std::uint64_t>((*this)[i]) << i;
    return v;
  }

  std::string to_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * bytes_.size());
    for (auto byte : bytes_) {
      out.push_back(digits[byte >> 4]);
      out.push_back(digits[byte & 0xF]);
    }
    return out;
  }

  std::string to_binary() const {
    std::string out(size_, '0');
    for (std::size_t i = 0; i < size_; ++i) out[i] = (*this)[i] ? '1' : '0';
    return out;
  }

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint8_t> bytes_;
};

/// Irreducible polynomials over GF(2), one per degree 1..24, bit k holding
/// the coefficient of x^k.
inline constexpr std::array<std::uint32_t, 25> kIrreduciblePolynomials = {
    0,
    0x3,         // x + 1
    0x7,         // x^2 + x + 1
    0xB,         // x^3 + x + 1
    0x13,        // x^4 + x + 1
    0x25,        // x^5 + x^2 + 1
    0x43,        // x^6 + x + 1
    0x83,        // x^7 + x + 1
    0x11B,       // x^8 + x^4 + x^3 + x + 1
    0x211,       // x^9 + x^4 + 1
    0x409,       // x^10 + x^3 + 1
    0x805,       // x^11 + x^2 + 1
    0x1009,      // x^12 + x^3 + 1
    0x201B,      // x^13 + x^4 + x^3 + x + 1
    0x4021,      // x^14 + x^5 + 1
    0x8003,      // x^15 + x + 1
    0x1002B,     // x^16 + x^5 + x^3 + x + 1
    0x20009,     // x^17 + x^3 + 1
    0x40009,     // x^18 + x^3 + 1
    0x80027,     // x^19 + x^5 + x^2 + x + 1
    0x100009,    // x^20 + x^3 + 1
    0x200005,    // x^21 + x^2 + 1
    0x400003,    // x^22 + x + 1
    0x800021,    // x^23 + x^5 + 1
    0x100001B,   // x^24 + x^4 + x^3 + x + 1
};

/// Product of a and b in GF(2)[x] / (poly), with deg(poly) = n.
inline std::uint64_t gf2n_multiply(std::uint64_t a, std::uint64_t b, unsigned n, std::uint64_t poly) {
  std::uint64_t acc = 0;
  const std::uint64_t top = std::uint64_t{1} << n;
  for (unsigned i = 0; i < n; ++i) {
    if ((b >> i) & 1U) acc ^= a;
    a <<= 1;
    if (a & top) a ^= poly;
  }
  return acc;
}

enum class FamilyKind { Toeplitz, Gf2nMult, AllFunctions };

inline const char* to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Toeplitz: return "toeplitz";
    case FamilyKind::Gf2nMult: return "gf2n_mult";
    case FamilyKind::AllFunctions: return "all_functions";
  }
  return "unknown";
}

inline FamilyKind parse_family_kind(std::string_view name) {
  if (name == "toeplitz") return FamilyKind::Toeplitz;
  if (name == "gf2n_mult") return FamilyKind::Gf2nMult;
  if (name == "all_functions") return FamilyKind::AllFunctions;
  raise(ErrorKind::ValidationError, "family: unknown kind '" + std::string(name) + "'");
}

/// A finite family of functions {0,1}^n -> {0,1}^s indexed by seeds. The
/// evaluation operator works on integer-encoded seeds and inputs, which is
/// what the enumeration code uses.
class HashFamily {
 public:
  HashFamily(FamilyKind kind, unsigned input_bits, unsigned output_bits)
      : kind_(kind), n_(input_bits), s_(output_bits) {
    if (s_ < 1 || s_ > n_) raise(ErrorKind::InvalidFamily, "output bits must satisfy 1 <= s <= n");
    if (n_ > 24) raise(ErrorKind::InvalidFamily, "input length limited to 24 bits");
    if (kind_ == FamilyKind::Gf2nMult) poly_ = kIrreduciblePolynomials[n_];
  }

  FamilyKind kind() const noexcept { return kind_; }
  unsigned input_bits() const noexcept { return n_; }
  unsigned output_bits() const noexcept { return s_; }

  std::uint64_t seed_bits() const noexcept {
    switch (kind_) {
      case FamilyKind::Toeplitz: return n_ + s_ - 1;
      case FamilyKind::Gf2nMult: return n_;
      case FamilyKind::AllFunctions: return static_cast<std::uint64_t>(s_) << n_;
    }
    return 0;
  }

  bool enumerable(std::uint64_t cap = kDefaultSeedCap) const noexcept {
    return seed_bits() < 63 && (std::uint64_t{1} << seed_bits()) <= cap;
  }

  /// Number of seeds; only meaningful when seed_bits() < 64.
  std::uint64_t seed_count() const {
    if (seed_bits() >= 63) raise(ErrorKind::SeedSpaceTooLarge, "seed space has 2^" + std::to_string(seed_bits()) + " seeds");
    return std::uint64_t{1} << seed_bits();
  }

  /// f_seed(z) with the seed's bit i given by bit i of `seed`.
  std::uint64_t operator()(std::uint64_t seed, std::uint64_t z) const {
    switch (kind_) {
      case FamilyKind::Toeplitz: {
        // T[i][j] = seed[s - 1 - i + j]; output bit i = parity(row_i & z).
        std::uint64_t out = 0;
        const std::uint64_t zmask = (std::uint64_t{1} << n_) - 1;
        for (unsigned i = 0; i < s_; ++i) {
          const std::uint64_t row = (seed >> (s_ - 1 - i)) & zmask;
          out |= static_cast<std::uint64_t>(__builtin_parityll(row & z)) << i;
        }
        return out;
      }
      case FamilyKind::Gf2nMult:
        return gf2n_multiply(seed, z, n_, poly_) & ((std::uint64_t{1} << s_) - 1);
      case FamilyKind::AllFunctions:
        return (seed >> (z * s_)) & ((std::uint64_t{1} << s_) - 1);
    }
    return 0;
  }

  BitString evaluate(const BitString& seed, const BitString& z) const {
    if (seed.size() != seed_bits()) {
      raise(ErrorKind::LengthMismatch,
            "seed has " + std::to_string(seed.size()) + " bits, family needs " + std::to_string(seed_bits()));
    }
    if (z.size() != n_) {
      raise(ErrorKind::LengthMismatch,
            "input has " + std::to_string(z.size()) + " bits, family needs " + std::to_string(n_));
    }
    const std::uint64_t zv = z.to_uint();
    if (kind_ == FamilyKind::AllFunctions) {
      BitString out(s_);
      for (unsigned i = 0; i < s_; ++i) out.set(i, seed[zv * s_ + i]);
      return out;
    }
    return BitString::from_uint((*this)(seed.to_uint(), zv), s_);
  }

  std::uint64_t polynomial() const noexcept { return poly_; }

  friend bool operator==(const HashFamily&, const HashFamily&) = default;

 private:
  FamilyKind kind_;
  unsigned n_;
  unsigned s_;
  std::uint64_t poly_ = 0;
};

inline BitString evaluate(const HashFamily& family, const BitString& seed, const BitString& z) {
  return family.evaluate(seed, z);
}

/// Any finite family that can be enumerated seed by seed.
template <class F>
concept EnumerableFamily = requires(const F& f, std::uint64_t seed, std::uint64_t z) {
  { f.input_bits() } -> std::convertible_to<unsigned>;
  { f.output_bits() } -> std::convertible_to<unsigned>;
  { f.seed_count() } -> std::convertible_to<std::uint64_t>;
  { f(seed, z) } -> std::convertible_to<std::uint64_t>;
};

/// Outputs f_seed(z) for every z in [0, 2^n).
template <EnumerableFamily F>
std::vector<std::uint32_t> output_table(const F& family, std::uint64_t seed) {
  const std::uint64_t inputs = std::uint64_t{1} << family.input_bits();
  std::vector<std::uint32_t> table(inputs);
  for (std::uint64_t z = 0; z < inputs; ++z) table[z] = static_cast<std::uint32_t>(family(seed, z));
  return table;
}

template <EnumerableFamily F>
void require_enumerable(const F& family, std::uint64_t cap) {
  if constexpr (std::same_as<F, HashFamily>) {
    if (!family.enumerable(cap)) {
      raise(ErrorKind::SeedSpaceTooLarge,
            "seed space of 2^" + std::to_string(family.seed_bits()) + " exceeds cap " + std::to_string(cap));
    }
  } else if (family.seed_count() > cap) {
    raise(ErrorKind::SeedSpaceTooLarge, "seed space exceeds cap " + std::to_string(cap));
  }
}

/// Exact Pr_seed[f(x) = f(x')] by counting seeds.
template <EnumerableFamily F>
Rational collision_probability(const F& family, std::uint64_t x, std::uint64_t x_prime,
                               std::uint64_t cap = kDefaultSeedCap) {
  const std::uint64_t inputs = std::uint64_t{1} << family.input_bits();
  if (x >= inputs || x_prime >= inputs) raise(ErrorKind::LengthMismatch, "input outside {0,1}^n");
  if (x == x_prime) raise(ErrorKind::ValidationError, "collision probability needs distinct inputs");
  if constexpr (std::same_as<F, HashFamily>) {
    if (family.kind() == FamilyKind::AllFunctions) {
      // Only the two truth-table blocks of x and x' matter; count over them.
      const std::uint64_t outputs = std::uint64_t{1} << family.output_bits();
      std::uint64_t hits = 0;
      for (std::uint64_t a = 0; a < outputs; ++a)
        for (std::uint64_t b = 0; b < outputs; ++b) hits += a == b;
      return Rational(static_cast<std::int64_t>(hits), static_cast<std::int64_t>(outputs * outputs));
    }
  }
  require_enumerable(family, cap);
  const std::uint64_t seeds = family.seed_count();
  std::uint64_t hits = 0;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) hits += family(seed, x) == family(seed, x_prime);
  return Rational(static_cast<std::int64_t>(hits), static_cast<std::int64_t>(seeds));
}

/// True iff every pair of distinct inputs collides with probability at most
/// 2^-s. Exhaustive over pairs and seeds, so limited to n <= 6.
template <EnumerableFamily F>
bool certify_two_universal(const F& family, std::uint64_t cap = kDefaultSeedCap) {
  if (family.input_bits() > 6) raise(ErrorKind::SeedSpaceTooLarge, "certification is limited to n <= 6");
  const std::uint64_t inputs = std::uint64_t{1} << family.input_bits();
  const Rational bound(1, std::int64_t{1} << family.output_bits());
  if constexpr (std::same_as<F, HashFamily>) {
    if (family.kind() == FamilyKind::AllFunctions) {
      for (std::uint64_t x = 0; x < inputs; ++x)
        for (std::uint64_t y = x + 1; y < inputs; ++y)
          if (collision_probability(family, x, y, cap) > bound) return false;
      return true;
    }
  }
  require_enumerable(family, cap);
  const std::uint64_t seeds = family.seed_count();
  std::vector<std::uint64_t> hits(inputs * inputs, 0);
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    const auto table = output_table(family, seed);
    for (std::uint64_t x = 0; x < inputs; ++x)
      for (std::uint64_t y = x + 1; y < inputs; ++y) hits[x * inputs + y] += table[x] == table[y];
  }
  for (std::uint64_t x = 0; x < inputs; ++x)
    for (std::uint64_t y = x + 1; y < inputs; ++y)
      if (Rational(static_cast<std::int64_t>(hits[x * inputs + y]), static_cast<std::int64_t>(seeds)) > bound)
        return false;
  return true;
}

}  // namespace qpa
