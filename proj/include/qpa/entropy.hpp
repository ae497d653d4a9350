#pragma once

// Renyi entropies of density operators and their epsilon-smoothed versions.
//
// Spectra are kept in the log2 domain with multiplicities so that spectra of
// n-fold tensor powers (eigenvalues like 0.1^1000, multiplicities like
// binomial(1024, 512)) stay representable.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "qpa/error.hpp"
#include "qpa/linalg.hpp"
#include "qpa/states.hpp"

namespace qpa {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kNegInfinity = -std::numeric_limits<double>::infinity();

/// Cap on the number of composition terms in product_spectrum().
inline constexpr std::uint64_t kProductTermCap = 10'000'000;

namespace detail {

/// log2(2^a + 2^b) with -inf as the neutral element.
inline double log2_add(double a, double b) {
  if (a == kNegInfinity) return b;
  if (b == kNegInfinity) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp2(lo - hi)) / std::numbers::ln2;
}

/// log2(2^a - 2^b), requires a >= b.
inline double log2_sub(double a, double b) {
  if (b == kNegInfinity) return a;
  if (b >= a) return kNegInfinity;
  return a + std::log1p(-std::exp2(b - a)) / std::numbers::ln2;
}

inline double safe_log2(double x) { return x > 0.0 ? std::log2(x) : kNegInfinity; }

}  // namespace detail

struct SpectrumLevel {
  double log2_value = kNegInfinity;  // -inf for a zero eigenvalue
  double log2_multiplicity = 0.0;

  double value() const { return std::exp2(log2_value); }
  double multiplicity() const { return std::exp2(log2_multiplicity); }
  /// Total probability carried by the level.
  double mass() const { return log2_value == kNegInfinity ? 0.0 : std::exp2(log2_value + log2_multiplicity); }
  bool is_zero() const { return log2_value == kNegInfinity; }
};

/// Eigenvalues of a density operator with multiplicities, descending.
class Spectrum {
 public:
  Spectrum() = default;

  explicit Spectrum(std::vector<SpectrumLevel> levels) : levels_(std::move(levels)) {
    std::sort(levels_.begin(), levels_.end(),
              [](const SpectrumLevel& a, const SpectrumLevel& b) { return a.log2_value > b.log2_value; });
  }

  /// Plain eigenvalue list, one level per eigenvalue. Values at or below the
  /// rank threshold relative to the largest become exact zeros.
  static Spectrum from_eigenvalues(std::span<const double> values) {
    double top = 0.0;
    for (double v : values) top = std::max(top, v);
    std::vector<SpectrumLevel> levels;
    levels.reserve(values.size());
    for (double v : values) {
      const bool zero = !(v > kRankTolerance * top);
      levels.push_back({zero ? kNegInfinity : std::log2(v), 0.0});
    }
    return Spectrum(std::move(levels));
  }

  static Spectrum of(const DensityOperator& rho) { return from_eigenvalues(rho.eigenvalues()); }

  std::span<const SpectrumLevel> levels() const noexcept { return levels_; }
  bool empty() const noexcept { return levels_.empty(); }

  double total_mass() const {
    double s = 0.0;
    for (const auto& l : levels_) s += l.mass();
    return s;
  }

  /// log2 of the number of eigenvalues, zeros included.
  double log2_dimension() const {
    double acc = kNegInfinity;
    for (const auto& l : levels_) acc = detail::log2_add(acc, l.log2_multiplicity);
    return acc;
  }

  /// log2 of the number of nonzero eigenvalues.
  double log2_rank() const {
    double acc = kNegInfinity;
    for (const auto& l : levels_)
      if (!l.is_zero()) acc = detail::log2_add(acc, l.log2_multiplicity);
    return acc;
  }

  double log2_max() const { return levels_.empty() ? kNegInfinity : levels_.front().log2_value; }

  /// Expanded eigenvalue list; only sensible for small multiplicities.
  std::vector<double> expanded() const {
    std::vector<double> out;
    for (const auto& l : levels_) {
      const auto count = static_cast<std::size_t>(std::llround(l.multiplicity()));
      out.insert(out.end(), count, l.value());
    }
    return out;
  }

 private:
  std::vector<SpectrumLevel> levels_;
};

struct SmoothingResult {
  double value = 0.0;  // bits
  Spectrum witness;
  double achieved_distance = 0.0;
};

inline void require_alpha(double alpha) {
  if (std::isnan(alpha) || alpha < 0.0) raise(ErrorKind::InvalidAlpha, "order must be nonnegative");
}

inline void require_epsilon(double epsilon) {
  if (std::isnan(epsilon) || epsilon < 0.0 || epsilon >= 1.0) {
    raise(ErrorKind::InvalidEpsilon, "smoothing parameter must lie in [0, 1), got " + std::to_string(epsilon));
  }
}

/// S_alpha in bits. alpha = 0 counts the rank, alpha = 1 is the von Neumann
/// entropy and alpha = kInfinity is -log2 of the largest eigenvalue.
inline double renyi_entropy(const Spectrum& spectrum, double alpha) {
  require_alpha(alpha);
  if (alpha == 0.0) return spectrum.log2_rank();
  if (alpha == kInfinity) return -spectrum.log2_max();
  if (alpha == 1.0) {
    double s = 0.0;
    for (const auto& l : spectrum.levels())
      if (!l.is_zero()) s -= l.mass() * l.log2_value;
    return std::max(s, 0.0);
  }
  double acc = kNegInfinity;
  for (const auto& l : spectrum.levels())
    if (!l.is_zero()) acc = detail::log2_add(acc, l.log2_multiplicity + alpha * l.log2_value);
  return std::max(acc / (1.0 - alpha), 0.0);
}

inline double renyi_entropy(const DensityOperator& rho, double alpha) {
  return renyi_entropy(Spectrum::of(rho), alpha);
}

inline double von_neumann_entropy(const DensityOperator& rho) { return renyi_entropy(rho, 1.0); }

/// Property harness for the ordering of Renyi entropies in alpha.
inline bool monotonicity_check(const DensityOperator& rho, double alpha, double beta) {
  return renyi_entropy(rho, alpha) >= renyi_entropy(rho, beta) - 1e-9;
}

/// Smooth S_0: drop the smallest eigenvalues while their total mass stays
/// within epsilon and give the dropped mass to the largest eigenvalue. The
/// smoothed operator commutes with rho, so its trace distance to rho equals
/// the dropped mass.
inline SmoothingResult smooth_renyi_0(const Spectrum& spectrum, double epsilon) {
  require_epsilon(epsilon);
  const auto levels = spectrum.levels();
  std::vector<SpectrumLevel> kept(levels.begin(), levels.end());

  double removed = 0.0;
  // kept is descending; walk from the back over nonzero levels.
  std::size_t end = kept.size();
  while (end > 0 && kept[end - 1].is_zero()) --end;
  while (end > 0) {
    SpectrumLevel& level = kept[end - 1];
    const double mass = level.mass();
    if (end > 1 && removed + mass <= epsilon) {
      removed += mass;
      level.log2_value = kNegInfinity;
      --end;
      continue;
    }
    // Partial removal of k copies of this level.
    const double budget = epsilon - removed;
    const double log2_k = detail::safe_log2(budget) - level.log2_value;
    if (log2_k < 0.0) break;
    double log2_removed;
    if (log2_k < 52.0) {
      const double k = std::floor(std::exp2(log2_k));
      log2_removed = std::log2(k);
    } else {
      log2_removed = log2_k;
    }
    if (log2_removed >= level.log2_multiplicity) break;  // cannot happen while total mass > epsilon
    removed += std::exp2(log2_removed + level.log2_value);
    const SpectrumLevel gone{kNegInfinity, log2_removed};
    level.log2_multiplicity = detail::log2_sub(level.log2_multiplicity, log2_removed);
    kept.push_back(gone);
    break;
  }

  // The largest eigenvalue absorbs the removed mass, so the witness keeps
  // unit trace.
  if (removed > 0.0 && !kept.empty()) {
    SpectrumLevel& top = kept.front();
    const SpectrumLevel boosted{detail::safe_log2(top.value() + removed), 0.0};
    if (top.log2_multiplicity > 0.0) {
      top.log2_multiplicity = detail::log2_sub(top.log2_multiplicity, 0.0);
      kept.push_back(boosted);
    } else {
      top = boosted;
    }
  }

  SmoothingResult out;
  out.witness = Spectrum(std::move(kept));
  out.value = out.witness.log2_rank();
  out.achieved_distance = removed;
  return out;
}

/// Smooth S_infinity: the smallest cap c such that clipping every eigenvalue
/// at c removes at most epsilon of mass, and the removed mass fits under the
/// cap on the remaining eigenvalues (c >= 1/dim). Found by bisection on log2 c.
inline SmoothingResult smooth_renyi_inf(const Spectrum& spectrum, double epsilon, int iterations = 60) {
  require_epsilon(epsilon);
  const auto levels = spectrum.levels();
  const double log2_dim = spectrum.log2_dimension();

  auto clipped_mass = [&](double log2_cap) {
    double s = 0.0;
    for (const auto& l : levels) {
      if (l.log2_value <= log2_cap) break;
      s += std::exp2(l.log2_value + l.log2_multiplicity) - std::exp2(log2_cap + l.log2_multiplicity);
    }
    return s;
  };

  double hi = spectrum.log2_max();
  double lo = -log2_dim;
  double log2_cap = hi;
  if (epsilon > 0.0 && hi > lo) {
    if (clipped_mass(lo) <= epsilon) {
      log2_cap = lo;
    } else {
      for (int it = 0; it < iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (clipped_mass(mid) <= epsilon) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      log2_cap = hi;
    }
  }
  const double clipped = clipped_mass(log2_cap);

  // Witness: clip at the cap, then top up the largest eigenvalues below the
  // cap until the clipped mass is placed.
  std::vector<SpectrumLevel> out_levels;
  double remaining = clipped;
  const double cap = std::exp2(log2_cap);
  for (const auto& l : levels) {
    if (l.log2_value >= log2_cap) {
      out_levels.push_back({log2_cap, l.log2_multiplicity});
      continue;
    }
    if (remaining <= 0.0) {
      out_levels.push_back(l);
      continue;
    }
    const double room = cap - l.value();
    const double log2_room = detail::safe_log2(room);
    const double log2_full = detail::safe_log2(remaining) - log2_room;  // copies that can be filled to the cap
    if (log2_full >= l.log2_multiplicity) {
      out_levels.push_back({log2_cap, l.log2_multiplicity});
      remaining -= std::exp2(l.log2_multiplicity + log2_room);
      continue;
    }
    double full = 0.0;
    double log2_full_count = kNegInfinity;
    if (log2_full >= 0.0) {
      full = std::floor(std::exp2(log2_full));
      log2_full_count = std::log2(full);
      out_levels.push_back({log2_cap, log2_full_count});
      remaining -= full * room;
    }
    const double partial = std::max(remaining, 0.0);
    out_levels.push_back({detail::safe_log2(l.value() + partial), 0.0});
    const double rest = detail::log2_sub(l.log2_multiplicity, detail::log2_add(log2_full_count, 0.0));
    if (rest != kNegInfinity) out_levels.push_back({l.log2_value, rest});
    remaining = 0.0;
  }

  SmoothingResult out;
  out.witness = Spectrum(std::move(out_levels));
  out.value = -log2_cap;
  out.achieved_distance = clipped;
  return out;
}

inline SmoothingResult smooth_renyi_0(const DensityOperator& rho, double epsilon) {
  return smooth_renyi_0(Spectrum::of(rho), epsilon);
}

inline SmoothingResult smooth_renyi_inf(const DensityOperator& rho, double epsilon) {
  return smooth_renyi_inf(Spectrum::of(rho), epsilon);
}

/// Trace distance between two spectra interpreted as commuting operators
/// diagonal in the same basis, each expanded in descending order. Only
/// defined for explicitly enumerable spectra.
inline double commuting_trace_distance(const Spectrum& a, const Spectrum& b) {
  auto x = a.expanded();
  auto y = b.expanded();
  const std::size_t n = std::max(x.size(), y.size());
  x.resize(n, 0.0);
  y.resize(n, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(x[i] - y[i]);
  return 0.5 * s;
}

/// Spectrum of rho^{(x) n}: products prod_i lambda_i^{k_i} with multinomial
/// multiplicities, one level per composition (k_1, ..., k_d) of n over the
/// nonzero eigenvalues, plus one level collecting all zero eigenvalues.
inline Spectrum product_spectrum(const Spectrum& base, std::uint64_t n) {
  if (n == 0) raise(ErrorKind::TooLarge, "tensor power must be positive");
  std::vector<double> log2_values;
  double log2_zero_mult = kNegInfinity;
  for (const auto& l : base.levels()) {
    const auto count = static_cast<std::uint64_t>(std::llround(l.multiplicity()));
    if (l.is_zero()) {
      log2_zero_mult = detail::log2_add(log2_zero_mult, l.log2_multiplicity);
      continue;
    }
    for (std::uint64_t c = 0; c < count; ++c) log2_values.push_back(l.log2_value);
  }
  const std::size_t d = log2_values.size();
  if (d == 0) raise(ErrorKind::TooLarge, "empty spectrum");

  // Number of compositions of n into d parts: C(n + d - 1, d - 1).
  long double terms = 1.0L;
  for (std::size_t i = 1; i < d; ++i) {
    terms = terms * static_cast<long double>(n + i) / static_cast<long double>(i);
    if (terms > static_cast<long double>(kProductTermCap)) {
      raise(ErrorKind::TooLarge, "tensor power spectrum needs more than " + std::to_string(kProductTermCap) + " terms");
    }
  }

  const double log2_n_fact = std::lgamma(static_cast<double>(n) + 1.0) / std::numbers::ln2;
  std::vector<SpectrumLevel> levels;
  levels.reserve(static_cast<std::size_t>(terms) + 1);
  std::vector<std::uint64_t> k(d, 0);

  // Enumerate compositions recursively over the first d-1 parts.
  auto emit = [&] {
    double lv = 0.0;
    double lm = log2_n_fact;
    for (std::size_t i = 0; i < d; ++i) {
      if (k[i] > 0) lv += static_cast<double>(k[i]) * log2_values[i];
      lm -= std::lgamma(static_cast<double>(k[i]) + 1.0) / std::numbers::ln2;
    }
    levels.push_back({lv, lm});
  };
  auto recurse = [&](auto&& self, std::size_t i, std::uint64_t left) -> void {
    if (i + 1 == d) {
      k[i] = left;
      emit();
      return;
    }
    for (std::uint64_t j = 0; j <= left; ++j) {
      k[i] = j;
      self(self, i + 1, left - j);
    }
  };
  recurse(recurse, 0, n);

  // Eigenvalues touching at least one zero factor: dim^n - d^n of them.
  const double log2_dim = base.log2_dimension();
  if (log2_zero_mult != kNegInfinity) {
    const double log2_all = static_cast<double>(n) * log2_dim;
    const double log2_nonzero = static_cast<double>(n) * std::log2(static_cast<double>(d));
    levels.push_back({kNegInfinity, detail::log2_sub(log2_all, log2_nonzero)});
  }
  return Spectrum(std::move(levels));
}

inline Spectrum product_spectrum(const DensityOperator& rho, std::uint64_t n) {
  if (rho.dim() > 4) raise(ErrorKind::TooLarge, "tensor power spectra are limited to dimension 4");
  if (n > 4096) raise(ErrorKind::TooLarge, "tensor power limited to n <= 4096");
  return product_spectrum(Spectrum::of(rho), n);
}

enum class SmoothOrder { Zero, Infinity };

/// Smoothed entropy rate of rho^{(x) n} for the given order.
inline double smooth_entropy_rate(const DensityOperator& rho, double epsilon, std::uint64_t n, SmoothOrder order) {
  const Spectrum spectrum = product_spectrum(rho, n);
  const double value = order == SmoothOrder::Zero ? smooth_renyi_0(spectrum, epsilon).value
                                                  : smooth_renyi_inf(spectrum, epsilon).value;
  return value / static_cast<double>(n);
}

/// |S_alpha^eps(rho^{(x) n}) / n - S(rho)| for alpha in {0, infinity}.
inline double aep_gap(const DensityOperator& rho, double epsilon, std::uint64_t n, SmoothOrder order) {
  return std::abs(smooth_entropy_rate(rho, epsilon, n, order) - von_neumann_entropy(rho));
}

}  // namespace qpa
