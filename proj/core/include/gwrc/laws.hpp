#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "gwrc/errors.hpp"
#include "gwrc/rng.hpp"

namespace gwrc {

// Distinguished "no finite mean" value. Always produced by an explicit
// branch, never by arithmetic overflow.
inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

inline constexpr bool is_infinite(double x) noexcept { return x == kInfinite; }

/// Offspring distribution of the branching process: p_k for k >= 1 with
/// p_0 = 0 and mean mu > 1. Immutable once validated.
class OffspringLaw {
 public:
  // Validates and normalizes a raw probability map. Throws ZeroNotAllowed,
  // NotNormalized or NotSupercritical.
  static OffspringLaw from_map(const std::map<std::uint32_t, double>& pk);

  // Truncated parametric families, conditioned on k >= 1 and renormalized.
  static OffspringLaw poisson(double lambda, std::uint32_t max_k = 64);
  static OffspringLaw geometric(double success, std::uint32_t max_k = 64);

  std::uint32_t sample(RandomStream& rng) const;

  double prob(std::uint32_t k) const;
  double mean() const noexcept { return mean_; }
  std::uint32_t min_k() const noexcept { return support_.front().first; }
  std::uint32_t max_k() const noexcept { return support_.back().first; }
  const std::vector<std::pair<std::uint32_t, double>>& support() const noexcept {
    return support_;
  }

  bool operator==(const OffspringLaw&) const = default;

 private:
  OffspringLaw() = default;
  std::vector<std::pair<std::uint32_t, double>> support_;  // sorted by k, p > 0 only
  std::vector<double> cdf_;
  double mean_ = 0.0;
};

// Re-validation entry point; idempotent on already-valid laws.
OffspringLaw validate_offspring(const OffspringLaw& law);

enum class CondFamily : std::uint8_t { Constant, TwoPoint, Exponential, LogNormal, Pareto };

const char* family_name(CondFamily f) noexcept;

/// One positive edge-conductance distribution. Sampling is by quantile
/// inversion so a given uniform stream always yields the same draws.
class ConductanceLaw {
 public:
  static ConductanceLaw constant(double c);
  static ConductanceLaw two_point(double v1, double v2, double prob_of_v2);
  static ConductanceLaw exponential(double rate);
  static ConductanceLaw lognormal(double mu_log, double sigma_log);
  static ConductanceLaw pareto(double alpha, double x_min);

  double sample(RandomStream& rng) const { return quantile(rng.next_unit_open()); }

  double quantile(double u) const;  // u in (0,1)
  double cdf(double x) const;
  double mean() const;              // kInfinite for pareto with alpha <= 1
  double min_support() const;       // essential infimum of the law
  bool degenerate() const;          // a.s. equal to one value
  bool continuous() const;

  CondFamily family() const noexcept { return family_; }
  double param(int i) const { return i == 0 ? p0_ : (i == 1 ? p1_ : p2_); }

  bool operator==(const ConductanceLaw&) const = default;

 private:
  ConductanceLaw(CondFamily f, double a, double b, double c)
      : family_(f), p0_(a), p1_(b), p2_(c) {}
  CondFamily family_;
  double p0_, p1_, p2_;
};

/// Symmetric family of edge laws keyed by the unordered pair of endpoint
/// indices, with a default entry for pairs without an override.
class ConductanceLawTable {
 public:
  explicit ConductanceLawTable(ConductanceLaw default_law) : default_(default_law) {}

  void set_override(std::uint32_t k, std::uint32_t m, ConductanceLaw law);
  const ConductanceLaw& operator()(std::uint32_t k, std::uint32_t m) const;

  const ConductanceLaw& default_law() const noexcept { return default_; }
  const std::map<std::pair<std::uint32_t, std::uint32_t>, ConductanceLaw>& overrides()
      const noexcept {
    return overrides_;
  }

  double sample(std::uint32_t k, std::uint32_t m, RandomStream& rng) const {
    return (*this)(k, m).sample(rng);
  }

  bool operator==(const ConductanceLawTable&) const = default;

 private:
  ConductanceLaw default_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, ConductanceLaw> overrides_;
};

// gamma = sum_{k,m} p_k p_m gamma_{k,m}; kInfinite as soon as one pair with
// positive weight has an infinite-mean law.
double mean_gamma(const ConductanceLawTable& table, const OffspringLaw& offspring);

// True when every law on the support of the offspring law has the same mean
// (within 1e-12 relative). Requires gamma finite.
bool equal_means(const ConductanceLawTable& table, const OffspringLaw& offspring);

// True when every in-support law is a point mass.
bool all_degenerate(const ConductanceLawTable& table, const OffspringLaw& offspring);

}  // namespace gwrc
