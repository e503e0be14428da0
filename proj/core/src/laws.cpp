#include "gwrc/laws.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gwrc {

namespace {

std::map<std::uint32_t, double> renormalized(std::map<std::uint32_t, double> m) {
  double total = 0.0;
  for (auto& [k, p] : m) total += p;
  if (total <= 0.0) fail(Errc::BadParameter, "offspring: degenerate truncation");
  for (auto& [k, p] : m) p /= total;
  return m;
}

}  // namespace

OffspringLaw OffspringLaw::from_map(const std::map<std::uint32_t, double>& pk) {
  std::vector<std::pair<std::uint32_t, double>> support;
  double total = 0.0;
  for (const auto& [k, p] : pk) {
    if (p < 0.0 || !std::isfinite(p))
      fail(Errc::BadParameter, "offspring." + std::to_string(k) + ": probability must be in [0,1]");
    if (k == 0 && p > 0.0)
      fail(Errc::ZeroNotAllowed, "offspring.0: p_0 must be zero");
    if (k >= 1 && p > 0.0) support.emplace_back(k, p);
    total += p;
  }
  if (support.empty()) fail(Errc::BadParameter, "offspring: empty probability map");
  if (std::fabs(total - 1.0) > 1e-9)
    fail(Errc::NotNormalized,
         "offspring: probabilities sum to " + std::to_string(total) + ", expected 1");
  if (std::fabs(total - 1.0) > 1e-12) {
    for (auto& [k, p] : support) p /= total;
  }

  OffspringLaw law;
  law.support_ = std::move(support);  // map iteration is already k-sorted
  law.cdf_.reserve(law.support_.size());
  double acc = 0.0, mean = 0.0;
  for (const auto& [k, p] : law.support_) {
    acc += p;
    mean += static_cast<double>(k) * p;
    law.cdf_.push_back(acc);
  }
  law.cdf_.back() = 1.0;
  law.mean_ = mean;
  if (!(mean > 1.0))
    fail(Errc::NotSupercritical,
         "offspring: mean " + std::to_string(mean) + " must exceed 1");
  return law;
}

OffspringLaw OffspringLaw::poisson(double lambda, std::uint32_t max_k) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    fail(Errc::BadParameter, "poisson: lambda must be positive");
  if (max_k < 2) fail(Errc::BadParameter, "poisson: max_k must be at least 2");
  std::map<std::uint32_t, double> m;
  double logp = -lambda;  // log P[K=0]
  for (std::uint32_t k = 1; k <= max_k; ++k) {
    logp += std::log(lambda) - std::log(static_cast<double>(k));
    double p = std::exp(logp);
    if (p > 0.0) m[k] = p;
  }
  return from_map(renormalized(std::move(m)));
}

OffspringLaw OffspringLaw::geometric(double success, std::uint32_t max_k) {
  if (!(success > 0.0 && success < 1.0))
    fail(Errc::BadParameter, "geometric: success probability must lie in (0,1)");
  if (max_k < 2) fail(Errc::BadParameter, "geometric: max_k must be at least 2");
  std::map<std::uint32_t, double> m;
  double p = success;  // P[K=1]
  for (std::uint32_t k = 1; k <= max_k; ++k) {
    m[k] = p;
    p *= (1.0 - success);
  }
  return from_map(renormalized(std::move(m)));
}

std::uint32_t OffspringLaw::sample(RandomStream& rng) const {
  double u = rng.next_unit();
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return support_[static_cast<std::size_t>(it - cdf_.begin())].first;
}

double OffspringLaw::prob(std::uint32_t k) const {
  for (const auto& [kk, p] : support_)
    if (kk == k) return p;
  return 0.0;
}

OffspringLaw validate_offspring(const OffspringLaw& law) {
  std::map<std::uint32_t, double> m;
  for (const auto& [k, p] : law.support()) m[k] = p;
  return OffspringLaw::from_map(m);
}

const char* family_name(CondFamily f) noexcept {
  switch (f) {
    case CondFamily::Constant: return "constant";
    case CondFamily::TwoPoint: return "two_point";
    case CondFamily::Exponential: return "exponential";
    case CondFamily::LogNormal: return "lognormal";
    case CondFamily::Pareto: return "pareto";
  }
  return "unknown";
}

ConductanceLaw ConductanceLaw::constant(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) fail(Errc::BadParameter, "constant: c must be positive");
  return {CondFamily::Constant, c, 0.0, 0.0};
}

ConductanceLaw ConductanceLaw::two_point(double v1, double v2, double prob_of_v2) {
  if (!(v1 > 0.0) || !(v2 > 0.0) || !std::isfinite(v1) || !std::isfinite(v2))
    fail(Errc::BadParameter, "two_point: support values must be positive");
  if (!(prob_of_v2 >= 0.0 && prob_of_v2 <= 1.0))
    fail(Errc::BadParameter, "two_point: p2 must lie in [0,1]");
  return {CondFamily::TwoPoint, v1, v2, prob_of_v2};
}

ConductanceLaw ConductanceLaw::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate))
    fail(Errc::BadParameter, "exponential: rate must be positive");
  return {CondFamily::Exponential, rate, 0.0, 0.0};
}

ConductanceLaw ConductanceLaw::lognormal(double mu_log, double sigma_log) {
  if (!std::isfinite(mu_log) || !(sigma_log >= 0.0) || !std::isfinite(sigma_log))
    fail(Errc::BadParameter, "lognormal: bad parameters");
  return {CondFamily::LogNormal, mu_log, sigma_log, 0.0};
}

ConductanceLaw ConductanceLaw::pareto(double alpha, double x_min) {
  if (!(alpha > 0.0) || !std::isfinite(alpha) || !(x_min > 0.0) || !std::isfinite(x_min))
    fail(Errc::BadParameter, "pareto: alpha and x_min must be positive");
  return {CondFamily::Pareto, alpha, x_min, 0.0};
}

double ConductanceLaw::quantile(double u) const {
  switch (family_) {
    case CondFamily::Constant:
      return p0_;
    case CondFamily::TwoPoint:
      // lower slice of the uniform goes to v2 so prob_of_v2 is exact
      return u < p2_ ? p1_ : p0_;
    case CondFamily::Exponential:
      return -std::log1p(-u) / p0_;
    case CondFamily::LogNormal:
      return std::exp(p0_ + p1_ * probit(u));
    case CondFamily::Pareto:
      return p1_ * std::pow(1.0 - u, -1.0 / p0_);
  }
  return 0.0;
}

double ConductanceLaw::cdf(double x) const {
  switch (family_) {
    case CondFamily::Constant:
      return x >= p0_ ? 1.0 : 0.0;
    case CondFamily::TwoPoint: {
      double lo = std::min(p0_, p1_), hi = std::max(p0_, p1_);
      double p_lo = (p0_ <= p1_) ? 1.0 - p2_ : p2_;
      if (x < lo) return 0.0;
      if (x < hi) return p_lo;
      return 1.0;
    }
    case CondFamily::Exponential:
      return x <= 0.0 ? 0.0 : -std::expm1(-p0_ * x);
    case CondFamily::LogNormal: {
      if (x <= 0.0) return 0.0;
      double z = (std::log(x) - p0_) / (p1_ > 0.0 ? p1_ : 1e-300);
      return 0.5 * std::erfc(-z / std::sqrt(2.0));
    }
    case CondFamily::Pareto:
      return x <= p1_ ? 0.0 : 1.0 - std::pow(p1_ / x, p0_);
  }
  return 0.0;
}

double ConductanceLaw::mean() const {
  switch (family_) {
    case CondFamily::Constant:
      return p0_;
    case CondFamily::TwoPoint:
      return (1.0 - p2_) * p0_ + p2_ * p1_;
    case CondFamily::Exponential:
      return 1.0 / p0_;
    case CondFamily::LogNormal:
      return std::exp(p0_ + 0.5 * p1_ * p1_);
    case CondFamily::Pareto:
      if (p0_ <= 1.0) return kInfinite;
      return p0_ * p1_ / (p0_ - 1.0);
  }
  return 0.0;
}

double ConductanceLaw::min_support() const {
  switch (family_) {
    case CondFamily::Constant:
      return p0_;
    case CondFamily::TwoPoint:
      if (p2_ == 0.0) return p0_;
      if (p2_ == 1.0) return p1_;
      return std::min(p0_, p1_);
    case CondFamily::Exponential:
      return 0.0;
    case CondFamily::LogNormal:
      return p1_ == 0.0 ? std::exp(p0_) : 0.0;
    case CondFamily::Pareto:
      return p1_;
  }
  return 0.0;
}

bool ConductanceLaw::degenerate() const {
  switch (family_) {
    case CondFamily::Constant:
      return true;
    case CondFamily::TwoPoint:
      return p0_ == p1_ || p2_ == 0.0 || p2_ == 1.0;
    case CondFamily::LogNormal:
      return p1_ == 0.0;
    default:
      return false;
  }
}

bool ConductanceLaw::continuous() const {
  return family_ == CondFamily::Exponential || family_ == CondFamily::Pareto ||
         (family_ == CondFamily::LogNormal && p1_ > 0.0);
}

void ConductanceLawTable::set_override(std::uint32_t k, std::uint32_t m, ConductanceLaw law) {
  overrides_.insert_or_assign({std::min(k, m), std::max(k, m)}, law);
}

const ConductanceLaw& ConductanceLawTable::operator()(std::uint32_t k, std::uint32_t m) const {
  if (overrides_.empty()) return default_;
  auto it = overrides_.find({std::min(k, m), std::max(k, m)});
  return it == overrides_.end() ? default_ : it->second;
}

double mean_gamma(const ConductanceLawTable& table, const OffspringLaw& offspring) {
  double gamma = 0.0;
  for (const auto& [k, pk] : offspring.support()) {
    for (const auto& [m, pm] : offspring.support()) {
      double g = table(k, m).mean();
      if (is_infinite(g)) return kInfinite;
      gamma += pk * pm * g;
    }
  }
  return gamma;
}

bool equal_means(const ConductanceLawTable& table, const OffspringLaw& offspring) {
  double ref = table(offspring.min_k(), offspring.min_k()).mean();
  if (is_infinite(ref)) return false;
  for (const auto& [k, pk] : offspring.support()) {
    for (const auto& [m, pm] : offspring.support()) {
      double g = table(k, m).mean();
      if (is_infinite(g) || std::fabs(g - ref) > 1e-12 * std::max(1.0, std::fabs(ref)))
        return false;
    }
  }
  return true;
}

bool all_degenerate(const ConductanceLawTable& table, const OffspringLaw& offspring) {
  for (const auto& [k, pk] : offspring.support())
    for (const auto& [m, pm] : offspring.support())
      if (!table(k, m).degenerate()) return false;
  return true;
}

}  // namespace gwrc
