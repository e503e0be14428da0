#pragma once

#include <cmath>
#include <vector>

#include "gwrc/errors.hpp"

namespace gwrc_test {

// Runs fn and reports the Errc it threw; IoError doubles as "did not throw".
template <typename Fn>
gwrc::Errc code_of(Fn&& fn) {
  try {
    fn();
  } catch (const gwrc::Error& e) {
    return e.code();
  }
  return gwrc::Errc::IoError;
}

struct Stats {
  double mean = 0.0;
  double se = 0.0;
};

inline Stats mean_se(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= double(xs.size());
  if (xs.size() < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.se = std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
  return s;
}

}  // namespace gwrc_test
