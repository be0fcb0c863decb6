#pragma once

// Direct-formula predictors written independently of the library, in long
// double, for cross-checking.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using Real = long double;

inline Real pop_sd(const std::vector<Real>& v) {
  Real sum = 0, sq = 0;
  for (Real x : v) sum += x;
  const Real mu = sum / v.size();
  for (Real x : v) sq += (x - mu) * (x - mu);
  return std::sqrt(sq / v.size());
}

inline std::vector<Real> top(const std::vector<double>& s, std::size_t k) {
  return std::vector<Real>(s.begin(), s.begin() + static_cast<long>(k));
}

inline double sigma(const std::vector<double>& s, std::size_t k) { return static_cast<double>(pop_sd(top(s, k))); }

inline double nqc(const std::vector<double>& s, std::size_t k, double sc) {
  return static_cast<double>(pop_sd(top(s, k)) / std::fabs(static_cast<Real>(sc)));
}

inline double wig(const std::vector<double>& s, std::size_t k, double sc, int qlen) {
  Real total = 0;
  for (std::size_t i = 0; i < k; ++i) total += static_cast<Real>(s[i]) - sc;
  return static_cast<double>(total / (static_cast<Real>(k) * std::sqrt(static_cast<Real>(qlen))));
}

inline double smv(const std::vector<double>& s, std::size_t k, double sc) {
  const Real lowest = *std::min_element(s.begin(), s.end());
  const Real shift = lowest <= 0 ? -lowest + 1e-6L : 0;
  std::vector<Real> v;
  for (std::size_t i = 0; i < k; ++i) v.push_back(s[i] + shift);
  Real mu = 0;
  for (Real x : v) mu += x;
  mu /= v.size();
  Real acc = 0;
  for (Real x : v) acc += x * std::fabs(std::log(x / mu));
  return static_cast<double>(acc / v.size() / std::fabs(static_cast<Real>(sc)));
}

inline double nsigma(const std::vector<double>& s, double x, double sc) {
  const Real highest = *std::max_element(s.begin(), s.end());
  const Real lowest = *std::min_element(s.begin(), s.end());
  const Real shift = highest <= 0 ? -lowest + 1e-6L : 0;
  const Real cut = static_cast<Real>(x) / 100 * (highest + shift);
  std::vector<Real> kept;
  for (double v : s)
    if (v + shift >= cut) kept.push_back(v);
  if (kept.size() < 2) return 0.0;
  return static_cast<double>(pop_sd(kept) / std::fabs(static_cast<Real>(sc)));
}

}  // namespace oracle
