#pragma once

// Brute-force reference implementations used only by tests. They share no
// code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

// Counts adjacent strict drops by checking every ordered pair for adjacency.
inline std::size_t hopping(const std::vector<double>& s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (j == i + 1 && s[i] > s[j]) ++n;
  return n;
}

// Longest contiguous slice that is non-strictly monotone, by enumerating all slices.
inline std::pair<std::size_t, std::size_t> contiguous_runs(const std::vector<double>& s) {
  std::size_t inc = 0, dec = 0;
  for (std::size_t a = 0; a < s.size(); ++a) {
    for (std::size_t b = a; b < s.size(); ++b) {
      bool up = true, down = true;
      for (std::size_t k = a; k < b; ++k) {
        up = up && s[k] <= s[k + 1];
        down = down && s[k] >= s[k + 1];
      }
      if (up) inc = std::max(inc, b - a + 1);
      if (down) dec = std::max(dec, b - a + 1);
    }
  }
  return {inc, dec};
}

// Longest non-strict monotone subsequence, by enumerating every subset (n <= ~16).
inline std::pair<std::size_t, std::size_t> subsequence_runs(const std::vector<double>& s) {
  std::size_t inc = 0, dec = 0;
  const std::uint32_t n = static_cast<std::uint32_t>(s.size());
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<double> pick;
    for (std::uint32_t i = 0; i < n; ++i)
      if (mask & (1u << i)) pick.push_back(s[i]);
    const bool up = std::is_sorted(pick.begin(), pick.end());
    const bool down = std::is_sorted(pick.begin(), pick.end(), std::greater<>());
    const auto len = static_cast<std::size_t>(pick.size());
    if (up) inc = std::max(inc, len);
    if (down) dec = std::max(dec, len);
  }
  return {inc, dec};
}

// Popularity contest in extended precision.
inline long double pc(std::uint64_t a, std::uint64_t b) {
  if (a + b == 0) return 0.0L;
  return (static_cast<long double>(a) - static_cast<long double>(b)) /
         (static_cast<long double>(a) + static_cast<long double>(b));
}

// Cosine via normalised vectors in extended precision.
inline long double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  long double nu = 0, nv = 0;
  for (double x : u) nu += static_cast<long double>(x) * x;
  for (double x : v) nv += static_cast<long double>(x) * x;
  if (nu == 0 || nv == 0) return 0;
  nu = std::sqrt(nu);
  nv = std::sqrt(nv);
  long double dot = 0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += (u[i] / nu) * (v[i] / nv);
  return dot;
}

// Bucket proportions by sorting and locating the cut points.
inline std::vector<double> distribution(std::vector<double> scores, double lo, double hi) {
  if (scores.empty()) return {1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::sort(scores.begin(), scores.end());
  const auto below = static_cast<double>(std::lower_bound(scores.begin(), scores.end(), lo) - scores.begin());
  const auto above = static_cast<double>(scores.end() - std::upper_bound(scores.begin(), scores.end(), hi));
  const auto n = static_cast<double>(scores.size());
  return {below / n, (n - below - above) / n, above / n};
}

inline long double rmse(const std::vector<double>& p, const std::vector<double>& t) {
  long double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double d = static_cast<long double>(p[i]) - t[i];
    s += d * d;
  }
  return p.empty() ? 0 : std::sqrt(s / p.size());
}

struct Rates {
  double accuracy, precision, recall, f;
};

// Confusion matrix keyed by (truth, prediction); positive class is `true`.
inline Rates classification(const std::vector<bool>& pred, const std::vector<bool>& truth) {
  std::map<std::pair<bool, bool>, double> cm;
  for (std::size_t i = 0; i < pred.size(); ++i) cm[{truth[i], pred[i]}] += 1;
  const double tp = cm[{true, true}], tn = cm[{false, false}], fp = cm[{false, true}], fn = cm[{true, false}];
  Rates r{};
  r.accuracy = pred.empty() ? 0 : (tp + tn) / static_cast<double>(pred.size());
  r.precision = tp + fp > 0 ? tp / (tp + fp) : 0;
  r.recall = tp + fn > 0 ? tp / (tp + fn) : 0;
  r.f = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0;
  return r;
}

}  // namespace oracle
