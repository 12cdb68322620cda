// Independent reference implementations used by the unit and acceptance tests. Nothing here
// calls into the library's algorithms; only plain data types are shared.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Pairs = std::vector<std::pair<int, int>>;

inline int base(char c) {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'U': return 3;
  }
  return -1;
}

/// Energy parameters mirrored from the model definition, written out by hand.
struct Energy {
  std::map<std::string, double> pair;  // "GC" -> -3 etc; absent means no pair
  double stack = 0.0;
  double hairpin = 0.0;
  int min_hairpin = 3;

  static Energy standard() {
    return {{{"GC", -3}, {"CG", -3}, {"AU", -2}, {"UA", -2}, {"GU", -1}, {"UG", -1}}, -1.0, 0.0, 3};
  }
  static Energy unit() {
    return {{{"GC", -1}, {"CG", -1}, {"AU", -1}, {"UA", -1}, {"GU", -1}, {"UG", -1}}, 0.0, 0.0, 3};
  }
  bool can_pair(const std::string& s, int i, int j) const {
    return j - i > min_hairpin && pair.count(std::string{s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(j)]});
  }
};

inline double energy_of(const std::string& s, const Pairs& pairs, const Energy& e) {
  double total = 0.0;
  for (auto [i, j] : pairs) {
    total += e.pair.at(std::string{s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(j)]});
    bool stacked = false, inner = false;
    for (auto [k, l] : pairs) {
      if (k == i + 1 && l == j - 1) stacked = true;
      if (k > i && l < j) inner = true;
    }
    if (stacked) total += e.stack;
    if (!inner) total += e.hairpin;
  }
  return total;
}

/// Every nested structure on s[i..j].
inline void enumerate(const std::string& s, int i, int j, const Energy& e, Pairs& current, std::vector<Pairs>& out) {
  if (i > j) {
    out.push_back(current);
    return;
  }
  // i unpaired
  {
    std::vector<Pairs> rest;
    Pairs empty;
    enumerate(s, i + 1, j, e, empty, rest);
    for (auto& r : rest) {
      Pairs p = current;
      p.insert(p.end(), r.begin(), r.end());
      out.push_back(std::move(p));
    }
  }
  for (int k = i + 1; k <= j; ++k) {
    if (!e.can_pair(s, i, k)) continue;
    std::vector<Pairs> inside, outside;
    Pairs empty;
    enumerate(s, i + 1, k - 1, e, empty, inside);
    enumerate(s, k + 1, j, e, empty, outside);
    for (const auto& a : inside) {
      for (const auto& b : outside) {
        Pairs p = current;
        p.emplace_back(i, k);
        p.insert(p.end(), a.begin(), a.end());
        p.insert(p.end(), b.begin(), b.end());
        out.push_back(std::move(p));
      }
    }
  }
}

inline double brute_force_mfe(const std::string& s, const Energy& e) {
  std::vector<Pairs> all;
  Pairs empty;
  enumerate(s, 0, static_cast<int>(s.size()) - 1, e, empty, all);
  double best = 0.0;  // the open chain is always a candidate
  for (const auto& p : all) best = std::min(best, energy_of(s, p, e));
  return best;
}

/// Empty string when valid.
inline std::string structure_violation(const std::string& s, const Pairs& pairs, const Energy& e) {
  std::vector<int> partner(s.size(), -1);
  for (auto [i, j] : pairs) {
    if (i < 0 || j >= static_cast<int>(s.size()) || i >= j) return "index order";
    if (partner[static_cast<std::size_t>(i)] >= 0 || partner[static_cast<std::size_t>(j)] >= 0) return "base reused";
    partner[static_cast<std::size_t>(i)] = j;
    partner[static_cast<std::size_t>(j)] = i;
    if (!e.can_pair(s, i, j)) return "non-canonical or hairpin too short";
  }
  for (auto [i, j] : pairs) {
    for (auto [k, l] : pairs) {
      if (i < k && k < j && j < l) return "crossing";
    }
  }
  return {};
}

inline std::string random_rna(std::mt19937_64& rng, std::size_t n) {
  static const char* kAcgu = "ACGU";
  std::string s(n, 'A');
  for (auto& c : s) c = kAcgu[rng() % 4];
  return s;
}

// ---------------------------------------------------------------------------
// Linear algebra

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    }
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t c = n; c-- > 0;) {
    double acc = b[c];
    for (std::size_t k = c + 1; k < n; ++k) acc -= A[c][k] * x[k];
    x[c] = acc / A[c][c];
  }
  return x;
}

/// Ridge on centred data via the normal equations: returns (coef, intercept).
inline std::pair<std::vector<double>, double> ridge_normal_equations(const std::vector<std::vector<double>>& X,
                                                                     const std::vector<double>& y, double alpha) {
  const std::size_t n = X.size(), d = X[0].size();
  std::vector<double> xm(d, 0.0);
  double ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ym += y[i] / static_cast<double>(n);
    for (std::size_t k = 0; k < d; ++k) xm[k] += X[i][k] / static_cast<double>(n);
  }
  std::vector<std::vector<double>> A(d, std::vector<double>(d, 0.0));
  std::vector<double> b(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < d; ++r) {
      const double xr = X[i][r] - xm[r];
      b[r] += xr * (y[i] - ym);
      for (std::size_t c = 0; c < d; ++c) A[r][c] += xr * (X[i][c] - xm[c]);
    }
  }
  for (std::size_t r = 0; r < d; ++r) A[r][r] += alpha;
  auto coef = gauss_solve(A, b);
  double intercept = ym;
  for (std::size_t k = 0; k < d; ++k) intercept -= xm[k] * coef[k];
  return {coef, intercept};
}

// ---------------------------------------------------------------------------
// Statistics

inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double x : v) {
      if (x < v[i]) ++less;
      if (x == v[i]) ++equal;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(average_ranks(a), average_ranks(b));
}

// ---------------------------------------------------------------------------
// Pareto dominance

/// Indices of rows not strictly dominated by any other row; larger is better when max[d].
inline std::vector<long> pareto_brute_force(const std::vector<std::vector<double>>& pts, const std::vector<bool>& max) {
  std::vector<long> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      if (i == j) continue;
      bool all_ge = true, some_gt = false;
      for (std::size_t d = 0; d < max.size(); ++d) {
        const double a = max[d] ? pts[j][d] : -pts[j][d];
        const double b = max[d] ? pts[i][d] : -pts[i][d];
        all_ge = all_ge && a >= b;
        some_gt = some_gt || a > b;
      }
      dominated = all_ge && some_gt;
    }
    if (!dominated) out.push_back(static_cast<long>(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite differences

/// Relative error ||a - b|| / max(||a||, ||b||, floor).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-12) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

/// 3-sigma binomial bounds on the count of a p-probability event in n draws.
inline std::pair<double, double> binomial_3sigma(double n, double p) {
  const double sd = std::sqrt(n * p * (1.0 - p));
  return {n * p - 3.0 * sd, n * p + 3.0 * sd};
}

}  // namespace oracle
