#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mrnaopt/error.hpp"

namespace mrnaopt {

// ---------------------------------------------------------------------------
// k-mer composition features

inline constexpr int kDefaultKmer = 5;

constexpr Eigen::Index kmer_dimension(int k) { return Eigen::Index{1} << (2 * k); }

/// Sliding-window k-mer counts over ACGU divided by (|seq| - k + 1). Columns are ordered
/// lexicographically over A < C < G < U. Throws SeqTooShort, BadAlphabet.
Eigen::VectorXd featurize(std::string_view seq, int k = kDefaultKmer);

/// Row-stacked featurize() of each sequence.
Eigen::MatrixXd featurize_all(const std::vector<std::string>& seqs, int k = kDefaultKmer);

// ---------------------------------------------------------------------------
// Rank and error statistics

namespace detail {

template <typename Derived>
Eigen::VectorXd average_ranks(const Eigen::MatrixBase<Derived>& v) {
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  Eigen::VectorXd ranks(n);
  for (Eigen::Index lo = 0; lo < n;) {
    Eigen::Index hi = lo;
    while (hi + 1 < n && v(order[static_cast<std::size_t>(hi + 1)]) == v(order[static_cast<std::size_t>(lo)])) ++hi;
    const double r = 0.5 * static_cast<double>(lo + hi) + 1.0;
    for (Eigen::Index t = lo; t <= hi; ++t) ranks(order[static_cast<std::size_t>(t)]) = r;
    lo = hi + 1;
  }
  return ranks;
}

}  // namespace detail

template <typename DerivedA, typename DerivedB>
double pearson(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "pearson: length mismatch");
  Eigen::VectorXd x = a.derived().template cast<double>();
  Eigen::VectorXd y = b.derived().template cast<double>();
  x.array() -= x.mean();
  y.array() -= y.mean();
  const double sxx = x.squaredNorm();
  const double syy = y.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ZeroVariance, "correlation undefined for constant input");
  return x.dot(y) / std::sqrt(sxx * syy);
}

/// Spearman rank correlation: Pearson correlation of average ranks.
template <typename DerivedA, typename DerivedB>
double spearman(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "spearman: length mismatch");
  if (a.size() < 2) throw Error(ErrorCode::BadInput, "spearman needs at least two points");
  return pearson(detail::average_ranks(a), detail::average_ranks(b));
}

template <typename DerivedA, typename DerivedB>
double mae(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "mae: length mismatch");
  if (a.size() == 0) return 0.0;
  return (a.template cast<double>() - b.template cast<double>()).cwiseAbs().mean();
}

// ---------------------------------------------------------------------------
// Ridge regression

struct RidgeModel {
  Eigen::VectorXd coef;
  double intercept = 0.0;
  double alpha = 0.0;
  int kmer = kDefaultKmer;  // feature map the model was trained on

  Eigen::Index dimension() const { return coef.size(); }
};

struct RidgeOptions {
  // alpha = 0 falls back to the minimum-norm least-squares solution; when false a rank-deficient
  // design raises Singular instead.
  bool min_norm_at_zero = true;
};

/// Solves (Xc'Xc + alpha I) beta = Xc'yc on column-centred data;
/// intercept = mean(y) - mean(X) . beta.
RidgeModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                     const RidgeOptions& opts = {});

double predict(const RidgeModel& m, const Eigen::VectorXd& features);
/// featurize() with the model's k, then predict().
double predict_sequence(const RidgeModel& m, std::string_view seq);

void save_ridge_model(const RidgeModel& m, const std::string& path);
RidgeModel load_ridge_model(const std::string& path);

// ---------------------------------------------------------------------------
// Cross-validated regularisation search

struct CvCandidate {
  double alpha = 0.0;
  double mean_srcc = 0.0;
  double mean_mae = 0.0;
};

struct CvReport {
  int folds = 5;
  int repeats = 3;
  std::uint64_t seed = 0;
  std::vector<CvCandidate> candidates;  // grid order
  double chosen_alpha = 0.0;
  double srcc = 0.0;  // mean validation SRCC at chosen_alpha
  double mae = 0.0;
  std::vector<double> fold_srcc;  // repeats * folds entries at chosen_alpha
  std::vector<double> fold_mae;

  std::string to_json() const;
};

struct CvResult {
  CvReport report;
  RidgeModel model;  // refit on all data at the chosen alpha
};

inline constexpr double kSrccTieTolerance = 1e-4;

/// 13 log-spaced values spanning [1e-2, 1e5].
std::vector<double> default_alpha_grid();

/// Highest mean SRCC wins; any candidate within `tie` of the best SRCC competes on lower MAE.
/// Remaining ties go to the earlier grid entry.
std::size_t select_alpha(const std::vector<CvCandidate>& candidates, double tie = kSrccTieTolerance);

/// Repeated k-fold CV over `grid`. Deterministic for a given seed. A fold whose predictions or
/// targets are constant contributes SRCC 0.
CvResult grid_search_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<double>& grid,
                        int folds = 5, int repeats = 3, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Training data

struct LabeledSequence {
  std::string sequence;
  double label = 0.0;
};

/// CSV with header `sequence,label`.
std::vector<LabeledSequence> read_training_csv(const std::string& path);
void write_training_csv(const std::string& path, const std::vector<LabeledSequence>& rows);

struct SyntheticDataset {
  std::vector<LabeledSequence> rows;
  Eigen::VectorXd true_coef;
  double true_intercept = 0.0;
};

/// Random ACGU sequences with labels linear in their k-mer features plus Gaussian noise.
SyntheticDataset synthetic_dataset(std::size_t n, std::size_t min_len, std::size_t max_len, double noise,
                                   std::uint64_t seed, int k = kDefaultKmer);

/// Frozen half-life and translation-efficiency predictors.
struct Predictors {
  RidgeModel half_life;
  RidgeModel te;
};

/// Reads DIR/half_life.model and DIR/te.model.
Predictors load_predictors(const std::string& dir);
void save_predictors(const Predictors& p, const std::string& dir);

}  // namespace mrnaopt
