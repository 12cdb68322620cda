#include "mrnaopt/proxy.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mrnaopt/io.hpp"
#include "mrnaopt/parallel.hpp"
#include "mrnaopt/seqcore.hpp"

namespace mrnaopt {

Eigen::VectorXd featurize(std::string_view seq, int k) {
  if (k < 1 || k > 10) throw Error(ErrorCode::BadInput, "k-mer size must be in [1, 10]");
  if (seq.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::SeqTooShort, "sequence of length " + std::to_string(seq.size()) + " is shorter than k=" +
                                            std::to_string(k));
  }
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kmer_dimension(k));
  const std::uint32_t mask = static_cast<std::uint32_t>(kmer_dimension(k) - 1);
  std::uint32_t code = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const int n = nucleotide_index(seq[i]);
    if (n < 0) throw Error(ErrorCode::BadAlphabet, "character '" + std::string(1, seq[i]) + "'");
    code = ((code << 2) | static_cast<std::uint32_t>(n)) & mask;
    if (i + 1 >= static_cast<std::size_t>(k)) f(code) += 1.0;
  }
  f /= static_cast<double>(seq.size() - static_cast<std::size_t>(k) + 1);
  return f;
}

Eigen::MatrixXd featurize_all(const std::vector<std::string>& seqs, int k) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(seqs.size()), kmer_dimension(k));
  for (std::size_t r = 0; r < seqs.size(); ++r) X.row(static_cast<Eigen::Index>(r)) = featurize(seqs[r], k).transpose();
  return X;
}

// ---------------------------------------------------------------------------

RidgeModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha, const RidgeOptions& opts) {
  if (X.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "ridge_fit: rows(X) != len(y)");
  if (X.rows() < 2) throw Error(ErrorCode::BadInput, "ridge_fit needs at least two samples");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::BadInput, "alpha must be finite and >= 0");

  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  RidgeModel m;
  m.alpha = alpha;
  if (alpha == 0.0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Xc);
    if (!opts.min_norm_at_zero && cod.rank() < Xc.cols()) {
      throw Error(ErrorCode::Singular, "X'X is singular and alpha = 0");
    }
    m.coef = cod.solve(yc);
  } else if (Xc.rows() < Xc.cols()) {
    // Dual form: beta = Xc' (Xc Xc' + alpha I)^-1 yc, an n x n system.
    Eigen::MatrixXd K = Xc * Xc.transpose();
    K.diagonal().array() += alpha;
    m.coef = Xc.transpose() * K.ldlt().solve(yc);
  } else {
    Eigen::MatrixXd A = Xc.transpose() * Xc;
    A.diagonal().array() += alpha;
    m.coef = A.ldlt().solve(Xc.transpose() * yc);
  }
  m.intercept = y_mean - x_mean.dot(m.coef);
  if (!m.coef.allFinite() || !std::isfinite(m.intercept)) {
    throw Error(ErrorCode::Singular, "ridge solution is not finite");
  }
  return m;
}

double predict(const RidgeModel& m, const Eigen::VectorXd& features) {
  if (features.size() != m.coef.size()) {
    throw Error(ErrorCode::DimMismatch, "feature dimension " + std::to_string(features.size()) + " vs model " +
                                            std::to_string(m.coef.size()));
  }
  return m.coef.dot(features) + m.intercept;
}

double predict_sequence(const RidgeModel& m, std::string_view seq) { return predict(m, featurize(seq, m.kmer)); }

void save_ridge_model(const RidgeModel& m, const std::string& path) {
  RecordFile f("ridge-model");
  f.set_reals("coef", std::span<const double>(m.coef.data(), static_cast<std::size_t>(m.coef.size())));
  const double scalars[] = {m.intercept};
  f.set_reals("intercept", scalars);
  const double a[] = {m.alpha};
  f.set_reals("alpha", a);
  const std::int64_t meta[] = {m.kmer};
  f.set_ints("kmer", meta);
  f.set_string("features", "kmer-frequency");
  f.save(path);
}

RidgeModel load_ridge_model(const std::string& path) {
  const RecordFile f = RecordFile::load(path, "ridge-model");
  RidgeModel m;
  const auto& c = f.reals("coef");
  m.coef = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
  m.intercept = f.real("intercept");
  m.alpha = f.real("alpha");
  m.kmer = static_cast<int>(f.integer("kmer"));
  if (m.kmer < 1 || m.kmer > 10 || m.coef.size() != kmer_dimension(m.kmer)) {
    throw Error(ErrorCode::DimMismatch, path + ": coefficient count does not match k=" + std::to_string(m.kmer));
  }
  return m;
}

// ---------------------------------------------------------------------------

std::vector<double> default_alpha_grid() {
  constexpr int kPoints = 13;
  std::vector<double> grid(kPoints);
  for (int i = 0; i < kPoints; ++i) grid[static_cast<std::size_t>(i)] = std::pow(10.0, -2.0 + 7.0 * i / (kPoints - 1));
  return grid;
}

std::size_t select_alpha(const std::vector<CvCandidate>& candidates, double tie) {
  if (candidates.empty()) throw Error(ErrorCode::BadInput, "empty alpha grid");
  double best_srcc = candidates.front().mean_srcc;
  for (const auto& c : candidates) best_srcc = std::max(best_srcc, c.mean_srcc);
  std::size_t chosen = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (best_srcc - candidates[i].mean_srcc > tie) continue;
    if (chosen == candidates.size() || candidates[i].mean_mae < candidates[chosen].mean_mae) chosen = i;
  }
  return chosen;
}

namespace {

double fold_srcc(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  try {
    return spearman(pred, truth);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ZeroVariance) return 0.0;
    throw;
  }
}

}  // namespace

CvResult grid_search_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<double>& grid,
                        int folds, int repeats, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(y.size());
  if (static_cast<std::size_t>(X.rows()) != n) throw Error(ErrorCode::LengthMismatch, "rows(X) != len(y)");
  if (folds < 2 || repeats < 1) throw Error(ErrorCode::BadInput, "need folds >= 2 and repeats >= 1");
  if (n < static_cast<std::size_t>(folds)) throw Error(ErrorCode::BadInput, "fewer samples than folds");
  if (grid.empty()) throw Error(ErrorCode::BadInput, "empty alpha grid");

  // assignment[r][i] = fold of sample i in repeat r
  std::vector<std::vector<int>> assignment(static_cast<std::size_t>(repeats), std::vector<int>(n));
  for (int r = 0; r < repeats; ++r) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t p = 0; p < n; ++p) {
      assignment[static_cast<std::size_t>(r)][perm[p]] = static_cast<int>(p % static_cast<std::size_t>(folds));
    }
  }

  const std::size_t n_splits = static_cast<std::size_t>(repeats * folds);
  // scores[a][s] = (srcc, mae) for grid entry a on split s
  std::vector<std::vector<std::pair<double, double>>> scores(grid.size(),
                                                             std::vector<std::pair<double, double>>(n_splits));
  for (std::size_t s = 0; s < n_splits; ++s) {
    const auto& fold_of = assignment[s / static_cast<std::size_t>(folds)];
    const int held = static_cast<int>(s % static_cast<std::size_t>(folds));
    std::vector<Eigen::Index> train, valid;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == held ? valid : train).push_back(static_cast<Eigen::Index>(i));
    const Eigen::MatrixXd Xt = X(train, Eigen::all);
    const Eigen::VectorXd yt = y(train);
    const Eigen::MatrixXd Xv = X(valid, Eigen::all);
    const Eigen::VectorXd yv = y(valid);
    for (std::size_t a = 0; a < grid.size(); ++a) {
      const RidgeModel m = ridge_fit(Xt, yt, grid[a]);
      const Eigen::VectorXd pred = (Xv * m.coef).array() + m.intercept;
      scores[a][s] = {fold_srcc(pred, yv), mae(pred, yv)};
    }
  }

  CvResult out;
  CvReport& rep = out.report;
  rep.folds = folds;
  rep.repeats = repeats;
  rep.seed = seed;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    CvCandidate c;
    c.alpha = grid[a];
    for (const auto& [srcc, err] : scores[a]) {
      c.mean_srcc += srcc;
      c.mean_mae += err;
    }
    c.mean_srcc /= static_cast<double>(n_splits);
    c.mean_mae /= static_cast<double>(n_splits);
    rep.candidates.push_back(c);
  }
  const std::size_t best = select_alpha(rep.candidates);
  rep.chosen_alpha = rep.candidates[best].alpha;
  rep.srcc = rep.candidates[best].mean_srcc;
  rep.mae = rep.candidates[best].mean_mae;
  for (const auto& [srcc, err] : scores[best]) {
    rep.fold_srcc.push_back(srcc);
    rep.fold_mae.push_back(err);
  }
  out.model = ridge_fit(X, y, rep.chosen_alpha);
  return out;
}

std::string CvReport::to_json() const {
  nlohmann::ordered_json j;
  j["folds"] = folds;
  j["repeats"] = repeats;
  j["seed"] = seed;
  j["chosen_alpha"] = chosen_alpha;
  j["srcc"] = srcc;
  j["mae"] = mae;
  j["fold_srcc"] = fold_srcc;
  j["fold_mae"] = fold_mae;
  auto& grid = j["grid"] = nlohmann::ordered_json::array();
  for (const auto& c : candidates) grid.push_back({{"alpha", c.alpha}, {"srcc", c.mean_srcc}, {"mae", c.mean_mae}});
  return j.dump(2);
}

// ---------------------------------------------------------------------------

std::vector<LabeledSequence> read_training_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::BadFormat, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "sequence,label") throw Error(ErrorCode::BadFormat, path + ": expected header 'sequence,label'");
  std::vector<LabeledSequence> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::BadFormat, path + ":" + std::to_string(lineno) + ": no comma");
    LabeledSequence row;
    row.sequence = line.substr(0, comma);
    try {
      std::size_t used = 0;
      const std::string num = line.substr(comma + 1);
      row.label = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadFormat, path + ":" + std::to_string(lineno) + ": bad label");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_training_csv(const std::string& path, const std::vector<LabeledSequence>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "sequence,label\n";
  for (const auto& r : rows) out << r.sequence << ',' << r.label << '\n';
  write_text_file(path, out.str());
}

SyntheticDataset synthetic_dataset(std::size_t n, std::size_t min_len, std::size_t max_len, double noise,
                                   std::uint64_t seed, int k) {
  if (min_len < static_cast<std::size_t>(k) || max_len < min_len) {
    throw Error(ErrorCode::BadInput, "synthetic lengths must satisfy k <= min_len <= max_len");
  }
  std::mt19937_64 rng(derive_seed(seed, {0x5e9}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> length(min_len, max_len);
  std::uniform_int_distribution<int> base(0, 3);

  SyntheticDataset d;
  const Eigen::Index dim = kmer_dimension(k);
  // Scale so the signal std is O(1) for typical lengths: each feature is ~1/len.
  d.true_coef = Eigen::VectorXd::NullaryExpr(dim, [&] { return gauss(rng); }) * std::sqrt(static_cast<double>(dim));
  d.true_intercept = 5.0;
  d.rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::string s(length(rng), 'A');
    for (auto& c : s) c = kNucleotides[static_cast<std::size_t>(base(rng))];
    const double signal = d.true_coef.dot(featurize(s, k)) / std::sqrt(static_cast<double>(dim));
    d.rows.push_back({std::move(s), d.true_intercept + signal + noise * gauss(rng)});
  }
  return d;
}

Predictors load_predictors(const std::string& dir) {
  const std::filesystem::path base(dir);
  return {load_ridge_model((base / "half_life.model").string()), load_ridge_model((base / "te.model").string())};
}

void save_predictors(const Predictors& p, const std::string& dir) {
  const std::filesystem::path base(dir);
  std::filesystem::create_directories(base);
  save_ridge_model(p.half_life, (base / "half_life.model").string());
  save_ridge_model(p.te, (base / "te.model").string());
}

}  // namespace mrnaopt
