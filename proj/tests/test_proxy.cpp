#include <doctest.h>

#include <filesystem>
#include <random>

#include "mrnaopt/proxy.hpp"
#include "oracles.hpp"

using namespace mrnaopt;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& X) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) rows[static_cast<std::size_t>(i)] = to_std(X.row(i).transpose());
  return rows;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) X(i, k) = g(rng);
  return X;
}

double ridge_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta, double alpha) {
  Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
  Eigen::VectorXd yc = y.array() - y.mean();
  return (yc - Xc * beta).squaredNorm() + alpha * beta.squaredNorm();
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mrnaopt_test_proxy_" + name);
}

}  // namespace

TEST_CASE("featurize") {
  const auto f = featurize("AAAAA");
  CHECK(f.size() == 1024);
  CHECK(f(0) == 1.0);
  CHECK(f.sum() == 1.0);
  const auto g = featurize("AAAAAA");
  CHECK(g(0) == 1.0);
  CHECK(g.sum() == 1.0);

  // "UUUUU" is the last column; "ACGUA" sits at 0*256 + 1*64 + 2*16 + 3*4 + 0.
  CHECK(featurize("UUUUU")(1023) == 1.0);
  CHECK(featurize("ACGUA")(64 + 32 + 12) == 1.0);
  CHECK(featurize("ACG", 2)(1) == 0.5);
  CHECK(featurize("ACG", 2)(6) == 0.5);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto v = featurize(oracle::random_rna(rng, 100));
    CHECK(std::abs(v.sum() - 1.0) < 1e-12);
    CHECK(v.minCoeff() >= 0.0);
  }
  CHECK_THROWS_AS(featurize("ACGU"), Error);
  CHECK_THROWS_AS(featurize("ACGTA"), Error);
}

TEST_CASE("ridge_fit matches the normal-equation oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 30 + static_cast<Eigen::Index>(rng() % 30), d = 2 + static_cast<Eigen::Index>(rng() % 8);
    const Eigen::MatrixXd X = random_matrix(rng, n, d);
    const Eigen::VectorXd y = random_matrix(rng, n, 1).col(0);
    for (double alpha : {1e-8, 0.5, 10.0}) {
      const auto m = ridge_fit(X, y, alpha);
      const auto [coef, intercept] = oracle::ridge_normal_equations(to_rows(X), to_std(y), alpha);
      for (Eigen::Index k = 0; k < d; ++k) CHECK(std::abs(m.coef(k) - coef[static_cast<std::size_t>(k)]) < 1e-6);
      CHECK(std::abs(m.intercept - intercept) < 1e-6);
    }
  }

  // Wide design (n < d) goes through the dual path.
  const Eigen::MatrixXd W = random_matrix(rng, 8, 20);
  const Eigen::VectorXd yw = random_matrix(rng, 8, 1).col(0);
  const auto mw = ridge_fit(W, yw, 0.3);
  const auto [cw, iw] = oracle::ridge_normal_equations(to_rows(W), to_std(yw), 0.3);
  CHECK(oracle::relative_error(to_std(mw.coef), cw) < 1e-9);
  CHECK(std::abs(mw.intercept - iw) < 1e-9);
}

TEST_CASE("ridge_fit limits") {
  // Identity design at alpha = 0: the centred-data minimum-norm fit reproduces y - mean(y).
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(5, 5);
  const Eigen::VectorXd y = (Eigen::VectorXd(5) << 3, -1, 4, 1, 5).finished();
  const auto m = ridge_fit(I, y, 0.0);
  const Eigen::VectorXd yc = y.array() - y.mean();
  CHECK((m.coef - yc).cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(std::abs(predict(m, I.col(i)) - y(i)) < 1e-10);

  RidgeOptions strict;
  strict.min_norm_at_zero = false;
  try {
    ridge_fit(I, y, 0.0, strict);
    FAIL("expected Singular");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Singular);
  }

  // Very large alpha shrinks everything to the mean.
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd X = random_matrix(rng, 40, 6);
  const Eigen::VectorXd t = random_matrix(rng, 40, 1).col(0);
  const auto big = ridge_fit(X, t, 1e12);
  CHECK(big.coef.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(std::abs(predict(big, X.row(3).transpose()) - t.mean()) < 1e-6);

  CHECK_THROWS_AS(ridge_fit(X, t.head(10), 1.0), Error);
  CHECK_THROWS_AS(ridge_fit(X, t, -1.0), Error);
}

TEST_CASE("ridge_fit is a local minimum of the regularised loss") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  const Eigen::MatrixXd X = random_matrix(rng, 50, 7);
  const Eigen::VectorXd y = random_matrix(rng, 50, 1).col(0);
  const double alpha = 0.7;
  const auto m = ridge_fit(X, y, alpha);
  const double best = ridge_loss(X, y, m.coef, alpha);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd eps(7);
    for (auto& e : eps) e = g(rng);
    eps *= 1e-3 / eps.norm();
    CHECK(ridge_loss(X, y, m.coef + eps, alpha) >= best);
  }
}

TEST_CASE("spearman, pearson, mae") {
  const Eigen::VectorXd inc = (Eigen::VectorXd(5) << 1, 2, 3, 4, 5).finished();
  const Eigen::VectorXd inc2 = (Eigen::VectorXd(5) << -3, 0, 0.5, 10, 11).finished();
  CHECK(spearman(inc, inc2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spearman(inc, Eigen::VectorXd(inc.reverse())) == doctest::Approx(-1.0).epsilon(1e-15));

  const Eigen::VectorXd a = (Eigen::VectorXd(4) << 1, 2, 2, 4).finished();
  const Eigen::VectorXd b = (Eigen::VectorXd(4) << 1, 3, 2, 4).finished();
  const double expected = oracle::spearman({1, 2, 2, 4}, {1, 3, 2, 4});
  CHECK(spearman(a, b) == doctest::Approx(expected).epsilon(1e-14));
  // Ranks {1, 2.5, 2.5, 4} vs {1, 3, 2, 4}: covariance 4.5 / sqrt(4.5 * 5).
  CHECK(expected == doctest::Approx(4.5 / std::sqrt(4.5 * 5.0)).epsilon(1e-14));

  CHECK_THROWS_AS(spearman(a, inc), Error);
  try {
    spearman(a, Eigen::VectorXd::Ones(4));
    FAIL("expected ZeroVariance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVariance);
  }

  // Invariance under strictly monotone transforms.
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(30), y(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
      x(i) = g(rng);
      y(i) = x(i) + g(rng);
    }
    const double base = spearman(x, y);
    const Eigen::VectorXd ex = x.array().exp();
    const Eigen::VectorXd cube = y.array().cube() * 3.0 - 1.0;
    CHECK(spearman(ex, y) == doctest::Approx(base).epsilon(1e-13));
    CHECK(spearman(x, cube) == doctest::Approx(base).epsilon(1e-13));
    CHECK(spearman(x, y) == doctest::Approx(oracle::spearman(to_std(x), to_std(y))).epsilon(1e-13));
  }

  CHECK(mae(inc, inc) == 0.0);
  CHECK(mae(Eigen::Vector2d(0, 2), Eigen::Vector2d(1, 1)) == 1.0);
  Eigen::VectorXd p(50), q(50);
  double sum = 0;
  for (Eigen::Index i = 0; i < 50; ++i) {
    p(i) = g(rng);
    q(i) = g(rng);
    sum += std::abs(p(i) - q(i));
  }
  CHECK(mae(p, q) == doctest::Approx(sum / 50.0).epsilon(1e-14));
  CHECK_THROWS_AS(mae(p, inc), Error);
}

TEST_CASE("alpha grid and selection") {
  const auto grid = default_alpha_grid();
  CHECK(grid.size() == 13);
  CHECK(grid.front() == doctest::Approx(1e-2));
  CHECK(grid.back() == doctest::Approx(1e5));
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);

  // SRCC gap below the tolerance: lower MAE wins even though its SRCC is slightly lower.
  const std::vector<CvCandidate> tie = {{0.1, 0.80000, 0.50}, {1.0, 0.79995, 0.40}, {10.0, 0.70, 0.10}};
  CHECK(select_alpha(tie) == 1);
  // Gap above the tolerance: SRCC decides.
  const std::vector<CvCandidate> clear = {{0.1, 0.8000, 0.50}, {1.0, 0.7990, 0.40}};
  CHECK(select_alpha(clear) == 0);
  // Exact ties on both go to the earlier entry.
  const std::vector<CvCandidate> same = {{0.1, 0.5, 0.3}, {1.0, 0.5, 0.3}};
  CHECK(select_alpha(same) == 0);
}

TEST_CASE("grid_search_cv") {
  SUBCASE("noiseless linear data reaches SRCC 1") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd X = random_matrix(rng, 100, 5);
    const Eigen::VectorXd beta = (Eigen::VectorXd(5) << 1, -2, 0.5, 3, 0.1).finished();
    const Eigen::VectorXd y = (X * beta).array() + 2.0;
    const auto r = grid_search_cv(X, y, default_alpha_grid(), 5, 3, 11);
    double best = -1;
    for (const auto& c : r.report.candidates) best = std::max(best, c.mean_srcc);
    CHECK(best == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.report.srcc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.report.fold_srcc.size() == 15);
    CHECK(r.report.candidates.size() == 13);
  }

  SUBCASE("pure noise gives SRCC near 0") {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd X = random_matrix(rng, 200, 5);
    const Eigen::VectorXd y = random_matrix(rng, 200, 1).col(0);
    const auto r = grid_search_cv(X, y, default_alpha_grid(), 5, 3, 12);
    CHECK(std::abs(r.report.srcc) < 0.3);
    for (double s : r.report.fold_srcc) CHECK(std::abs(s) <= 1.0);
    for (double m : r.report.fold_mae) CHECK(m >= 0.0);
  }

  SUBCASE("reproducible for a fixed seed") {
    std::mt19937_64 rng(6);
    const Eigen::MatrixXd X = random_matrix(rng, 60, 4);
    const Eigen::VectorXd y = X.col(0) + 0.3 * random_matrix(rng, 60, 1).col(0);
    const auto a = grid_search_cv(X, y, default_alpha_grid(), 5, 3, 99);
    const auto b = grid_search_cv(X, y, default_alpha_grid(), 5, 3, 99);
    CHECK(a.report.to_json() == b.report.to_json());
    const auto c = grid_search_cv(X, y, default_alpha_grid(), 5, 3, 100);
    CHECK(a.report.to_json() != c.report.to_json());
  }

  SUBCASE("errors") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Random(3, 2);
    CHECK_THROWS_AS(grid_search_cv(X, Eigen::VectorXd::Random(3), default_alpha_grid(), 5, 1, 0), Error);
  }
}

TEST_CASE("predict") {
  RidgeModel m;
  m.coef = Eigen::VectorXd::Zero(3);
  m.intercept = 1.5;
  CHECK(predict(m, Eigen::Vector3d(1, 2, 3)) == 1.5);

  m.coef = Eigen::Vector3d(2, -1, 0.5);
  CHECK(predict(m, Eigen::Vector3d(1, 2, 4)) == 1.5 + 2.0 - 2.0 + 2.0);

  const Eigen::Vector3d f1(0.3, 0.1, -2), f2(1, 1, 1);
  CHECK(predict(m, f1 + f2) - m.intercept ==
        doctest::Approx((predict(m, f1) - m.intercept) + (predict(m, f2) - m.intercept)).epsilon(1e-14));
  CHECK_THROWS_AS(predict(m, Eigen::Vector2d(1, 1)), Error);
}

TEST_CASE("model and data files") {
  const auto data = synthetic_dataset(40, 20, 60, 0.1, 5, 2);
  REQUIRE(data.rows.size() == 40);
  for (const auto& r : data.rows) {
    CHECK(r.sequence.size() >= 20);
    CHECK(r.sequence.size() <= 60);
  }
  const auto csv = temp_file("data.csv");
  write_training_csv(csv.string(), data.rows);
  const auto back = read_training_csv(csv.string());
  REQUIRE(back.size() == data.rows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].sequence == data.rows[i].sequence);
    CHECK(back[i].label == data.rows[i].label);
  }

  std::vector<std::string> seqs;
  Eigen::VectorXd y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    seqs.push_back(data.rows[i].sequence);
    y(static_cast<Eigen::Index>(i)) = data.rows[i].label;
  }
  auto model = ridge_fit(featurize_all(seqs, 2), y, 0.5);
  model.kmer = 2;
  const auto path = temp_file("ridge.model");
  save_ridge_model(model, path.string());
  const auto loaded = load_ridge_model(path.string());
  CHECK(loaded.coef == model.coef);
  CHECK(loaded.intercept == model.intercept);
  CHECK(loaded.alpha == model.alpha);
  CHECK(loaded.kmer == 2);
  CHECK(predict_sequence(loaded, seqs[0]) == predict_sequence(model, seqs[0]));

  Predictors p{model, model};
  p.te.intercept += 1.0;
  const auto dir = temp_file("predictors");
  std::filesystem::create_directories(dir);
  save_predictors(p, dir.string());
  const auto q = load_predictors(dir.string());
  CHECK(q.te.intercept == p.te.intercept);
  CHECK(q.half_life.coef == p.half_life.coef);

  std::filesystem::remove(csv);
  std::filesystem::remove(path);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_ridge_model(path.string()), Error);
}
