#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "mrnaopt/io.hpp"
#include "mrnaopt/report.hpp"
#include "oracles.hpp"

using namespace mrnaopt;

namespace {

std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index d = 0; d < m.cols(); ++d) out[static_cast<std::size_t>(i)].push_back(m(i, d));
  return out;
}

// Integer-valued points so ties and duplicates occur.
Eigen::MatrixXd random_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, int levels) {
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(rng() % static_cast<unsigned>(levels));
  return m;
}

std::vector<Direction> random_directions(std::mt19937_64& rng, Eigen::Index d, std::vector<bool>& max) {
  std::vector<Direction> dirs;
  max.clear();
  for (Eigen::Index k = 0; k < d; ++k) {
    const bool up = rng() % 2 == 0;
    dirs.push_back(up ? Direction::Maximize : Direction::Minimize);
    max.push_back(up);
  }
  return dirs;
}

Candidate valid_candidate(double value, const std::string& seq_suffix) {
  Candidate c;
  c.transcript = Transcript::from_regions("AAAA" + seq_suffix, "AUGUAA", "CCCC");
  c.metrics.valid = true;
  c.metrics.values.fill(value);
  c.diagnostics.cai = value;
  return c;
}

}  // namespace

TEST_CASE("pareto_front examples") {
  Eigen::MatrixXd p(4, 2);
  p << 1, 3, 2, 2, 3, 1, 1, 1;
  const std::vector<Direction> up = {Direction::Maximize, Direction::Maximize};
  CHECK(pareto_front(p, up) == std::vector<Eigen::Index>{0, 1, 2});
  CHECK(pareto_front(p, {Direction::Minimize, Direction::Minimize}) == std::vector<Eigen::Index>{3});

  const Eigen::MatrixXd one = Eigen::RowVector2d(5, -1);
  CHECK(pareto_front(one, up) == std::vector<Eigen::Index>{0});

  // Duplicates on the frontier are all kept.
  Eigen::MatrixXd dup(3, 2);
  dup << 2, 2, 2, 2, 1, 1;
  CHECK(pareto_front(dup, up) == std::vector<Eigen::Index>{0, 1});

  CHECK_THROWS_AS(pareto_front(p, {Direction::Maximize}), Error);
  p(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(pareto_front(p, up), Error);
}

TEST_CASE("pareto_front matches brute-force dominance") {
  std::mt19937_64 rng(12);
  std::vector<bool> max;
  {
    std::normal_distribution<double> g;
    Eigen::MatrixXd p(200, 2);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = g(rng);
    const auto dirs = random_directions(rng, 2, max);
    CHECK(pareto_front(p, dirs) == oracle::pareto_brute_force(rows_of(p), max));
  }
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 500);
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 3);
    const Eigen::MatrixXd p = random_points(rng, n, d, 2 + static_cast<int>(rng() % 30));
    const auto dirs = random_directions(rng, d, max);
    INFO("n=" << n << " d=" << d);
    CHECK(pareto_front(p, dirs) == oracle::pareto_brute_force(rows_of(p), max));
  }
}

TEST_CASE("pareto_front is invariant under increasing transforms of a column") {
  std::mt19937_64 rng(13);
  std::vector<bool> max;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(rng() % 300);
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 2);
    const Eigen::MatrixXd p = random_points(rng, n, d, 15) - Eigen::MatrixXd::Constant(n, d, 7.0);
    const auto dirs = random_directions(rng, d, max);
    const auto base = pareto_front(p, dirs);
    for (Eigen::Index col = 0; col < d; ++col) {
      Eigen::MatrixXd q = p;
      q.col(col) = q.col(col).array().cube() * 2.0 + 1.0;
      CHECK(pareto_front(q, dirs) == base);
      q = p;
      q.col(col) = q.col(col).array().exp();
      CHECK(pareto_front(q, dirs) == base);
    }
  }
}

TEST_CASE("summaries") {
  const Summary one = summarize_values({4.0});
  CHECK(one.count == 1);
  CHECK(one.mean == 4.0);
  CHECK(one.stddev == 0.0);
  CHECK(one.q1 == 4.0);

  const Summary two = summarize_values({2.0, 0.0});
  CHECK(two.mean == 1.0);
  CHECK(two.stddev == 1.0);
  CHECK(two.min == 0.0);
  CHECK(two.max == 2.0);
  CHECK(two.median == 1.0);

  const Summary five = summarize_values({5, 1, 4, 2, 3});
  CHECK(five.q1 == 2.0);
  CHECK(five.median == 3.0);
  CHECK(five.q3 == 4.0);
  CHECK(summarize_values({1, 2, 3, 4}).q1 == 1.75);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> v(137);
  for (auto& x : v) x = g(rng);
  double mean = 0;
  for (double x : v) mean += x;
  mean /= 137.0;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const Summary s = summarize_values(v);
  CHECK(s.mean == doctest::Approx(mean).epsilon(1e-13));
  CHECK(s.stddev == doctest::Approx(std::sqrt(ss / 137.0)).epsilon(1e-13));
  CHECK(s.min == *std::min_element(v.begin(), v.end()));

  CHECK_THROWS_AS(summarize_values({}), Error);

  CandidatePool pool;
  CHECK(pool.add(valid_candidate(1.0, "A")));
  CHECK(pool.add(valid_candidate(3.0, "C")));
  CHECK(!pool.add(valid_candidate(9.0, "C")));
  Candidate bad = valid_candidate(100.0, "G");
  bad.metrics.valid = false;
  CHECK(pool.add(bad));
  CHECK(pool.size() == 3);
  CHECK(pool.valid_count() == 2);
  const Summary u = summarize(pool, "u_content");
  CHECK(u.count == 2);
  CHECK(u.mean == 2.0);
  CHECK(summarize(pool, "cai").max == 3.0);
  CHECK_THROWS_AS(summarize(pool, "no_such_metric"), Error);
  CHECK_THROWS_AS(summarize(CandidatePool{}, "cai"), Error);
}

TEST_CASE("kmer_matrix") {
  CandidatePool pool;
  Candidate a;
  a.transcript.utr5 = "AAAAA";
  pool.add(a);
  Candidate shorty;
  shorty.transcript.utr5 = "AC";
  pool.add(shorty);
  std::mt19937_64 rng(1);
  Candidate r;
  r.transcript = Transcript::from_regions(oracle::random_rna(rng, 40), "AUGGCUUAA", oracle::random_rna(rng, 50));
  pool.add(r);

  const auto m = kmer_matrix(pool);
  CHECK(m.rows.rows() == 3);
  CHECK(m.rows.cols() == 1024);
  CHECK(m.rows(0, 0) == 1.0);
  CHECK(m.rows.row(0).sum() == 1.0);
  CHECK(m.too_short == std::vector<bool>{false, true, false});
  CHECK(m.rows.row(1).isZero());
  CHECK(m.rows.row(2).transpose() == featurize(r.transcript.full_sequence()));
  CHECK(std::abs(m.rows.row(2).sum() - 1.0) < 1e-12);
}

TEST_CASE("generate_pool") {
  PolicyConfig cfg;
  cfg.decode = {20, 30, 25, 35, 1024};
  const Policy pol(cfg);
  const AminoAcidSeq p("MKWL");

  GenerateOptions opts;
  opts.n = 0;
  const auto empty = generate_pool(pol, p, nullptr, opts);
  CHECK(empty.size() == 0);
  CHECK(empty.requested == 0);

  opts.n = 60;
  opts.seed = 5;
  const auto a = generate_pool(pol, p, nullptr, opts);
  CHECK(a.invalid + a.size() + a.duplicates == 60);
  CHECK(a.size() > 0);
  for (const auto& c : a.members()) {
    CHECK(c.metrics.valid);
    CHECK(c.source == Source::Rl);
    CHECK(c.transcript.id.rfind("cand_", 0) == 0);
    CHECK(translate(c.transcript.cds).residues() == "MKWL");
  }

  opts.threads = 3;
  const auto b = generate_pool(pol, p, nullptr, opts);
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(candidate_to_json_line(a.members()[i]) == candidate_to_json_line(b.members()[i]));
  }

  // A protein with a single transcript per UTR pair collides often when the UTRs are pinned.
  PolicyConfig pinned;
  pinned.decode = {20, 30, 20, 30, 1024};
  Policy peaked(pinned);
  peaked.weights()(Vocabulary::nucleotide(0), 0) = 50.0;          // always A in the UTRs
  peaked.weights()(Vocabulary::codon(codon_index("UAA")), 0) = 50.0;  // always UAA
  opts.n = 10;
  const auto dups = generate_pool(peaked, AminoAcidSeq("MW"), nullptr, opts);
  CHECK(dups.size() + dups.invalid == 1);
  CHECK(dups.invalid + dups.size() + dups.duplicates == 10);
}

TEST_CASE("candidate JSONL") {
  const auto path = (std::filesystem::temp_directory_path() / "mrnaopt_test_candidates.jsonl").string();
  write_text_file(path,
                  "{\"id\": \"x1\", \"utr5\": \"" + std::string(20, 'A') + "\", \"cds\": \"AUGUGGUAA\", \"utr3\": \"" +
                      std::string(30, 'C') + "\", \"source\": \"base\"}\n\n"
                      "{\"utr5\": \"\", \"cds\": \"AUGUGGUAA\", \"utr3\": \"\"}\n");
  const auto cands = read_candidates_jsonl(path);
  REQUIRE(cands.size() == 2);
  CHECK(cands[0].source == Source::Base);
  CHECK(cands[1].source == Source::External);
  CHECK(cands[1].transcript.id == "tx3");

  const auto pool = score_pool(cands, AminoAcidSeq("MW"), nullptr);
  CHECK(pool.size() == 2);
  CHECK(pool.invalid == 1);
  const std::string good = candidate_to_json_line(pool.members()[0]);
  CHECK(good.find("\"valid\":true") != std::string::npos);
  CHECK(good.find("half_life") == std::string::npos);  // NaN proxies are omitted
  CHECK(good.find("\"u_content\":") != std::string::npos);
  const std::string bad = candidate_to_json_line(pool.members()[1]);
  CHECK(bad.find("UTR_TOO_SHORT") != std::string::npos);

  write_text_file(path, "{\"utr5\": 3}\n");
  CHECK_THROWS_AS(read_candidates_jsonl(path), Error);
  std::filesystem::remove(path);

  CHECK(source_from_string("sft") == Source::Sft);
  CHECK_THROWS_AS(source_from_string("other"), Error);
}
