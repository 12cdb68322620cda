#include "mrnaopt/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mrnaopt/io.hpp"
#include "mrnaopt/parallel.hpp"

namespace mrnaopt {

std::string_view to_string(Source s) {
  switch (s) {
    case Source::Base: return "BASE";
    case Source::Sft: return "SFT";
    case Source::Rl: return "RL";
    case Source::External: return "EXTERNAL";
  }
  return "EXTERNAL";
}

Source source_from_string(std::string_view s) {
  std::string up(s);
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Source v : {Source::Base, Source::Sft, Source::Rl, Source::External}) {
    if (to_string(v) == up) return v;
  }
  throw Error(ErrorCode::BadInput, "unknown source tag '" + std::string(s) + "'");
}

bool CandidatePool::add(Candidate c) {
  if (!seen_.insert(c.transcript.full_sequence()).second) return false;
  members_.push_back(std::move(c));
  return true;
}

std::size_t CandidatePool::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(members_.begin(), members_.end(), [](const Candidate& c) { return c.metrics.valid; }));
}

// ---------------------------------------------------------------------------
// Pareto frontier

std::vector<Eigen::Index> pareto_front(const Eigen::MatrixXd& points, const std::vector<Direction>& directions) {
  const Eigen::Index N = points.rows();
  const Eigen::Index D = points.cols();
  if (D < 1 || static_cast<Eigen::Index>(directions.size()) != D) {
    throw Error(ErrorCode::BadInput, "one direction per objective column required");
  }
  if (!points.allFinite()) throw Error(ErrorCode::BadInput, "Pareto input contains non-finite values");

  // Flip minimised columns so larger is better everywhere.
  Eigen::MatrixXd P = points;
  for (Eigen::Index d = 0; d < D; ++d) {
    if (directions[static_cast<std::size_t>(d)] == Direction::Minimize) P.col(d) *= -1.0;
  }

  std::vector<Eigen::Index> front;
  if (D == 2) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (P(a, 0) != P(b, 0)) return P(a, 0) > P(b, 0);
      return P(a, 1) > P(b, 1);
    });
    // best_y: largest second coordinate among points with strictly larger first coordinate.
    double best_y = -std::numeric_limits<double>::infinity();
    for (std::size_t lo = 0; lo < order.size();) {
      std::size_t hi = lo;
      while (hi + 1 < order.size() && P(order[hi + 1], 0) == P(order[lo], 0)) ++hi;
      const double group_max = P(order[lo], 1);
      for (std::size_t t = lo; t <= hi && P(order[t], 1) == group_max; ++t) {
        if (group_max > best_y) front.push_back(order[t]);
      }
      best_y = std::max(best_y, group_max);
      lo = hi + 1;
    }
  } else {
    for (Eigen::Index i = 0; i < N; ++i) {
      bool dominated = false;
      for (Eigen::Index j = 0; j < N && !dominated; ++j) {
        dominated = j != i && (P.row(j).array() >= P.row(i).array()).all() && (P.row(j).array() > P.row(i).array()).any();
      }
      if (!dominated) front.push_back(i);
    }
  }
  std::sort(front.begin(), front.end());
  return front;
}

// ---------------------------------------------------------------------------
// Summaries

Summary summarize_values(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyPool, "no valid values to summarise");
  std::sort(values.begin(), values.end());
  Summary s;
  s.count = values.size();
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / n);
  auto quantile = [&](double q) {
    const double h = (n - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  s.min = values.front();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  s.max = values.back();
  return s;
}

const std::vector<std::string>& summary_metric_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n(kMetricNames.begin(), kMetricNames.end());
    for (const char* d : {"gc_content", "cai", "leader_mfe_norm", "body_mfe_norm", "tlr_motif_count", "utr5_len",
                          "utr3_len"}) {
      n.emplace_back(d);
    }
    return n;
  }();
  return names;
}

double candidate_value(const Candidate& c, std::string_view name) {
  const auto& d = c.diagnostics;
  if (name == "gc_content") return d.gc_content;
  if (name == "cai") return d.cai;
  if (name == "leader_mfe_norm") return d.leader_mfe_norm;
  if (name == "body_mfe_norm") return d.body_mfe_norm;
  if (name == "tlr_motif_count") return d.tlr_motif_count;
  if (name == "utr5_len") return static_cast<double>(d.utr5_len);
  if (name == "utr3_len") return static_cast<double>(d.utr3_len);
  return c.metrics[metric_from_name(name)];
}

Summary summarize(const CandidatePool& pool, std::string_view name) {
  std::vector<double> values;
  for (const auto& c : pool.members()) {
    if (c.metrics.valid) values.push_back(candidate_value(c, name));
  }
  if (values.empty()) throw Error(ErrorCode::EmptyPool, "pool has no valid candidates");
  return summarize_values(std::move(values));
}

KmerMatrix kmer_matrix(const CandidatePool& pool, int k) {
  KmerMatrix m;
  m.rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pool.size()), kmer_dimension(k));
  m.too_short.assign(pool.size(), false);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const std::string seq = pool.members()[i].transcript.full_sequence();
    if (seq.size() < static_cast<std::size_t>(k)) {
      m.too_short[i] = true;
      continue;
    }
    m.rows.row(static_cast<Eigen::Index>(i)) = featurize(seq, k).transpose();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Pools

namespace {

Candidate score_one(Transcript t, const AminoAcidSeq& protein, const Predictors* predictors, const ScoringConfig& cfg,
                    Source source) {
  Candidate c;
  c.source = source;
  const std::string seq = t.full_sequence();
  const bool foldable = !seq.empty() && std::all_of(seq.begin(), seq.end(), [](char ch) { return nucleotide_index(ch) >= 0; });
  const SecondaryStructure s = foldable ? fold_transcript(t, cfg) : SecondaryStructure{};
  c.metrics = score_transcript(t, protein, predictors, cfg, &s);
  if (c.metrics.valid) c.diagnostics = compute_diagnostics(t, s, cfg);
  c.transcript = std::move(t);
  return c;
}

}  // namespace

CandidatePool generate_pool(const Policy& policy, const AminoAcidSeq& protein, const Predictors* predictors,
                            const GenerateOptions& opts) {
  std::vector<Candidate> drawn(opts.n);
  parallel_for(opts.n, opts.threads, [&](std::size_t i) {
    Rollout r = sample_transcript(policy, protein, opts.temperature, derive_seed(opts.seed, {static_cast<std::uint64_t>(i)}));
    r.transcript.id = opts.id_prefix + "_" + std::to_string(i);
    drawn[i] = score_one(std::move(r.transcript), protein, predictors, opts.scoring, opts.source);
  });
  CandidatePool pool;
  pool.requested = opts.n;
  for (auto& c : drawn) {
    if (!c.metrics.valid) {
      ++pool.invalid;
    } else if (!pool.add(std::move(c))) {
      ++pool.duplicates;
    }
  }
  return pool;
}

CandidatePool score_pool(const std::vector<Candidate>& candidates, const AminoAcidSeq& protein,
                         const Predictors* predictors, const ScoringConfig& scoring, unsigned threads) {
  std::vector<Candidate> scored(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t i) {
    scored[i] = score_one(candidates[i].transcript, protein, predictors, scoring, candidates[i].source);
  });
  CandidatePool pool;
  pool.requested = candidates.size();
  for (auto& c : scored) {
    const bool valid = c.metrics.valid;
    if (!pool.add(std::move(c))) {
      ++pool.duplicates;
    } else if (!valid) {
      ++pool.invalid;
    }
  }
  return pool;
}

std::string candidate_to_json_line(const Candidate& c) {
  nlohmann::ordered_json j;
  j["id"] = c.transcript.id;
  j["utr5"] = c.transcript.utr5;
  j["cds"] = c.transcript.cds_string();
  j["utr3"] = c.transcript.utr3;
  j["source"] = std::string(to_string(c.source));
  j["valid"] = c.metrics.valid;
  if (!c.metrics.valid) {
    auto& v = j["violations"] = nlohmann::ordered_json::array();
    for (auto viol : c.metrics.validity.violations) v.push_back(std::string(to_string(viol)));
    return j.dump();
  }
  for (const auto& name : summary_metric_names()) {
    const double x = candidate_value(c, name);
    if (std::isfinite(x)) j[name] = x;
  }
  return j.dump();
}

std::vector<Candidate> read_candidates_jsonl(const std::string& path, Source default_source) {
  std::istringstream in(read_text_file(path));
  std::vector<Candidate> out;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BadFormat, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    auto field = [&](const char* key) {
      if (!j.contains(key) || !j[key].is_string()) {
        throw Error(ErrorCode::BadFormat, path + ":" + std::to_string(lineno) + ": missing string field '" + key + "'");
      }
      return j[key].get<std::string>();
    };
    Candidate c;
    const std::string id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : "tx" + std::to_string(lineno);
    c.transcript = Transcript::from_regions(field("utr5"), field("cds"), field("utr3"), id);
    c.source = j.contains("source") && j["source"].is_string() ? source_from_string(j["source"].get<std::string>())
                                                               : default_source;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace mrnaopt
