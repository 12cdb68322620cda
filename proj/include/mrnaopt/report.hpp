#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "mrnaopt/metrics.hpp"
#include "mrnaopt/policy.hpp"

namespace mrnaopt {

enum class Source { Base, Sft, Rl, External };

std::string_view to_string(Source s);
/// Case-insensitive BASE / SFT / RL / EXTERNAL. Throws BadInput.
Source source_from_string(std::string_view s);

struct Candidate {
  Transcript transcript;
  MetricVector metrics;
  DiagnosticVector diagnostics;  // filled for valid candidates
  Source source = Source::External;
};

/// Candidates unique on their full nucleotide sequence, plus generation accounting.
class CandidatePool {
 public:
  /// Adds c unless its full sequence is already present; returns whether it was added.
  bool add(Candidate c);

  const std::vector<Candidate>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  std::size_t valid_count() const;

  std::size_t requested = 0;   // samples drawn
  std::size_t invalid = 0;     // samples failing validity
  std::size_t duplicates = 0;  // valid samples whose sequence was already pooled

 private:
  std::vector<Candidate> members_;
  std::unordered_set<std::string> seen_;
};

// ---------------------------------------------------------------------------

enum class Direction { Maximize, Minimize };

/// Indices (ascending) of the weakly non-dominated rows of an N x D matrix. x dominates y when
/// it is at least as good on every column and strictly better on one; equal points are all
/// kept. Throws BadInput on D < 1, a direction count mismatch or non-finite entries.
std::vector<Eigen::Index> pareto_front(const Eigen::MatrixXd& points, const std::vector<Direction>& directions);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Quartiles by linear interpolation between order statistics. Throws EmptyPool.
Summary summarize_values(std::vector<double> values);

/// Objective names (see kMetricNames) and diagnostic names: gc_content, cai, leader_mfe_norm,
/// body_mfe_norm, tlr_motif_count, utr5_len, utr3_len.
double candidate_value(const Candidate& c, std::string_view name);
const std::vector<std::string>& summary_metric_names();

/// Statistics of `name` over valid members. Throws EmptyPool when none is valid.
Summary summarize(const CandidatePool& pool, std::string_view name);

struct KmerMatrix {
  Eigen::MatrixXd rows;            // members x 4^k; zero rows where too_short
  std::vector<bool> too_short;
};

KmerMatrix kmer_matrix(const CandidatePool& pool, int k = kDefaultKmer);

struct GenerateOptions {
  std::size_t n = 10000;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  Source source = Source::Rl;
  std::string id_prefix = "cand";
  ScoringConfig scoring;
};

/// Draws n samples, checks validity, scores and pools the unique valid ones in draw order.
/// invalid + size() + duplicates == n.
CandidatePool generate_pool(const Policy& policy, const AminoAcidSeq& protein, const Predictors* predictors,
                            const GenerateOptions& opts);

/// Scores externally supplied transcripts under the same pipeline; invalid ones are kept and
/// flagged, duplicates dropped and counted.
CandidatePool score_pool(const std::vector<Candidate>& candidates, const AminoAcidSeq& protein,
                         const Predictors* predictors, const ScoringConfig& scoring = {}, unsigned threads = 1);

/// JSONL line: id, utr5, cds, utr3, source, valid, then finite objective and diagnostic values.
std::string candidate_to_json_line(const Candidate& c);
/// Reads candidate lines (id, utr5, cds, utr3, optional source). Metrics are not read back.
std::vector<Candidate> read_candidates_jsonl(const std::string& path, Source default_source = Source::External);

}  // namespace mrnaopt
