#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mrnaopt/error.hpp"
#include "mrnaopt/seqcore.hpp"

namespace mrnaopt {

enum class Region { Utr5 = 0, Cds = 1, Utr3 = 2, Done = 3 };

inline constexpr int kMaxHistory = 8;

struct FeatureConfig {
  int history = 3;  // last n emitted tokens, each one-hot over the vocabulary
  int protein_kgram = 2;
  std::vector<int> bucket_edges = {10, 20, 40, 80, 160, 320};  // region-position buckets

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

struct DecodeConfig {
  std::size_t min_utr5 = 20;
  std::size_t min_utr3 = 30;
  std::size_t max_utr5 = 300;
  std::size_t max_utr3 = 600;
  std::size_t max_tokens = 1024;

  friend bool operator==(const DecodeConfig&, const DecodeConfig&) = default;
};

struct PolicyConfig {
  FeatureConfig features;
  DecodeConfig decode;

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

/// Column layout of the feature map. Blocks, in order: bias, region one-hot, history one-hots,
/// aligned residue (20 amino acids plus a stop slot), region x position bucket, protein k-gram
/// frequencies.
struct FeatureLayout {
  explicit FeatureLayout(const FeatureConfig& cfg);

  Eigen::Index bias = 0;
  Eigen::Index region = 1;
  Eigen::Index history = 4;
  Eigen::Index residue = 0;
  Eigen::Index bucket = 0;
  Eigen::Index kgram = 0;
  Eigen::Index kgram_size = 0;
  Eigen::Index dimension = 0;
  int buckets = 0;
};

/// s_t: where the decoder is and what it has emitted.
struct DecodeState {
  Region region = Region::Utr5;
  std::size_t pos = 0;       // nucleotides emitted in the current UTR
  std::size_t cursor = 0;    // CDS: codons emitted; == protein length means the stop is next
  std::size_t emitted = 0;   // tokens emitted so far
  std::array<TokenId, kMaxHistory> history;  // most recent first; BOS-padded

  DecodeState() { history.fill(Vocabulary::kBos); }

  /// True before the opening 5' separator.
  bool at_start() const { return emitted == 0; }
  /// True between the stop codon and the 3' separator.
  bool awaiting_utr3(std::size_t protein_length) const {
    return region == Region::Cds && cursor > protein_length;
  }
};

using SparseFeatures = std::vector<std::pair<Eigen::Index, double>>;

/// Protein k-gram frequencies (k-gram counts / (L - k + 1)), indexed within the k-gram block.
SparseFeatures protein_kgram_features(const AminoAcidSeq& p, int k);

/// Full sparse feature vector of a state, including the protein summary block.
SparseFeatures features(const DecodeState& s, const AminoAcidSeq& p, const FeatureConfig& cfg);

/// Log-linear autoregressive policy: logit(v) = W.row(v) . features(s, p).
class Policy {
 public:
  explicit Policy(PolicyConfig cfg = {});

  const PolicyConfig& config() const { return cfg_; }
  const FeatureLayout& layout() const { return layout_; }
  Eigen::Index dimension() const { return layout_.dimension; }

  Eigen::MatrixXd& weights() { return w_; }
  const Eigen::MatrixXd& weights() const { return w_; }

 private:
  PolicyConfig cfg_;
  FeatureLayout layout_;
  Eigen::MatrixXd w_;  // Vocabulary::kSize x dimension
};

void save_policy(const Policy& policy, const std::string& path);
/// Throws BadFormat on a malformed file and DimMismatch when the stored weights do not fit the
/// stored feature map, or when `expected` is given and differs from the stored configuration.
Policy load_policy(const std::string& path, const std::optional<PolicyConfig>& expected = std::nullopt);

/// Throws LengthOverflow when the minimum-length transcript for `p` cannot fit max_tokens.
void check_decode_feasible(const AminoAcidSeq& p, const DecodeConfig& cfg);

/// Unmasked token scores over the whole vocabulary.
Eigen::VectorXd logits(const Policy& policy, const DecodeState& s, const AminoAcidSeq& p);

/// Legal tokens at s in ascending id order.
std::vector<TokenId> legal_tokens(const DecodeState& s, const AminoAcidSeq& p, const DecodeConfig& cfg,
                                  const CodonTable& table = CodonTable::standard());
std::array<bool, Vocabulary::kSize> legal_mask(const DecodeState& s, const AminoAcidSeq& p, const DecodeConfig& cfg,
                                               const CodonTable& table = CodonTable::standard());

/// Applies token t to s. Throws IllegalToken when t is not legal at s.
void advance(DecodeState& s, TokenId t, const AminoAcidSeq& p, const DecodeConfig& cfg);

struct StepDistribution {
  std::vector<TokenId> legal;
  std::vector<double> probs;  // masked, renormalised; aligned with `legal`
};

struct Rollout {
  Transcript transcript;
  std::vector<TokenId> tokens;    // == tokenize(transcript)
  std::vector<double> logprobs;   // one per token; forced steps are exactly 0
  std::vector<StepDistribution> steps;  // filled only when requested
};

/// Categorical sampling from the masked softmax(logits / tau). Deterministic in seed.
Rollout sample_transcript(const Policy& policy, const AminoAcidSeq& p, double tau, std::uint64_t seed,
                          bool record_distributions = false);

/// Per-token log-probabilities of tokenize(t) under the policy. Throws IllegalToken.
std::vector<double> logprob_trace(const Policy& policy, const Transcript& t, const AminoAcidSeq& p, double tau = 1.0);
std::vector<double> logprob_trace(const Policy& policy, const std::vector<TokenId>& tokens, const AminoAcidSeq& p,
                                  double tau = 1.0);

/// Gradient of sum_t log pi(a_t | s_t) with the shape of the weights.
Eigen::MatrixXd grad_logprob(const Policy& policy, const Transcript& t, const AminoAcidSeq& p, double tau = 1.0);

/// Weight of step t given its log-probability under the policy being differentiated.
using StepWeightFn = std::function<double(std::size_t step, double logprob)>;

/// grad += sum_t weight(t, log pi(a_t | s_t)) * d log pi(a_t | s_t) / dW; returns the log-probs.
std::vector<double> accumulate_grad(const Policy& policy, const std::vector<TokenId>& tokens, const AminoAcidSeq& p,
                                    double tau, const StepWeightFn& weight, Eigen::MatrixXd& grad);

/// grad += sum_t step_weight[t] * d log pi(a_t | s_t) / dW, and returns the per-token log-probs.
/// `step_weight` must have one entry per token.
std::vector<double> accumulate_weighted_grad(const Policy& policy, const std::vector<TokenId>& tokens,
                                             const AminoAcidSeq& p, const std::vector<double>& step_weight,
                                             double tau, Eigen::MatrixXd& grad);

/// Number of steps with more than one legal token.
std::size_t free_steps(const std::vector<TokenId>& tokens, const AminoAcidSeq& p, const DecodeConfig& cfg);

struct CorpusPair {
  AminoAcidSeq protein;
  Transcript transcript;
};

struct PretrainResult {
  Policy policy;
  std::vector<double> loss_trace;  // mean NLL per free step at the start of each epoch
  double final_loss = 0.0;         // after the last update
};

/// Full-batch gradient descent on the mean negative log-likelihood per free step.
/// Throws IllegalToken when a transcript is inconsistent with its protein.
PretrainResult mle_pretrain(const Policy& init, const std::vector<CorpusPair>& corpus, double lr, int epochs,
                            unsigned threads = 1);

/// Mean NLL per free step over the corpus.
double corpus_nll(const Policy& policy, const std::vector<CorpusPair>& corpus);

}  // namespace mrnaopt
