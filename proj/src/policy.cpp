#include "mrnaopt/policy.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mrnaopt/io.hpp"
#include "mrnaopt/parallel.hpp"

namespace mrnaopt {

namespace {

constexpr int kV = Vocabulary::kSize;
constexpr int kResidueSlots = 21;  // 20 amino acids + the stop position
constexpr char kCheckpointKind[] = "policy-checkpoint";

Eigen::Index ipow(Eigen::Index base, int exp) {
  Eigen::Index r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

void validate(const FeatureConfig& cfg) {
  if (cfg.history < 0 || cfg.history > kMaxHistory) {
    throw Error(ErrorCode::BadInput, "history window must be in [0, " + std::to_string(kMaxHistory) + "]");
  }
  if (cfg.protein_kgram < 0 || cfg.protein_kgram > 3) throw Error(ErrorCode::BadInput, "protein k-gram must be in [0, 3]");
  if (!std::is_sorted(cfg.bucket_edges.begin(), cfg.bucket_edges.end()) ||
      std::adjacent_find(cfg.bucket_edges.begin(), cfg.bucket_edges.end()) != cfg.bucket_edges.end() ||
      (!cfg.bucket_edges.empty() && cfg.bucket_edges.front() <= 0)) {
    throw Error(ErrorCode::BadInput, "bucket edges must be positive and strictly increasing");
  }
}

int bucket_of(std::size_t pos, const std::vector<int>& edges) {
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), static_cast<int>(std::min<std::size_t>(pos, 1u << 30))) -
                          edges.begin());
}

/// Features of a state without the protein k-gram block.
void local_features(const DecodeState& s, const AminoAcidSeq& p, const FeatureConfig& cfg, const FeatureLayout& lay,
                    SparseFeatures& out) {
  out.clear();
  out.emplace_back(lay.bias, 1.0);
  if (s.region == Region::Done) return;
  const int region = static_cast<int>(s.region);
  out.emplace_back(lay.region + region, 1.0);
  for (int h = 0; h < cfg.history; ++h) {
    out.emplace_back(lay.history + static_cast<Eigen::Index>(h) * kV + s.history[static_cast<std::size_t>(h)], 1.0);
  }
  std::size_t pos = s.pos;
  if (s.region == Region::Cds) {
    pos = s.cursor;
    if (s.cursor < p.size()) {
      out.emplace_back(lay.residue + amino_acid_index(p[s.cursor]), 1.0);
    } else if (s.cursor == p.size()) {
      out.emplace_back(lay.residue + kResidueSlots - 1, 1.0);
    }
  }
  out.emplace_back(lay.bucket + region * lay.buckets + bucket_of(pos, cfg.bucket_edges), 1.0);
}

/// Walks the decode states of one prompt, exposing the masked distribution at each step.
class Walker {
 public:
  Walker(const Policy& policy, const AminoAcidSeq& p, double tau)
      : policy_(policy), p_(p), tau_(tau), layout_(policy.layout()) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::BadInput, "temperature must be positive");
    check_decode_feasible(p, policy.config().decode);
    kgram_ = protein_kgram_features(p, policy.config().features.protein_kgram);
    offset_ = Eigen::VectorXd::Zero(kV);
    for (auto [j, g] : kgram_) offset_ += g * policy.weights().col(layout_.kgram + j);
  }

  bool done() const { return state_.region == Region::Done; }
  const DecodeState& state() const { return state_; }
  const std::vector<TokenId>& legal() const { return legal_; }
  const Eigen::VectorXd& probs() const { return probs_; }
  const SparseFeatures& local() const { return feats_; }
  const SparseFeatures& kgram() const { return kgram_; }

  /// Fills legal tokens and, unless forced, the masked distribution.
  void prepare() {
    legal_ = legal_tokens(state_, p_, policy_.config().decode);
    const auto n = static_cast<Eigen::Index>(legal_.size());
    if (n == 1) {
      logp_ = Eigen::VectorXd::Zero(1);
      probs_ = Eigen::VectorXd::Ones(1);
      return;
    }
    local_features(state_, p_, policy_.config().features, layout_, feats_);
    const Eigen::MatrixXd& W = policy_.weights();
    Eigen::VectorXd z(n);
    for (Eigen::Index l = 0; l < n; ++l) {
      const TokenId v = legal_[static_cast<std::size_t>(l)];
      double acc = offset_(v);
      for (auto [j, f] : feats_) acc += f * W(v, j);
      z(l) = acc / tau_;
    }
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    logp_ = z.array() - lse;
    probs_ = logp_.array().exp();
  }

  Eigen::Index index_of(TokenId t) const {
    auto it = std::find(legal_.begin(), legal_.end(), t);
    if (it == legal_.end()) {
      throw Error(ErrorCode::IllegalToken, "token " + Vocabulary::name(t) + " is not legal at step " +
                                               std::to_string(state_.emitted));
    }
    return it - legal_.begin();
  }

  double logprob(Eigen::Index l) const { return logp_(l); }

  /// grad += w * d log pi(legal[a]) / dW; kgram contributions are deferred to `kgram_coef`.
  void accumulate(Eigen::Index a, double w, Eigen::MatrixXd& grad, Eigen::VectorXd& kgram_coef) const {
    if (legal_.size() < 2 || w == 0.0) return;
    for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(legal_.size()); ++l) {
      const double c = w * ((l == a ? 1.0 : 0.0) - probs_(l)) / tau_;
      const TokenId v = legal_[static_cast<std::size_t>(l)];
      for (auto [j, f] : feats_) grad(v, j) += c * f;
      kgram_coef(v) += c;
    }
  }

  void take(TokenId t) { advance(state_, t, p_, policy_.config().decode); }

 private:
  const Policy& policy_;
  const AminoAcidSeq& p_;
  double tau_;
  const FeatureLayout& layout_;
  DecodeState state_;
  SparseFeatures kgram_;
  Eigen::VectorXd offset_;
  std::vector<TokenId> legal_;
  SparseFeatures feats_;
  Eigen::VectorXd logp_;
  Eigen::VectorXd probs_;
};

void flush_kgram(const Walker& w, const Eigen::VectorXd& coef, const FeatureLayout& lay, Eigen::MatrixXd& grad) {
  for (auto [j, g] : w.kgram()) grad.col(lay.kgram + j) += g * coef;
}

}  // namespace

// ---------------------------------------------------------------------------

FeatureLayout::FeatureLayout(const FeatureConfig& cfg) {
  validate(cfg);
  buckets = static_cast<int>(cfg.bucket_edges.size()) + 1;
  history = 4;
  residue = history + static_cast<Eigen::Index>(cfg.history) * kV;
  bucket = residue + kResidueSlots;
  kgram = bucket + 3 * buckets;
  kgram_size = cfg.protein_kgram > 0 ? ipow(20, cfg.protein_kgram) : 0;
  dimension = kgram + kgram_size;
}

SparseFeatures protein_kgram_features(const AminoAcidSeq& p, int k) {
  SparseFeatures out;
  if (k <= 0 || p.size() < static_cast<std::size_t>(k)) return out;
  std::vector<std::pair<Eigen::Index, int>> counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(k) <= p.size(); ++i) {
    Eigen::Index code = 0;
    for (int d = 0; d < k; ++d) code = code * 20 + amino_acid_index(p[i + static_cast<std::size_t>(d)]);
    counts.emplace_back(code, 1);
  }
  std::sort(counts.begin(), counts.end());
  const double norm = 1.0 / static_cast<double>(counts.size());
  for (const auto& [code, c] : counts) {
    if (!out.empty() && out.back().first == code) {
      out.back().second += norm;
    } else {
      out.emplace_back(code, norm);
    }
  }
  return out;
}

SparseFeatures features(const DecodeState& s, const AminoAcidSeq& p, const FeatureConfig& cfg) {
  const FeatureLayout lay(cfg);
  SparseFeatures out;
  local_features(s, p, cfg, lay, out);
  for (auto [j, g] : protein_kgram_features(p, cfg.protein_kgram)) out.emplace_back(lay.kgram + j, g);
  return out;
}

Policy::Policy(PolicyConfig cfg)
    : cfg_(std::move(cfg)), layout_(cfg_.features), w_(Eigen::MatrixXd::Zero(kV, layout_.dimension)) {}

// ---------------------------------------------------------------------------
// Checkpoints

void save_policy(const Policy& policy, const std::string& path) {
  const auto& c = policy.config();
  RecordFile f(kCheckpointKind);
  const std::int64_t feature_meta[] = {c.features.history, c.features.protein_kgram, kV, policy.dimension()};
  f.set_ints("feature_map", feature_meta);
  std::vector<std::int64_t> edges(c.features.bucket_edges.begin(), c.features.bucket_edges.end());
  f.set_ints("bucket_edges", edges);
  const std::int64_t decode[] = {static_cast<std::int64_t>(c.decode.min_utr5), static_cast<std::int64_t>(c.decode.min_utr3),
                                 static_cast<std::int64_t>(c.decode.max_utr5), static_cast<std::int64_t>(c.decode.max_utr3),
                                 static_cast<std::int64_t>(c.decode.max_tokens)};
  f.set_ints("decode", decode);
  const Eigen::MatrixXd& W = policy.weights();
  f.set_reals("weights", std::span<const double>(W.data(), static_cast<std::size_t>(W.size())));  // column-major
  f.save(path);
}

Policy load_policy(const std::string& path, const std::optional<PolicyConfig>& expected) {
  const RecordFile f = RecordFile::load(path, kCheckpointKind);
  const auto& meta = f.ints("feature_map");
  const auto& decode = f.ints("decode");
  if (meta.size() != 4 || decode.size() != 5) throw Error(ErrorCode::BadFormat, path + ": malformed policy header");
  PolicyConfig cfg;
  cfg.features.history = static_cast<int>(meta[0]);
  cfg.features.protein_kgram = static_cast<int>(meta[1]);
  const auto& edges = f.ints("bucket_edges");
  cfg.features.bucket_edges.assign(edges.begin(), edges.end());
  for (auto v : decode) {
    if (v < 0) throw Error(ErrorCode::BadFormat, path + ": negative decode limit");
  }
  cfg.decode = {static_cast<std::size_t>(decode[0]), static_cast<std::size_t>(decode[1]), static_cast<std::size_t>(decode[2]),
                static_cast<std::size_t>(decode[3]), static_cast<std::size_t>(decode[4])};
  if (expected && !(*expected == cfg)) {
    throw Error(ErrorCode::DimMismatch, path + ": checkpoint feature map or decode limits differ from the requested configuration");
  }
  Policy policy(cfg);
  const auto& w = f.reals("weights");
  if (meta[2] != kV || meta[3] != policy.dimension() ||
      w.size() != static_cast<std::size_t>(kV) * static_cast<std::size_t>(policy.dimension())) {
    throw Error(ErrorCode::DimMismatch, path + ": weights do not match the stored feature map (dimension " +
                                            std::to_string(meta[3]) + " vs " + std::to_string(policy.dimension()) + ")");
  }
  policy.weights() = Eigen::Map<const Eigen::MatrixXd>(w.data(), kV, policy.dimension());
  if (!policy.weights().allFinite()) throw Error(ErrorCode::BadFormat, path + ": non-finite weights");
  return policy;
}

// ---------------------------------------------------------------------------
// Grammar

void check_decode_feasible(const AminoAcidSeq& p, const DecodeConfig& cfg) {
  if (cfg.min_utr5 > cfg.max_utr5 || cfg.min_utr3 > cfg.max_utr3) {
    throw Error(ErrorCode::LengthOverflow, "minimum UTR length exceeds its maximum");
  }
  const std::size_t shortest = cfg.min_utr5 + cfg.min_utr3 + p.size() + 5;
  if (shortest > cfg.max_tokens) {
    throw Error(ErrorCode::LengthOverflow, "shortest transcript needs " + std::to_string(shortest) + " tokens, cap is " +
                                               std::to_string(cfg.max_tokens));
  }
}

std::vector<TokenId> legal_tokens(const DecodeState& s, const AminoAcidSeq& p, const DecodeConfig& cfg,
                                  const CodonTable& table) {
  std::vector<TokenId> out;
  const std::size_t L = p.size();
  auto nucleotides = [&] {
    for (int n = 0; n < 4; ++n) out.push_back(Vocabulary::nucleotide(n));
  };
  switch (s.region) {
    case Region::Done:
      break;
    case Region::Utr5: {
      if (s.at_start()) {
        out.push_back(Vocabulary::kUtr5Sep);
        break;
      }
      // After one more nucleotide the shortest completion is: cds-sep, L+1 codons, utr3-sep,
      // min_utr3 nucleotides, eos.
      const bool room = s.emitted + 1 + 1 + (L + 1) + 1 + cfg.min_utr3 + 1 <= cfg.max_tokens;
      if (s.pos >= cfg.min_utr5) out.push_back(Vocabulary::kCdsSep);
      if (s.pos < cfg.max_utr5 && room) nucleotides();
      break;
    }
    case Region::Cds: {
      if (s.cursor < L) {
        for (int c : table.synonyms(p[s.cursor])) out.push_back(Vocabulary::codon(c));
      } else if (s.cursor == L) {
        for (int c : table.stop_codons()) out.push_back(Vocabulary::codon(c));
      } else {
        out.push_back(Vocabulary::kUtr3Sep);
      }
      break;
    }
    case Region::Utr3: {
      const bool room = s.emitted + 1 + 1 <= cfg.max_tokens;
      if (s.pos >= cfg.min_utr3) out.push_back(Vocabulary::kEos);
      if (s.pos < cfg.max_utr3 && room) nucleotides();
      break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::array<bool, Vocabulary::kSize> legal_mask(const DecodeState& s, const AminoAcidSeq& p, const DecodeConfig& cfg,
                                               const CodonTable& table) {
  std::array<bool, Vocabulary::kSize> mask{};
  for (TokenId t : legal_tokens(s, p, cfg, table)) mask[static_cast<std::size_t>(t)] = true;
  return mask;
}

void advance(DecodeState& s, TokenId t, const AminoAcidSeq& p, const DecodeConfig& cfg) {
  const auto legal = legal_tokens(s, p, cfg);
  if (!std::binary_search(legal.begin(), legal.end(), t)) {
    throw Error(ErrorCode::IllegalToken, "token " + Vocabulary::name(t) + " is not legal at step " + std::to_string(s.emitted));
  }
  if (!s.at_start()) {
    switch (s.region) {
      case Region::Utr5:
        if (t == Vocabulary::kCdsSep) {
          s.region = Region::Cds;
          s.pos = 0;
          s.cursor = 0;
        } else {
          ++s.pos;
        }
        break;
      case Region::Cds:
        if (t == Vocabulary::kUtr3Sep) {
          s.region = Region::Utr3;
          s.pos = 0;
        } else {
          ++s.cursor;
        }
        break;
      case Region::Utr3:
        if (t == Vocabulary::kEos) {
          s.region = Region::Done;
        } else {
          ++s.pos;
        }
        break;
      case Region::Done:
        break;
    }
  }
  std::copy_backward(s.history.begin(), s.history.end() - 1, s.history.end());
  s.history[0] = t;
  ++s.emitted;
}

Eigen::VectorXd logits(const Policy& policy, const DecodeState& s, const AminoAcidSeq& p) {
  const SparseFeatures f = features(s, p, policy.config().features);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(kV);
  for (auto [j, v] : f) z += v * policy.weights().col(j);
  return z;
}

// ---------------------------------------------------------------------------
// Sampling and traces

Rollout sample_transcript(const Policy& policy, const AminoAcidSeq& p, double tau, std::uint64_t seed,
                          bool record_distributions) {
  Walker w(policy, p, tau);
  std::mt19937_64 rng(seed);
  Rollout r;
  while (!w.done()) {
    w.prepare();
    const auto& legal = w.legal();
    Eigen::Index pick = 0;
    if (legal.size() > 1) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      const auto& probs = w.probs();
      double acc = 0.0;
      pick = static_cast<Eigen::Index>(legal.size()) - 1;
      for (Eigen::Index l = 0; l < probs.size(); ++l) {
        acc += probs(l);
        if (u < acc) {
          pick = l;
          break;
        }
      }
    }
    const TokenId t = legal[static_cast<std::size_t>(pick)];
    r.tokens.push_back(t);
    r.logprobs.push_back(w.logprob(pick));
    if (record_distributions) {
      r.steps.push_back({legal, std::vector<double>(w.probs().data(), w.probs().data() + w.probs().size())});
    }
    w.take(t);
  }
  r.transcript = detokenize(r.tokens);
  return r;
}

std::vector<double> logprob_trace(const Policy& policy, const std::vector<TokenId>& tokens, const AminoAcidSeq& p,
                                  double tau) {
  Walker w(policy, p, tau);
  std::vector<double> out;
  out.reserve(tokens.size());
  for (TokenId t : tokens) {
    if (w.done()) throw Error(ErrorCode::IllegalToken, "tokens continue after end of sequence");
    w.prepare();
    out.push_back(w.logprob(w.index_of(t)));
    w.take(t);
  }
  if (!w.done()) throw Error(ErrorCode::IllegalToken, "token sequence ends before end of sequence");
  return out;
}

std::vector<double> logprob_trace(const Policy& policy, const Transcript& t, const AminoAcidSeq& p, double tau) {
  return logprob_trace(policy, tokenize(t), p, tau);
}

std::vector<double> accumulate_grad(const Policy& policy, const std::vector<TokenId>& tokens, const AminoAcidSeq& p,
                                    double tau, const StepWeightFn& weight, Eigen::MatrixXd& grad) {
  if (grad.rows() != kV || grad.cols() != policy.dimension()) {
    throw Error(ErrorCode::DimMismatch, "gradient buffer does not match the policy");
  }
  Walker w(policy, p, tau);
  Eigen::VectorXd kgram_coef = Eigen::VectorXd::Zero(kV);
  std::vector<double> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (w.done()) throw Error(ErrorCode::IllegalToken, "tokens continue after end of sequence");
    w.prepare();
    const Eigen::Index a = w.index_of(tokens[i]);
    out.push_back(w.logprob(a));
    w.accumulate(a, weight(i, out.back()), grad, kgram_coef);
    w.take(tokens[i]);
  }
  if (!w.done()) throw Error(ErrorCode::IllegalToken, "token sequence ends before end of sequence");
  flush_kgram(w, kgram_coef, policy.layout(), grad);
  return out;
}

std::vector<double> accumulate_weighted_grad(const Policy& policy, const std::vector<TokenId>& tokens,
                                             const AminoAcidSeq& p, const std::vector<double>& step_weight, double tau,
                                             Eigen::MatrixXd& grad) {
  if (step_weight.size() != tokens.size()) throw Error(ErrorCode::TraceMismatch, "one weight per token required");
  return accumulate_grad(policy, tokens, p, tau, [&](std::size_t t, double) { return step_weight[t]; }, grad);
}

Eigen::MatrixXd grad_logprob(const Policy& policy, const Transcript& t, const AminoAcidSeq& p, double tau) {
  const auto tokens = tokenize(t);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(kV, policy.dimension());
  accumulate_weighted_grad(policy, tokens, p, std::vector<double>(tokens.size(), 1.0), tau, g);
  return g;
}

std::size_t free_steps(const std::vector<TokenId>& tokens, const AminoAcidSeq& p, const DecodeConfig& cfg) {
  DecodeState s;
  std::size_t n = 0;
  for (TokenId t : tokens) {
    if (legal_tokens(s, p, cfg).size() > 1) ++n;
    advance(s, t, p, cfg);
  }
  return n;
}

// ---------------------------------------------------------------------------
// Supervised pretraining

namespace {

struct Encoded {
  const AminoAcidSeq* protein;
  std::vector<TokenId> tokens;
  std::size_t free = 0;
};

std::vector<Encoded> encode_corpus(const std::vector<CorpusPair>& corpus, const DecodeConfig& cfg) {
  std::vector<Encoded> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Encoded e{&corpus[i].protein, tokenize(corpus[i].transcript), 0};
    try {
      e.free = free_steps(e.tokens, corpus[i].protein, cfg);
    } catch (const Error& err) {
      throw Error(err.code(), "corpus pair " + std::to_string(i) + ": " + err.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

/// Mean NLL per free step and, when grad is given, its gradient (of the NLL).
double nll_and_grad(const Policy& policy, const std::vector<Encoded>& data, std::size_t total_free, unsigned threads,
                    Eigen::MatrixXd* grad) {
  std::vector<double> nll(data.size(), 0.0);
  std::vector<Eigen::MatrixXd> parts(grad ? data.size() : 0);
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const auto& e = data[i];
    std::vector<double> lp;
    if (grad) {
      parts[i] = Eigen::MatrixXd::Zero(kV, policy.dimension());
      lp = accumulate_weighted_grad(policy, e.tokens, *e.protein,
                                    std::vector<double>(e.tokens.size(), -1.0 / static_cast<double>(total_free)), 1.0,
                                    parts[i]);
    } else {
      lp = logprob_trace(policy, e.tokens, *e.protein);
    }
    for (double v : lp) nll[i] -= v;
  });
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += nll[i];
    if (grad) *grad += parts[i];
  }
  return total / static_cast<double>(total_free);
}

}  // namespace

double corpus_nll(const Policy& policy, const std::vector<CorpusPair>& corpus) {
  const auto data = encode_corpus(corpus, policy.config().decode);
  std::size_t total = 0;
  for (const auto& e : data) total += e.free;
  if (total == 0) return 0.0;
  return nll_and_grad(policy, data, total, 1, nullptr);
}

PretrainResult mle_pretrain(const Policy& init, const std::vector<CorpusPair>& corpus, double lr, int epochs,
                            unsigned threads) {
  if (epochs < 0 || !(lr >= 0.0)) throw Error(ErrorCode::BadInput, "epochs and lr must be non-negative");
  PretrainResult out{init, {}, 0.0};
  const auto data = encode_corpus(corpus, init.config().decode);
  std::size_t total = 0;
  for (const auto& e : data) total += e.free;
  if (total == 0) return out;
  Eigen::MatrixXd grad(kV, init.dimension());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    grad.setZero();
    out.loss_trace.push_back(nll_and_grad(out.policy, data, total, threads, &grad));
    out.policy.weights() -= lr * grad;
  }
  out.final_loss = nll_and_grad(out.policy, data, total, 1, nullptr);
  return out;
}

}  // namespace mrnaopt
