#include "mrnaopt/mogrpo.hpp"

#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mrnaopt/parallel.hpp"

namespace mrnaopt {

Eigen::VectorXd ObjectiveConfig::weights() const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(terms.size()));
  for (std::size_t k = 0; k < terms.size(); ++k) w(static_cast<Eigen::Index>(k)) = terms[k].weight;
  return w;
}

Eigen::VectorXd ObjectiveConfig::dampings() const {
  Eigen::VectorXd d(static_cast<Eigen::Index>(terms.size()));
  for (std::size_t k = 0; k < terms.size(); ++k) d(static_cast<Eigen::Index>(k)) = terms[k].damping;
  return d;
}

bool ObjectiveConfig::needs_predictors() const {
  return std::any_of(terms.begin(), terms.end(), [](const ObjectiveTerm& t) {
    return t.weight != 0.0 && (t.metric == Metric::HalfLife || t.metric == Metric::Te);
  });
}

void ObjectiveConfig::validate() const {
  if (terms.empty()) throw Error(ErrorCode::BadInput, "at least one objective is required");
  if (std::all_of(terms.begin(), terms.end(), [](const ObjectiveTerm& t) { return t.weight == 0.0; })) {
    throw Error(ErrorCode::BadInput, "objective weights are all zero");
  }
  for (const auto& t : terms) {
    if (!std::isfinite(t.weight)) throw Error(ErrorCode::BadInput, "objective weight must be finite");
    if (!(t.damping >= 0.0) || !std::isfinite(t.damping)) throw Error(ErrorCode::BadInput, "damping must be >= 0");
  }
  if (!(clip > 0.0)) throw Error(ErrorCode::BadInput, "clip bound must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw Error(ErrorCode::BadInput, "KL coefficient must be >= 0");
}

// ---------------------------------------------------------------------------

std::size_t RolloutGroup::token_count() const {
  std::size_t n = 0;
  for (const auto& t : tokens) n += t.size();
  return n;
}

void RolloutGroup::check() const {
  const std::size_t G = tokens.size();
  if (old_logprobs.size() != G || metrics.size() != G || (!ref_logprobs.empty() && ref_logprobs.size() != G)) {
    throw Error(ErrorCode::TraceMismatch, "group members, traces and metrics differ in count");
  }
  for (std::size_t i = 0; i < G; ++i) {
    if (old_logprobs[i].size() != tokens[i].size() || (!ref_logprobs.empty() && ref_logprobs[i].size() != tokens[i].size())) {
      throw Error(ErrorCode::TraceMismatch, "log-prob trace of member " + std::to_string(i) + " does not match its tokens");
    }
  }
}

LossResult mogrpo_loss(const RolloutGroup& group, const Eigen::VectorXd& advantage, const Policy& policy,
                       const Policy& reference, double beta, double tau) {
  group.check();
  if (advantage.size() != static_cast<Eigen::Index>(group.size())) {
    throw Error(ErrorCode::TraceMismatch, "one advantage per group member required");
  }
  LossResult r;
  r.grad = Eigen::MatrixXd::Zero(policy.weights().rows(), policy.weights().cols());
  const std::size_t T = group.token_count();
  if (T == 0) return r;
  const double inv_t = 1.0 / static_cast<double>(T);

  double objective = 0.0;
  double kl = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const auto& tokens = group.tokens[i];
    const auto ref = group.ref_logprobs.empty() ? logprob_trace(reference, tokens, group.protein, tau)
                                                : group.ref_logprobs[i];
    const auto& old = group.old_logprobs[i];
    const double a = advantage(static_cast<Eigen::Index>(i));
    accumulate_grad(
        policy, tokens, group.protein, tau,
        [&](std::size_t t, double lp) {
          const double rho = std::exp(lp - old[t]);
          const double k3 = kl_term(lp, old[t], ref[t]);
          objective += rho * a - beta * k3;
          kl += k3;
          return inv_t * rho * (a - beta * (lp - ref[t]));
        },
        r.grad);
  }
  r.objective = objective * inv_t;
  r.kl_mean = kl * inv_t;
  return r;
}

// ---------------------------------------------------------------------------
// Run configuration

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "objectives", "clip", "beta", "group_size", "batch_prompts", "steps", "lr", "warmup", "momentum",
      "temperature", "seed", "threads", "beam", "max_helix", "min_utr5", "min_utr3", "max_utr5", "max_utr3",
      "max_tokens"};
  return keys;
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadFormat, std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadFormat, std::string("run config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::BadFormat, "run config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().contains(key)) throw Error(ErrorCode::BadFormat, "unknown run config key '" + key + "'");
  }

  RunConfig c;
  if (j.contains("objectives")) {
    if (!j["objectives"].is_array()) throw Error(ErrorCode::BadFormat, "'objectives' must be an array");
    c.objective.terms.clear();
    for (const auto& o : j["objectives"]) {
      if (!o.is_object()) throw Error(ErrorCode::BadFormat, "each objective must be an object with 'metric' and 'weight'");
      ObjectiveTerm t;
      std::string metric;
      read(o, "metric", metric);
      t.metric = metric_from_name(metric);
      read(o, "weight", t.weight);
      read(o, "damping", t.damping);
      c.objective.terms.push_back(t);
    }
  }
  if (j.contains("clip")) {
    const auto& v = j["clip"];
    if (v.is_string() && v.get<std::string>() == "inf") {
      c.objective.clip = std::numeric_limits<double>::infinity();
    } else {
      read(j, "clip", c.objective.clip);
    }
  }
  read(j, "beta", c.objective.beta);
  read(j, "group_size", c.group_size);
  read(j, "batch_prompts", c.batch_prompts);
  read(j, "steps", c.steps);
  read(j, "lr", c.lr);
  read(j, "warmup", c.warmup);
  read(j, "momentum", c.momentum);
  read(j, "temperature", c.temperature);
  read(j, "seed", c.seed);
  read(j, "threads", c.threads);
  read(j, "beam", c.scoring.beam);
  read(j, "max_helix", c.scoring.validity.max_helix);
  read(j, "min_utr5", c.decode.min_utr5);
  read(j, "min_utr3", c.decode.min_utr3);
  read(j, "max_utr5", c.decode.max_utr5);
  read(j, "max_utr3", c.decode.max_utr3);
  read(j, "max_tokens", c.decode.max_tokens);
  c.scoring.validity.min_utr5 = c.decode.min_utr5;
  c.scoring.validity.min_utr3 = c.decode.min_utr3;
  c.validate();
  return c;
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  auto& objs = j["objectives"] = nlohmann::ordered_json::array();
  for (const auto& t : objective.terms) {
    objs.push_back({{"metric", std::string(metric_name(t.metric))}, {"weight", t.weight}, {"damping", t.damping}});
  }
  if (std::isinf(objective.clip)) {
    j["clip"] = "inf";
  } else {
    j["clip"] = objective.clip;
  }
  j["beta"] = objective.beta;
  j["group_size"] = group_size;
  j["batch_prompts"] = batch_prompts;
  j["steps"] = steps;
  j["lr"] = lr;
  j["warmup"] = warmup;
  j["momentum"] = momentum;
  j["temperature"] = temperature;
  j["seed"] = seed;
  j["threads"] = threads;
  j["beam"] = scoring.beam;
  j["max_helix"] = scoring.validity.max_helix;
  j["min_utr5"] = decode.min_utr5;
  j["min_utr3"] = decode.min_utr3;
  j["max_utr5"] = decode.max_utr5;
  j["max_utr3"] = decode.max_utr3;
  j["max_tokens"] = decode.max_tokens;
  return j.dump(2);
}

void RunConfig::validate() const {
  objective.validate();
  if (group_size < 2) throw Error(ErrorCode::BadInput, "group_size must be >= 2");
  if (batch_prompts < 1) throw Error(ErrorCode::BadInput, "batch_prompts must be >= 1");
  if (steps < 0 || warmup < 0) throw Error(ErrorCode::BadInput, "steps and warmup must be >= 0");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(ErrorCode::BadInput, "lr must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::BadInput, "momentum must be in [0, 1)");
  if (!(temperature > 0.0)) throw Error(ErrorCode::BadInput, "temperature must be positive");
  if (scoring.beam == 0) throw Error(ErrorCode::BadInput, "beam must be >= 1");
}

double warmup_lr(double lr, int warmup, int step) {
  if (warmup <= 0) return lr;
  return lr * std::min(1.0, static_cast<double>(step + 1) / static_cast<double>(warmup));
}

// ---------------------------------------------------------------------------

namespace {

struct ScoredRollout {
  Rollout rollout;
  std::vector<double> ref_logprobs;
  MetricVector metrics;
};

std::vector<std::size_t> pick_prompts(std::size_t pool, int batch, std::uint64_t seed, int step) {
  std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(step), 0xba7c4ULL}));
  std::vector<std::size_t> out;
  if (pool >= static_cast<std::size_t>(batch)) {
    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (int b = 0; b < batch; ++b) {
      std::uniform_int_distribution<std::size_t> d(static_cast<std::size_t>(b), pool - 1);
      std::swap(idx[static_cast<std::size_t>(b)], idx[d(rng)]);
      out.push_back(idx[static_cast<std::size_t>(b)]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> d(0, pool - 1);
    for (int b = 0; b < batch; ++b) out.push_back(d(rng));
  }
  return out;
}

}  // namespace

TrainResult rl_train(const Policy& init, const std::vector<AminoAcidSeq>& prompts, const Predictors* predictors,
                     const RunConfig& cfg, const StepCallback& on_step) {
  cfg.validate();
  if (prompts.empty()) throw Error(ErrorCode::BadInput, "prompt pool is empty");
  if (cfg.objective.needs_predictors() && !predictors) {
    throw Error(ErrorCode::BadInput, "objectives use half_life or te but no predictors were given");
  }
  for (const auto& p : prompts) check_decode_feasible(p, cfg.decode);

  PolicyConfig pc = init.config();
  pc.decode = cfg.decode;
  TrainResult out{Policy(pc), {}};
  out.policy.weights() = init.weights();
  const Policy reference = out.policy;
  Policy& policy = out.policy;

  const auto B = static_cast<std::size_t>(cfg.batch_prompts);
  const auto G = static_cast<std::size_t>(cfg.group_size);
  const auto K = static_cast<Eigen::Index>(cfg.objective.terms.size());
  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(policy.weights().rows(), policy.weights().cols());

  for (int step = 0; step < cfg.steps; ++step) {
    const auto batch = pick_prompts(prompts.size(), cfg.batch_prompts, cfg.seed, step);

    std::vector<ScoredRollout> rollouts(B * G);
    parallel_for(B * G, cfg.threads, [&](std::size_t r) {
      const std::size_t b = r / G;
      const std::size_t g = r % G;
      const AminoAcidSeq& p = prompts[batch[b]];
      auto& s = rollouts[r];
      s.rollout = sample_transcript(policy, p, cfg.temperature, derive_seed(cfg.seed, {static_cast<std::uint64_t>(step), b, g}));
      const SecondaryStructure structure = fold_transcript(s.rollout.transcript, cfg.scoring);
      s.metrics = score_transcript(s.rollout.transcript, p, predictors, cfg.scoring, &structure);
      s.ref_logprobs = logprob_trace(reference, s.rollout.tokens, p, cfg.temperature);
    });

    StepLog log;
    log.step = step;
    std::array<double, kNumObjectives> sums{};
    std::size_t n_valid = 0;
    for (const auto& s : rollouts) {
      if (!s.metrics.valid) continue;
      ++n_valid;
      for (std::size_t k = 0; k < kNumObjectives; ++k) sums[k] += s.metrics.values[k];
    }
    for (std::size_t k = 0; k < kNumObjectives; ++k) {
      log.valid_mean[k] = n_valid ? sums[k] / static_cast<double>(n_valid) : std::numeric_limits<double>::quiet_NaN();
    }
    log.invalid_rate = 1.0 - static_cast<double>(n_valid) / static_cast<double>(B * G);

    // Groups and advantages. A group with no valid member has A_i = -c for all i, which centres
    // to zero, so it contributes only through the KL term.
    std::vector<RolloutGroup> groups(B, RolloutGroup{prompts[batch[0]], {}, {}, {}, {}});
    std::vector<Eigen::VectorXd> adv(B);
    std::size_t usable = 0;
    double abs_adv = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      RolloutGroup& grp = groups[b];
      grp.protein = prompts[batch[b]];
      Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(G), K);
      std::vector<bool> valid(G);
      for (std::size_t g = 0; g < G; ++g) {
        auto& s = rollouts[b * G + g];
        valid[g] = s.metrics.valid;
        if (valid[g]) {
          for (Eigen::Index k = 0; k < K; ++k) {
            scores(static_cast<Eigen::Index>(g), k) = s.metrics[cfg.objective.terms[static_cast<std::size_t>(k)].metric];
          }
        }
        grp.tokens.push_back(std::move(s.rollout.tokens));
        grp.old_logprobs.push_back(std::move(s.rollout.logprobs));
        grp.ref_logprobs.push_back(std::move(s.ref_logprobs));
        grp.metrics.push_back(s.metrics);
      }
      if (std::none_of(valid.begin(), valid.end(), [](bool v) { return v; })) {
        adv[b] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(G));
      } else {
        adv[b] = aggregate_advantage(scores, valid, cfg.objective).centered;
        ++usable;
      }
      abs_adv += adv[b].cwiseAbs().sum();
    }
    log.mean_abs_advantage = abs_adv / static_cast<double>(B * G);
    log.lr = warmup_lr(cfg.lr, cfg.warmup, step);

    if (usable == 0) {
      log.skipped = true;
      out.log.push_back(log);
      if (on_step) on_step(log);
      continue;
    }

    std::vector<LossResult> losses(B);
    parallel_for(B, cfg.threads, [&](std::size_t b) {
      losses[b] = mogrpo_loss(groups[b], adv[b], policy, reference, cfg.objective.beta, cfg.temperature);
    });
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(policy.weights().rows(), policy.weights().cols());
    for (const auto& l : losses) {
      grad += l.grad;
      log.objective += l.objective;
      log.kl_mean += l.kl_mean;
    }
    grad /= static_cast<double>(B);
    log.objective /= static_cast<double>(B);
    log.kl_mean /= static_cast<double>(B);

    velocity = cfg.momentum * velocity + grad;
    policy.weights() += log.lr * velocity;
    out.log.push_back(log);
    if (on_step) on_step(log);
  }
  return out;
}

std::string step_log_csv(const std::vector<StepLog>& log) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "step";
  for (auto name : kMetricNames) out << ',' << name;
  out << ",invalid_rate,mean_A_abs,kl_mean\n";
  for (const auto& s : log) {
    out << s.step;
    for (double v : s.valid_mean) out << ',' << v;
    out << ',' << s.invalid_rate << ',' << s.mean_abs_advantage << ',' << s.kl_mean << '\n';
  }
  return out.str();
}

}  // namespace mrnaopt
