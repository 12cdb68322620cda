// Command-line front end: validation, folding, scoring, proxy training, policy training,
// candidate generation and pool reports.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mrnaopt/io.hpp"
#include "mrnaopt/metrics.hpp"
#include "mrnaopt/mogrpo.hpp"
#include "mrnaopt/policy.hpp"
#include "mrnaopt/proxy.hpp"
#include "mrnaopt/report.hpp"

namespace fs = std::filesystem;
using namespace mrnaopt;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string config;
};

RunConfig load_run_config(const Globals& g) {
  RunConfig c = g.config.empty() ? RunConfig{} : RunConfig::from_json(read_text_file(g.config));
  c.threads = g.threads;
  return c;
}

AminoAcidSeq first_protein(const std::string& path) {
  const auto recs = read_fasta_file(path);
  if (recs.empty()) throw Error(ErrorCode::BadInput, path + ": no protein records");
  if (recs.size() > 1) std::cerr << "note: " << path << " has " << recs.size() << " records; using '" << recs[0].id << "'\n";
  return recs[0].protein;
}

std::optional<Predictors> maybe_predictors(const std::string& dir) {
  if (dir.empty()) return std::nullopt;
  return load_predictors(dir);
}

/// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_text_file(path, content);
  }
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

std::string join_violations(const ValidityReport& r) {
  std::string out;
  for (auto v : r.violations) {
    if (!out.empty()) out += ';';
    out += to_string(v);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string part; std::getline(in, part, sep);) out.push_back(part);
  return out;
}

// ---------------------------------------------------------------------------

void cmd_validate(const Globals& g, const std::string& protein_path, const std::string& tx_path, const std::string& out) {
  const RunConfig rc = load_run_config(g);
  const AminoAcidSeq p = first_protein(protein_path);
  std::ostringstream csv;
  csv << "id,valid,violations,max_helix\n";
  for (const auto& t : read_transcripts_jsonl_file(tx_path)) {
    const std::string seq = t.full_sequence();
    const bool foldable = !seq.empty() && seq.find_first_not_of("ACGU") == std::string::npos;
    const SecondaryStructure s = foldable ? fold_transcript(t, rc.scoring) : SecondaryStructure{};
    const auto r = check_validity(t, p, s, rc.scoring.validity);
    csv << t.id << ',' << (r.valid ? 1 : 0) << ',' << join_violations(r) << ','
        << max_helix_len(s, rc.scoring.validity.helix_bulge_tolerance) << '\n';
  }
  emit(out, csv.str());
}

void cmd_fold(const std::string& seq, std::size_t beam, bool exact) {
  const SecondaryStructure s = exact ? fold_exact(seq) : fold_beam(seq, EnergyModel::standard(), beam);
  std::cout << seq << '\n' << to_dot_bracket(s, seq.size()) << '\n' << std::fixed << std::setprecision(2) << s.energy << '\n';
}

void cmd_score(const Globals& g, const std::string& protein_path, const std::string& tx_path, const std::string& pred_dir,
               const std::string& out) {
  const RunConfig rc = load_run_config(g);
  const AminoAcidSeq p = first_protein(protein_path);
  const auto predictors = maybe_predictors(pred_dir);
  std::vector<Candidate> input;
  for (auto& t : read_transcripts_jsonl_file(tx_path)) input.push_back({std::move(t), {}, {}, Source::External});
  const CandidatePool pool = score_pool(input, p, predictors ? &*predictors : nullptr, rc.scoring, g.threads);

  std::ostringstream csv;
  csv << "id,valid,violations";
  for (const auto& name : summary_metric_names()) csv << ',' << name;
  csv << '\n';
  for (const auto& c : pool.members()) {
    csv << c.transcript.id << ',' << (c.metrics.valid ? 1 : 0) << ',' << join_violations(c.metrics.validity);
    for (const auto& name : summary_metric_names()) csv << ',' << (c.metrics.valid ? fmt(candidate_value(c, name)) : "");
    csv << '\n';
  }
  emit(out, csv.str());
  if (pool.duplicates) std::cerr << pool.duplicates << " duplicate transcript(s) dropped\n";
}

void cmd_train_proxy(const Globals& g, const std::string& data, const std::string& out, const std::string& report_path,
                     int kmer, int folds, int repeats) {
  const auto rows = read_training_csv(data);
  std::vector<std::string> seqs;
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    seqs.push_back(rows[i].sequence);
    y(static_cast<Eigen::Index>(i)) = rows[i].label;
  }
  auto result = grid_search_cv(featurize_all(seqs, kmer), y, default_alpha_grid(), folds, repeats, g.seed);
  result.model.kmer = kmer;
  save_ridge_model(result.model, out);
  emit(report_path, result.report.to_json() + "\n");
  std::cerr << "alpha " << result.report.chosen_alpha << "  SRCC " << result.report.srcc << "  MAE " << result.report.mae
            << '\n';
}

void cmd_pretrain(const Globals& g, const std::string& corpus_path, const std::string& out, const std::string& init,
                  double lr, int epochs, const std::string& log_path) {
  const RunConfig rc = load_run_config(g);
  std::vector<CorpusPair> corpus;
  for (auto& t : read_transcripts_jsonl_file(corpus_path)) {
    AminoAcidSeq p = translate(t.cds);
    corpus.push_back({std::move(p), std::move(t)});
  }
  if (corpus.empty()) throw Error(ErrorCode::BadInput, corpus_path + ": empty corpus");
  PolicyConfig pc;
  pc.decode = rc.decode;
  const Policy start = init.empty() ? Policy(pc) : load_policy(init);
  const PretrainResult r = mle_pretrain(start, corpus, lr, epochs, g.threads);
  save_policy(r.policy, out);
  std::ostringstream csv;
  csv << "epoch,nll\n";
  for (std::size_t e = 0; e < r.loss_trace.size(); ++e) csv << e << ',' << fmt(r.loss_trace[e]) << '\n';
  if (!log_path.empty()) write_text_file(log_path, csv.str());
  std::cerr << "final NLL per free step " << r.final_loss << '\n';
}

void cmd_rl_train(const Globals& g, const std::string& ckpt, const std::string& out, const std::string& prompts_path,
                  const std::string& pred_dir, const std::string& log_path) {
  if (g.config.empty()) throw Error(ErrorCode::BadInput, "rl-train needs --config");
  RunConfig rc = load_run_config(g);
  rc.seed = g.seed;
  std::vector<AminoAcidSeq> prompts;
  for (auto& r : read_fasta_file(prompts_path)) prompts.push_back(r.protein);
  const auto predictors = maybe_predictors(pred_dir);
  const Policy init = load_policy(ckpt);
  const TrainResult r = rl_train(init, prompts, predictors ? &*predictors : nullptr, rc, [](const StepLog& s) {
    if (s.step % 10 == 0 || s.skipped) {
      std::cerr << "step " << s.step << (s.skipped ? " skipped" : "") << "  invalid " << s.invalid_rate << "  |A| "
                << s.mean_abs_advantage << "  kl " << s.kl_mean << '\n';
    }
  });
  save_policy(r.policy, out);
  if (!log_path.empty()) write_text_file(log_path, step_log_csv(r.log));
}

void cmd_generate(const Globals& g, const std::string& ckpt, const std::string& protein_path, std::size_t n,
                  double temperature, const std::string& pred_dir, const std::string& source, const std::string& out) {
  const RunConfig rc = load_run_config(g);
  const Policy policy = load_policy(ckpt);
  const AminoAcidSeq p = first_protein(protein_path);
  const auto predictors = maybe_predictors(pred_dir);
  GenerateOptions opts;
  opts.n = n;
  opts.temperature = temperature;
  opts.seed = g.seed;
  opts.threads = g.threads;
  opts.source = source_from_string(source);
  opts.scoring = rc.scoring;
  const CandidatePool pool = generate_pool(policy, p, predictors ? &*predictors : nullptr, opts);
  std::string lines;
  for (const auto& c : pool.members()) lines += candidate_to_json_line(c) + '\n';
  emit(out, lines);
  std::cerr << "requested " << pool.requested << "  unique valid " << pool.size() << "  invalid " << pool.invalid
            << "  duplicates " << pool.duplicates << '\n';
}

void cmd_report(const Globals& g, const std::vector<std::string>& pools, const std::string& protein_path,
                const std::string& pred_dir, const std::string& pareto, const std::string& out_dir, int kmer) {
  const RunConfig rc = load_run_config(g);
  const AminoAcidSeq p = first_protein(protein_path);
  const auto predictors = maybe_predictors(pred_dir);
  std::vector<Candidate> all;
  for (const auto& path : pools) {
    for (auto& c : read_candidates_jsonl(path)) all.push_back(std::move(c));
  }
  const CandidatePool pool = score_pool(all, p, predictors ? &*predictors : nullptr, rc.scoring, g.threads);
  fs::create_directories(out_dir);

  // Distributions per source.
  std::ostringstream dist;
  dist << "source,metric,count,mean,std,min,q1,median,q3,max\n";
  for (Source src : {Source::Base, Source::Sft, Source::Rl, Source::External}) {
    CandidatePool part;
    for (const auto& c : pool.members()) {
      if (c.source == src) part.add(c);
    }
    if (part.valid_count() == 0) continue;
    for (const auto& name : summary_metric_names()) {
      std::vector<double> values;
      for (const auto& c : part.members()) {
        if (c.metrics.valid && std::isfinite(candidate_value(c, name))) values.push_back(candidate_value(c, name));
      }
      if (values.empty()) continue;
      const Summary s = summarize_values(std::move(values));
      dist << to_string(src) << ',' << name << ',' << s.count << ',' << fmt(s.mean) << ',' << fmt(s.stddev) << ','
           << fmt(s.min) << ',' << fmt(s.q1) << ',' << fmt(s.median) << ',' << fmt(s.q3) << ',' << fmt(s.max) << '\n';
    }
  }
  write_text_file((fs::path(out_dir) / "distributions.csv").string(), dist.str());

  // Frontier over valid members with finite values on every requested column.
  const auto columns = split(pareto, ',');
  std::vector<Direction> dirs;
  for (auto& col : columns) {
    const bool minimise = col == "mfe_norm" || col == "u_content";
    dirs.push_back(minimise ? Direction::Minimize : Direction::Maximize);
  }
  std::vector<const Candidate*> eligible;
  for (const auto& c : pool.members()) {
    if (!c.metrics.valid) continue;
    bool finite = true;
    for (const auto& col : columns) finite = finite && std::isfinite(candidate_value(c, col));
    if (finite) eligible.push_back(&c);
  }
  std::ostringstream front_csv;
  front_csv << "id,source";
  for (const auto& col : columns) front_csv << ',' << col;
  front_csv << '\n';
  if (!eligible.empty()) {
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(eligible.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < eligible.size(); ++i) {
      for (std::size_t d = 0; d < columns.size(); ++d) {
        pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = candidate_value(*eligible[i], columns[d]);
      }
    }
    for (Eigen::Index i : pareto_front(pts, dirs)) {
      const Candidate& c = *eligible[static_cast<std::size_t>(i)];
      front_csv << c.transcript.id << ',' << to_string(c.source);
      for (Eigen::Index d = 0; d < pts.cols(); ++d) front_csv << ',' << fmt(pts(i, d));
      front_csv << '\n';
    }
  } else {
    std::cerr << "no valid candidate has finite values for " << pareto << '\n';
  }
  write_text_file((fs::path(out_dir) / "frontier.csv").string(), front_csv.str());

  // k-mer composition of valid members.
  CandidatePool valid;
  for (const auto& c : pool.members()) {
    if (c.metrics.valid) valid.add(c);
  }
  const KmerMatrix km = kmer_matrix(valid, kmer);
  std::ostringstream kcsv;
  kcsv << "id,source";
  for (Eigen::Index j = 0; j < km.rows.cols(); ++j) {
    std::string name(static_cast<std::size_t>(kmer), 'A');
    for (int d = 0; d < kmer; ++d) name[static_cast<std::size_t>(kmer - 1 - d)] = kNucleotides[static_cast<std::size_t>((j >> (2 * d)) & 3)];
    kcsv << ',' << name;
  }
  kcsv << '\n';
  for (std::size_t i = 0; i < valid.size(); ++i) {
    const auto& c = valid.members()[i];
    kcsv << c.transcript.id << ',' << to_string(c.source);
    for (Eigen::Index j = 0; j < km.rows.cols(); ++j) kcsv << ',' << fmt(km.rows(static_cast<Eigen::Index>(i), j));
    kcsv << '\n';
  }
  write_text_file((fs::path(out_dir) / "kmers.csv").string(), kcsv.str());
  std::cerr << pool.size() << " unique candidates (" << pool.valid_count() << " valid, " << pool.duplicates
            << " duplicates dropped)\n";
}

void cmd_synth_data(const Globals& g, std::size_t n, std::size_t min_len, std::size_t max_len, double noise, int kmer,
                    const std::string& out) {
  const auto data = synthetic_dataset(n, min_len, max_len, noise, g.seed, kmer);
  write_training_csv(out, data.rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mRNA design toolkit: folding, scoring, proxy training, MO-GRPO and candidate reports"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Run configuration (JSON)")->check(CLI::ExistingFile);

  std::string protein, transcripts, out, predictors, seq, data, report, corpus, init, ckpt, prompts, log, source = "RL",
                                                                                                     pareto = "half_life,te";
  std::vector<std::string> pools;
  std::size_t beam = 100, n = 10000, min_len = 50, max_len = 300;
  bool exact = false;
  int kmer = kDefaultKmer, folds = 5, repeats = 3, epochs = 100;
  double lr = 0.5, temperature = 1.0, noise = 0.1;

  auto* validate = app.add_subcommand("validate", "Check transcripts against a target protein");
  validate->add_option("--protein", protein, "Target protein FASTA")->required()->check(CLI::ExistingFile);
  validate->add_option("--transcripts", transcripts, "Transcripts JSONL")->required()->check(CLI::ExistingFile);
  validate->add_option("--out", out, "CSV output (default stdout)");

  auto* fold = app.add_subcommand("fold", "Minimum free energy structure of one sequence");
  fold->add_option("--seq", seq, "RNA sequence")->required();
  fold->add_option("--beam", beam, "Beam width")->capture_default_str()->check(CLI::PositiveNumber);
  fold->add_flag("--exact", exact, "Exact cubic-time folding");

  auto* score = app.add_subcommand("score", "Objective and diagnostic metrics for transcripts");
  score->add_option("--protein", protein, "Target protein FASTA")->required()->check(CLI::ExistingFile);
  score->add_option("--transcripts", transcripts, "Transcripts JSONL")->required()->check(CLI::ExistingFile);
  score->add_option("--predictors", predictors, "Directory with half_life.model and te.model")->check(CLI::ExistingDirectory);
  score->add_option("--out", out, "CSV output (default stdout)");

  auto* train_proxy = app.add_subcommand("train-proxy", "Fit a ridge proxy predictor with repeated CV");
  train_proxy->add_option("--data", data, "Training CSV (sequence,label)")->required()->check(CLI::ExistingFile);
  train_proxy->add_option("--out", out, "Model file")->required();
  train_proxy->add_option("--report", report, "CV report JSON (default stdout)");
  train_proxy->add_option("--kmer", kmer, "k-mer size")->capture_default_str()->check(CLI::Range(1, 7));
  train_proxy->add_option("--folds", folds, "Folds")->capture_default_str()->check(CLI::Range(2, 1000));
  train_proxy->add_option("--repeats", repeats, "Repeats")->capture_default_str()->check(CLI::PositiveNumber);

  auto* pretrain = app.add_subcommand("pretrain", "Supervised pretraining on a transcript corpus");
  pretrain->add_option("--corpus", corpus, "Transcripts JSONL; proteins come from the CDS")->required()->check(CLI::ExistingFile);
  pretrain->add_option("--out", out, "Output checkpoint")->required();
  pretrain->add_option("--init", init, "Starting checkpoint")->check(CLI::ExistingFile);
  pretrain->add_option("--lr", lr, "Learning rate")->capture_default_str();
  pretrain->add_option("--epochs", epochs, "Full-batch epochs")->capture_default_str();
  pretrain->add_option("--log", log, "Per-epoch loss CSV");

  auto* rl = app.add_subcommand("rl-train", "MO-GRPO fine-tuning");
  rl->add_option("--ckpt", ckpt, "Starting checkpoint")->required()->check(CLI::ExistingFile);
  rl->add_option("--out", out, "Output checkpoint")->required();
  rl->add_option("--prompts", prompts, "Prompt proteins FASTA")->required()->check(CLI::ExistingFile);
  rl->add_option("--predictors", predictors, "Directory with half_life.model and te.model")->check(CLI::ExistingDirectory);
  rl->add_option("--log", log, "Per-step metric CSV");

  auto* generate = app.add_subcommand("generate", "Sample a candidate pool");
  generate->add_option("--ckpt", ckpt, "Policy checkpoint")->required()->check(CLI::ExistingFile);
  generate->add_option("--protein", protein, "Target protein FASTA")->required()->check(CLI::ExistingFile);
  generate->add_option("-n", n, "Samples to draw")->capture_default_str();
  generate->add_option("--temperature", temperature, "Sampling temperature")->capture_default_str();
  generate->add_option("--predictors", predictors, "Directory with half_life.model and te.model")->check(CLI::ExistingDirectory);
  generate->add_option("--source", source, "Source tag: BASE, SFT, RL or EXTERNAL")->capture_default_str();
  generate->add_option("--out", out, "JSONL output (default stdout)");

  auto* rep = app.add_subcommand("report", "Distributions, Pareto frontier and k-mer matrix of candidate pools");
  rep->add_option("--pools", pools, "Candidate JSONL files")->required()->check(CLI::ExistingFile);
  rep->add_option("--protein", protein, "Target protein FASTA")->required()->check(CLI::ExistingFile);
  rep->add_option("--predictors", predictors, "Directory with half_life.model and te.model")->check(CLI::ExistingDirectory);
  rep->add_option("--pareto", pareto, "Comma-separated frontier metrics")->capture_default_str();
  rep->add_option("--out-dir", out, "Output directory")->required();
  rep->add_option("--kmer", kmer, "k-mer size")->capture_default_str()->check(CLI::Range(1, 7));

  auto* synth = app.add_subcommand("synth-data", "Synthetic labelled sequences for proxy training");
  synth->add_option("-n", n, "Rows")->capture_default_str();
  synth->add_option("--min-len", min_len, "Minimum length")->capture_default_str();
  synth->add_option("--max-len", max_len, "Maximum length")->capture_default_str();
  synth->add_option("--noise", noise, "Label noise std")->capture_default_str();
  synth->add_option("--kmer", kmer, "k-mer size of the generating model")->capture_default_str()->check(CLI::Range(1, 7));
  synth->add_option("--out", out, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*validate) cmd_validate(g, protein, transcripts, out);
    if (*fold) cmd_fold(seq, beam, exact);
    if (*score) cmd_score(g, protein, transcripts, predictors, out);
    if (*train_proxy) cmd_train_proxy(g, data, out, report, kmer, folds, repeats);
    if (*pretrain) cmd_pretrain(g, corpus, out, init, lr, epochs, log);
    if (*rl) cmd_rl_train(g, ckpt, out, prompts, predictors, log);
    if (*generate) cmd_generate(g, ckpt, protein, n, temperature, predictors, source, out);
    if (*rep) cmd_report(g, pools, protein, predictors, pareto, out, kmer);
    if (*synth) cmd_synth_data(g, n, min_len, max_len, noise, kmer, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_validation_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
