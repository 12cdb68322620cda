#include "mrnaopt/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "embedded_data.hpp"
#include "mrnaopt/io.hpp"

namespace mrnaopt {

namespace {

double fraction_of(std::string_view seq, std::string_view letters) {
  if (seq.empty()) throw Error(ErrorCode::EmptySeq, "composition of an empty sequence");
  const auto hits = std::count_if(seq.begin(), seq.end(), [&](char c) { return letters.find(c) != std::string_view::npos; });
  return static_cast<double>(hits) / static_cast<double>(seq.size());
}

bool is_acgu(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return nucleotide_index(c) >= 0; });
}

double normalized_or_zero(std::string_view seq, const EnergyModel& model, std::size_t beam) {
  return seq.empty() ? 0.0 : normalized_mfe(seq, model, beam);
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

double u_content(std::string_view seq) { return fraction_of(seq, "U"); }
double u_content(const Transcript& t) { return u_content(t.full_sequence()); }
double gc_content(std::string_view seq) { return fraction_of(seq, "GC"); }
double gc_content(const Transcript& t) { return gc_content(t.full_sequence()); }

double utr_plausibility(double utr5_len, double utr3_len, const UtrLengthPrior& prior) {
  if (!(prior.sigma5 > 0.0) || !(prior.sigma3 > 0.0)) {
    throw Error(ErrorCode::NonpositiveSigma, "UTR length prior needs sigma > 0");
  }
  const double z5 = (utr5_len - prior.mu5) / prior.sigma5;
  const double z3 = (utr3_len - prior.mu3) / prior.sigma3;
  return std::exp(-0.5 * z5 * z5) + std::exp(-0.5 * z3 * z3);
}

// ---------------------------------------------------------------------------

CodonUsage CodonUsage::parse(std::string_view text) {
  CodonUsage u;
  std::array<bool, 64> seen{};
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string codon;
    double freq = 0.0;
    if (!(fields >> codon >> freq)) throw Error(ErrorCode::BadFormat, "codon usage line " + std::to_string(lineno));
    const int c = codon_index(codon);
    if (c < 0) throw Error(ErrorCode::BadCodon, "codon usage line " + std::to_string(lineno) + ": '" + codon + "'");
    if (seen[static_cast<std::size_t>(c)]) throw Error(ErrorCode::BadFormat, "duplicate codon " + codon);
    if (!(freq >= 0.0) || !std::isfinite(freq)) throw Error(ErrorCode::BadFormat, "negative frequency for " + codon);
    seen[static_cast<std::size_t>(c)] = true;
    u.freq_[static_cast<std::size_t>(c)] = freq;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw Error(ErrorCode::BadFormat, "codon usage table must list all 64 codons");
  }
  return u;
}

CodonUsage CodonUsage::load(const std::string& path) { return parse(read_text_file(path)); }

const CodonUsage& CodonUsage::human() {
  static const CodonUsage table = parse(embedded::kHumanCodonUsage);
  return table;
}

double CodonUsage::relative_adaptiveness(int codon, double pseudo_count, const CodonTable& table) const {
  auto eff = [&](int c) {
    const double f = frequency(c);
    return f > 0.0 ? f : pseudo_count;
  };
  double best = 0.0;
  for (int s : table.synonyms(table.amino_acid(codon))) best = std::max(best, eff(s));
  const double f = eff(codon);
  if (!(f > 0.0)) throw Error(ErrorCode::ZeroFreq, "codon " + codon_string(codon) + " has zero reference frequency");
  return f / best;
}

double cai(const std::vector<std::string>& cds, const CodonUsage& usage, double pseudo_count) {
  const CodonTable& table = CodonTable::standard();
  double log_sum = 0.0;
  std::size_t n = 0;
  for (const auto& codon : cds) {
    const int c = codon_index(codon);
    if (c < 0) throw Error(ErrorCode::BadCodon, "'" + codon + "'");
    if (table.is_stop(c)) continue;
    log_sum += std::log(usage.relative_adaptiveness(c, pseudo_count, table));
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::EmptySeq, "CAI needs at least one sense codon");
  return std::exp(log_sum / static_cast<double>(n));
}

// ---------------------------------------------------------------------------

RegionalMfe regional_mfe(const Transcript& t, const EnergyModel& model, std::size_t beam, std::size_t leader_codons) {
  RegionalMfe r;
  r.cds_too_short = t.cds.size() < leader_codons;
  const std::size_t split = std::min(leader_codons, t.cds.size());
  std::string leader = t.utr5;
  std::string body;
  for (std::size_t i = 0; i < t.cds.size(); ++i) (i < split ? leader : body) += t.cds[i];
  body += t.utr3;
  r.leader = normalized_or_zero(leader, model, beam);
  r.body = normalized_or_zero(body, model, beam);
  return r;
}

std::vector<std::string> default_tlr_motifs() {
  static const std::vector<std::string> motifs = [] {
    std::vector<std::string> out;
    std::istringstream in{std::string(embedded::kTlrMotifs)};
    for (std::string line; std::getline(in, line);) {
      line = trim(line);
      if (!line.empty() && line[0] != '#') out.push_back(line);
    }
    return out;
  }();
  return motifs;
}

std::vector<std::string> load_motifs(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!is_acgu(line)) throw Error(ErrorCode::BadAlphabet, path + ": motif '" + line + "'");
    out.push_back(line);
  }
  return out;
}

namespace {

template <typename Accept>
int count_motifs(std::string_view seq, const std::vector<std::string>& motifs, Accept accept) {
  int total = 0;
  for (const auto& m : motifs) {
    if (m.empty() || m.size() > seq.size()) continue;
    for (std::size_t i = 0; i + m.size() <= seq.size(); ++i) {
      if (seq.compare(i, m.size(), m) == 0 && accept(i, m.size())) ++total;
    }
  }
  return total;
}

}  // namespace

int tlr_motif_count(std::string_view seq, const SecondaryStructure& s, const std::vector<std::string>& motifs) {
  std::vector<char> paired(seq.size(), 0);
  for (auto [i, j] : s.pairs) {
    if (static_cast<std::size_t>(j) >= seq.size()) throw Error(ErrorCode::BadInput, "structure longer than sequence");
    paired[static_cast<std::size_t>(i)] = paired[static_cast<std::size_t>(j)] = 1;
  }
  return count_motifs(seq, motifs, [&](std::size_t i, std::size_t len) {
    return std::none_of(paired.begin() + static_cast<std::ptrdiff_t>(i),
                        paired.begin() + static_cast<std::ptrdiff_t>(i + len), [](char p) { return p != 0; });
  });
}

int motif_count(std::string_view seq, const std::vector<std::string>& motifs) {
  return count_motifs(seq, motifs, [](std::size_t, std::size_t) { return true; });
}

// ---------------------------------------------------------------------------

Metric metric_from_name(std::string_view name) {
  for (std::size_t k = 0; k < kNumObjectives; ++k) {
    if (kMetricNames[k] == name) return static_cast<Metric>(k);
  }
  throw Error(ErrorCode::BadInput, "unknown metric '" + std::string(name) + "'");
}

std::string_view metric_name(Metric m) { return kMetricNames[static_cast<std::size_t>(m)]; }

SecondaryStructure fold_transcript(const Transcript& t, const ScoringConfig& cfg) {
  return fold_beam(t.full_sequence(), cfg.energy, cfg.beam);
}

MetricVector score_transcript(const Transcript& t, const AminoAcidSeq& target, const Predictors* predictors,
                              const ScoringConfig& cfg, const SecondaryStructure* structure) {
  const std::string seq = t.full_sequence();
  MetricVector mv;
  SecondaryStructure folded;
  if (!structure) {
    // A sequence outside ACGU already fails BAD_BOUNDARY; check the rest against an open chain.
    if (!seq.empty() && is_acgu(seq)) folded = fold_beam(seq, cfg.energy, cfg.beam);
    structure = &folded;
  }
  mv.validity = check_validity(t, target, *structure, cfg.validity);
  mv.valid = mv.validity.valid;
  if (!mv.valid) return mv;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto set = [&](Metric m, double v) { mv.values[static_cast<std::size_t>(m)] = v; };
  set(Metric::HalfLife, predictors ? predict_sequence(predictors->half_life, seq) : nan);
  set(Metric::Te, predictors ? predict_sequence(predictors->te, seq) : nan);
  set(Metric::MfeNorm, structure->energy / static_cast<double>(seq.size()));
  set(Metric::UContent, u_content(seq));
  set(Metric::UtrPlausibility, utr_plausibility(static_cast<double>(t.utr5.size()), static_cast<double>(t.utr3.size()),
                                                cfg.prior));
  return mv;
}

DiagnosticVector compute_diagnostics(const Transcript& t, const SecondaryStructure& structure,
                                     const ScoringConfig& cfg, const CodonUsage& usage,
                                     const std::vector<std::string>& motifs) {
  const std::string seq = t.full_sequence();
  DiagnosticVector d;
  d.gc_content = gc_content(seq);
  d.cai = cai(t.cds, usage, cfg.cai_pseudo_count);
  const RegionalMfe r = regional_mfe(t, cfg.energy, cfg.beam, cfg.leader_codons);
  d.leader_mfe_norm = r.leader;
  d.body_mfe_norm = r.body;
  d.cds_too_short = r.cds_too_short;
  d.tlr_motif_count = tlr_motif_count(seq, structure, motifs);
  d.utr5_len = t.utr5.size();
  d.utr3_len = t.utr3.size();
  return d;
}

}  // namespace mrnaopt
