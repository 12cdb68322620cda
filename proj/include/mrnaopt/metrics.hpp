#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrnaopt/fold.hpp"
#include "mrnaopt/proxy.hpp"
#include "mrnaopt/seqcore.hpp"

namespace mrnaopt {

// ---------------------------------------------------------------------------
// Composition

/// Fraction of 'U' in a nucleotide string. Throws EmptySeq.
double u_content(std::string_view seq);
double u_content(const Transcript& t);

/// Fraction of 'G' or 'C'. Throws EmptySeq.
double gc_content(std::string_view seq);
double gc_content(const Transcript& t);

// ---------------------------------------------------------------------------
// UTR length prior

struct UtrLengthPrior {
  double mu5 = 120.0;
  double sigma5 = 50.0;
  double mu3 = 272.0;
  double sigma3 = 200.0;
};

/// Sum of two unnormalised Gaussians of the UTR lengths, in [0, 2]. Throws NonpositiveSigma.
double utr_plausibility(double utr5_len, double utr3_len, const UtrLengthPrior& prior = {});

// ---------------------------------------------------------------------------
// Codon adaptation

/// Reference codon frequencies indexed by codon id.
class CodonUsage {
 public:
  /// Parses lines of `XYZ<TAB>frequency`; '#' comments and blank lines are skipped.
  /// Every one of the 64 codons must appear exactly once.
  static CodonUsage parse(std::string_view text);
  static CodonUsage load(const std::string& path);
  /// Human genome-wide usage (per thousand codons).
  static const CodonUsage& human();

  double frequency(int codon) const { return freq_[static_cast<std::size_t>(codon)]; }

  /// freq(c) / max freq over c's synonyms. Frequencies of zero are replaced by `pseudo_count`.
  double relative_adaptiveness(int codon, double pseudo_count = 0.0,
                               const CodonTable& table = CodonTable::standard()) const;

 private:
  std::array<double, 64> freq_{};
};

/// Geometric mean of relative adaptiveness over sense codons; stop codons are skipped.
/// Throws ZeroFreq when a used codon has zero frequency and pseudo_count is 0; BadCodon; EmptySeq
/// when there is no sense codon.
double cai(const std::vector<std::string>& cds, const CodonUsage& usage = CodonUsage::human(),
           double pseudo_count = 0.0);

// ---------------------------------------------------------------------------
// Structure-derived metrics

struct RegionalMfe {
  double leader = 0.0;  // 5'UTR + first `leader_codons` codons
  double body = 0.0;    // the rest of the transcript
  bool cds_too_short = false;
};

/// Folds the leader and body separately and length-normalises each. An empty region scores 0.
/// When the CDS has fewer than `leader_codons` codons, the leader takes the whole CDS and
/// cds_too_short is set.
RegionalMfe regional_mfe(const Transcript& t, const EnergyModel& model = EnergyModel::standard(),
                         std::size_t beam = 100, std::size_t leader_codons = 10);

std::vector<std::string> default_tlr_motifs();
/// One motif per line; blank lines and '#' comments skipped. Motifs must be ACGU.
std::vector<std::string> load_motifs(const std::string& path);

/// Occurrences (overlapping) of any motif whose every base is unpaired in `s`.
int tlr_motif_count(std::string_view seq, const SecondaryStructure& s, const std::vector<std::string>& motifs);
/// Same count ignoring structure.
int motif_count(std::string_view seq, const std::vector<std::string>& motifs);

// ---------------------------------------------------------------------------
// Objective and diagnostic vectors

inline constexpr std::size_t kNumObjectives = 5;

enum class Metric { HalfLife = 0, Te = 1, MfeNorm = 2, UContent = 3, UtrPlausibility = 4 };

inline constexpr std::array<std::string_view, kNumObjectives> kMetricNames = {
    "half_life", "te", "mfe_norm", "u_content", "utr_plausibility"};

/// Throws BadInput for an unknown name.
Metric metric_from_name(std::string_view name);
std::string_view metric_name(Metric m);

struct MetricVector {
  bool valid = false;
  ValidityReport validity;
  // Meaningful only when valid.
  std::array<double, kNumObjectives> values{};

  double operator[](Metric m) const { return values[static_cast<std::size_t>(m)]; }
  double half_life() const { return (*this)[Metric::HalfLife]; }
  double te() const { return (*this)[Metric::Te]; }
  double mfe_norm() const { return (*this)[Metric::MfeNorm]; }
  double u_content() const { return (*this)[Metric::UContent]; }
  double utr_plausibility() const { return (*this)[Metric::UtrPlausibility]; }
};

struct DiagnosticVector {
  double gc_content = 0.0;
  double cai = 0.0;
  double leader_mfe_norm = 0.0;
  double body_mfe_norm = 0.0;
  bool cds_too_short = false;
  int tlr_motif_count = 0;
  std::size_t utr5_len = 0;
  std::size_t utr3_len = 0;
};

struct ScoringConfig {
  EnergyModel energy = EnergyModel::standard();
  std::size_t beam = 100;
  ValidityConfig validity;
  UtrLengthPrior prior;
  std::size_t leader_codons = 10;
  double cai_pseudo_count = 0.0;
};

/// Structure of the full transcript used by validity, MFE and motif accessibility.
SecondaryStructure fold_transcript(const Transcript& t, const ScoringConfig& cfg = {});

/// Validity first; invalid transcripts get no scores. Without predictors, half-life and TE are
/// left as NaN so an objective that needs them cannot silently use a placeholder.
/// `structure`, when given, must be fold_transcript(t, cfg).
MetricVector score_transcript(const Transcript& t, const AminoAcidSeq& target, const Predictors* predictors,
                              const ScoringConfig& cfg = {}, const SecondaryStructure* structure = nullptr);

DiagnosticVector compute_diagnostics(const Transcript& t, const SecondaryStructure& structure,
                                     const ScoringConfig& cfg = {}, const CodonUsage& usage = CodonUsage::human(),
                                     const std::vector<std::string>& motifs = default_tlr_motifs());

}  // namespace mrnaopt
