#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "mrnaopt/error.hpp"
#include "mrnaopt/fold.hpp"

namespace mrnaopt {

// Nucleotide index order is A, C, G, U everywhere (codon ids, k-mer columns, tokens).
inline constexpr std::string_view kNucleotides = "ACGU";
inline constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr char kStopSymbol = '*';

/// Index of a nucleotide in "ACGU", or -1.
int nucleotide_index(char c) noexcept;
/// Index of an amino acid in kAminoAcids, or -1.
int amino_acid_index(char c) noexcept;

/// Codon id in [0, 64) for a 3-nt ACGU string, or -1.
int codon_index(std::string_view codon) noexcept;
std::string codon_string(int index);

/// Protein prompt. Always nonempty, starts with Met, canonical residues only.
class AminoAcidSeq {
 public:
  explicit AminoAcidSeq(std::string residues);

  const std::string& residues() const noexcept { return residues_; }
  std::size_t size() const noexcept { return residues_.size(); }
  char operator[](std::size_t i) const { return residues_[i]; }

  friend bool operator==(const AminoAcidSeq&, const AminoAcidSeq&) = default;

 private:
  std::string residues_;
};

/// Standard genetic code.
class CodonTable {
 public:
  static const CodonTable& standard();

  /// Amino acid letter or '*' for a stop codon id.
  char amino_acid(int codon) const { return code_[static_cast<std::size_t>(codon)]; }
  bool is_stop(int codon) const { return amino_acid(codon) == kStopSymbol; }
  /// Synonymous codon ids in ascending order; '*' gives the stop codons.
  const std::vector<int>& synonyms(char amino_acid) const;
  const std::vector<int>& stop_codons() const { return synonyms(kStopSymbol); }

 private:
  explicit CodonTable(std::string_view code);

  std::string code_;
  std::array<std::vector<int>, 21> synonyms_;
};

struct Transcript {
  std::string utr5;
  std::vector<std::string> cds;  // codons; a malformed frame leaves a short last entry
  std::string utr3;
  std::string id;

  /// Splits a concatenated CDS into codons. A trailing partial codon is kept as-is.
  static Transcript from_regions(std::string utr5, std::string_view cds, std::string utr3,
                                 std::string id = {});

  std::string cds_string() const;
  std::string full_sequence() const;
  std::size_t length() const { return utr5.size() + 3 * cds.size() + utr3.size(); }

  friend bool operator==(const Transcript& a, const Transcript& b) {
    return a.utr5 == b.utr5 && a.cds == b.cds && a.utr3 == b.utr3;
  }
};

/// Translates a CDS that ends in exactly one stop codon. Throws NoStop, InternalStop, BadCodon.
AminoAcidSeq translate(const std::vector<std::string>& cds,
                       const CodonTable& table = CodonTable::standard());

/// Number of distinct CDSs encoding `protein`, ignoring the stop codon choice.
boost::multiprecision::cpp_int count_cds_space(const AminoAcidSeq& protein,
                                               const CodonTable& table = CodonTable::standard());

// ---------------------------------------------------------------------------
// Hybrid vocabulary: one token per nucleotide in UTRs, one per codon in the CDS.

using TokenId = int;

struct Vocabulary {
  static constexpr TokenId kBos = 0;  // decoder prefix only, never emitted
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUtr5Sep = 2;
  static constexpr TokenId kCdsSep = 3;
  static constexpr TokenId kUtr3Sep = 4;
  static constexpr TokenId kFirstNucleotide = 5;
  static constexpr TokenId kFirstCodon = 9;
  static constexpr int kSize = 73;

  static constexpr TokenId nucleotide(int index) { return kFirstNucleotide + index; }
  static constexpr TokenId codon(int index) { return kFirstCodon + index; }
  static constexpr bool is_nucleotide(TokenId t) { return t >= kFirstNucleotide && t < kFirstCodon; }
  static constexpr bool is_codon(TokenId t) { return t >= kFirstCodon && t < kSize; }
  static constexpr int nucleotide_of(TokenId t) { return t - kFirstNucleotide; }
  static constexpr int codon_of(TokenId t) { return t - kFirstCodon; }

  static std::string name(TokenId t);
};

/// [utr5-sep] utr5 [cds-sep] codons [utr3-sep] utr3 [eos]. Throws BadToken on malformed input.
std::vector<TokenId> tokenize(const Transcript& t);
Transcript detokenize(const std::vector<TokenId>& tokens);

// ---------------------------------------------------------------------------
// Post-hoc validity

enum class Violation {
  BadBoundary,
  BadStart,
  BadStop,
  FrameError,
  TranslationMismatch,
  LongHelix,
  UtrTooShort,
};

std::string_view to_string(Violation v);

struct ValidityConfig {
  int max_helix = 33;       // helices with this many stacked pairs or more are invalid
  int helix_bulge_tolerance = 0;
  std::size_t min_utr5 = 20;
  std::size_t min_utr3 = 30;
};

struct ValidityReport {
  bool valid = true;
  std::vector<Violation> violations;

  bool has(Violation v) const;
};

/// Runs every check and reports all failures. `structure` must be the fold of t.full_sequence().
ValidityReport check_validity(const Transcript& t, const AminoAcidSeq& target,
                              const SecondaryStructure& structure,
                              const ValidityConfig& cfg = {},
                              const CodonTable& table = CodonTable::standard());

}  // namespace mrnaopt
