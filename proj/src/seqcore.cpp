#include "mrnaopt/seqcore.hpp"

#include <algorithm>

#include "mrnaopt/error.hpp"

namespace mrnaopt {

namespace {

// Standard genetic code, codons enumerated in ACGU order (AAA, AAC, AAG, AAU, ACA, ...).
constexpr std::string_view kStandardCode =
    "KNKNTTTTRSRSIIMI"
    "QHQHPPPPRRRRLLLL"
    "EDEDAAAAGGGGVVVV"
    "*Y*YSSSS*CWCLFLF";

std::size_t synonym_slot(char aa) {
  if (aa == kStopSymbol) return 20;
  const int idx = amino_acid_index(aa);
  if (idx < 0) throw Error(ErrorCode::BadProtein, "unknown amino acid '" + std::string(1, aa) + "'");
  return static_cast<std::size_t>(idx);
}

}  // namespace

int nucleotide_index(char c) noexcept {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'U': return 3;
    default: return -1;
  }
}

int amino_acid_index(char c) noexcept {
  const auto pos = kAminoAcids.find(c);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

int codon_index(std::string_view codon) noexcept {
  if (codon.size() != 3) return -1;
  int idx = 0;
  for (char c : codon) {
    const int n = nucleotide_index(c);
    if (n < 0) return -1;
    idx = 4 * idx + n;
  }
  return idx;
}

std::string codon_string(int index) {
  std::string s(3, 'A');
  for (int k = 2; k >= 0; --k) {
    s[static_cast<std::size_t>(k)] = kNucleotides[static_cast<std::size_t>(index % 4)];
    index /= 4;
  }
  return s;
}

AminoAcidSeq::AminoAcidSeq(std::string residues) : residues_(std::move(residues)) {
  if (residues_.empty()) throw Error(ErrorCode::BadProtein, "empty protein");
  if (residues_.front() != 'M') throw Error(ErrorCode::BadProtein, "protein must start with M");
  for (std::size_t i = 0; i < residues_.size(); ++i) {
    if (amino_acid_index(residues_[i]) < 0) {
      throw Error(ErrorCode::BadProtein,
                  "non-canonical residue '" + std::string(1, residues_[i]) + "' at " + std::to_string(i));
    }
  }
}

const CodonTable& CodonTable::standard() {
  static const CodonTable table(kStandardCode);
  return table;
}

CodonTable::CodonTable(std::string_view code) : code_(code) {
  for (int c = 0; c < 64; ++c) synonyms_[synonym_slot(code_[static_cast<std::size_t>(c)])].push_back(c);
}

const std::vector<int>& CodonTable::synonyms(char amino_acid) const {
  return synonyms_[synonym_slot(amino_acid)];
}

Transcript Transcript::from_regions(std::string utr5, std::string_view cds, std::string utr3, std::string id) {
  Transcript t;
  t.utr5 = std::move(utr5);
  t.utr3 = std::move(utr3);
  t.id = std::move(id);
  for (std::size_t p = 0; p < cds.size(); p += 3) t.cds.emplace_back(cds.substr(p, 3));
  return t;
}

std::string Transcript::cds_string() const {
  std::string s;
  s.reserve(3 * cds.size());
  for (const auto& c : cds) s += c;
  return s;
}

std::string Transcript::full_sequence() const { return utr5 + cds_string() + utr3; }

AminoAcidSeq translate(const std::vector<std::string>& cds, const CodonTable& table) {
  if (cds.empty()) throw Error(ErrorCode::NoStop, "empty CDS");
  std::string protein;
  protein.reserve(cds.size());
  for (std::size_t i = 0; i < cds.size(); ++i) {
    const int c = codon_index(cds[i]);
    if (c < 0) throw Error(ErrorCode::BadCodon, "codon " + std::to_string(i) + " '" + cds[i] + "'");
    const bool last = i + 1 == cds.size();
    if (table.is_stop(c)) {
      if (!last) throw Error(ErrorCode::InternalStop, "stop codon at position " + std::to_string(i));
    } else {
      if (last) throw Error(ErrorCode::NoStop, "CDS does not end with a stop codon");
      protein.push_back(table.amino_acid(c));
    }
  }
  return AminoAcidSeq(std::move(protein));
}

boost::multiprecision::cpp_int count_cds_space(const AminoAcidSeq& protein, const CodonTable& table) {
  boost::multiprecision::cpp_int n = 1;
  for (char aa : protein.residues()) n *= table.synonyms(aa).size();
  return n;
}

std::string Vocabulary::name(TokenId t) {
  switch (t) {
    case kBos: return "<s>";
    case kEos: return "</s>";
    case kUtr5Sep: return "<utr5>";
    case kCdsSep: return "<cds>";
    case kUtr3Sep: return "<utr3>";
    default: break;
  }
  if (is_nucleotide(t)) return std::string(1, kNucleotides[static_cast<std::size_t>(nucleotide_of(t))]);
  if (is_codon(t)) return codon_string(codon_of(t));
  return "<unk:" + std::to_string(t) + ">";
}

namespace {

void append_nucleotides(std::vector<TokenId>& out, const std::string& region, const char* what) {
  for (char c : region) {
    const int n = nucleotide_index(c);
    if (n < 0) throw Error(ErrorCode::BadToken, std::string("bad nucleotide in ") + what);
    out.push_back(Vocabulary::nucleotide(n));
  }
}

}  // namespace

std::vector<TokenId> tokenize(const Transcript& t) {
  std::vector<TokenId> out;
  out.reserve(t.utr5.size() + t.cds.size() + t.utr3.size() + 4);
  out.push_back(Vocabulary::kUtr5Sep);
  append_nucleotides(out, t.utr5, "5'UTR");
  out.push_back(Vocabulary::kCdsSep);
  for (const auto& codon : t.cds) {
    const int c = codon_index(codon);
    if (c < 0) throw Error(ErrorCode::BadToken, "bad codon '" + codon + "'");
    out.push_back(Vocabulary::codon(c));
  }
  out.push_back(Vocabulary::kUtr3Sep);
  append_nucleotides(out, t.utr3, "3'UTR");
  out.push_back(Vocabulary::kEos);
  return out;
}

Transcript detokenize(const std::vector<TokenId>& tokens) {
  enum class Stage { Begin, Utr5, Cds, Utr3, Done } stage = Stage::Begin;
  Transcript t;
  for (TokenId tok : tokens) {
    switch (stage) {
      case Stage::Begin:
        if (tok != Vocabulary::kUtr5Sep) throw Error(ErrorCode::BadToken, "expected <utr5>");
        stage = Stage::Utr5;
        break;
      case Stage::Utr5:
        if (tok == Vocabulary::kCdsSep) {
          stage = Stage::Cds;
        } else if (Vocabulary::is_nucleotide(tok)) {
          t.utr5.push_back(kNucleotides[static_cast<std::size_t>(Vocabulary::nucleotide_of(tok))]);
        } else {
          throw Error(ErrorCode::BadToken, "unexpected " + Vocabulary::name(tok) + " in 5'UTR");
        }
        break;
      case Stage::Cds:
        if (tok == Vocabulary::kUtr3Sep) {
          stage = Stage::Utr3;
        } else if (Vocabulary::is_codon(tok)) {
          t.cds.push_back(codon_string(Vocabulary::codon_of(tok)));
        } else {
          throw Error(ErrorCode::BadToken, "unexpected " + Vocabulary::name(tok) + " in CDS");
        }
        break;
      case Stage::Utr3:
        if (tok == Vocabulary::kEos) {
          stage = Stage::Done;
        } else if (Vocabulary::is_nucleotide(tok)) {
          t.utr3.push_back(kNucleotides[static_cast<std::size_t>(Vocabulary::nucleotide_of(tok))]);
        } else {
          throw Error(ErrorCode::BadToken, "unexpected " + Vocabulary::name(tok) + " in 3'UTR");
        }
        break;
      case Stage::Done:
        throw Error(ErrorCode::BadToken, "tokens after </s>");
    }
  }
  if (stage != Stage::Done) throw Error(ErrorCode::BadToken, "token sequence not terminated");
  return t;
}

std::string_view to_string(Violation v) {
  switch (v) {
    case Violation::BadBoundary: return "BAD_BOUNDARY";
    case Violation::BadStart: return "BAD_START";
    case Violation::BadStop: return "BAD_STOP";
    case Violation::FrameError: return "FRAME_ERROR";
    case Violation::TranslationMismatch: return "TRANSLATION_MISMATCH";
    case Violation::LongHelix: return "LONG_HELIX";
    case Violation::UtrTooShort: return "UTR_TOO_SHORT";
  }
  return "UNKNOWN";
}

bool ValidityReport::has(Violation v) const {
  return std::find(violations.begin(), violations.end(), v) != violations.end();
}

ValidityReport check_validity(const Transcript& t, const AminoAcidSeq& target, const SecondaryStructure& structure,
                              const ValidityConfig& cfg, const CodonTable& table) {
  ValidityReport r;
  auto flag = [&](Violation v) {
    if (!r.has(v)) r.violations.push_back(v);
  };
  auto clean = [](const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return nucleotide_index(c) >= 0; });
  };

  // Region boundaries: every region must be pure ACGU and the CDS nonempty.
  bool cds_clean = true;
  for (const auto& c : t.cds) cds_clean = cds_clean && clean(c);
  if (!clean(t.utr5) || !clean(t.utr3) || !cds_clean || t.cds.empty()) flag(Violation::BadBoundary);

  bool frame_ok = !t.cds.empty();
  for (const auto& c : t.cds) frame_ok = frame_ok && c.size() == 3;
  if (!frame_ok) flag(Violation::FrameError);

  if (t.cds.empty() || t.cds.front() != "AUG") flag(Violation::BadStart);
  const int last = t.cds.empty() ? -1 : codon_index(t.cds.back());
  if (last < 0 || !table.is_stop(last)) flag(Violation::BadStop);

  bool translated = false;
  if (frame_ok && cds_clean) {
    try {
      translated = translate(t.cds, table) == target;
    } catch (const Error&) {
      translated = false;
    }
  }
  if (!translated) flag(Violation::TranslationMismatch);

  if (max_helix_len(structure, cfg.helix_bulge_tolerance) >= cfg.max_helix) flag(Violation::LongHelix);
  if (t.utr5.size() < cfg.min_utr5 || t.utr3.size() < cfg.min_utr3) flag(Violation::UtrTooShort);

  r.valid = r.violations.empty();
  return r;
}

}  // namespace mrnaopt
