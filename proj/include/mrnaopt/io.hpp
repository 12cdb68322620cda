#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrnaopt/seqcore.hpp"

namespace mrnaopt {

struct ProteinRecord {
  std::string id;
  AminoAcidSeq protein;
};

/// '>' header lines start records; sequence lines are concatenated with whitespace removed.
std::vector<ProteinRecord> read_fasta(std::istream& in);
std::vector<ProteinRecord> read_fasta_file(const std::string& path);

/// One JSON object per line: "utr5", "cds" (concatenated), "utr3", optional "id".
/// Records without an id get "tx<line>" (1-based). Blank lines are skipped.
std::vector<Transcript> read_transcripts_jsonl(std::istream& in);
std::vector<Transcript> read_transcripts_jsonl_file(const std::string& path);
std::string transcript_to_json_line(const Transcript& t);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

/// Versioned binary container of named fields.
///
/// Layout (all integers little-endian):
///   "MRNAOPT\0"  u32 version  u32 kind_len  kind  u32 field_count
///   field: u32 name_len  name  u8 type  u64 count  payload
///   type 1 = f64 array (IEEE-754, little-endian), 2 = i64 array, 3 = UTF-8 string (count bytes)
class RecordFile {
 public:
  static constexpr std::uint32_t kVersion = 1;

  explicit RecordFile(std::string kind = {}) : kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

  void set_reals(const std::string& name, std::span<const double> values);
  void set_ints(const std::string& name, std::span<const std::int64_t> values);
  void set_string(const std::string& name, std::string value);

  bool has(const std::string& name) const;
  const std::vector<double>& reals(const std::string& name) const;
  const std::vector<std::int64_t>& ints(const std::string& name) const;
  const std::string& string(const std::string& name) const;
  double real(const std::string& name) const;
  std::int64_t integer(const std::string& name) const;

  std::string serialize() const;
  static RecordFile deserialize(std::string_view bytes, std::string_view expected_kind);

  void save(const std::string& path) const;
  static RecordFile load(const std::string& path, std::string_view expected_kind);

 private:
  std::string kind_;
  std::map<std::string, std::vector<double>> reals_;
  std::map<std::string, std::vector<std::int64_t>> ints_;
  std::map<std::string, std::string> strings_;
};

}  // namespace mrnaopt
