#include "mrnaopt/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "mrnaopt/error.hpp"

namespace mrnaopt {

namespace {

std::string trim(std::string s) {
  auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return in;
}

}  // namespace

std::vector<ProteinRecord> read_fasta(std::istream& in) {
  std::vector<ProteinRecord> out;
  std::string line, id, seq;
  bool open = false;
  auto flush = [&] {
    if (!open) return;
    try {
      out.push_back({id, AminoAcidSeq(seq)});
    } catch (const Error& e) {
      throw Error(e.code(), "record '" + id + "': " + e.what());
    }
  };
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '>') {
      flush();
      id = trim(line.substr(1));
      if (auto sp = id.find_first_of(" \t"); sp != std::string::npos) id.resize(sp);
      seq.clear();
      open = true;
      continue;
    }
    if (!open) throw Error(ErrorCode::BadFormat, "FASTA sequence data before the first header");
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) seq.push_back(static_cast<char>(std::toupper(c)));
    }
  }
  flush();
  return out;
}

std::vector<ProteinRecord> read_fasta_file(const std::string& path) {
  auto in = open_input(path);
  return read_fasta(in);
}

std::vector<Transcript> read_transcripts_jsonl(std::istream& in) {
  std::vector<Transcript> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BadFormat, "line " + std::to_string(lineno) + ": " + e.what());
    }
    auto field = [&](const char* name) -> std::string {
      if (!j.contains(name) || !j[name].is_string()) {
        throw Error(ErrorCode::BadFormat, "line " + std::to_string(lineno) + ": missing string field '" + name + "'");
      }
      return j[name].get<std::string>();
    };
    std::string id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                             : "tx" + std::to_string(lineno);
    out.push_back(Transcript::from_regions(field("utr5"), field("cds"), field("utr3"), std::move(id)));
  }
  return out;
}

std::vector<Transcript> read_transcripts_jsonl_file(const std::string& path) {
  auto in = open_input(path);
  return read_transcripts_jsonl(in);
}

std::string transcript_to_json_line(const Transcript& t) {
  nlohmann::ordered_json j;
  if (!t.id.empty()) j["id"] = t.id;
  j["utr5"] = t.utr5;
  j["cds"] = t.cds_string();
  j["utr3"] = t.utr3;
  return j.dump();
}

std::string read_text_file(const std::string& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

// ---------------------------------------------------------------------------
// RecordFile

namespace {

constexpr char kMagic[8] = {'M', 'R', 'N', 'A', 'O', 'P', 'T', '\0'};
constexpr std::uint8_t kReals = 1;
constexpr std::uint8_t kInts = 2;
constexpr std::uint8_t kString = 3;

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

class Cursor {
 public:
  explicit Cursor(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::BadFormat, "record file truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void put_name(std::string& out, const std::string& name) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out += name;
}

}  // namespace

void RecordFile::set_reals(const std::string& name, std::span<const double> values) {
  reals_[name].assign(values.begin(), values.end());
}

void RecordFile::set_ints(const std::string& name, std::span<const std::int64_t> values) {
  ints_[name].assign(values.begin(), values.end());
}

void RecordFile::set_string(const std::string& name, std::string value) { strings_[name] = std::move(value); }

bool RecordFile::has(const std::string& name) const {
  return reals_.contains(name) || ints_.contains(name) || strings_.contains(name);
}

const std::vector<double>& RecordFile::reals(const std::string& name) const {
  auto it = reals_.find(name);
  if (it == reals_.end()) throw Error(ErrorCode::BadFormat, kind_ + ": missing real field '" + name + "'");
  return it->second;
}

const std::vector<std::int64_t>& RecordFile::ints(const std::string& name) const {
  auto it = ints_.find(name);
  if (it == ints_.end()) throw Error(ErrorCode::BadFormat, kind_ + ": missing integer field '" + name + "'");
  return it->second;
}

const std::string& RecordFile::string(const std::string& name) const {
  auto it = strings_.find(name);
  if (it == strings_.end()) throw Error(ErrorCode::BadFormat, kind_ + ": missing string field '" + name + "'");
  return it->second;
}

double RecordFile::real(const std::string& name) const {
  const auto& v = reals(name);
  if (v.size() != 1) throw Error(ErrorCode::BadFormat, kind_ + ": field '" + name + "' is not a scalar");
  return v[0];
}

std::int64_t RecordFile::integer(const std::string& name) const {
  const auto& v = ints(name);
  if (v.size() != 1) throw Error(ErrorCode::BadFormat, kind_ + ": field '" + name + "' is not a scalar");
  return v[0];
}

std::string RecordFile::serialize() const {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_name(out, kind_);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(reals_.size() + ints_.size() + strings_.size()));
  for (const auto& [name, v] : reals_) {
    put_name(out, name);
    out.push_back(static_cast<char>(kReals));
    put_le<std::uint64_t>(out, v.size());
    for (double x : v) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  }
  for (const auto& [name, v] : ints_) {
    put_name(out, name);
    out.push_back(static_cast<char>(kInts));
    put_le<std::uint64_t>(out, v.size());
    for (std::int64_t x : v) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(x));
  }
  for (const auto& [name, s] : strings_) {
    put_name(out, name);
    out.push_back(static_cast<char>(kString));
    put_le<std::uint64_t>(out, s.size());
    out += s;
  }
  return out;
}

RecordFile RecordFile::deserialize(std::string_view bytes, std::string_view expected_kind) {
  Cursor in(bytes);
  if (in.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw Error(ErrorCode::BadFormat, "not a record file");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) throw Error(ErrorCode::BadFormat, "unsupported record file version " + std::to_string(version));
  RecordFile f(std::string(in.take(in.get<std::uint32_t>())));
  if (!expected_kind.empty() && f.kind_ != expected_kind) {
    throw Error(ErrorCode::BadFormat, "expected a '" + std::string(expected_kind) + "' file, found '" + f.kind_ + "'");
  }
  const auto count = in.get<std::uint32_t>();
  for (std::uint32_t r = 0; r < count; ++r) {
    std::string name(in.take(in.get<std::uint32_t>()));
    const auto type = in.get<std::uint8_t>();
    const auto n = in.get<std::uint64_t>();
    switch (type) {
      case kReals: {
        auto& v = f.reals_[name];
        v.resize(n);
        for (auto& x : v) x = std::bit_cast<double>(in.get<std::uint64_t>());
        break;
      }
      case kInts: {
        auto& v = f.ints_[name];
        v.resize(n);
        for (auto& x : v) x = static_cast<std::int64_t>(in.get<std::uint64_t>());
        break;
      }
      case kString:
        f.strings_[name] = std::string(in.take(n));
        break;
      default:
        throw Error(ErrorCode::BadFormat, "unknown field type " + std::to_string(type));
    }
  }
  if (!in.done()) throw Error(ErrorCode::BadFormat, "trailing bytes in record file");
  return f;
}

void RecordFile::save(const std::string& path) const { write_text_file(path, serialize()); }

RecordFile RecordFile::load(const std::string& path, std::string_view expected_kind) {
  return deserialize(read_text_file(path), expected_kind);
}

}  // namespace mrnaopt
