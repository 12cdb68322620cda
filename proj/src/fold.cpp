#include "mrnaopt/fold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "mrnaopt/error.hpp"

namespace mrnaopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EnergyModel model_with(double au, double gc, double gu, double stack) {
  EnergyModel m;
  m.pair.fill(kInf);
  auto set = [&](int a, int b, double e) {
    m.pair[static_cast<std::size_t>(4 * a + b)] = e;
    m.pair[static_cast<std::size_t>(4 * b + a)] = e;
  };
  // A=0 C=1 G=2 U=3
  set(0, 3, au);
  set(1, 2, gc);
  set(2, 3, gu);
  m.stack = stack;
  return m;
}

}  // namespace

EnergyModel EnergyModel::standard() { return model_with(-2.0, -3.0, -1.0, -1.0); }
EnergyModel EnergyModel::unit() { return model_with(-1.0, -1.0, -1.0, 0.0); }
EnergyModel EnergyModel::no_pairs() {
  EnergyModel m;
  m.pair.fill(kInf);
  return m;
}

std::vector<int> encode_nucleotides(std::string_view seq) {
  std::vector<int> out(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    switch (seq[i]) {
      case 'A': out[i] = 0; break;
      case 'C': out[i] = 1; break;
      case 'G': out[i] = 2; break;
      case 'U': out[i] = 3; break;
      default:
        throw Error(ErrorCode::BadAlphabet,
                    "character '" + std::string(1, seq[i]) + "' at position " + std::to_string(i));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact DP
//
// P(i,j): best energy on [i..j] with (i,j) paired.
// X(i,j): best energy of a nonempty structure on [i..j] other than "(i,j) is the outer pair".
// N(i,j) = min(X, P). W(i,j) = min(0, N) and 0 for empty ranges.
//
// P(i,j) = pair(i,j) + min(hairpin, stack + P(i+1,j-1), X(i+1,j-1))
// X(i,j) = min(N(i+1,j), min_{k<j} P(i,k) + W(k+1,j))

namespace {

class ExactTables {
 public:
  explicit ExactTables(int n) : n_(n), p_(cells(n), kInf), x_(cells(n), kInf) {}

  double& p(int i, int j) { return p_[idx(i, j)]; }
  double& x(int i, int j) { return x_[idx(i, j)]; }
  double n_at(int i, int j) const {
    if (i > j) return kInf;
    return std::min(p_[idx(i, j)], x_[idx(i, j)]);
  }
  double w_at(int i, int j) const { return i > j ? 0.0 : std::min(0.0, n_at(i, j)); }

 private:
  static std::size_t cells(int n) { return static_cast<std::size_t>(n) * static_cast<std::size_t>(n); }
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
  }

  int n_;
  std::vector<double> p_;
  std::vector<double> x_;
};

}  // namespace

SecondaryStructure fold_exact(std::string_view seq, const EnergyModel& model, std::size_t max_length) {
  if (seq.size() > max_length) {
    throw Error(ErrorCode::SeqTooLong, "length " + std::to_string(seq.size()) + " exceeds oracle cap " +
                                           std::to_string(max_length));
  }
  const std::vector<int> s = encode_nucleotides(seq);
  const int n = static_cast<int>(s.size());
  SecondaryStructure out;
  if (n == 0) return out;

  ExactTables t(n);
  const int h = model.min_hairpin;

  auto pair_value = [&](int i, int j) {
    const double e = model.pair_energy(s[i], s[j]);
    double best = model.hairpin;
    if (i + 1 < j - 1) {
      best = std::min(best, model.stack + t.p(i + 1, j - 1));
      best = std::min(best, t.x(i + 1, j - 1));
    }
    return e + best;
  };

  for (int d = 0; d < n; ++d) {
    for (int i = 0; i + d < n; ++i) {
      const int j = i + d;
      if (j - i - 1 >= h && model.can_pair(s[i], s[j])) t.p(i, j) = pair_value(i, j);
      double best = t.n_at(i + 1, j);
      for (int k = i + h + 1; k < j; ++k) {
        const double pk = t.p(i, k);
        if (pk == kInf) continue;
        best = std::min(best, pk + t.w_at(k + 1, j));
      }
      t.x(i, j) = best;
    }
  }

  // Traceback. A range frame realises W (may be empty) or X (no outer pair (i,j)); for ties the
  // leftmost free base is paired first, with its nearest partner.
  struct Frame {
    int i, j;
    bool pair;
    bool outer_allowed;
    bool may_be_empty;
  };
  std::vector<Frame> todo;
  todo.push_back({0, n - 1, false, true, true});
  while (!todo.empty()) {
    const Frame f = todo.back();
    todo.pop_back();
    const int i = f.i, j = f.j;
    if (i > j) continue;
    if (f.pair) {
      out.pairs.emplace_back(i, j);
      const double e = model.pair_energy(s[i], s[j]);
      const double target = t.p(i, j);
      if (i + 1 < j - 1 && e + (model.stack + t.p(i + 1, j - 1)) == target) {
        todo.push_back({i + 1, j - 1, true, false, false});
      } else if (i + 1 < j - 1 && e + t.x(i + 1, j - 1) == target) {
        todo.push_back({i + 1, j - 1, false, false, false});
      }
      // otherwise a hairpin: nothing inside
      continue;
    }
    const double target = !f.outer_allowed ? t.x(i, j) : f.may_be_empty ? t.w_at(i, j) : t.n_at(i, j);
    if (f.may_be_empty && target >= 0.0) continue;  // empty range
    bool found = false;
    for (int k = i + h + 1; k < j; ++k) {
      const double pk = t.p(i, k);
      if (pk != kInf && pk + t.w_at(k + 1, j) == target) {
        todo.push_back({k + 1, j, false, true, true});
        todo.push_back({i, k, true, false, false});
        found = true;
        break;
      }
    }
    if (found) continue;
    if (f.outer_allowed && t.p(i, j) == target) {
      todo.push_back({i, j, true, false, false});
      continue;
    }
    // i unpaired: N(i+1, j) realises the value.
    todo.push_back({i + 1, j, false, true, false});
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  out.energy = t.w_at(0, n - 1);
  return out;
}

// ---------------------------------------------------------------------------
// Beam folder
//
// States are indexed by their right end j and left index i:
//   P_j[i]: (i,j) paired, value as in the exact DP.
//   L_j[i]: nonempty structure on [i..j] whose leftmost pair starts at i, excluding the
//           case where that pair is (i,j) itself.
// The exterior prefix C[j] (best structure on [0..j]) is exact over the kept pair states.
//
// P_j[i] = pair + min(hairpin, stack + P_{j-1}[i+1],
//                     min_{i' >= i+1} L_{j-1}[i'], min_{i' >= i+2} P_{j-1}[i'])
// L_j[i] = min(L_{j-1}[i], P_{j-1}[i], min_k (L_{k-1}[i] or P_{k-1}[i]) + P_j[k])
// C[j]   = min(C[j-1], min_k C[k-1] + P_j[k])

namespace {

enum class PairBack : std::uint8_t { Hairpin, Stack, WrapL, WrapP };
enum class LeftBack : std::uint8_t { ExtendL, ExtendP, ConcatL, ConcatP };

struct PairCell {
  int i;
  double v;
  PairBack back;
  int arg;  // i' for the wrap cases
};

struct LeftCell {
  int i;
  double v;
  LeftBack back;
  int arg;  // k for the concat cases
};

template <typename Cell>
void prune(std::vector<Cell>& cells, std::size_t beam) {
  if (beam != kUnboundedBeam && cells.size() > beam) {
    auto better = [](const Cell& a, const Cell& b) { return a.v < b.v || (a.v == b.v && a.i < b.i); };
    std::nth_element(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(beam), cells.end(), better);
    cells.resize(beam);
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.i < b.i; });
}

template <typename Cell>
const Cell* find_cell(const std::vector<Cell>& cells, int i) {
  auto it = std::lower_bound(cells.begin(), cells.end(), i, [](const Cell& c, int key) { return c.i < key; });
  return (it != cells.end() && it->i == i) ? &*it : nullptr;
}

// Suffix minimum over a cell list sorted by i: best (value, index) among cells with i >= key.
template <typename Cell>
class SuffixMin {
 public:
  explicit SuffixMin(const std::vector<Cell>& cells) : cells_(cells), best_(cells.size() + 1, -1) {
    for (std::size_t r = cells.size(); r-- > 0;) {
      const int prev = best_[r + 1];
      best_[r] = (prev < 0 || cells[r].v <= cells[static_cast<std::size_t>(prev)].v) ? static_cast<int>(r) : prev;
    }
  }

  /// Index into cells of the best cell with i >= key, or -1.
  int query(int key) const {
    auto it = std::lower_bound(cells_.begin(), cells_.end(), key, [](const Cell& c, int k) { return c.i < k; });
    return best_[static_cast<std::size_t>(it - cells_.begin())];
  }

 private:
  const std::vector<Cell>& cells_;
  std::vector<int> best_;
};

}  // namespace

SecondaryStructure fold_beam(std::string_view seq, const EnergyModel& model, std::size_t beam) {
  if (beam == 0) throw Error(ErrorCode::BadInput, "beam width must be at least 1");
  const std::vector<int> s = encode_nucleotides(seq);
  const int n = static_cast<int>(s.size());
  SecondaryStructure out;
  if (n == 0) return out;

  const int h = model.min_hairpin;
  std::vector<std::vector<PairCell>> pcells(static_cast<std::size_t>(n));
  std::vector<std::vector<LeftCell>> lcells(static_cast<std::size_t>(n));
  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);  // prefix[j+1] = C[j]
  std::vector<int> prefix_back(static_cast<std::size_t>(n) + 1, -1);  // k of the last pair, -1 = j unpaired

  // Dense scratch for L_j accumulation.
  std::vector<double> lval(static_cast<std::size_t>(n), kInf);
  std::vector<LeftBack> lback(static_cast<std::size_t>(n));
  std::vector<int> larg(static_cast<std::size_t>(n), -1);
  std::vector<int> touched;
  static const std::vector<PairCell> kNoPairs;
  static const std::vector<LeftCell> kNoLefts;

  for (int j = 0; j < n; ++j) {
    const auto& prev_p = j > 0 ? pcells[static_cast<std::size_t>(j - 1)] : kNoPairs;
    const auto& prev_l = j > 0 ? lcells[static_cast<std::size_t>(j - 1)] : kNoLefts;

    // Pair states ending at j.
    std::vector<PairCell> pj;
    {
      const SuffixMin<LeftCell> lmin(prev_l);
      const SuffixMin<PairCell> pmin(prev_p);
      for (int i = j - h - 1; i >= 0; --i) {
        if (!model.can_pair(s[i], s[j])) continue;
        PairCell c{i, model.hairpin, PairBack::Hairpin, -1};
        if (const PairCell* inner = find_cell(prev_p, i + 1); inner && i + 1 < j - 1) {
          const double v = model.stack + inner->v;
          if (v < c.v) c = {i, v, PairBack::Stack, i + 1};
        }
        if (const int r = lmin.query(i + 1); r >= 0) {
          const LeftCell& lc = prev_l[static_cast<std::size_t>(r)];
          if (lc.v < c.v) c = {i, lc.v, PairBack::WrapL, lc.i};
        }
        if (const int r = pmin.query(i + 2); r >= 0) {
          const PairCell& pc = prev_p[static_cast<std::size_t>(r)];
          if (pc.v < c.v) c = {i, pc.v, PairBack::WrapP, pc.i};
        }
        c.v += model.pair_energy(s[i], s[j]);
        pj.push_back(c);
      }
      prune(pj, beam);
    }

    // Left-anchored states ending at j.
    auto relax = [&](int i, double v, LeftBack b, int arg) {
      const auto ui = static_cast<std::size_t>(i);
      if (lval[ui] == kInf) touched.push_back(i);
      if (v < lval[ui]) {
        lval[ui] = v;
        lback[ui] = b;
        larg[ui] = arg;
      }
    };
    for (const LeftCell& c : prev_l) relax(c.i, c.v, LeftBack::ExtendL, -1);
    for (const PairCell& c : prev_p) relax(c.i, c.v, LeftBack::ExtendP, -1);
    for (const PairCell& pk : pj) {
      const int k = pk.i;
      if (k == 0) continue;
      for (const LeftCell& c : lcells[static_cast<std::size_t>(k - 1)]) relax(c.i, c.v + pk.v, LeftBack::ConcatL, k);
      for (const PairCell& c : pcells[static_cast<std::size_t>(k - 1)]) relax(c.i, c.v + pk.v, LeftBack::ConcatP, k);
    }
    std::vector<LeftCell> lj;
    lj.reserve(touched.size());
    for (int i : touched) {
      const auto ui = static_cast<std::size_t>(i);
      lj.push_back({i, lval[ui], lback[ui], larg[ui]});
      lval[ui] = kInf;
    }
    touched.clear();
    prune(lj, beam);

    // Exterior prefix.
    const auto uj = static_cast<std::size_t>(j);
    prefix[uj + 1] = prefix[uj];
    prefix_back[uj + 1] = -1;
    for (const PairCell& pk : pj) {
      const double v = prefix[static_cast<std::size_t>(pk.i)] + pk.v;
      if (v < prefix[uj + 1]) {
        prefix[uj + 1] = v;
        prefix_back[uj + 1] = pk.i;
      }
    }

    pcells[uj] = std::move(pj);
    lcells[uj] = std::move(lj);
  }

  // Traceback.
  struct Frame {
    bool pair;
    int i, j;
  };
  std::vector<Frame> todo;
  for (int j = n - 1; j >= 0;) {
    const int k = prefix_back[static_cast<std::size_t>(j) + 1];
    if (k < 0) {
      --j;
      continue;
    }
    todo.push_back({true, k, j});
    j = k - 1;
  }
  while (!todo.empty()) {
    const Frame f = todo.back();
    todo.pop_back();
    if (f.pair) {
      out.pairs.emplace_back(f.i, f.j);
      const PairCell* c = find_cell(pcells[static_cast<std::size_t>(f.j)], f.i);
      switch (c->back) {
        case PairBack::Hairpin: break;
        case PairBack::Stack: todo.push_back({true, f.i + 1, f.j - 1}); break;
        case PairBack::WrapL: todo.push_back({false, c->arg, f.j - 1}); break;
        case PairBack::WrapP: todo.push_back({true, c->arg, f.j - 1}); break;
      }
    } else {
      const LeftCell* c = find_cell(lcells[static_cast<std::size_t>(f.j)], f.i);
      switch (c->back) {
        case LeftBack::ExtendL: todo.push_back({false, f.i, f.j - 1}); break;
        case LeftBack::ExtendP: todo.push_back({true, f.i, f.j - 1}); break;
        case LeftBack::ConcatL:
          todo.push_back({true, c->arg, f.j});
          todo.push_back({false, f.i, c->arg - 1});
          break;
        case LeftBack::ConcatP:
          todo.push_back({true, c->arg, f.j});
          todo.push_back({true, f.i, c->arg - 1});
          break;
      }
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  out.energy = prefix[static_cast<std::size_t>(n)];
  return out;
}

double normalized_mfe(std::string_view seq, const EnergyModel& model, std::size_t beam) {
  if (seq.empty()) throw Error(ErrorCode::EmptySeq, "cannot normalise the MFE of an empty sequence");
  return fold_beam(seq, model, beam).energy / static_cast<double>(seq.size());
}

double score_structure(std::string_view seq, const std::vector<std::pair<int, int>>& pairs,
                       const EnergyModel& model) {
  const std::vector<int> s = encode_nucleotides(seq);
  const int n = static_cast<int>(s.size());
  std::vector<int> partner(static_cast<std::size_t>(n), -1);
  for (auto [i, j] : pairs) {
    partner[static_cast<std::size_t>(i)] = j;
    partner[static_cast<std::size_t>(j)] = i;
  }
  double e = 0.0;
  for (auto [i, j] : pairs) {
    e += model.pair_energy(s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(j)]);
    if (i + 1 < j - 1 && partner[static_cast<std::size_t>(i + 1)] == j - 1) e += model.stack;
    bool empty = true;
    for (int k = i + 1; k < j && empty; ++k) empty = partner[static_cast<std::size_t>(k)] < 0;
    if (empty) e += model.hairpin;
  }
  return e;
}

int max_helix_len(const SecondaryStructure& s, int bulge_tolerance) {
  if (s.pairs.empty()) return 0;
  int n = 0;
  for (auto [i, j] : s.pairs) n = std::max(n, j + 1);
  std::vector<int> partner(static_cast<std::size_t>(n), -1);
  for (auto [i, j] : s.pairs) {
    partner[static_cast<std::size_t>(i)] = j;
    partner[static_cast<std::size_t>(j)] = i;
  }

  // Successor of pair (i,j) inside the same helix, or -1.
  auto next_in_helix = [&](int i, int j) {
    if (i + 1 < j && partner[static_cast<std::size_t>(i + 1)] == j - 1) return i + 1;
    if (bulge_tolerance <= 0) return -1;
    // Single enclosed pair with at most bulge_tolerance unpaired bases around it.
    int a = i + 1;
    while (a < j && partner[static_cast<std::size_t>(a)] < 0) ++a;
    if (a >= j) return -1;
    const int b = partner[static_cast<std::size_t>(a)];
    if (b <= a || b >= j) return -1;
    for (int k = b + 1; k < j; ++k) {
      if (partner[static_cast<std::size_t>(k)] >= 0) return -1;
    }
    return ((a - i - 1) + (j - b - 1) <= bulge_tolerance) ? a : -1;
  };

  // Walk each helix from its outermost pair.
  std::vector<char> inner(static_cast<std::size_t>(n), 0);
  for (auto [i, j] : s.pairs) {
    const int a = next_in_helix(i, j);
    if (a >= 0) inner[static_cast<std::size_t>(a)] = 1;
  }
  int best = 0;
  for (auto [i, j] : s.pairs) {
    if (inner[static_cast<std::size_t>(i)]) continue;
    int len = 1;
    int a = i, b = j;
    for (int nx = next_in_helix(a, b); nx >= 0; nx = next_in_helix(a, b)) {
      b = partner[static_cast<std::size_t>(nx)];
      a = nx;
      ++len;
    }
    best = std::max(best, len);
  }
  return best;
}

std::string structure_problem(std::string_view seq, const SecondaryStructure& s, const EnergyModel& model) {
  const std::vector<int> x = encode_nucleotides(seq);
  const int n = static_cast<int>(x.size());
  std::vector<int> partner(static_cast<std::size_t>(n), -1);
  for (auto [i, j] : s.pairs) {
    if (i < 0 || j >= n || i >= j) return "pair out of range";
    if (partner[static_cast<std::size_t>(i)] >= 0 || partner[static_cast<std::size_t>(j)] >= 0)
      return "index paired twice";
    if (j - i - 1 < model.min_hairpin) return "hairpin shorter than minimum";
    if (!model.can_pair(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)]))
      return "non-canonical pair";
    partner[static_cast<std::size_t>(i)] = j;
    partner[static_cast<std::size_t>(j)] = i;
  }
  std::vector<int> open;
  for (int k = 0; k < n; ++k) {
    const int p = partner[static_cast<std::size_t>(k)];
    if (p < 0) continue;
    if (p > k) {
      open.push_back(k);
    } else {
      if (open.empty() || open.back() != p) return "crossing pairs";
      open.pop_back();
    }
  }
  return {};
}

std::string to_dot_bracket(const SecondaryStructure& s, std::size_t length) {
  std::string db(length, '.');
  for (auto [i, j] : s.pairs) {
    db[static_cast<std::size_t>(i)] = '(';
    db[static_cast<std::size_t>(j)] = ')';
  }
  return db;
}

}  // namespace mrnaopt
