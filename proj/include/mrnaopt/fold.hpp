#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mrnaopt/error.hpp"

namespace mrnaopt {

/// Simplified nearest-neighbour style energy model.
///
/// The energy of a nested structure S is
///   sum over (i,j) in S of pair(i,j)
/// + stack   * #{(i,j) in S : (i+1,j-1) in S}
/// + hairpin * #{(i,j) in S : no pair strictly inside (i,j)}.
/// Disallowed pairs have energy +inf.
struct EnergyModel {
  std::array<double, 16> pair;  // indexed 4*a+b over ACGU
  double stack = 0.0;
  double hairpin = 0.0;
  int min_hairpin = 3;

  double pair_energy(int a, int b) const { return pair[static_cast<std::size_t>(4 * a + b)]; }
  bool can_pair(int a, int b) const {
    return pair_energy(a, b) < std::numeric_limits<double>::infinity();
  }

  /// GC -3, AU -2, GU -1, stacking -1, no hairpin penalty.
  static EnergyModel standard();
  /// Every canonical or wobble pair -1, nothing else.
  static EnergyModel unit();
  /// No pair is allowed.
  static EnergyModel no_pairs();
};

struct SecondaryStructure {
  std::vector<std::pair<int, int>> pairs;  // sorted by i, each i < j
  double energy = 0.0;
};

inline constexpr std::size_t kUnboundedBeam = std::numeric_limits<std::size_t>::max();
inline constexpr std::size_t kDefaultOracleCap = 600;

/// Encodes ACGU to 0..3. Throws BadAlphabet on anything else (including T).
std::vector<int> encode_nucleotides(std::string_view seq);

/// Exact minimum-energy nested structure, O(n^3).
/// Ties prefer pairing the smallest free index, then the smallest partner.
SecondaryStructure fold_exact(std::string_view seq, const EnergyModel& model = EnergyModel::standard(),
                              std::size_t max_length = kDefaultOracleCap);

/// Left-to-right beam search over the same recurrences. Each position keeps the best `beam`
/// pair states and the best `beam` multi-pair states; the exterior prefix is never pruned.
/// With kUnboundedBeam the result energy equals fold_exact.
SecondaryStructure fold_beam(std::string_view seq, const EnergyModel& model = EnergyModel::standard(),
                             std::size_t beam = 100);

/// fold_beam energy divided by length. Throws EmptySeq.
double normalized_mfe(std::string_view seq, const EnergyModel& model = EnergyModel::standard(),
                      std::size_t beam = 100);

/// Energy of an explicit pair set under `model`.
double score_structure(std::string_view seq, const std::vector<std::pair<int, int>>& pairs,
                       const EnergyModel& model);

/// Longest helix. With bulge_tolerance = 0 a helix is a run (i,j),(i+1,j-1),...; otherwise two
/// consecutive pairs may enclose up to `bulge_tolerance` unpaired bases between them.
int max_helix_len(const SecondaryStructure& s, int bulge_tolerance = 0);

/// Empty string when the structure is nested, disjoint, hairpin-respecting and canonical;
/// otherwise a description of the first problem found.
std::string structure_problem(std::string_view seq, const SecondaryStructure& s,
                              const EnergyModel& model);

std::string to_dot_bracket(const SecondaryStructure& s, std::size_t length);

}  // namespace mrnaopt
