#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pixfuse {

// A focal set is a bitmask over class indices; bit k = class k is in the
// set. Limited to 64 classes.
using FocalSet = std::uint64_t;

inline FocalSet singleton(int classIndex) { return FocalSet{1} << classIndex; }
inline FocalSet fullSet(int classCount) {
  return classCount >= 64 ? ~FocalSet{0} : (FocalSet{1} << classCount) - 1;
}

// Raised when two pieces of evidence are fully contradictory: the
// normalization mass 1-K of Dempster's rule vanishes.
struct TotalConflictError : std::runtime_error {
  TotalConflictError() : std::runtime_error("total conflict: evidence cannot be combined") {}
};

// Basic probability assignment over subsets of the class frame. Only
// focal elements (mass > 0) are stored, sorted by mask. Masses sum to 1
// up to rounding; the empty set never appears.
struct Bpa {
  int classCount = 0;
  std::vector<std::pair<FocalSet, double>> masses;

  static Bpa vacuous(int classCount) {
    return Bpa{classCount, {{fullSet(classCount), 1.0}}};
  }
  double massOf(FocalSet set) const {
    for (const auto& [mask, m] : masses)
      if (mask == set) return m;
    return 0.0;
  }
  bool isVacuous() const {
    return masses.size() == 1 && masses[0].first == fullSet(classCount);
  }
};

// Dempster's rule of combination. Masses of all intersecting focal-set
// pairs are accumulated, the conflict mass K (empty intersections) is
// removed, and the rest is scaled by 1/(1-K). Focal elements that end up
// with mass <= 1e-12 are dropped and the remainder is renormalized.
// Throws TotalConflictError when K >= 1 - 1e-12.
Bpa combine(const Bpa& a, const Bpa& b);

// Left fold of combine over the list; empty input is an error, a single
// BPA is returned unchanged.
Bpa combineAll(std::span<const Bpa> bpas);

// Pignistic transform: each focal set spreads its mass uniformly over its
// members. Returns one probability per class.
std::vector<double> pignistic(const Bpa& bpa);

// Index of the largest probability; ties go to the lowest index.
int decide(std::span<const double> probabilities);

} // namespace pixfuse
