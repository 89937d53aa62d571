#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pixfuse/common.hpp"
#include "pixfuse/evidence.hpp"
#include "pixfuse/kernels.hpp"
#include "pixfuse/raster.hpp"
#include "pixfuse/rulebase.hpp"

namespace pixfuse {

// A pixel's label vector plus the eight surrounding ones, row-major.
// Border neighbors that fall outside the image are null. All non-null
// pointers address classCount doubles.
struct Neighborhood {
  const double* center = nullptr;
  std::array<const double*, 8> neighbors{};
  int classCount = 0;
};

enum class ContextMethod { M1, M2, M3, M4 };

ContextMethod parseContextMethod(const std::string& name); // "m1".."m4"
const char* contextMethodName(ContextMethod method);

struct ContextConfig {
  ContextMethod method = ContextMethod::M1;
  double w = 1.0; // neighbor weight, M4 only, in [0,1]
};

// Raised by the per-neighbor evidence builders when every mass numerator
// is zero; the neighborhood-level methods skip such neighbors.
struct DegenerateEvidence : std::runtime_error {
  DegenerateEvidence() : std::runtime_error("degenerate evidence: all mass numerators are zero") {}
};

// Neighborhood mean of the present label vectors, then argmax. Returns
// kNoClass when the mean is all zero.
int method1(const Neighborhood& nb);

// Bayesian evidence from one neighbor: singleton masses proportional to
// alphaNeighbor[k] + alphaCenter[k]. Throws DegenerateEvidence when the
// normalizer is zero.
Bpa method2Bpa(std::span<const double> alphaCenter, std::span<const double> alphaNeighbor);

// Combines the eight neighbor BPAs. Because every focal element is a
// singleton the combination collapses to a per-class product, computed
// here in log space. Degenerate neighbors are skipped; falls back to the
// argmax of the center vector when no neighbor is usable or every class
// has zero product mass.
int method2(const Neighborhood& nb);

// The closed-form combined singleton masses behind method2, exposed so the
// product form can be checked against pairwise Dempster combination.
// Empty when no neighbor yields usable evidence or all products vanish.
std::optional<std::vector<double>> method2Masses(const Neighborhood& nb);

// Evidence from one neighbor with singleton and two-class focal sets.
// Doubleton {l,m} gets half of (a_l^i + a_m^0) + (a_m^i + a_l^0); all
// masses are normalized to sum to one. Throws DegenerateEvidence when
// every numerator is zero.
Bpa method3Bpa(std::span<const double> alphaCenter, std::span<const double> alphaNeighbor);

// Stepwise Dempster combination of the eight neighbor BPAs, decision by
// maximum pignistic probability. Fallbacks as in method2; total conflict
// also falls back to the center argmax.
int method3(const Neighborhood& nb);

// Simple-support evidence from one label vector: its strongest class gets
// mass w*alpha (the center always uses w = 1), the rest goes to the full
// frame. A zero vector gives vacuous evidence.
Bpa method4Bpa(std::span<const double> alpha, double w, bool isCenter);

// Combines the nine simple-support BPAs, decision by maximum pignistic
// probability. All-vacuous neighborhoods return kNoClass; total conflict
// falls back to the center argmax.
int method4(const Neighborhood& nb, double w);

namespace detail {

// Why a decision came out the way it did, for the per-image counters.
enum class Resolution { Normal, DegenerateFallback, ConflictFallback };

struct ContextDecision {
  int label = kNoClass;
  Resolution resolution = Resolution::Normal;
};

ContextDecision decideOne(const Neighborhood& nb, ContextMethod method, double w);

} // namespace detail

struct ClassifyStats {
  std::size_t pixels = 0;
  std::size_t outliers = 0;             // no class support at all
  std::size_t degenerateFallbacks = 0;  // no usable neighbor evidence
  std::size_t conflictFallbacks = 0;    // Dempster combination fully conflicted
};

struct ClassifyResult {
  ClassMap map;
  ClassifyStats stats;
};

// Applies the configured method to every pixel of a precomputed label
// plane. Outliers are written as kOutlierSentinel. Output is identical
// for every thread count.
ClassifyResult classifyPlane(const LabelPlane& plane, const ContextConfig& config,
                             int threads = 1);

// Label plane via the selected kernel, then classifyPlane.
ClassifyResult classifyImage(const MultibandRaster& raster, const Rulebase& rb,
                             const ContextConfig& config,
                             kernels::KernelChoice kernel = kernels::KernelChoice::Auto,
                             int threads = 1);

// Noncontextual per-pixel argmax of the label plane, for baselines.
ClassifyResult classifyPlaneNoncontextual(const LabelPlane& plane);

struct Rect {
  int row0 = 0, col0 = 0, height = 0, width = 0;
};

struct WSearchResult {
  double bestW = 1.0;
  double bestError = 0.0;
  std::vector<std::pair<double, double>> curve; // (w, error fraction)
};

std::vector<double> defaultWGrid(); // 0.05, 0.10, ..., 1.00

// Method-4 error over the labeled pixels of a sub-image for each w in the
// grid; the label plane is computed once and reused. Ties prefer the
// smaller w.
WSearchResult gridSearchW(const MultibandRaster& raster, const GroundTruth& truth,
                          const Rulebase& rb, const Rect& subimage,
                          std::span<const double> wGrid,
                          kernels::KernelChoice kernel = kernels::KernelChoice::Auto,
                          int threads = 1);

} // namespace pixfuse
