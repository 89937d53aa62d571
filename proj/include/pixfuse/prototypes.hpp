#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pixfuse/sofm.hpp"

namespace pixfuse {

struct RefineConfig {
  double k1 = 2.0; // scales the global usefulness threshold
  double k2 = 2.0; // scales the per-class usefulness thresholds
  int maxIterations = 20;
};

// Nearest-prototype partition counts: total[i] samples fall in prototype
// i's cell, perClass[i][k] of them carry class k.
struct PrototypeStats {
  std::vector<std::size_t> total;
  std::vector<std::vector<std::size_t>> perClass;
};

// Dynamic thresholds for one refinement iteration:
//   alpha        = 1 / (k1 * |V|)
//   betaPerClass = 1 / (k2 * |V_k|), unset where class k has no prototypes.
// A useful prototype must represent more than alpha*N of all samples and
// more than beta_k*N_k of its own class k.
struct Thresholds {
  double alpha = 0.0;
  std::vector<std::optional<double>> betaPerClass;
};

std::vector<std::size_t> assignToNearest(const PrototypeSet& set,
                                         const std::vector<LabeledSample>& samples);

PrototypeStats partitionStats(const PrototypeSet& set, const std::vector<LabeledSample>& samples,
                              int classCount);

Thresholds computeThresholds(const PrototypeSet& set, const RefineConfig& config, int classCount);

// Iterative cleanup of a labeled prototype set. Each round partitions the
// samples, recomputes thresholds, then applies delete, modify (relabel to
// the one class that passes), split (per-class centroids where several
// classes pass) and merge (mutual nearest neighbors of one class whose
// pooled cell still passes) before repartitioning. Stops when a round
// changes nothing or after maxIterations. Dropping the last prototype of
// a class is an error.
PrototypeSet refinePrototypes(const PrototypeSet& set, const std::vector<LabeledSample>& samples,
                              const RefineConfig& config, int classCount);

// Winner-only map updates over the sample set; labels are untouched and
// the learning rate decays linearly from lrStart to lrEnd.
PrototypeSet winnerOnlyPolish(const PrototypeSet& set, const std::vector<LabeledSample>& samples,
                              int epochs, double lrStart, double lrEnd, std::uint64_t seed);

} // namespace pixfuse
