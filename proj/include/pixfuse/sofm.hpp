#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pixfuse/raster.hpp"

namespace pixfuse {

struct SofmConfig {
  int nodeCount = 0;
  int epochs = 30;
  double learningRateStart = 0.5;
  double learningRateEnd = 0.01;
  double kernelRadiusStart = 0.0; // <= 0 means nodeCount / 2.0
  double kernelRadiusEnd = 0.01;
  std::uint64_t seed = 0;
};

// Prototypes on a 1-D grid; labels stay kNoClass until labelPrototypes.
struct PrototypeSet {
  std::vector<std::vector<double>> vectors;
  std::vector<int> labels;

  std::size_t size() const { return vectors.size(); }
  int dim() const { return vectors.empty() ? 0 : static_cast<int>(vectors[0].size()); }
};

// Linear interpolation from start to end as t runs over [0, total).
double scheduleValue(double start, double end, std::size_t t, std::size_t total);

// Nearest prototype by Euclidean distance; ties go to the lowest index.
std::size_t findWinner(const PrototypeSet& set, std::span<const double> x);

// One learning step: node i moves by lr * h(i) * (x - w_i) with the grid
// kernel h(i) = exp(-(winner - i)^2 / (2 radius^2)). radius <= 0 is the
// winner-only variant (h = 1 for the winner, 0 elsewhere). Kernel values
// below exp(-60) are treated as 0.
void applySofmUpdate(PrototypeSet& set, std::span<const double> x, std::size_t winner,
                     double learningRate, double radius);

// Trains a 1-D map: prototypes start at distinct random training samples,
// every epoch presents all samples in a fresh shuffled order, and the
// learning rate and kernel radius decay linearly over all presentations.
PrototypeSet trainSofm(const std::vector<LabeledSample>& samples, const SofmConfig& config);

// Majority vote of the samples each prototype wins; ties go to the lowest
// class index, prototypes that win nothing stay kNoClass.
PrototypeSet labelPrototypes(const PrototypeSet& set, const std::vector<LabeledSample>& samples,
                             int classCount);

} // namespace pixfuse
