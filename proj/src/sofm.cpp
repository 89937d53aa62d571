#include "pixfuse/sofm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace pixfuse {

double scheduleValue(double start, double end, std::size_t t, std::size_t total) {
  if (total <= 1) return start;
  double frac = static_cast<double>(t) / static_cast<double>(total - 1);
  return start + (end - start) * frac;
}

std::size_t findWinner(const PrototypeSet& set, std::span<const double> x) {
  if (set.vectors.empty()) throw DataError("findWinner on an empty prototype set");
  std::size_t best = 0;
  double bestDist = -1.0;
  for (std::size_t i = 0; i < set.vectors.size(); ++i) {
    const auto& w = set.vectors[i];
    if (w.size() != x.size()) throw DataError("prototype and sample dimensions differ");
    double d = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      double diff = x[j] - w[j];
      d += diff * diff;
    }
    if (bestDist < 0.0 || d < bestDist) {
      bestDist = d;
      best = i;
    }
  }
  return best;
}

void applySofmUpdate(PrototypeSet& set, std::span<const double> x, std::size_t winner,
                     double learningRate, double radius) {
  for (std::size_t i = 0; i < set.vectors.size(); ++i) {
    double h;
    if (radius <= 0.0) {
      if (i != winner) continue;
      h = 1.0;
    } else {
      double grid = static_cast<double>(winner) - static_cast<double>(i);
      double z = grid * grid / (2.0 * radius * radius);
      if (z > 60.0) continue;
      h = std::exp(-z);
    }
    auto& w = set.vectors[i];
    double step = learningRate * h;
    for (std::size_t j = 0; j < w.size(); ++j) w[j] += step * (x[j] - w[j]);
  }
}

PrototypeSet trainSofm(const std::vector<LabeledSample>& samples, const SofmConfig& config) {
  if (samples.empty()) throw DataError("trainSofm needs at least one sample");
  if (config.nodeCount <= 0) throw DataError("nodeCount must be positive");
  if (config.epochs < 0) throw DataError("epochs must be non-negative");
  std::size_t dim = samples[0].features.size();
  for (const auto& s : samples)
    if (s.features.size() != dim) throw DataError("samples have mixed dimensions");

  std::mt19937_64 rng(config.seed);

  PrototypeSet set;
  set.vectors.reserve(config.nodeCount);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (int i = 0; i < config.nodeCount; ++i)
    set.vectors.push_back(samples[order[i % samples.size()]].features);
  set.labels.assign(config.nodeCount, kNoClass);

  double radiusStart = config.kernelRadiusStart > 0.0 ? config.kernelRadiusStart
                                                      : config.nodeCount / 2.0;
  std::size_t total = static_cast<std::size_t>(config.epochs) * samples.size();
  std::size_t t = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      double lr = scheduleValue(config.learningRateStart, config.learningRateEnd, t, total);
      double radius = scheduleValue(radiusStart, config.kernelRadiusEnd, t, total);
      const auto& x = samples[idx].features;
      applySofmUpdate(set, x, findWinner(set, x), lr, radius);
      ++t;
    }
  }
  return set;
}

PrototypeSet labelPrototypes(const PrototypeSet& set, const std::vector<LabeledSample>& samples,
                             int classCount) {
  if (classCount <= 0) throw DataError("classCount must be positive");
  PrototypeSet out = set;
  std::vector<std::vector<std::size_t>> votes(set.size(),
                                              std::vector<std::size_t>(classCount, 0));
  for (const auto& s : samples) {
    if (s.label < 0 || s.label >= classCount)
      throw DataError("sample label outside [0, classCount)");
    ++votes[findWinner(set, s.features)][s.label];
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::size_t best = 0;
    int bestClass = kNoClass;
    for (int k = 0; k < classCount; ++k)
      if (votes[i][k] > best) {
        best = votes[i][k];
        bestClass = k;
      }
    out.labels[i] = bestClass;
  }
  return out;
}

} // namespace pixfuse
