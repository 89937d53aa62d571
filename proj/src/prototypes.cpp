#include "pixfuse/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace pixfuse {
namespace {

double sqDist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    double diff = a[j] - b[j];
    d += diff * diff;
  }
  return d;
}

std::vector<std::size_t> classTotals(const std::vector<LabeledSample>& samples, int classCount) {
  std::vector<std::size_t> n(classCount, 0);
  for (const auto& s : samples) {
    if (s.label < 0 || s.label >= classCount)
      throw DataError("sample label outside [0, classCount)");
    ++n[s.label];
  }
  return n;
}

} // namespace

std::vector<std::size_t> assignToNearest(const PrototypeSet& set,
                                         const std::vector<LabeledSample>& samples) {
  std::vector<std::size_t> assign(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s)
    assign[s] = findWinner(set, samples[s].features);
  return assign;
}

PrototypeStats partitionStats(const PrototypeSet& set, const std::vector<LabeledSample>& samples,
                              int classCount) {
  PrototypeStats stats;
  stats.total.assign(set.size(), 0);
  stats.perClass.assign(set.size(), std::vector<std::size_t>(classCount, 0));
  for (const auto& s : samples) {
    if (s.label < 0 || s.label >= classCount)
      throw DataError("sample label outside [0, classCount)");
    std::size_t w = findWinner(set, s.features);
    ++stats.total[w];
    ++stats.perClass[w][s.label];
  }
  return stats;
}

Thresholds computeThresholds(const PrototypeSet& set, const RefineConfig& config,
                             int classCount) {
  if (set.size() == 0) throw DataError("computeThresholds on an empty prototype set");
  if (config.k1 <= 0.0 || config.k2 <= 0.0) throw DataError("k1 and k2 must be positive");
  Thresholds th;
  th.alpha = 1.0 / (config.k1 * static_cast<double>(set.size()));
  std::vector<std::size_t> protosOfClass(classCount, 0);
  for (int label : set.labels)
    if (label >= 0 && label < classCount) ++protosOfClass[label];
  th.betaPerClass.resize(classCount);
  for (int k = 0; k < classCount; ++k)
    if (protosOfClass[k] > 0)
      th.betaPerClass[k] = 1.0 / (config.k2 * static_cast<double>(protosOfClass[k]));
  return th;
}

PrototypeSet refinePrototypes(const PrototypeSet& initial,
                              const std::vector<LabeledSample>& samples,
                              const RefineConfig& config, int classCount) {
  if (samples.empty()) throw DataError("refinePrototypes needs samples");
  if (classCount <= 0) throw DataError("classCount must be positive");
  if (config.maxIterations < 1) throw DataError("maxIterations must be at least 1");

  const std::size_t N = samples.size();
  const std::vector<std::size_t> nPerClass = classTotals(samples, classCount);
  PrototypeSet current = initial;

  for (int iter = 0; iter < config.maxIterations; ++iter) {
    if (current.size() == 0) throw DataError("refinement deleted every prototype");
    const std::size_t P = current.size();
    std::vector<std::size_t> assign = assignToNearest(current, samples);
    PrototypeStats stats;
    stats.total.assign(P, 0);
    stats.perClass.assign(P, std::vector<std::size_t>(classCount, 0));
    for (std::size_t s = 0; s < N; ++s) {
      ++stats.total[assign[s]];
      ++stats.perClass[assign[s]][samples[s].label];
    }
    Thresholds th = computeThresholds(current, config, classCount);

    // classes each prototype represents reliably
    std::vector<std::vector<int>> passing(P);
    std::vector<char> splitCell(P, 0);
    bool changed = false;
    for (std::size_t i = 0; i < P; ++i) {
      if (!(static_cast<double>(stats.total[i]) > th.alpha * static_cast<double>(N)))
        continue; // fails the global test, gets dropped below
      for (int k = 0; k < classCount; ++k)
        if (th.betaPerClass[k] &&
            static_cast<double>(stats.perClass[i][k]) >
                *th.betaPerClass[k] * static_cast<double>(nPerClass[k]))
          passing[i].push_back(k);
    }

    std::vector<std::size_t> keptIdx;
    std::vector<int> keptLabel;
    for (std::size_t i = 0; i < P; ++i) {
      bool alphaPass =
          static_cast<double>(stats.total[i]) > th.alpha * static_cast<double>(N);
      if (!alphaPass || passing[i].empty()) {
        changed = true; // delete
        continue;
      }
      if (passing[i].size() == 1) {
        int k = passing[i][0];
        if (k != current.labels[i]) changed = true; // modify
        keptIdx.push_back(i);
        keptLabel.push_back(k);
      } else {
        splitCell[i] = 1;
        changed = true;
      }
    }

    // split: per-class centroids of the cell's points, one per passing class
    std::vector<std::pair<std::vector<double>, int>> children;
    if (std::any_of(splitCell.begin(), splitCell.end(), [](char f) { return f != 0; })) {
      std::vector<std::vector<std::vector<double>>> sums(P);
      std::vector<std::vector<std::size_t>> counts(P);
      for (std::size_t i = 0; i < P; ++i)
        if (splitCell[i]) {
          sums[i].assign(classCount, std::vector<double>(current.dim(), 0.0));
          counts[i].assign(classCount, 0);
        }
      for (std::size_t s = 0; s < N; ++s) {
        std::size_t i = assign[s];
        if (!splitCell[i]) continue;
        int k = samples[s].label;
        ++counts[i][k];
        for (int j = 0; j < current.dim(); ++j) sums[i][k][j] += samples[s].features[j];
      }
      for (std::size_t i = 0; i < P; ++i) {
        if (!splitCell[i]) continue;
        for (int k : passing[i]) {
          std::vector<double> centroid(current.dim());
          for (int j = 0; j < current.dim(); ++j)
            centroid[j] = sums[i][k][j] / static_cast<double>(counts[i][k]);
          children.emplace_back(std::move(centroid), k);
        }
      }
    }

    // merge: mutual nearest neighbors among the kept prototypes, same class,
    // pooled cell still passes both tests. A merge shrinks |V| and |V_k|,
    // which raises the very thresholds the merged prototype must clear next
    // round, so the test uses the post-merge counts — otherwise a merge
    // could doom its own result (and with it the class).
    std::vector<char> inMerge(keptIdx.size(), 0);
    std::vector<std::pair<std::vector<double>, int>> mergedProtos;
    if (keptIdx.size() >= 2) {
      std::size_t nextTotal = keptIdx.size() + children.size();
      std::vector<std::size_t> nextOfClass(classCount, 0);
      for (int k : keptLabel) ++nextOfClass[k];
      for (const auto& [pos, k] : children) ++nextOfClass[k];

      std::vector<std::size_t> nn(keptIdx.size());
      for (std::size_t a = 0; a < keptIdx.size(); ++a) {
        double best = -1.0;
        std::size_t bestB = a;
        for (std::size_t b = 0; b < keptIdx.size(); ++b) {
          if (b == a) continue;
          double d = sqDist(current.vectors[keptIdx[a]], current.vectors[keptIdx[b]]);
          if (best < 0.0 || d < best) {
            best = d;
            bestB = b;
          }
        }
        nn[a] = bestB;
      }
      struct Pair {
        std::size_t a, b;
        double dist;
      };
      std::vector<Pair> candidates;
      for (std::size_t a = 0; a < keptIdx.size(); ++a) {
        std::size_t b = nn[a];
        if (b <= a || nn[b] != a) continue;
        if (keptLabel[a] != keptLabel[b]) continue;
        candidates.push_back({a, b, sqDist(current.vectors[keptIdx[a]], current.vectors[keptIdx[b]])});
      }
      std::sort(candidates.begin(), candidates.end(), [](const Pair& x, const Pair& y) {
        if (x.dist != y.dist) return x.dist < y.dist;
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
      });
      for (const auto& cand : candidates) {
        if (inMerge[cand.a] || inMerge[cand.b]) continue;
        int k = keptLabel[cand.a];
        if (nextOfClass[k] < 2 || nextTotal < 2) continue;
        std::size_t ia = keptIdx[cand.a], ib = keptIdx[cand.b];
        double pooledTotal = static_cast<double>(stats.total[ia] + stats.total[ib]);
        double pooledClass =
            static_cast<double>(stats.perClass[ia][k] + stats.perClass[ib][k]);
        double alphaAfter = 1.0 / (config.k1 * static_cast<double>(nextTotal - 1));
        double betaAfter = 1.0 / (config.k2 * static_cast<double>(nextOfClass[k] - 1));
        if (!(pooledTotal > alphaAfter * static_cast<double>(N) &&
              pooledClass > betaAfter * static_cast<double>(nPerClass[k])))
          continue;
        inMerge[cand.a] = inMerge[cand.b] = 1;
        --nextTotal;
        --nextOfClass[k];
        double wa = static_cast<double>(stats.total[ia]);
        double wb = static_cast<double>(stats.total[ib]);
        std::vector<double> centroid(current.dim());
        for (int j = 0; j < current.dim(); ++j)
          centroid[j] = (wa * current.vectors[ia][j] + wb * current.vectors[ib][j]) / (wa + wb);
        mergedProtos.emplace_back(std::move(centroid), keptLabel[cand.a]);
        changed = true;
      }
    }

    if (!changed) return current; // converged

    PrototypeSet next;
    for (std::size_t a = 0; a < keptIdx.size(); ++a) {
      if (inMerge[a]) continue;
      next.vectors.push_back(current.vectors[keptIdx[a]]);
      next.labels.push_back(keptLabel[a]);
    }
    for (auto& [pos, label] : mergedProtos) {
      next.vectors.push_back(std::move(pos));
      next.labels.push_back(label);
    }
    for (auto& [pos, label] : children) {
      next.vectors.push_back(std::move(pos));
      next.labels.push_back(label);
    }

    // collapse exact same-position duplicates of one class
    for (std::size_t a = 0; a < next.size(); ++a)
      for (std::size_t b = next.size(); b-- > a + 1;)
        if (next.labels[a] == next.labels[b] && next.vectors[a] == next.vectors[b]) {
          next.vectors.erase(next.vectors.begin() + b);
          next.labels.erase(next.labels.begin() + b);
        }

    std::vector<std::size_t> coverage(classCount, 0);
    for (int label : next.labels)
      if (label >= 0 && label < classCount) ++coverage[label];
    for (int k = 0; k < classCount; ++k)
      if (coverage[k] == 0)
        throw DataError("refinement removed the last prototype of class " + std::to_string(k));

    current = std::move(next);
  }
  return current;
}

PrototypeSet winnerOnlyPolish(const PrototypeSet& set, const std::vector<LabeledSample>& samples,
                              int epochs, double lrStart, double lrEnd, std::uint64_t seed) {
  if (set.size() == 0) throw DataError("winnerOnlyPolish on an empty prototype set");
  if (samples.empty()) throw DataError("winnerOnlyPolish needs samples");
  if (epochs < 0) throw DataError("epochs must be non-negative");

  PrototypeSet out = set;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t total = static_cast<std::size_t>(epochs) * samples.size();
  std::size_t t = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      double lr = scheduleValue(lrStart, lrEnd, t, total);
      const auto& x = samples[idx].features;
      applySofmUpdate(out, x, findWinner(out, x), lr, 0.0);
      ++t;
    }
  }
  return out;
}

} // namespace pixfuse
