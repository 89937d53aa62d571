#include "pixfuse/context.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "parallel.hpp"

namespace pixfuse {
namespace {

// Argmax with ties to the lowest index; kNoClass when nothing is positive.
int argmaxOrNone(std::span<const double> v) {
  int best = kNoClass;
  double bestVal = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] > bestVal) {
      bestVal = v[i];
      best = static_cast<int>(i);
    }
  return best;
}

std::span<const double> centerSpan(const Neighborhood& nb) {
  return {nb.center, static_cast<std::size_t>(nb.classCount)};
}

std::span<const double> vectorSpan(const double* p, int c) {
  return {p, static_cast<std::size_t>(c)};
}

enum class M2Status { Ok, NoEvidence, AllZero };

struct M2Combined {
  M2Status status = M2Status::NoEvidence;
  std::vector<double> masses;
};

// Per-class product of the neighbor BPAs, in log space so eight small
// factors cannot underflow. A zero factor pins the class product at zero.
M2Combined combineMethod2(const Neighborhood& nb) {
  const int c = nb.classCount;
  M2Combined out;
  std::vector<double> logProd(c, 0.0);
  std::vector<char> zeroed(c, 0);
  int used = 0;
  for (const double* nbv : nb.neighbors) {
    if (!nbv) continue;
    double s = 0.0;
    for (int k = 0; k < c; ++k) s += nbv[k] + nb.center[k];
    if (s <= 0.0) continue; // degenerate pair, skip
    ++used;
    double logS = std::log(s);
    for (int k = 0; k < c; ++k) {
      double num = nbv[k] + nb.center[k];
      if (num <= 0.0)
        zeroed[k] = 1;
      else
        logProd[k] += std::log(num) - logS;
    }
  }
  if (used == 0) return out;

  double maxL = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < c; ++k)
    if (!zeroed[k]) maxL = std::max(maxL, logProd[k]);
  if (maxL == -std::numeric_limits<double>::infinity()) {
    out.status = M2Status::AllZero;
    return out;
  }

  out.masses.assign(c, 0.0);
  double total = 0.0;
  for (int k = 0; k < c; ++k)
    if (!zeroed[k]) {
      out.masses[k] = std::exp(logProd[k] - maxL);
      total += out.masses[k];
    }
  for (double& m : out.masses) m /= total;
  out.status = M2Status::Ok;
  return out;
}

// Shared shape of the two Dempster-based neighborhood methods: gather
// per-source BPAs, combine, read off the pignistic maximum.
detail::ContextDecision decideFromBpas(const Neighborhood& nb, std::vector<Bpa>& bpas,
                                       bool emptyIsOutlier) {
  using detail::ContextDecision;
  using detail::Resolution;
  if (bpas.empty()) {
    if (emptyIsOutlier) return {kNoClass, Resolution::Normal};
    return {argmaxOrNone(centerSpan(nb)), Resolution::DegenerateFallback};
  }
  try {
    Bpa global = combineAll(bpas);
    std::vector<double> p = pignistic(global);
    return {decide(p), Resolution::Normal};
  } catch (const TotalConflictError&) {
    return {argmaxOrNone(centerSpan(nb)), Resolution::ConflictFallback};
  }
}

detail::ContextDecision decideMethod2(const Neighborhood& nb) {
  using detail::ContextDecision;
  using detail::Resolution;
  M2Combined combined = combineMethod2(nb);
  switch (combined.status) {
    case M2Status::Ok:
      return {decide(combined.masses), Resolution::Normal};
    case M2Status::NoEvidence:
      return {argmaxOrNone(centerSpan(nb)), Resolution::DegenerateFallback};
    case M2Status::AllZero:
    default:
      return {argmaxOrNone(centerSpan(nb)), Resolution::ConflictFallback};
  }
}

detail::ContextDecision decideMethod3(const Neighborhood& nb) {
  std::vector<Bpa> bpas;
  bpas.reserve(8);
  for (const double* nbv : nb.neighbors) {
    if (!nbv) continue;
    try {
      bpas.push_back(method3Bpa(centerSpan(nb), vectorSpan(nbv, nb.classCount)));
    } catch (const DegenerateEvidence&) {
    }
  }
  return decideFromBpas(nb, bpas, /*emptyIsOutlier=*/false);
}

detail::ContextDecision decideMethod4(const Neighborhood& nb, double w) {
  std::vector<Bpa> bpas;
  bpas.reserve(9);
  Bpa center = method4Bpa(centerSpan(nb), w, /*isCenter=*/true);
  if (!center.isVacuous()) bpas.push_back(std::move(center));
  for (const double* nbv : nb.neighbors) {
    if (!nbv) continue;
    Bpa b = method4Bpa(vectorSpan(nbv, nb.classCount), w, /*isCenter=*/false);
    if (!b.isVacuous()) bpas.push_back(std::move(b));
  }
  return decideFromBpas(nb, bpas, /*emptyIsOutlier=*/true);
}

Neighborhood gatherNeighborhood(const LabelPlane& plane, int row, int col) {
  static constexpr int kOffsets[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                         {0, 1},   {1, -1}, {1, 0},  {1, 1}};
  Neighborhood nb;
  nb.classCount = plane.classCount;
  nb.center = plane.at(row, col);
  for (int i = 0; i < 8; ++i) {
    int r = row + kOffsets[i][0], c = col + kOffsets[i][1];
    if (r >= 0 && r < plane.height && c >= 0 && c < plane.width) nb.neighbors[i] = plane.at(r, c);
  }
  return nb;
}

void validateConfig(const ContextConfig& config, int classCount) {
  if (config.method == ContextMethod::M4 && (config.w < 0.0 || config.w > 1.0))
    throw DataError("neighbor weight w must lie in [0, 1]");
  if (config.method != ContextMethod::M1 && classCount > 64)
    throw DataError("evidence-based methods support at most 64 classes");
}

std::uint8_t encodeLabel(int label) {
  return label == kNoClass ? kOutlierSentinel : static_cast<std::uint8_t>(label);
}

} // namespace

ContextMethod parseContextMethod(const std::string& name) {
  if (name == "m1") return ContextMethod::M1;
  if (name == "m2") return ContextMethod::M2;
  if (name == "m3") return ContextMethod::M3;
  if (name == "m4") return ContextMethod::M4;
  throw DataError("unknown context method '" + name + "' (expected m1, m2, m3 or m4)");
}

const char* contextMethodName(ContextMethod method) {
  switch (method) {
    case ContextMethod::M1: return "m1";
    case ContextMethod::M2: return "m2";
    case ContextMethod::M3: return "m3";
    case ContextMethod::M4: return "m4";
  }
  return "?";
}

int method1(const Neighborhood& nb) {
  const int c = nb.classCount;
  std::vector<double> mean(c, 0.0);
  int present = 1;
  for (int k = 0; k < c; ++k) mean[k] = nb.center[k];
  for (const double* nbv : nb.neighbors) {
    if (!nbv) continue;
    ++present;
    for (int k = 0; k < c; ++k) mean[k] += nbv[k];
  }
  for (double& m : mean) m /= present;
  return argmaxOrNone(mean);
}

Bpa method2Bpa(std::span<const double> alphaCenter, std::span<const double> alphaNeighbor) {
  const int c = static_cast<int>(alphaCenter.size());
  double s = 0.0;
  for (int k = 0; k < c; ++k) s += alphaNeighbor[k] + alphaCenter[k];
  if (s <= 0.0) throw DegenerateEvidence{};
  Bpa bpa;
  bpa.classCount = c;
  for (int k = 0; k < c; ++k) {
    double num = alphaNeighbor[k] + alphaCenter[k];
    if (num > 0.0) bpa.masses.emplace_back(singleton(k), num / s);
  }
  return bpa;
}

int method2(const Neighborhood& nb) { return decideMethod2(nb).label; }

std::optional<std::vector<double>> method2Masses(const Neighborhood& nb) {
  M2Combined combined = combineMethod2(nb);
  if (combined.status != M2Status::Ok) return std::nullopt;
  return std::move(combined.masses);
}

Bpa method3Bpa(std::span<const double> alphaCenter, std::span<const double> alphaNeighbor) {
  const int c = static_cast<int>(alphaCenter.size());
  Bpa bpa;
  bpa.classCount = c;
  double total = 0.0;
  for (int k = 0; k < c; ++k) {
    double num = alphaNeighbor[k] + alphaCenter[k];
    total += num;
    if (num > 0.0) bpa.masses.emplace_back(singleton(k), num);
  }
  for (int l = 0; l < c; ++l)
    for (int m = l + 1; m < c; ++m) {
      double num = 0.5 * ((alphaNeighbor[l] + alphaCenter[m]) + (alphaNeighbor[m] + alphaCenter[l]));
      total += num;
      if (num > 0.0) bpa.masses.emplace_back(singleton(l) | singleton(m), num);
    }
  if (total <= 0.0) throw DegenerateEvidence{};
  for (auto& [mask, m] : bpa.masses) m /= total;
  std::sort(bpa.masses.begin(), bpa.masses.end());
  return bpa;
}

int method3(const Neighborhood& nb) { return decideMethod3(nb).label; }

Bpa method4Bpa(std::span<const double> alpha, double w, bool isCenter) {
  const int c = static_cast<int>(alpha.size());
  int q = argmaxOrNone(alpha);
  double weight = isCenter ? 1.0 : w;
  double support = q == kNoClass ? 0.0 : weight * alpha[q];
  if (support <= 0.0) return Bpa::vacuous(c);
  if (support > 1.0) support = 1.0;
  FocalSet strongest = singleton(q);
  FocalSet frame = fullSet(c);
  Bpa bpa;
  bpa.classCount = c;
  if (strongest == frame) {
    bpa.masses.emplace_back(frame, 1.0);
    return bpa;
  }
  bpa.masses.emplace_back(strongest, support);
  if (support < 1.0) bpa.masses.emplace_back(frame, 1.0 - support);
  return bpa;
}

int method4(const Neighborhood& nb, double w) { return decideMethod4(nb, w).label; }

namespace detail {

ContextDecision decideOne(const Neighborhood& nb, ContextMethod method, double w) {
  switch (method) {
    case ContextMethod::M1: return {method1(nb), Resolution::Normal};
    case ContextMethod::M2: return decideMethod2(nb);
    case ContextMethod::M3: return decideMethod3(nb);
    case ContextMethod::M4: return decideMethod4(nb, w);
  }
  return {kNoClass, Resolution::Normal};
}

} // namespace detail

ClassifyResult classifyPlane(const LabelPlane& plane, const ContextConfig& config, int threads) {
  validateConfig(config, plane.classCount);

  ClassifyResult result;
  result.map.width = plane.width;
  result.map.height = plane.height;
  result.map.labels.assign(static_cast<std::size_t>(plane.width) * plane.height,
                           kOutlierSentinel);
  result.stats.pixels = result.map.labels.size();

  std::atomic<std::size_t> outliers{0}, degenerate{0}, conflicts{0};
  std::uint8_t* labels = result.map.labels.data();
  parallelForRows(plane.height, threads, [&](int rowBegin, int rowEnd) {
    std::size_t localOut = 0, localDeg = 0, localConf = 0;
    for (int row = rowBegin; row < rowEnd; ++row)
      for (int col = 0; col < plane.width; ++col) {
        Neighborhood nb = gatherNeighborhood(plane, row, col);
        detail::ContextDecision d = detail::decideOne(nb, config.method, config.w);
        labels[static_cast<std::size_t>(row) * plane.width + col] = encodeLabel(d.label);
        if (d.label == kNoClass) ++localOut;
        if (d.resolution == detail::Resolution::DegenerateFallback) ++localDeg;
        if (d.resolution == detail::Resolution::ConflictFallback) ++localConf;
      }
    outliers.fetch_add(localOut, std::memory_order_relaxed);
    degenerate.fetch_add(localDeg, std::memory_order_relaxed);
    conflicts.fetch_add(localConf, std::memory_order_relaxed);
  });
  result.stats.outliers = outliers.load();
  result.stats.degenerateFallbacks = degenerate.load();
  result.stats.conflictFallbacks = conflicts.load();
  return result;
}

ClassifyResult classifyImage(const MultibandRaster& raster, const Rulebase& rb,
                             const ContextConfig& config, kernels::KernelChoice kernel,
                             int threads) {
  LabelPlane plane = kernels::computeLabelPlane(raster, rb, kernel, threads);
  return classifyPlane(plane, config, threads);
}

ClassifyResult classifyPlaneNoncontextual(const LabelPlane& plane) {
  ClassifyResult result;
  result.map.width = plane.width;
  result.map.height = plane.height;
  result.map.labels.assign(static_cast<std::size_t>(plane.width) * plane.height,
                           kOutlierSentinel);
  result.stats.pixels = result.map.labels.size();
  for (int row = 0; row < plane.height; ++row)
    for (int col = 0; col < plane.width; ++col) {
      int label = argmaxOrNone(vectorSpan(plane.at(row, col), plane.classCount));
      if (label == kNoClass) ++result.stats.outliers;
      result.map.labels[static_cast<std::size_t>(row) * plane.width + col] = encodeLabel(label);
    }
  return result;
}

std::vector<double> defaultWGrid() {
  std::vector<double> grid;
  grid.reserve(20);
  for (int i = 1; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

WSearchResult gridSearchW(const MultibandRaster& raster, const GroundTruth& truth,
                          const Rulebase& rb, const Rect& subimage,
                          std::span<const double> wGrid, kernels::KernelChoice kernel,
                          int threads) {
  if (wGrid.empty()) throw DataError("w grid is empty");
  if (subimage.row0 < 0 || subimage.col0 < 0 || subimage.height <= 0 || subimage.width <= 0 ||
      subimage.row0 + subimage.height > raster.height ||
      subimage.col0 + subimage.width > raster.width)
    throw DataError("sub-image rectangle falls outside the raster");
  if (truth.width != raster.width || truth.height != raster.height)
    throw DataError("ground truth dimensions do not match the raster");
  if (truth.classCount != rb.classCount)
    throw DataError("ground truth class count does not match the rulebase");
  for (double w : wGrid)
    if (w < 0.0 || w > 1.0) throw DataError("neighbor weight w must lie in [0, 1]");

  LabelPlane plane = kernels::computeLabelPlane(raster, rb, kernel, threads);

  std::size_t labeled = 0;
  for (int row = subimage.row0; row < subimage.row0 + subimage.height; ++row)
    for (int col = subimage.col0; col < subimage.col0 + subimage.width; ++col)
      if (truth.labels[static_cast<std::size_t>(row) * truth.width + col] != kUnlabeledSentinel)
        ++labeled;
  if (labeled == 0) throw DataError("sub-image contains no labeled pixels");

  WSearchResult result;
  result.bestError = std::numeric_limits<double>::infinity();
  for (double w : wGrid) {
    std::size_t wrong = 0;
    for (int row = subimage.row0; row < subimage.row0 + subimage.height; ++row)
      for (int col = subimage.col0; col < subimage.col0 + subimage.width; ++col) {
        std::uint8_t want =
            truth.labels[static_cast<std::size_t>(row) * truth.width + col];
        if (want == kUnlabeledSentinel) continue;
        Neighborhood nb = gatherNeighborhood(plane, row, col);
        int got = detail::decideOne(nb, ContextMethod::M4, w).label;
        if (got == kNoClass || got != static_cast<int>(want)) ++wrong;
      }
    double error = static_cast<double>(wrong) / static_cast<double>(labeled);
    result.curve.emplace_back(w, error);
    if (error < result.bestError || (error == result.bestError && w < result.bestW)) {
      result.bestError = error;
      result.bestW = w;
    }
  }
  return result;
}

} // namespace pixfuse
