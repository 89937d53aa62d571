#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pixfuse/context.hpp"
#include "pixfuse/raster.hpp"
#include "pixfuse/rulebase.hpp"

namespace pixfuse {

enum class SceneLayout { LargePatches, FragmentedPatches };

// One land-cover class of a synthetic scene: one or more spectral modes
// (a mean per band each; every patch of the class draws one mode), and
// optionally a noise standard deviation per band. When sd is empty the
// scene-wide noiseSd applies to every band. Multiple modes make the class
// multimodal in feature space while the ground truth stays one label.
struct ClassSpectrum {
  std::vector<std::vector<double>> modes; // modeCount x bands
  std::vector<double> sd;
};

// Recipe for a synthetic multispectral scene. Class regions are Voronoi
// cells of randomly placed sites, roughly patchScale pixels across; each
// site carries one spectral mode of its class, and pixel spectra are that
// mode plus per-band Gaussian noise.
struct SceneSpec {
  int width = 128;
  int height = 128;
  int bands = 7;
  std::vector<ClassSpectrum> spectra; // one per class
  SceneLayout layout = SceneLayout::LargePatches;
  int patchScale = 48;
  double noiseSd = 16.0;
  std::uint64_t seed = 1;

  int classCount() const { return static_cast<int>(spectra.size()); }
};

// Built-in presets: "patches-large" (4 classes, wide cells) and
// "patches-small" (8 classes with overlapping spectra, tiny cells).
SceneSpec presetScene(const std::string& name, std::uint64_t seed);
std::vector<std::string> presetSceneNames();

// Plain-text round trip of a SceneSpec (key=value lines plus one mean/sd
// line per class).
void saveSceneSpec(const SceneSpec& spec, const std::string& path);
SceneSpec loadSceneSpec(const std::string& path);

// Deterministic for a fixed spec: same spec -> bit-identical raster and
// truth. Every pixel is labeled.
std::pair<MultibandRaster, GroundTruth> generateScene(const SceneSpec& spec);

// Fraction of interior pixels whose full 3x3 window carries one class.
double homogeneousNeighborhoodFraction(const GroundTruth& truth);

// Counts over labeled pixels. Row k of the confusion matrix holds the
// predictions for true class k over the predicted classes; outlier
// predictions are tallied separately so that
// row sum + outlierPerClass[k] == classFrequency[k] exactly.
struct EvalReport {
  int classCount = 0;
  std::vector<std::size_t> confusion; // classCount x classCount, row-major
  std::vector<std::size_t> classFrequency;
  std::vector<std::size_t> outlierPerClass;
  std::size_t labeledCount = 0;
  std::size_t outlierCount = 0;
  std::size_t conflictFallbackCount = 0; // filled by callers that know it
  double overallErrorRate = 0.0;
  std::vector<double> perClassAccuracy; // correct / frequency (0 when empty)

  std::size_t confusionAt(int trueClass, int predicted) const {
    return confusion[static_cast<std::size_t>(trueClass) * classCount + predicted];
  }
};

EvalReport evaluate(const ClassMap& predicted, const GroundTruth& truth);

// One comparison row: a decision scheme, its report, and the per-image
// classification counters.
struct MethodEval {
  std::string name;
  EvalReport report;
  ClassifyStats stats;
};

// Noncontextual baseline first, then one row per config. The label plane
// is computed once and shared.
std::vector<MethodEval> compareMethods(const MultibandRaster& raster, const GroundTruth& truth,
                                       const Rulebase& rb, std::span<const ContextConfig> configs,
                                       kernels::KernelChoice kernel = kernels::KernelChoice::Auto,
                                       int threads = 1);

std::string formatEvalReport(const EvalReport& report);
std::string formatComparisonTable(std::span<const MethodEval> rows);
std::string comparisonCsv(std::span<const MethodEval> rows);
std::string wCurveCsv(const WSearchResult& result);

} // namespace pixfuse
