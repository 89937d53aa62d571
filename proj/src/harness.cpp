#include "pixfuse/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <unordered_set>

namespace pixfuse {
namespace {

void validateSpec(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw DataError("scene dimensions must be positive");
  if (spec.bands <= 0) throw DataError("scene needs at least one band");
  if (spec.spectra.empty()) throw DataError("scene needs at least one class spectrum");
  if (spec.classCount() > 254) throw DataError("at most 254 classes are supported");
  if (spec.patchScale < 1) throw DataError("patchScale must be at least 1");
  if (spec.noiseSd < 0.0) throw DataError("noiseSd must be nonnegative");
  for (const ClassSpectrum& cs : spec.spectra) {
    if (cs.modes.empty()) throw DataError("every class needs at least one spectral mode");
    for (const std::vector<double>& mode : cs.modes) {
      if (static_cast<int>(mode.size()) != spec.bands)
        throw DataError("class mode vector length must equal the band count");
      for (double m : mode)
        if (m < 0.0 || m > 255.0) throw DataError("class means must lie in [0, 255]");
    }
    if (!cs.sd.empty() && static_cast<int>(cs.sd.size()) != spec.bands)
      throw DataError("class sd vector must be empty or match the band count");
    for (double s : cs.sd)
      if (s < 0.0) throw DataError("class sds must be nonnegative");
  }
}

const char* layoutName(SceneLayout layout) {
  return layout == SceneLayout::LargePatches ? "large-patches" : "fragmented-patches";
}

SceneLayout parseLayout(const std::string& name) {
  if (name == "large-patches") return SceneLayout::LargePatches;
  if (name == "fragmented-patches") return SceneLayout::FragmentedPatches;
  throw DataError("unknown scene layout '" + name + "'");
}

std::string formatPercent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

} // namespace

namespace {

// Both presets place their spectral modes on the 16 binary words of a
// 7-bit single-error-correcting code, scaled by a band step. Words of one
// class sit at pairwise Hamming distance >= 4 while every word has several
// other-class words at distance 3, so each mode's nearest neighbor in
// feature space belongs to a different class. That interleaving is what
// keeps one prototype per mode stable through refinement: same-class
// prototypes are never mutual nearest neighbors, so they are not merged,
// and per-mode cells stay small enough for usable rule widths.
constexpr int kSceneCodes[16][7] = {
    {0, 0, 0, 0, 0, 0, 0}, {1, 1, 1, 0, 0, 0, 0}, {1, 0, 0, 1, 1, 0, 0},
    {0, 1, 0, 1, 0, 1, 0}, {1, 1, 0, 1, 0, 0, 1}, {0, 1, 1, 1, 1, 0, 0},
    {1, 0, 1, 1, 0, 1, 0}, {0, 0, 1, 1, 0, 0, 1}, {1, 1, 0, 0, 1, 1, 0},
    {0, 1, 0, 0, 1, 0, 1}, {1, 0, 0, 0, 0, 1, 1}, {0, 0, 1, 0, 1, 1, 0},
    {1, 0, 1, 0, 1, 0, 1}, {0, 1, 1, 0, 0, 1, 1}, {0, 0, 0, 1, 1, 1, 1},
    {1, 1, 1, 1, 1, 1, 1},
};

std::vector<double> codeMean(int word, double lo, double step) {
  std::vector<double> mean(7);
  for (int j = 0; j < 7; ++j) mean[j] = lo + step * kSceneCodes[word][j];
  return mean;
}

} // namespace

SceneSpec presetScene(const std::string& name, std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  if (name == "patches-large") {
    // Four broad cover types on code words pairwise 4 bands apart
    // (4.5 noise sds between class means).
    spec.bands = 7;
    spec.layout = SceneLayout::LargePatches;
    spec.patchScale = 48;
    spec.noiseSd = 16.0;
    const double lo = 60.0, step = 36.0;
    for (int w : {0, 5, 8, 6}) {
      ClassSpectrum cs;
      cs.modes.push_back(codeMean(w, lo, step));
      spec.spectra.push_back(std::move(cs));
    }
    return spec;
  }
  if (name == "patches-small") {
    // Eight cover types scattered in small fragments: the zero word plus
    // the seven weight-4 words form an equidistant constellation, every
    // pair of class means exactly 4 bands apart.
    spec.bands = 7;
    spec.layout = SceneLayout::FragmentedPatches;
    spec.patchScale = 5;
    spec.noiseSd = 12.0;
    const double lo = 60.0, step = 30.0;
    for (int w : {0, 4, 5, 6, 8, 12, 13, 14}) {
      ClassSpectrum cs;
      cs.modes.push_back(codeMean(w, lo, step));
      spec.spectra.push_back(std::move(cs));
    }
    return spec;
  }
  throw DataError("unknown scene preset '" + name + "'");
}

std::vector<std::string> presetSceneNames() { return {"patches-large", "patches-small"}; }

void saveSceneSpec(const SceneSpec& spec, const std::string& path) {
  validateSpec(spec);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scene spec '" + path + "'");
  out << "pixfuse-scene 1\n";
  out << std::setprecision(17);
  out << "width=" << spec.width << "\n";
  out << "height=" << spec.height << "\n";
  out << "bands=" << spec.bands << "\n";
  out << "classes=" << spec.classCount() << "\n";
  out << "layout=" << layoutName(spec.layout) << "\n";
  out << "patchScale=" << spec.patchScale << "\n";
  out << "noiseSd=" << spec.noiseSd << "\n";
  out << "seed=" << spec.seed << "\n";
  for (int k = 0; k < spec.classCount(); ++k) {
    // A repeated meanK key appends one spectral mode per occurrence.
    for (const std::vector<double>& mode : spec.spectra[k].modes) {
      out << "mean" << k << "=";
      for (int j = 0; j < spec.bands; ++j) out << (j ? " " : "") << mode[j];
      out << "\n";
    }
    if (!spec.spectra[k].sd.empty()) {
      out << "sd" << k << "=";
      for (int j = 0; j < spec.bands; ++j) out << (j ? " " : "") << spec.spectra[k].sd[j];
      out << "\n";
    }
  }
  if (!out) throw DataError("failed writing scene spec '" + path + "'");
}

SceneSpec loadSceneSpec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scene spec '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "pixfuse-scene 1")
    throw DataError("'" + path + "' is not a scene spec file");

  SceneSpec spec;
  spec.noiseSd = 0.0;
  int classes = -1;
  std::vector<std::vector<std::vector<double>>> means; // class -> modes
  std::vector<std::vector<double>> sds;
  auto parseVector = [&](const std::string& text) {
    std::istringstream vs(text);
    std::vector<double> v;
    double x;
    while (vs >> x) v.push_back(x);
    if (v.empty()) throw DataError("empty vector in scene spec '" + path + "'");
    return v;
  };

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed line in scene spec: '" + line + "'");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    try {
      if (key == "width") spec.width = std::stoi(value);
      else if (key == "height") spec.height = std::stoi(value);
      else if (key == "bands") spec.bands = std::stoi(value);
      else if (key == "classes") classes = std::stoi(value);
      else if (key == "layout") spec.layout = parseLayout(value);
      else if (key == "patchScale") spec.patchScale = std::stoi(value);
      else if (key == "noiseSd") spec.noiseSd = std::stod(value);
      else if (key == "seed") spec.seed = std::stoull(value);
      else if (key.rfind("mean", 0) == 0) {
        std::size_t idx = std::stoul(key.substr(4));
        if (means.size() <= idx) means.resize(idx + 1);
        means[idx].push_back(parseVector(value));
      } else if (key.rfind("sd", 0) == 0) {
        std::size_t idx = std::stoul(key.substr(2));
        if (sds.size() <= idx) sds.resize(idx + 1);
        sds[idx] = parseVector(value);
      } else {
        throw DataError("unknown key '" + key + "' in scene spec");
      }
    } catch (const std::invalid_argument&) {
      throw DataError("bad value for '" + key + "' in scene spec");
    } catch (const std::out_of_range&) {
      throw DataError("bad value for '" + key + "' in scene spec");
    }
  }
  if (classes < 0) throw DataError("scene spec lacks a classes key");
  if (static_cast<std::size_t>(classes) != means.size())
    throw DataError("scene spec declares " + std::to_string(classes) + " classes but has " +
                    std::to_string(means.size()) + " mean lines");
  spec.spectra.resize(classes);
  for (int k = 0; k < classes; ++k) {
    if (means[k].empty()) throw DataError("missing mean line for class " + std::to_string(k));
    spec.spectra[k].modes = std::move(means[k]);
    if (static_cast<std::size_t>(k) < sds.size()) spec.spectra[k].sd = std::move(sds[k]);
  }
  validateSpec(spec);
  return spec;
}

std::pair<MultibandRaster, GroundTruth> generateScene(const SceneSpec& spec) {
  validateSpec(spec);
  const int w = spec.width, h = spec.height, c = spec.classCount();
  std::mt19937_64 rng(spec.seed);

  std::size_t area = static_cast<std::size_t>(w) * h;
  std::size_t wanted = area / (static_cast<std::size_t>(spec.patchScale) * spec.patchScale);
  std::size_t siteCount = std::max<std::size_t>(c, wanted);
  siteCount = std::min(siteCount, area); // cannot place more distinct sites than pixels

  std::uniform_int_distribution<int> rowDist(0, h - 1), colDist(0, w - 1);
  std::vector<int> siteRow, siteCol, siteClass;
  std::unordered_set<std::size_t> taken;
  while (siteRow.size() < siteCount) {
    int r = rowDist(rng), cc = colDist(rng);
    if (!taken.insert(static_cast<std::size_t>(r) * w + cc).second) continue;
    siteRow.push_back(r);
    siteCol.push_back(cc);
  }
  std::uniform_int_distribution<int> classDist(0, c - 1);
  for (std::size_t i = 0; i < siteCount; ++i)
    siteClass.push_back(i < static_cast<std::size_t>(c) ? static_cast<int>(i) : classDist(rng));
  // Each site carries one spectral mode of its class, drawn after all the
  // class draws so earlier draws stay stable across mode-count changes.
  std::vector<int> siteMode(siteCount, 0);
  for (std::size_t i = 0; i < siteCount; ++i) {
    int modeCount = static_cast<int>(spec.spectra[siteClass[i]].modes.size());
    if (modeCount > 1)
      siteMode[i] = std::uniform_int_distribution<int>(0, modeCount - 1)(rng);
  }

  GroundTruth truth;
  truth.width = w;
  truth.height = h;
  truth.classCount = c;
  truth.labels.resize(area);
  std::vector<std::uint32_t> siteOf(area);
  for (int r = 0; r < h; ++r)
    for (int col = 0; col < w; ++col) {
      long best = -1;
      std::size_t bestSite = 0;
      for (std::size_t s = 0; s < siteCount; ++s) {
        long dr = r - siteRow[s], dc = col - siteCol[s];
        long d = dr * dr + dc * dc;
        if (best < 0 || d < best) {
          best = d;
          bestSite = s;
        }
      }
      std::size_t p = static_cast<std::size_t>(r) * w + col;
      truth.labels[p] = static_cast<std::uint8_t>(siteClass[bestSite]);
      siteOf[p] = static_cast<std::uint32_t>(bestSite);
    }

  MultibandRaster raster;
  raster.width = w;
  raster.height = h;
  raster.bands = spec.bands;
  raster.data.resize(area * spec.bands);
  std::normal_distribution<double> unitNoise(0.0, 1.0);
  for (int band = 0; band < spec.bands; ++band) {
    std::uint8_t* plane = raster.data.data() + static_cast<std::size_t>(band) * area;
    for (std::size_t p = 0; p < area; ++p) {
      const ClassSpectrum& cs = spec.spectra[truth.labels[p]];
      double sd = cs.sd.empty() ? spec.noiseSd : cs.sd[band];
      double v = cs.modes[siteMode[siteOf[p]]][band] + sd * unitNoise(rng);
      v = std::clamp(v, 0.0, 255.0);
      plane[p] = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return {std::move(raster), std::move(truth)};
}

double homogeneousNeighborhoodFraction(const GroundTruth& truth) {
  if (truth.width < 3 || truth.height < 3) return 0.0;
  std::size_t homogeneous = 0, interior = 0;
  for (int r = 1; r + 1 < truth.height; ++r)
    for (int c = 1; c + 1 < truth.width; ++c) {
      ++interior;
      std::uint8_t want = truth.at(r, c);
      bool same = true;
      for (int dr = -1; dr <= 1 && same; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
          if (truth.at(r + dr, c + dc) != want) {
            same = false;
            break;
          }
      if (same) ++homogeneous;
    }
  return static_cast<double>(homogeneous) / static_cast<double>(interior);
}

EvalReport evaluate(const ClassMap& predicted, const GroundTruth& truth) {
  if (predicted.width != truth.width || predicted.height != truth.height)
    throw DataError("class map dimensions do not match the ground truth");
  const int c = truth.classCount;

  EvalReport report;
  report.classCount = c;
  report.confusion.assign(static_cast<std::size_t>(c) * c, 0);
  report.classFrequency.assign(c, 0);
  report.outlierPerClass.assign(c, 0);

  std::size_t correct = 0;
  for (std::size_t p = 0; p < truth.labels.size(); ++p) {
    std::uint8_t want = truth.labels[p];
    if (want == kUnlabeledSentinel) continue;
    if (want >= c) throw DataError("ground truth label outside the declared class range");
    ++report.labeledCount;
    ++report.classFrequency[want];
    std::uint8_t got = predicted.labels[p];
    if (got == kOutlierSentinel) {
      ++report.outlierCount;
      ++report.outlierPerClass[want];
      continue;
    }
    if (got >= c) throw DataError("predicted label outside the ground-truth class range");
    ++report.confusion[static_cast<std::size_t>(want) * c + got];
    if (got == want) ++correct;
  }
  if (report.labeledCount == 0) throw DataError("ground truth has no labeled pixels");

  report.overallErrorRate =
      1.0 - static_cast<double>(correct) / static_cast<double>(report.labeledCount);
  report.perClassAccuracy.assign(c, 0.0);
  for (int k = 0; k < c; ++k)
    if (report.classFrequency[k] > 0)
      report.perClassAccuracy[k] = static_cast<double>(report.confusionAt(k, k)) /
                                   static_cast<double>(report.classFrequency[k]);
  return report;
}

std::vector<MethodEval> compareMethods(const MultibandRaster& raster, const GroundTruth& truth,
                                       const Rulebase& rb, std::span<const ContextConfig> configs,
                                       kernels::KernelChoice kernel, int threads) {
  if (truth.width != raster.width || truth.height != raster.height)
    throw DataError("ground truth dimensions do not match the raster");
  LabelPlane plane = kernels::computeLabelPlane(raster, rb, kernel, threads);

  std::vector<MethodEval> rows;
  rows.reserve(configs.size() + 1);

  auto addRow = [&](std::string name, ClassifyResult&& result) {
    MethodEval row;
    row.name = std::move(name);
    row.stats = result.stats;
    row.report = evaluate(result.map, truth);
    row.report.conflictFallbackCount = result.stats.conflictFallbacks;
    rows.push_back(std::move(row));
  };

  addRow("noncontextual", classifyPlaneNoncontextual(plane));
  for (const ContextConfig& config : configs) {
    std::string name = contextMethodName(config.method);
    if (config.method == ContextMethod::M4) {
      std::ostringstream os;
      os << "m4(w=" << config.w << ")";
      name = os.str();
    }
    addRow(std::move(name), classifyPlane(plane, config, threads));
  }
  return rows;
}

std::string formatEvalReport(const EvalReport& report) {
  std::ostringstream os;
  os << "labeled pixels:     " << report.labeledCount << "\n";
  os << "overall error rate: " << formatPercent(report.overallErrorRate) << "%\n";
  os << "outliers:           " << report.outlierCount << "\n";
  os << "conflict fallbacks: " << report.conflictFallbackCount << "\n";
  os << "\nclass  frequency  accuracy%\n";
  for (int k = 0; k < report.classCount; ++k)
    os << std::setw(5) << k << std::setw(11) << report.classFrequency[k] << std::setw(11)
       << formatPercent(report.perClassAccuracy[k]) << "\n";
  os << "\nconfusion matrix (rows truth, columns predicted, rightmost outliers):\n";
  int cell = 9;
  for (int t = 0; t < report.classCount; ++t) {
    for (int p = 0; p < report.classCount; ++p)
      os << std::setw(cell) << report.confusionAt(t, p);
    os << std::setw(cell) << report.outlierPerClass[t] << "\n";
  }
  return os.str();
}

std::string formatComparisonTable(std::span<const MethodEval> rows) {
  std::size_t nameWidth = 6;
  for (const MethodEval& row : rows) nameWidth = std::max(nameWidth, row.name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(nameWidth) + 2) << "method" << std::right
     << std::setw(9) << "error%" << std::setw(10) << "outliers" << std::setw(11) << "degenerate"
     << std::setw(10) << "conflict" << "\n";
  for (const MethodEval& row : rows) {
    os << std::left << std::setw(static_cast<int>(nameWidth) + 2) << row.name << std::right
       << std::setw(9) << formatPercent(row.report.overallErrorRate) << std::setw(10)
       << row.report.outlierCount << std::setw(11) << row.stats.degenerateFallbacks
       << std::setw(10) << row.stats.conflictFallbacks << "\n";
  }
  return os.str();
}

std::string comparisonCsv(std::span<const MethodEval> rows) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "method,error_rate,outliers,degenerate_fallbacks,conflict_fallbacks\n";
  for (const MethodEval& row : rows)
    os << row.name << "," << row.report.overallErrorRate << "," << row.report.outlierCount << ","
       << row.stats.degenerateFallbacks << "," << row.stats.conflictFallbacks << "\n";
  return os.str();
}

std::string wCurveCsv(const WSearchResult& result) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "w,error_rate\n";
  for (const auto& [w, error] : result.curve) os << w << "," << error << "\n";
  return os.str();
}

} // namespace pixfuse
