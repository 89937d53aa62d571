// End-to-end acceptance gate. Each numbered check prints exactly one
// PASS/FAIL line; the process exits nonzero if any check fails. Oracles
// here are deliberately independent re-derivations, not calls into the
// code paths they judge.
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pixfuse/context.hpp"
#include "pixfuse/evidence.hpp"
#include "pixfuse/harness.hpp"
#include "pixfuse/kernels.hpp"
#include "pixfuse/prototypes.hpp"
#include "pixfuse/raster.hpp"
#include "pixfuse/rulebase.hpp"
#include "pixfuse/sofm.hpp"

using namespace pixfuse;

namespace {

int failures = 0;

void verdict(int id, bool pass, const std::string& name, const std::string& detail) {
  std::printf("[%s] criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void note(const std::string& line) {
  std::printf("    %s\n", line.c_str());
  std::fflush(stdout);
}

double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------- check 1

Bpa randomBpa(std::mt19937_64& rng, int classCount) {
  FocalSet frame = fullSet(classCount);
  std::uniform_int_distribution<FocalSet> maskDist(1, frame);
  std::uniform_real_distribution<double> massDist(0.1, 1.0);
  std::map<FocalSet, double> byMask;
  int focals = std::uniform_int_distribution<int>(1, 5)(rng);
  for (int i = 0; i < focals; ++i) byMask[maskDist(rng)] += massDist(rng);
  byMask[frame] += 0.1; // keep combination well-defined: the frame meets everything
  double total = 0.0;
  for (const auto& [mask, m] : byMask) total += m;
  Bpa bpa;
  bpa.classCount = classCount;
  for (const auto& [mask, m] : byMask) bpa.masses.emplace_back(mask, m / total);
  return bpa;
}

// Dense subset-pair combination, feasible for small frames.
std::vector<double> bruteCombine(const Bpa& a, const Bpa& b, int classCount) {
  std::size_t subsets = std::size_t{1} << classCount;
  std::vector<double> da(subsets, 0.0), db(subsets, 0.0), out(subsets, 0.0);
  for (const auto& [mask, m] : a.masses) da[mask] += m;
  for (const auto& [mask, m] : b.masses) db[mask] += m;
  double kept = 0.0;
  for (std::size_t x = 0; x < subsets; ++x)
    for (std::size_t y = 0; y < subsets; ++y) {
      double product = da[x] * db[y];
      if (product == 0.0) continue;
      FocalSet meet = x & y;
      if (meet != 0) {
        out[meet] += product;
        kept += product;
      }
    }
  for (double& m : out) m /= kept;
  return out;
}

double maxMassDelta(const Bpa& a, const Bpa& b) {
  double worst = 0.0;
  for (const auto& [mask, m] : a.masses) worst = std::max(worst, std::abs(m - b.massOf(mask)));
  for (const auto& [mask, m] : b.masses) worst = std::max(worst, std::abs(m - a.massOf(mask)));
  return worst;
}

void check1() {
  std::mt19937_64 rng(101);
  double worstOrder = 0.0, worstAssoc = 0.0, worstOracle = 0.0, worstPig = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    int c = 2 + trial % 7;
    Bpa a = randomBpa(rng, c), b = randomBpa(rng, c), d = randomBpa(rng, c);
    Bpa ab = combine(a, b);
    worstOrder = std::max(worstOrder, maxMassDelta(ab, combine(b, a)));
    worstAssoc = std::max(worstAssoc, maxMassDelta(combine(ab, d), combine(a, combine(b, d))));
    if (c <= 3) {
      std::vector<double> oracle = bruteCombine(a, b, c);
      for (std::size_t mask = 1; mask < oracle.size(); ++mask)
        worstOracle = std::max(worstOracle, std::abs(oracle[mask] - ab.massOf(mask)));
    }
    std::vector<double> p = pignistic(ab);
    double sum = 0.0;
    for (double v : p) sum += v;
    worstPig = std::max(worstPig, std::abs(sum - 1.0));
  }
  bool pass = worstOrder < 1e-9 && worstAssoc < 1e-9 && worstOracle < 1e-9 && worstPig < 1e-9;
  verdict(1, pass, "evidence algebra",
          fmt("1000 trials; max deviations: order %.2e, association %.2e, brute-force oracle "
              "%.2e, pignistic sum %.2e (all < 1e-9 required)",
              worstOrder, worstAssoc, worstOracle, worstPig));
}

// ---------------------------------------------------------------- check 2

std::vector<double> randomAlpha(std::mt19937_64& rng, int classCount) {
  std::uniform_real_distribution<double> unit(0.02, 1.0);
  std::bernoulli_distribution zero(0.1);
  std::vector<double> a(classCount, 0.0);
  for (auto& v : a)
    if (!zero(rng)) v = unit(rng);
  return a;
}

void check2() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  int compared = 0;
  bool consistent = true;
  for (int trial = 0; trial < 500; ++trial) {
    int c = 2 + trial % 6;
    std::vector<double> center = randomAlpha(rng, c);
    std::vector<std::vector<double>> nbVecs;
    for (int i = 0; i < 8; ++i) nbVecs.push_back(randomAlpha(rng, c));
    Neighborhood nb;
    nb.classCount = c;
    nb.center = center.data();
    for (int i = 0; i < 8; ++i) nb.neighbors[i] = nbVecs[i].data();

    auto closed = method2Masses(nb);
    std::vector<Bpa> bodies;
    for (const auto& v : nbVecs) {
      double s = 0.0;
      for (int k = 0; k < c; ++k) s += v[k] + center[k];
      if (s <= 0.0) continue;
      bodies.push_back(method2Bpa(center, v));
    }
    if (!closed.has_value()) {
      // the pairwise route must agree that nothing combines
      if (!bodies.empty()) {
        try {
          combineAll(bodies);
          consistent = false;
        } catch (const TotalConflictError&) {
        }
      }
      continue;
    }
    Bpa folded = combineAll(bodies);
    for (int k = 0; k < c; ++k)
      worst = std::max(worst, std::abs((*closed)[k] - folded.massOf(singleton(k))));
    ++compared;
  }
  bool pass = worst < 1e-9 && consistent && compared >= 400;
  verdict(2, pass, "closed-form vs stepwise combination",
          fmt("%d of 500 neighborhoods compared, max per-class deviation %.2e (< 1e-9 "
              "required)%s",
              compared, worst, consistent ? "" : "; degenerate cases disagreed"));
}

// ---------------------------------------------------------------- check 3

void check3() {
  // Configs are drawn so every membership stays above its 1e-15 clamp
  // (spreads >= 2 over a [0,6] domain keep exponents under ~31): the
  // objective is smooth there, which is the regime a derivative check can
  // speak to; at the clamp the function has a kink and "gradient" means
  // nothing. Finite-difference comparisons stay per-component.
  // A central difference over an objective of magnitude O(1..50) carries an
  // irreducible rounding error of about eps*E/h ~ 1e-10 in absolute terms
  // (measured here: 4e-11..1.7e-10). Components smaller than ~1e-5 therefore
  // cannot be certified to 1e-4 *relative* by this oracle at all; they get an
  // absolute bound far above the noise floor but far below any real
  // missing-term bug instead.
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> centerDist(0.0, 6.0), spreadDist(2.0, 4.0);
  double worstRel = 0.0, worstSmallAbs = 0.0;
  int checkedComponents = 0;
  bool monotone = true;
  const double h = 1e-5;

  for (int config = 0; config < 100; ++config) {
    int bands = 1 + config % 3;
    int classes = 2 + config % 2;
    int ruleCount = classes + config % 3;
    Rulebase rb;
    rb.featureCount = bands;
    rb.classCount = classes;
    for (int i = 0; i < ruleCount; ++i) {
      FuzzyRule rule;
      for (int b = 0; b < bands; ++b) {
        rule.center.push_back(centerDist(rng));
        rule.spread.push_back(spreadDist(rng));
      }
      rule.consequent = i % classes;
      rb.rules.push_back(std::move(rule));
    }
    std::vector<LabeledSample> samples;
    int sampleCount = 2 * classes + std::uniform_int_distribution<int>(0, 6)(rng);
    for (int s = 0; s < sampleCount; ++s) {
      LabeledSample sample;
      for (int b = 0; b < bands; ++b) sample.features.push_back(centerDist(rng));
      sample.label = s % classes;
      samples.push_back(std::move(sample));
    }

    std::vector<TunePair> pairs = assignTunePairs(rb, samples);
    std::vector<RuleGradient> analytic = tuningGradient(rb, samples, pairs);
    for (std::size_t r = 0; r < rb.rules.size(); ++r)
      for (int b = 0; b < bands; ++b)
        for (int which = 0; which < 2; ++which) {
          auto& param = which == 0 ? rb.rules[r].center[b] : rb.rules[r].spread[b];
          double saved = param;
          param = saved + h;
          double up = tuningError(rb, samples, pairs);
          param = saved - h;
          double down = tuningError(rb, samples, pairs);
          param = saved;
          double numeric = (up - down) / (2.0 * h);
          double a = which == 0 ? analytic[r].center[b] : analytic[r].spread[b];
          double scale = std::max(std::abs(a), std::abs(numeric));
          if (scale < 1e-5) {
            worstSmallAbs = std::max(worstSmallAbs, std::abs(a - numeric));
            continue;
          }
          worstRel = std::max(worstRel, std::abs(a - numeric) / scale);
          ++checkedComponents;
        }

    TuneResult tuned = tuneRules(rb, samples, RulebaseConfig{});
    for (std::size_t e = 1; e < tuned.errorByEpoch.size(); ++e)
      if (tuned.errorByEpoch[e] > tuned.errorByEpoch[e - 1] + 1e-12) monotone = false;
  }
  bool pass = worstRel < 1e-4 && worstSmallAbs < 1e-8 && monotone && checkedComponents > 500;
  verdict(3, pass, "tuning gradients",
          fmt("%d gradient components vs central differences, worst relative error %.2e "
              "(< 1e-4 required); near-zero components agree within %.1e absolute; "
              "descent %s increased the objective",
              checkedComponents, worstRel, worstSmallAbs, monotone ? "never" : "INCORRECTLY"));
}

// ---------------------------------------------------------------- check 4

void check4() {
  // Vectors live in the operational membership domain [1e-15, 1] (the
  // clamp applied before every soft match), log-uniform, with one
  // component forced below 0.05. The power mean exceeds the minimum by up
  // to min * ln(n)/|q|, so a small minimum is what makes the 1e-3 limit
  // tolerance meaningful rather than lucky: 0.05 * ln(8)/200 = 5.2e-4.
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> logRange(std::log(1e-15), std::log(1.0));
  std::uniform_real_distribution<double> logSmall(std::log(1e-15), std::log(0.05));
  double worstLimit = 0.0;
  bool bounded = true;
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 1 + trial % 8;
    std::vector<double> v(n);
    for (double& x : v) x = std::exp(logRange(rng));
    v[std::uniform_int_distribution<int>(0, n - 1)(rng)] = std::exp(logSmall(rng));
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    worstLimit = std::max(worstLimit, std::abs(softMatch(v, -200.0) - lo));
    for (double q : {-200.0, -50.0, -10.0, -1.0}) {
      double sm = softMatch(v, q);
      if (sm < lo - 1e-12 || sm > hi + 1e-12) bounded = false;
    }
  }
  bool pass = worstLimit < 1e-3 && bounded;
  verdict(4, pass, "soft minimum limit",
          fmt("1000 vectors; worst |softMatch(v,-200) - min| = %.2e (< 1e-3 required); values "
              "%s within [min, max]",
              worstLimit, bounded ? "stayed" : "ESCAPED"));
}

// ---------------------------------------------------------------- check 5

Rulebase meansRulebase(const SceneSpec& spec, double spreadScale) {
  Rulebase rb;
  rb.featureCount = spec.bands;
  rb.classCount = spec.classCount();
  for (int k = 0; k < spec.classCount(); ++k) {
    FuzzyRule rule;
    rule.center = spec.spectra[k].modes[0];
    rule.spread.assign(spec.bands, spreadScale * spec.noiseSd);
    rule.consequent = k;
    rb.rules.push_back(std::move(rule));
  }
  return rb;
}

// Independent re-derivation of the unweighted simple-support scheme: every
// vector, center or neighbor alike, pledges its strongest class.
int unweightedDecision(const LabelPlane& plane, int row, int col) {
  const int c = plane.classCount;
  std::vector<Bpa> bodies;
  auto addVector = [&](const double* v) {
    int best = -1;
    double bestVal = 0.0;
    for (int k = 0; k < c; ++k)
      if (v[k] > bestVal) {
        bestVal = v[k];
        best = k;
      }
    if (best < 0) return;
    Bpa bpa;
    bpa.classCount = c;
    if (bestVal >= 1.0) {
      bpa.masses.emplace_back(singleton(best), 1.0);
    } else {
      bpa.masses.emplace_back(singleton(best), bestVal);
      bpa.masses.emplace_back(fullSet(c), 1.0 - bestVal);
    }
    bodies.push_back(std::move(bpa));
  };
  addVector(plane.at(row, col));
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      int r = row + dr, cc = col + dc;
      if (r >= 0 && r < plane.height && cc >= 0 && cc < plane.width) addVector(plane.at(r, cc));
    }
  if (bodies.empty()) return kNoClass;
  std::vector<double> p;
  try {
    p = pignistic(combineAll(bodies));
  } catch (const TotalConflictError&) {
    const double* center = plane.at(row, col);
    int best = kNoClass;
    double bestVal = 0.0;
    for (int k = 0; k < c; ++k)
      if (center[k] > bestVal) {
        bestVal = center[k];
        best = k;
      }
    return best;
  }
  int best = 0;
  for (int k = 1; k < c; ++k)
    if (p[k] > p[best]) best = k;
  return best;
}

void check5() {
  SceneSpec spec = presetScene("patches-large", 7);
  auto [raster, truth] = generateScene(spec);
  Rulebase rb = meansRulebase(spec, 2.0);
  LabelPlane plane = kernels::computeLabelPlane(raster, rb);

  ClassifyResult weighted = classifyPlane(plane, ContextConfig{ContextMethod::M4, 1.0});
  std::size_t fullMismatches = 0;
  for (int r = 0; r < plane.height; ++r)
    for (int c = 0; c < plane.width; ++c) {
      int expect = unweightedDecision(plane, r, c);
      std::uint8_t want = expect == kNoClass ? kOutlierSentinel
                                             : static_cast<std::uint8_t>(expect);
      if (weighted.map.at(r, c) != want) ++fullMismatches;
    }

  ClassifyResult zero = classifyPlane(plane, ContextConfig{ContextMethod::M4, 0.0});
  ClassifyResult bare = classifyPlaneNoncontextual(plane);
  std::size_t zeroMismatches = 0;
  for (std::size_t i = 0; i < zero.map.labels.size(); ++i)
    if (zero.map.labels[i] != bare.map.labels[i]) ++zeroMismatches;

  bool pass = fullMismatches == 0 && zeroMismatches == 0;
  verdict(5, pass, "weighted-evidence reductions",
          fmt("128x128 scene: w=1 vs unweighted re-derivation %zu mismatching pixels, w=0 vs "
              "noncontextual %zu (0 required for both)",
              fullMismatches, zeroMismatches));
}

// ---------------------------------------------------------------- check 6

Rulebase trainPipeline(const MultibandRaster& raster, const GroundTruth& truth,
                       std::uint64_t seed) {
  TrainingSet ts = sampleTrainingSet(raster, truth, 16, seed);
  SofmConfig sofm;
  sofm.nodeCount = 4 * truth.classCount;
  sofm.epochs = 30;
  sofm.seed = seed;
  PrototypeSet map = trainSofm(ts.samples, sofm);
  map = winnerOnlyPolish(map, ts.samples, 10, 0.05, 0.01, seed + 1);
  map = labelPrototypes(map, ts.samples, truth.classCount);
  PrototypeSet refined = refinePrototypes(map, ts.samples, RefineConfig{}, truth.classCount);
  Rulebase rb = buildRules(refined, ts.samples, RulebaseConfig{}, truth.classCount);
  return tuneRules(rb, ts.samples, RulebaseConfig{}).rulebase;
}

struct PresetOutcome {
  double meanBaseline = 0.0;
  double meanM1 = 0.0, meanM2 = 0.0, meanM3 = 0.0, meanM4 = 0.0;
  std::vector<double> bestW;
};

PresetOutcome runPreset(const std::string& name) {
  PresetOutcome out;
  const std::vector<ContextConfig> configs = {
      {ContextMethod::M1, 1.0},
      {ContextMethod::M2, 1.0},
      {ContextMethod::M3, 1.0},
      {ContextMethod::M4, 1.0},
  };
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SceneSpec spec = presetScene(name, seed);
    auto [raster, truth] = generateScene(spec);
    Rulebase rb = trainPipeline(raster, truth, seed);
    std::vector<MethodEval> rows = compareMethods(raster, truth, rb, configs);
    out.meanBaseline += rows[0].report.overallErrorRate / 5.0;
    out.meanM1 += rows[1].report.overallErrorRate / 5.0;
    out.meanM2 += rows[2].report.overallErrorRate / 5.0;
    out.meanM3 += rows[3].report.overallErrorRate / 5.0;
    out.meanM4 += rows[4].report.overallErrorRate / 5.0;
    Rect all{0, 0, spec.height, spec.width};
    out.bestW.push_back(gridSearchW(raster, truth, rb, all, defaultWGrid()).bestW);
  }
  return out;
}

std::string joinW(const std::vector<double>& ws) {
  std::ostringstream os;
  for (std::size_t i = 0; i < ws.size(); ++i) os << (i ? " " : "") << ws[i];
  return os.str();
}

void check6() {
  const double pp = 0.01; // one percentage point, as an error-rate fraction
  PresetOutcome large = runPreset("patches-large");
  PresetOutcome small = runPreset("patches-small");

  bool largeM1 = large.meanBaseline - large.meanM1 >= pp;
  bool largeM4 = large.meanBaseline - large.meanM4 >= pp;
  bool smallM2 = small.meanBaseline - small.meanM2 >= pp;
  bool smallM3 = small.meanBaseline - small.meanM3 >= pp;
  int largeAtMax = 0, smallBelowMax = 0;
  for (double w : large.bestW) largeAtMax += w == 1.0 ? 1 : 0;
  for (double w : small.bestW) smallBelowMax += w < 1.0 ? 1 : 0;
  bool largeW = largeAtMax >= 3;  // majority of the five seeds
  bool smallW = smallBelowMax >= 3;

  note(fmt("patches-large means over 5 seeds: baseline %.2f%%, m1 %.2f%% (%s), m4(w=1) %.2f%% "
           "(%s)",
           100 * large.meanBaseline, 100 * large.meanM1, largeM1 ? "ok" : "not met",
           100 * large.meanM4, largeM4 ? "ok" : "not met"));
  note(fmt("patches-small means over 5 seeds: baseline %.2f%%, m2 %.2f%% (%s), m3 %.2f%% (%s)",
           100 * small.meanBaseline, 100 * small.meanM2, smallM2 ? "ok" : "not met",
           100 * small.meanM3, smallM3 ? "ok" : "not met"));
  note(fmt("best w per seed: patches-small [%s] (< 1.0 on %d/5, majority %s), patches-large "
           "[%s] (= 1.0 on %d/5, majority %s)",
           joinW(small.bestW).c_str(), smallBelowMax, smallW ? "ok" : "not met",
           joinW(large.bestW).c_str(), largeAtMax, largeW ? "ok" : "not met"));

  bool pass = largeM1 && largeM4 && smallM2 && smallM3 && largeW && smallW;
  verdict(6, pass, "structure-dependent ranking",
          pass ? "all mean-improvement and weight-search conditions met"
               : "see the condition notes above");
}

// ---------------------------------------------------------------- check 7

SceneSpec codeScene() {
  // 16 spectral classes on 7 bands from the [7,4] Hamming codewords: any
  // two class means differ in at least 3 bands.
  SceneSpec spec;
  spec.width = 128;
  spec.height = 128;
  spec.bands = 7;
  spec.layout = SceneLayout::LargePatches;
  spec.patchScale = 32;
  spec.noiseSd = 12.0;
  spec.seed = 5;
  const double lo = 20.0, step = 32.0;
  for (int data = 0; data < 16; ++data) {
    int d0 = data & 1, d1 = (data >> 1) & 1, d2 = (data >> 2) & 1, d3 = (data >> 3) & 1;
    int bits[7] = {d0 ^ d1 ^ d3, d0 ^ d2 ^ d3, d0, d1 ^ d2 ^ d3, d1, d2, d3};
    ClassSpectrum cs;
    cs.modes.emplace_back();
    for (int b = 0; b < 7; ++b) cs.modes[0].push_back(lo + step * bits[b]);
    spec.spectra.push_back(std::move(cs));
  }
  return spec;
}

struct PipelineArtifacts {
  std::vector<std::uint8_t> rasterBytes, truthBytes, mapBytes;
  std::string rulebaseText, report;
  std::size_t ruleCount = 0;
};

PipelineArtifacts runPipelineOnce(const SceneSpec& spec, const std::string& rbPath) {
  auto [raster, truth] = generateScene(spec);
  Rulebase rb = trainPipeline(raster, truth, spec.seed);
  saveRulebase(rb, rbPath);
  ClassifyResult result =
      classifyImage(raster, rb, ContextConfig{ContextMethod::M4, 1.0},
                    kernels::KernelChoice::Auto, /*threads=*/1);
  PipelineArtifacts art;
  art.rasterBytes = raster.data;
  art.truthBytes = truth.labels;
  art.mapBytes = result.map.labels;
  std::ifstream in(rbPath, std::ios::binary);
  art.rulebaseText.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  art.report = formatEvalReport(evaluate(result.map, truth));
  art.ruleCount = rb.rules.size();
  return art;
}

void check7() {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("pixfuse-accept-" + std::to_string(::getpid()));
  fs::create_directories(dir);

  SceneSpec spec = codeScene();
  auto t0 = std::chrono::steady_clock::now();
  PipelineArtifacts first = runPipelineOnce(spec, (dir / "rb1.txt").string());
  double pipelineSeconds = seconds(t0);
  PipelineArtifacts second = runPipelineOnce(spec, (dir / "rb2.txt").string());
  bool reproducible = first.rasterBytes == second.rasterBytes &&
                      first.truthBytes == second.truthBytes &&
                      first.rulebaseText == second.rulebaseText &&
                      first.mapBytes == second.mapBytes && first.report == second.report;
  bool enoughRules = first.ruleCount >= 12;
  fs::remove_all(dir);

  // decision throughput on a quarter-million-pixel image
  SceneSpec bigSpec = presetScene("patches-large", 9);
  bigSpec.width = 512;
  bigSpec.height = 512;
  auto [bigRaster, bigTruth] = generateScene(bigSpec);
  Rulebase bigRb;
  bigRb.featureCount = 7;
  bigRb.classCount = bigSpec.classCount();
  for (int i = 0; i < 25; ++i) {
    FuzzyRule rule;
    rule.consequent = i % bigRb.classCount;
    rule.center = bigSpec.spectra[rule.consequent].modes[0];
    rule.center[i % 7] += 3.0 * (i / 4);
    rule.spread.assign(7, 24.0 + (i % 5));
    bigRb.rules.push_back(std::move(rule));
  }
  auto t1 = std::chrono::steady_clock::now();
  LabelPlane bigPlane = kernels::computeLabelPlane(bigRaster, bigRb, kernels::KernelChoice::Auto,
                                                   /*threads=*/1);
  double planeSeconds = seconds(t1);
  double decideSeconds = 0.0;
  for (ContextMethod m : {ContextMethod::M1, ContextMethod::M2, ContextMethod::M3,
                          ContextMethod::M4}) {
    auto t2 = std::chrono::steady_clock::now();
    classifyPlane(bigPlane, ContextConfig{m, 0.75}, /*threads=*/1);
    decideSeconds += seconds(t2);
  }
  bool fastSmall = pipelineSeconds < 60.0;
  bool fastBig = planeSeconds + decideSeconds < 60.0;

  note(fmt("128x128x7, 16 classes: %zu rules (>= 12 required), full pipeline %.1f s, "
           "second run %s",
           first.ruleCount, pipelineSeconds,
           reproducible ? "byte-identical" : "DIFFERED"));
  note(fmt("512x512x7, 25 rules, single-threaded: label plane %.1f s + all four decision "
           "passes %.1f s (< 60 s required)",
           planeSeconds, decideSeconds));
  bool pass = reproducible && enoughRules && fastSmall && fastBig;
  verdict(7, pass, "determinism and throughput",
          pass ? "pipeline byte-reproducible and inside the time budget"
               : "see the notes above");
}

// ---------------------------------------------------------------- check 8

void check8() {
  // Construction of "homogeneous patch with one mislabeled pixel": the
  // eight neighbors agree on the patch class with more confidence than the
  // stray pixel has in its wrong label. That ordering is the premise of
  // the scenario, not a fudge: the pairwise evidence methods add the
  // center's vector into all eight combinations, so a stray pixel more
  // confident than the whole patch consensus is a different (and
  // legitimately uncorrectable) situation.
  std::mt19937_64 rng(808);
  int corrected[4] = {0, 0, 0, 0};
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    int c = 2 + trial % 5;
    int patchClass = std::uniform_int_distribution<int>(0, c - 1)(rng);
    int wrongClass = (patchClass + 1 + std::uniform_int_distribution<int>(0, c - 2)(rng)) % c;

    double strayConfidence = std::uniform_real_distribution<double>(0.4, 0.8)(rng);
    double neighborLeak = std::uniform_real_distribution<double>(0.01, 0.10)(rng);
    double consensusFloor = strayConfidence + neighborLeak + 0.05;

    std::vector<std::vector<double>> nbVecs;
    for (int i = 0; i < 8; ++i) {
      std::vector<double> v(c);
      for (int k = 0; k < c; ++k)
        v[k] = std::uniform_real_distribution<double>(0.01, neighborLeak)(rng);
      v[patchClass] = std::uniform_real_distribution<double>(consensusFloor, 0.98)(rng);
      nbVecs.push_back(std::move(v));
    }
    std::vector<double> center(c);
    for (int k = 0; k < c; ++k)
      center[k] = std::uniform_real_distribution<double>(0.01, 0.5 * strayConfidence)(rng);
    center[wrongClass] = strayConfidence;

    Neighborhood nb;
    nb.classCount = c;
    nb.center = center.data();
    for (int i = 0; i < 8; ++i) nb.neighbors[i] = nbVecs[i].data();

    if (method1(nb) == patchClass) ++corrected[0];
    if (method2(nb) == patchClass) ++corrected[1];
    if (method3(nb) == patchClass) ++corrected[2];
    if (method4(nb, 1.0) == patchClass) ++corrected[3];
  }
  bool pass = corrected[0] == trials && corrected[1] == trials && corrected[2] == trials &&
              corrected[3] == trials;
  verdict(8, pass, "isolated-pixel smoothing",
          fmt("%d constructions corrected: m1 %d, m2 %d, m3 %d, m4 %d (all %d required)",
              trials, corrected[0], corrected[1], corrected[2], corrected[3], trials));
}

} // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  check1();
  check2();
  check3();
  check4();
  check5();
  check6();
  check7();
  check8();
  std::printf("%d/8 criteria passed in %.0f s\n", 8 - failures, seconds(t0));
  return failures == 0 ? 0 : 1;
}
