#include "CLI11.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "pixfuse/context.hpp"
#include "pixfuse/harness.hpp"
#include "pixfuse/kernels.hpp"
#include "pixfuse/prototypes.hpp"
#include "pixfuse/raster.hpp"
#include "pixfuse/rulebase.hpp"
#include "pixfuse/sofm.hpp"

namespace {

using namespace pixfuse;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct GlobalOpts {
  int threads = 1;
  std::string kernel = "auto";

  kernels::KernelChoice kernelChoice() const {
    if (kernel == "scalar") return kernels::KernelChoice::Scalar;
    if (kernel == "avx2") return kernels::KernelChoice::Avx2;
    return kernels::KernelChoice::Auto;
  }
};

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
  return buf;
}

void writeTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path + "'");
}

double sampleErrorRate(const Rulebase& rb, const std::vector<LabeledSample>& samples) {
  std::size_t wrong = 0;
  for (const LabeledSample& s : samples)
    if (classifyNoncontextual(rb, s.features) != s.label) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(samples.size());
}

struct SynthOpts {
  std::string preset, spec, outRaster, outTruth, dumpSpec;
  std::uint64_t seed = 1;
  bool seedSet = false;
};

int runSynth(const SynthOpts& o) {
  SceneSpec spec;
  if (!o.preset.empty()) {
    spec = presetScene(o.preset, o.seed);
  } else {
    spec = loadSceneSpec(o.spec);
    if (o.seedSet) spec.seed = o.seed;
  }
  auto [raster, truth] = generateScene(spec);
  writeRaster(raster, o.outRaster);
  writeGroundTruth(truth, o.outTruth);
  if (!o.dumpSpec.empty()) saveSceneSpec(spec, o.dumpSpec);
  std::cerr << "scene: " << spec.width << "x" << spec.height << "x" << spec.bands << ", "
            << spec.classCount() << " classes, homogeneous-3x3 fraction "
            << percent(homogeneousNeighborhoodFraction(truth)) << "\n";
  return 0;
}

struct TrainOpts {
  std::string raster, truth, out;
  int samplesPerClass = 16;
  std::uint64_t seed = 1;
  int sofmNodes = 0; // 0 = four prototypes per class
  int sofmEpochs = 30;
  int polishEpochs = 10;
  RulebaseConfig rule;
  RefineConfig refine;
  bool noTune = false;
};

int runTrain(const TrainOpts& o) {
  MultibandRaster raster = readRaster(o.raster);
  GroundTruth truth = readGroundTruth(o.truth);
  TrainingSet ts = sampleTrainingSet(raster, truth, o.samplesPerClass, o.seed);
  for (const std::string& w : ts.warnings) std::cerr << "warning: " << w << "\n";

  SofmConfig sofm;
  sofm.nodeCount = o.sofmNodes > 0 ? o.sofmNodes : 4 * truth.classCount;
  sofm.epochs = o.sofmEpochs;
  sofm.seed = o.seed;
  std::cerr << "training map: " << sofm.nodeCount << " nodes, " << sofm.epochs << " epochs, "
            << ts.samples.size() << " samples\n";
  PrototypeSet map = trainSofm(ts.samples, sofm);
  if (o.polishEpochs > 0)
    map = winnerOnlyPolish(map, ts.samples, o.polishEpochs, 0.05, 0.01, o.seed + 1);
  map = labelPrototypes(map, ts.samples, truth.classCount);
  PrototypeSet refined = refinePrototypes(map, ts.samples, o.refine, truth.classCount);
  std::cerr << "prototypes: " << map.size() << " -> " << refined.size() << " after refinement\n";

  Rulebase rb = buildRules(refined, ts.samples, o.rule, truth.classCount);
  std::cout << "rules: " << rb.rules.size() << "\n";
  std::cout << "training error before tuning: " << percent(sampleErrorRate(rb, ts.samples))
            << "\n";
  if (!o.noTune) {
    TuneResult tuned = tuneRules(rb, ts.samples, o.rule);
    rb = tuned.rulebase;
    std::cout << "tuning: E " << tuned.errorByEpoch.front() << " -> "
              << tuned.errorByEpoch.back() << " over " << tuned.epochsAccepted
              << " accepted epochs\n";
    std::cout << "training error after tuning: " << percent(sampleErrorRate(rb, ts.samples))
              << "\n";
  }
  saveRulebase(rb, o.out);
  std::cerr << "wrote rulebase '" << o.out << "'\n";
  return 0;
}

struct TuneOpts {
  std::string rulebase, raster, truth, out;
  int samplesPerClass = 16;
  std::uint64_t seed = 1;
  double rate = 0.25;
  int maxEpochs = 40;
  double minImprovement = 1e-4;
};

int runTune(const TuneOpts& o) {
  Rulebase rb = loadRulebase(o.rulebase);
  MultibandRaster raster = readRaster(o.raster);
  GroundTruth truth = readGroundTruth(o.truth);
  if (truth.classCount != rb.classCount)
    throw DataError("ground truth class count does not match the rulebase");
  TrainingSet ts = sampleTrainingSet(raster, truth, o.samplesPerClass, o.seed);
  for (const std::string& w : ts.warnings) std::cerr << "warning: " << w << "\n";

  RulebaseConfig cfg;
  cfg.learningRate = o.rate;
  cfg.maxTuneEpochs = o.maxEpochs;
  cfg.minImprovement = o.minImprovement;
  TuneResult tuned = tuneRules(rb, ts.samples, cfg);
  std::cout << "tuning: E " << tuned.errorByEpoch.front() << " -> " << tuned.errorByEpoch.back()
            << " over " << tuned.epochsAccepted << " accepted epochs\n";
  std::cout << "training error after tuning: "
            << percent(sampleErrorRate(tuned.rulebase, ts.samples)) << "\n";
  saveRulebase(tuned.rulebase, o.out);
  std::cerr << "wrote rulebase '" << o.out << "'\n";
  return 0;
}

struct ClassifyOpts {
  std::string rulebase, raster, method = "m1", out, savePlane;
  double w = 1.0;
};

int runClassify(const ClassifyOpts& o, const GlobalOpts& g) {
  Rulebase rb = loadRulebase(o.rulebase);
  MultibandRaster raster = readRaster(o.raster);
  LabelPlane plane = kernels::computeLabelPlane(raster, rb, g.kernelChoice(), g.threads);
  ClassifyResult result =
      o.method == "none"
          ? classifyPlaneNoncontextual(plane)
          : classifyPlane(plane, ContextConfig{parseContextMethod(o.method), o.w}, g.threads);
  writeClassMap(result.map, o.out);
  if (!o.savePlane.empty()) writeLabelPlane(plane, o.savePlane);
  std::cerr << "classified " << result.stats.pixels << " pixels: " << result.stats.outliers
            << " outliers, " << result.stats.degenerateFallbacks << " degenerate fallbacks, "
            << result.stats.conflictFallbacks << " conflict fallbacks\n";
  return 0;
}

struct EvaluateOpts {
  std::string map, truth;
};

int runEvaluate(const EvaluateOpts& o) {
  ClassMap map = readClassMap(o.map);
  GroundTruth truth = readGroundTruth(o.truth);
  std::cout << formatEvalReport(evaluate(map, truth));
  return 0;
}

struct CompareOpts {
  std::string rulebase, raster, truth, csv;
  double w = 1.0;
};

int runCompare(const CompareOpts& o, const GlobalOpts& g) {
  Rulebase rb = loadRulebase(o.rulebase);
  MultibandRaster raster = readRaster(o.raster);
  GroundTruth truth = readGroundTruth(o.truth);
  std::vector<ContextConfig> configs = {
      {ContextMethod::M1, 1.0},
      {ContextMethod::M2, 1.0},
      {ContextMethod::M3, 1.0},
      {ContextMethod::M4, o.w},
  };
  std::vector<MethodEval> rows =
      compareMethods(raster, truth, rb, configs, g.kernelChoice(), g.threads);
  std::cout << formatComparisonTable(rows);
  if (!o.csv.empty()) writeTextFile(o.csv, comparisonCsv(rows));
  return 0;
}

struct TuneWOpts {
  std::string rulebase, raster, truth, curve;
  std::vector<int> rect; // row0 col0 height width
  std::vector<double> grid;
};

int runTuneW(const TuneWOpts& o, const GlobalOpts& g) {
  Rulebase rb = loadRulebase(o.rulebase);
  MultibandRaster raster = readRaster(o.raster);
  GroundTruth truth = readGroundTruth(o.truth);
  Rect rect;
  if (!o.rect.empty()) {
    rect = Rect{o.rect[0], o.rect[1], o.rect[2], o.rect[3]};
  } else {
    rect = Rect{0, 0, std::min(100, raster.height), std::min(100, raster.width)};
  }
  std::vector<double> grid = o.grid.empty() ? defaultWGrid() : o.grid;
  WSearchResult result = gridSearchW(raster, truth, rb, rect, grid, g.kernelChoice(), g.threads);
  std::cout << "best w: " << result.bestW << " (error " << percent(result.bestError) << ")\n";
  if (!o.curve.empty()) writeTextFile(o.curve, wCurveCsv(result));
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"fuzzy rule-based contextual land-cover classification pipeline"};
  app.set_config("--config", "", "read option defaults from an INI file");
  app.require_subcommand(1);

  GlobalOpts global;
  app.add_option("--threads", global.threads, "worker threads for image-sized loops")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--kernel", global.kernel, "label-plane kernel")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
  app.fallthrough();

  SynthOpts synth;
  CLI::App* synthCmd = app.add_subcommand("synth", "generate a synthetic scene");
  synthCmd->add_option("--preset", synth.preset, "built-in scene preset")
      ->check(CLI::IsMember(presetSceneNames()));
  synthCmd->add_option("--spec", synth.spec, "scene spec file");
  auto* seedOpt = synthCmd->add_option("--seed", synth.seed, "scene seed")->capture_default_str();
  synthCmd->add_option("--out-raster", synth.outRaster, "output raster base path")->required();
  synthCmd->add_option("--out-truth", synth.outTruth, "output ground-truth base path")->required();
  synthCmd->add_option("--dump-spec", synth.dumpSpec, "also write the effective scene spec");

  TrainOpts train;
  CLI::App* trainCmd = app.add_subcommand("train", "learn a rulebase from labeled pixels");
  trainCmd->add_option("--raster", train.raster, "input raster base path")->required();
  trainCmd->add_option("--truth", train.truth, "ground-truth base path")->required();
  trainCmd->add_option("--out", train.out, "output rulebase file")->required();
  trainCmd->add_option("--samples-per-class", train.samplesPerClass, "training pixels per class")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  trainCmd->add_option("--seed", train.seed, "sampling and map seed")->capture_default_str();
  trainCmd->add_option("--sofm-nodes", train.sofmNodes, "map size (0 = four per class)")
      ->capture_default_str();
  trainCmd->add_option("--sofm-epochs", train.sofmEpochs, "map training epochs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  trainCmd->add_option("--polish-epochs", train.polishEpochs, "winner-only polish epochs")
      ->capture_default_str();
  trainCmd->add_option("--kw", train.rule.kw, "spread scale factor")->capture_default_str();
  trainCmd->add_flag("--spread-rms", train.rule.spreadRms,
                     "use rms cell deviation for spreads instead of sqrt(sum)/count");
  trainCmd->add_option("--q", train.rule.q, "softmin exponent")->capture_default_str();
  trainCmd->add_option("--epsilon", train.rule.epsilon, "label-vector cutoff")
      ->capture_default_str();
  trainCmd->add_option("--k1", train.refine.k1, "global usefulness threshold scale")
      ->capture_default_str();
  trainCmd->add_option("--k2", train.refine.k2, "per-class usefulness threshold scale")
      ->capture_default_str();
  trainCmd->add_option("--refine-iters", train.refine.maxIterations, "refinement iteration cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  trainCmd->add_flag("--no-tune", train.noTune, "skip gradient tuning");
  trainCmd->add_option("--tune-rate", train.rule.learningRate, "tuning step scale")
      ->capture_default_str();
  trainCmd->add_option("--tune-epochs", train.rule.maxTuneEpochs, "tuning epoch cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  trainCmd->add_option("--min-improvement", train.rule.minImprovement,
                       "stop once an epoch improves E by less than this")
      ->capture_default_str();

  TuneOpts tune;
  CLI::App* tuneCmd = app.add_subcommand("tune", "gradient-tune an existing rulebase");
  tuneCmd->add_option("--rulebase", tune.rulebase, "rulebase file")->required();
  tuneCmd->add_option("--raster", tune.raster, "input raster base path")->required();
  tuneCmd->add_option("--truth", tune.truth, "ground-truth base path")->required();
  tuneCmd->add_option("--out", tune.out, "output rulebase file")->required();
  tuneCmd->add_option("--samples-per-class", tune.samplesPerClass, "training pixels per class")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  tuneCmd->add_option("--seed", tune.seed, "sampling seed")->capture_default_str();
  tuneCmd->add_option("--tune-rate", tune.rate, "tuning step scale")->capture_default_str();
  tuneCmd->add_option("--tune-epochs", tune.maxEpochs, "tuning epoch cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  tuneCmd->add_option("--min-improvement", tune.minImprovement,
                      "stop once an epoch improves E by less than this")
      ->capture_default_str();

  ClassifyOpts classify;
  CLI::App* classifyCmd = app.add_subcommand("classify", "label every pixel of a raster");
  classifyCmd->add_option("--rulebase", classify.rulebase, "rulebase file")->required();
  classifyCmd->add_option("--raster", classify.raster, "input raster base path")->required();
  classifyCmd->add_option("--method", classify.method, "decision method")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "m1", "m2", "m3", "m4"}));
  classifyCmd->add_option("--w", classify.w, "neighbor weight for m4")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  classifyCmd->add_option("--out", classify.out, "output class-map base path")->required();
  classifyCmd->add_option("--save-plane", classify.savePlane,
                          "also write the label-vector plane (f64 raster)");

  EvaluateOpts evaluateOpts;
  CLI::App* evaluateCmd = app.add_subcommand("evaluate", "score a class map against ground truth");
  evaluateCmd->add_option("--map", evaluateOpts.map, "class-map base path")->required();
  evaluateCmd->add_option("--truth", evaluateOpts.truth, "ground-truth base path")->required();

  CompareOpts compare;
  CLI::App* compareCmd =
      app.add_subcommand("compare", "score every decision method on one raster");
  compareCmd->add_option("--rulebase", compare.rulebase, "rulebase file")->required();
  compareCmd->add_option("--raster", compare.raster, "input raster base path")->required();
  compareCmd->add_option("--truth", compare.truth, "ground-truth base path")->required();
  compareCmd->add_option("--w", compare.w, "neighbor weight for the m4 row")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  compareCmd->add_option("--csv", compare.csv, "also write the table as CSV");

  TuneWOpts tuneW;
  CLI::App* tuneWCmd = app.add_subcommand("tune-w", "grid-search the m4 neighbor weight");
  tuneWCmd->add_option("--rulebase", tuneW.rulebase, "rulebase file")->required();
  tuneWCmd->add_option("--raster", tuneW.raster, "input raster base path")->required();
  tuneWCmd->add_option("--truth", tuneW.truth, "ground-truth base path")->required();
  tuneWCmd->add_option("--rect", tuneW.rect, "sub-image as row0 col0 height width (default 100x100 at the origin)")
      ->expected(4);
  tuneWCmd->add_option("--w-grid", tuneW.grid, "explicit w values to try")
      ->check(CLI::Range(0.0, 1.0));
  tuneWCmd->add_option("--curve", tuneW.curve, "write the (w, error) curve as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  synth.seedSet = seedOpt->count() > 0;
  if (synthCmd->parsed() && synth.preset.empty() == synth.spec.empty()) {
    std::cerr << "synth: exactly one of --preset and --spec is required\n";
    return kExitUsage;
  }

  std::cerr << "defaults: q=-10 epsilon=0.01 kw=6 k1=2 k2=2 samples-per-class=16"
               " w-grid=0.05..1.00 step 0.05 threads=1 kernel=auto\n";

  try {
    if (synthCmd->parsed()) return runSynth(synth);
    if (trainCmd->parsed()) return runTrain(train);
    if (tuneCmd->parsed()) return runTune(tune);
    if (classifyCmd->parsed()) return runClassify(classify, global);
    if (evaluateCmd->parsed()) return runEvaluate(evaluateOpts);
    if (compareCmd->parsed()) return runCompare(compare, global);
    if (tuneWCmd->parsed()) return runTuneW(tuneW, global);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const TotalConflictError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
