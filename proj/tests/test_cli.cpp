#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#ifndef PIXFUSE_CLI_PATH
#error "PIXFUSE_CLI_PATH must point at the command-line binary"
#endif

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exitCode = -1;
  std::string output; // stdout and stderr interleaved
};

RunResult run(const std::string& args) {
  std::string cmd = std::string(PIXFUSE_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
    result.output.append(buf.data(), n);
  int status = ::pclose(pipe);
  result.exitCode = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pixfuse-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

void writeSceneSpecFile(const std::string& path) {
  std::ofstream out(path);
  out << "pixfuse-scene 1\n"
      << "width=64\nheight=64\nbands=3\nclasses=3\n"
      << "layout=large-patches\npatchScale=16\nnoiseSd=10\nseed=3\n"
      << "mean0=40 120 200\n"
      << "mean1=200 120 40\n"
      << "mean2=120 220 120\n";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

std::size_t countLines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

} // namespace

TEST_CASE("the full pipeline runs end to end from the command line") {
  TempDir dir;
  std::string spec = dir.file("scene.txt");
  writeSceneSpecFile(spec);

  RunResult synth = run("synth --spec " + spec + " --out-raster " + dir.file("sc") +
                        " --out-truth " + dir.file("tr") + " --dump-spec " + dir.file("eff.txt"));
  CAPTURE(synth.output);
  REQUIRE(synth.exitCode == 0);
  CHECK(contains(synth.output, "scene: 64x64x3"));
  for (const char* f : {"sc.hdr", "sc.bsq", "tr.hdr", "tr.bsq", "eff.txt"})
    CHECK(fs::exists(dir.file(f)));

  RunResult train = run("train --raster " + dir.file("sc") + " --truth " + dir.file("tr") +
                        " --out " + dir.file("rb.txt") + " --seed 3");
  CAPTURE(train.output);
  REQUIRE(train.exitCode == 0);
  CHECK(contains(train.output, "rules: "));
  CHECK(contains(train.output, "training error after tuning:"));
  REQUIRE(fs::exists(dir.file("rb.txt")));

  RunResult classify = run("classify --rulebase " + dir.file("rb.txt") + " --raster " +
                           dir.file("sc") + " --method m1 --out " + dir.file("map"));
  CAPTURE(classify.output);
  REQUIRE(classify.exitCode == 0);
  CHECK(contains(classify.output, "classified 4096 pixels"));
  CHECK(fs::exists(dir.file("map.hdr")));
  CHECK(fs::exists(dir.file("map.bsq")));

  RunResult eval = run("evaluate --map " + dir.file("map") + " --truth " + dir.file("tr"));
  CAPTURE(eval.output);
  REQUIRE(eval.exitCode == 0);
  CHECK(contains(eval.output, "overall error rate:"));
  CHECK(contains(eval.output, "confusion matrix"));

  RunResult compare = run("compare --rulebase " + dir.file("rb.txt") + " --raster " +
                          dir.file("sc") + " --truth " + dir.file("tr") + " --w 0.75 --csv " +
                          dir.file("cmp.csv"));
  CAPTURE(compare.output);
  REQUIRE(compare.exitCode == 0);
  CHECK(contains(compare.output, "noncontextual"));
  CHECK(contains(compare.output, "m1"));
  CHECK(contains(compare.output, "m4(w=0.75)"));
  std::string csv = slurp(dir.file("cmp.csv"));
  CHECK(contains(csv, "method,error_rate,outliers,degenerate_fallbacks,conflict_fallbacks"));
  CHECK(countLines(csv) == 6); // header + baseline + four methods

  RunResult tuneW = run("tune-w --rulebase " + dir.file("rb.txt") + " --raster " + dir.file("sc") +
                        " --truth " + dir.file("tr") +
                        " --rect 0 0 32 32 --w-grid 0.25 0.5 1 --curve " + dir.file("wc.csv"));
  CAPTURE(tuneW.output);
  REQUIRE(tuneW.exitCode == 0);
  CHECK(contains(tuneW.output, "best w: "));
  std::string curve = slurp(dir.file("wc.csv"));
  CHECK(contains(curve, "w,error_rate"));
  CHECK(countLines(curve) == 4);

  RunResult retune = run("tune --rulebase " + dir.file("rb.txt") + " --raster " + dir.file("sc") +
                         " --truth " + dir.file("tr") + " --out " + dir.file("rb2.txt") +
                         " --seed 9");
  CAPTURE(retune.output);
  REQUIRE(retune.exitCode == 0);
  CHECK(fs::exists(dir.file("rb2.txt")));
}

TEST_CASE("identical flags and seeds give identical bytes") {
  TempDir dir;
  std::string spec = dir.file("scene.txt");
  writeSceneSpecFile(spec);

  for (const char* stem : {"a", "b"}) {
    RunResult r = run("synth --spec " + spec + " --out-raster " + dir.file(std::string("sc") + stem) +
                      " --out-truth " + dir.file(std::string("tr") + stem));
    REQUIRE(r.exitCode == 0);
  }
  CHECK(slurp(dir.file("sca.bsq")) == slurp(dir.file("scb.bsq")));
  CHECK(slurp(dir.file("tra.bsq")) == slurp(dir.file("trb.bsq")));

  for (const char* name : {"rba.txt", "rbb.txt"}) {
    RunResult r = run("train --raster " + dir.file("sca") + " --truth " + dir.file("tra") +
                      " --out " + dir.file(name) + " --seed 11");
    REQUIRE(r.exitCode == 0);
  }
  CHECK(slurp(dir.file("rba.txt")) == slurp(dir.file("rbb.txt")));

  for (const char* stem : {"mapa", "mapb"}) {
    RunResult r = run("classify --rulebase " + dir.file("rba.txt") + " --raster " +
                      dir.file("sca") + " --method m4 --w 0.6 --out " + dir.file(stem));
    REQUIRE(r.exitCode == 0);
  }
  CHECK(slurp(dir.file("mapa.bsq")) == slurp(dir.file("mapb.bsq")));
}

TEST_CASE("bad invocations exit with the usage code and do no work") {
  TempDir dir;
  RunResult badW = run("classify --rulebase x --raster y --out z --w 1.5");
  CHECK(badW.exitCode == 2);

  RunResult noSource = run("synth --out-raster " + dir.file("sc") + " --out-truth " + dir.file("tr"));
  CHECK(noSource.exitCode == 2);
  CHECK(contains(noSource.output, "exactly one of --preset and --spec"));
  CHECK(!fs::exists(dir.file("sc.hdr")));

  std::string spec = dir.file("scene.txt");
  writeSceneSpecFile(spec);
  RunResult both = run("synth --preset patches-small --spec " + spec + " --out-raster " +
                       dir.file("sc") + " --out-truth " + dir.file("tr"));
  CHECK(both.exitCode == 2);

  RunResult badPreset = run("synth --preset no-such --out-raster " + dir.file("sc") +
                            " --out-truth " + dir.file("tr"));
  CHECK(badPreset.exitCode == 2);

  RunResult noSub = run("--threads 2");
  CHECK(noSub.exitCode == 2);
}

TEST_CASE("broken inputs exit with the data code and leave no output behind") {
  TempDir dir;
  std::string spec = dir.file("scene.txt");
  writeSceneSpecFile(spec);
  REQUIRE(run("synth --spec " + spec + " --out-raster " + dir.file("sc") + " --out-truth " +
              dir.file("tr")).exitCode == 0);
  // a second scene with different dimensions
  std::string spec2 = dir.file("scene2.txt");
  {
    std::ofstream out(spec2);
    out << "pixfuse-scene 1\nwidth=32\nheight=32\nbands=3\nclasses=2\n"
        << "layout=large-patches\npatchScale=8\nnoiseSd=5\nseed=1\n"
        << "mean0=50 50 50\nmean1=200 200 200\n";
  }
  REQUIRE(run("synth --spec " + spec2 + " --out-raster " + dir.file("sc2") + " --out-truth " +
              dir.file("tr2")).exitCode == 0);

  RunResult mismatch = run("train --raster " + dir.file("sc") + " --truth " + dir.file("tr2") +
                           " --out " + dir.file("rb.txt"));
  CHECK(mismatch.exitCode == 3);
  CHECK(contains(mismatch.output, "error:"));
  CHECK(!fs::exists(dir.file("rb.txt")));

  RunResult missing = run("classify --rulebase " + dir.file("nope.txt") + " --raster " +
                          dir.file("sc") + " --out " + dir.file("map"));
  CHECK(missing.exitCode == 3);
  CHECK(!fs::exists(dir.file("map.hdr")));
}

TEST_CASE("presets are runnable straight from the command line") {
  TempDir dir;
  RunResult r = run("synth --preset patches-small --seed 2 --out-raster " + dir.file("sc") +
                    " --out-truth " + dir.file("tr"));
  CAPTURE(r.output);
  REQUIRE(r.exitCode == 0);
  CHECK(contains(r.output, "scene: 128x128x7, 8 classes"));
  CHECK(contains(slurp(dir.file("tr.hdr")), "classes=8"));
}
