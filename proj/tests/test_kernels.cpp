#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pixfuse/kernels.hpp"

using namespace pixfuse;
using namespace pixfuse::kernels;

namespace {

MultibandRaster randomRaster(std::mt19937_64& rng, int w, int h, int b) {
  MultibandRaster r;
  r.width = w;
  r.height = h;
  r.bands = b;
  r.data.resize(static_cast<std::size_t>(w) * h * b);
  for (auto& v : r.data) v = static_cast<std::uint8_t>(rng());
  return r;
}

Rulebase randomRulebase(std::mt19937_64& rng, int bands, int classes, int ruleCount) {
  std::uniform_real_distribution<double> pos(0.0, 255.0), width(5.0, 80.0);
  Rulebase rb;
  rb.featureCount = bands;
  rb.classCount = classes;
  for (int r = 0; r < ruleCount; ++r) {
    FuzzyRule rule;
    rule.consequent = r % classes;
    for (int j = 0; j < bands; ++j) {
      rule.center.push_back(pos(rng));
      rule.spread.push_back(width(rng));
    }
    rb.rules.push_back(std::move(rule));
  }
  return rb;
}

} // namespace

TEST_CASE("the selected kernel matches the per-pixel reference evaluation") {
  std::mt19937_64 rng(7);
  MultibandRaster raster = randomRaster(rng, 33, 9, 5);
  Rulebase rb = randomRulebase(rng, 5, 3, 7);
  LabelPlane plane = computeLabelPlane(raster, rb);
  std::vector<double> x(5);
  for (int r = 0; r < raster.height; ++r)
    for (int c = 0; c < raster.width; ++c) {
      raster.featuresAt(r, c, x.data());
      auto expect = labelVector(rb, x);
      const double* got = plane.at(r, c);
      for (int k = 0; k < 3; ++k) CHECK(got[k] == doctest::Approx(expect[k]).epsilon(1e-12));
    }
}

TEST_CASE("scalar and vectorized paths agree to near machine precision") {
  if (!cpuHasAvx2()) return; // nothing to compare on this machine
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 6; ++trial) {
    int bands = 1 + trial, classes = 2 + trial % 4;
    MultibandRaster raster = randomRaster(rng, 37 + trial, 11, bands);
    Rulebase rb = randomRulebase(rng, bands, classes, classes + 3);
    LabelPlane a = computeLabelPlane(raster, rb, KernelChoice::Scalar);
    LabelPlane b = computeLabelPlane(raster, rb, KernelChoice::Avx2);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i)
      CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-13));
  }
}

TEST_CASE("row partitioning is invisible: any thread count, identical bytes") {
  std::mt19937_64 rng(13);
  MultibandRaster raster = randomRaster(rng, 64, 31, 4);
  Rulebase rb = randomRulebase(rng, 4, 3, 6);
  LabelPlane one = computeLabelPlane(raster, rb, KernelChoice::Auto, 1);
  for (int threads : {2, 3, 8}) {
    LabelPlane many = computeLabelPlane(raster, rb, KernelChoice::Auto, threads);
    CHECK(one.values == many.values);
  }
}

TEST_CASE("kernel selection respects capability limits") {
  SelectedKernel scalar = selectLabelPlaneKernel(KernelChoice::Scalar, 7, 4);
  CHECK(scalar.fn == &labelPlaneRowsScalar);
  // the vector path has fixed scratch bounds; beyond them only scalar works
  SelectedKernel wide = selectLabelPlaneKernel(KernelChoice::Auto, kAvx2MaxBands + 1, 4);
  CHECK(wide.fn == &labelPlaneRowsScalar);
  CHECK_THROWS_AS(selectLabelPlaneKernel(KernelChoice::Avx2, kAvx2MaxBands + 1, 4),
                  DataError);
  if (cpuHasAvx2()) {
    SelectedKernel fast = selectLabelPlaneKernel(KernelChoice::Auto, 7, 4);
    CHECK(fast.fn != &labelPlaneRowsScalar);
  }
}

TEST_CASE("label planes carry the epsilon cut and the unit cap") {
  std::mt19937_64 rng(17);
  MultibandRaster raster = randomRaster(rng, 40, 13, 3);
  Rulebase rb = randomRulebase(rng, 3, 4, 8);
  LabelPlane plane = computeLabelPlane(raster, rb);
  for (double v : plane.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK((v == 0.0 || v >= rb.epsilon));
  }
}
