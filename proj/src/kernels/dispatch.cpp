#include "pixfuse/kernels.hpp"

#include <stdexcept>
#include <vector>

#include "../parallel.hpp"
#include "pixfuse/rulebase.hpp"

namespace pixfuse::kernels {

bool cpuHasAvx2() {
#if defined(PIXFUSE_HAVE_AVX2_BUILD)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

SelectedKernel selectLabelPlaneKernel(KernelChoice choice, int bands, int classCount) {
#if defined(PIXFUSE_HAVE_AVX2_BUILD)
  bool shapeOk = bands <= kAvx2MaxBands && classCount <= kAvx2MaxClasses;
  if (choice == KernelChoice::Avx2) {
    if (!cpuHasAvx2()) throw DataError("avx2 kernel requested but the CPU lacks AVX2");
    if (!shapeOk)
      throw DataError("avx2 kernel supports at most " + std::to_string(kAvx2MaxBands) +
                      " bands and " + std::to_string(kAvx2MaxClasses) + " classes");
    return {labelPlaneRowsAvx2, "avx2"};
  }
  if (choice == KernelChoice::Auto && cpuHasAvx2() && shapeOk)
    return {labelPlaneRowsAvx2, "avx2"};
#else
  if (choice == KernelChoice::Avx2)
    throw DataError("avx2 kernel not available in this build");
#endif
  (void)bands;
  (void)classCount;
  return {labelPlaneRowsScalar, "scalar"};
}

LabelPlane computeLabelPlane(const MultibandRaster& raster, const Rulebase& rb,
                             KernelChoice choice, int threads) {
  if (raster.bands != rb.featureCount)
    throw DataError("raster has " + std::to_string(raster.bands) + " bands but rules expect " +
                    std::to_string(rb.featureCount));
  if (rb.rules.empty()) throw DataError("rulebase is empty");

  std::size_t ruleCount = rb.rules.size();
  std::size_t bands = static_cast<std::size_t>(raster.bands);
  std::vector<double> centers(ruleCount * bands);
  std::vector<double> invSpreads(ruleCount * bands);
  std::vector<int> consequents(ruleCount);
  for (std::size_t r = 0; r < ruleCount; ++r) {
    const FuzzyRule& rule = rb.rules[r];
    consequents[r] = rule.consequent;
    for (std::size_t j = 0; j < bands; ++j) {
      centers[r * bands + j] = rule.center[j];
      invSpreads[r * bands + j] = 1.0 / rule.spread[j];
    }
  }

  std::vector<const std::uint8_t*> planes(bands);
  for (std::size_t j = 0; j < bands; ++j) planes[j] = raster.bandPlane(static_cast<int>(j));

  PlaneProblem pb;
  pb.bandPlanes = planes.data();
  pb.width = raster.width;
  pb.height = raster.height;
  pb.bands = raster.bands;
  pb.centers = centers.data();
  pb.invSpreads = invSpreads.data();
  pb.consequents = consequents.data();
  pb.ruleCount = static_cast<int>(ruleCount);
  pb.classCount = rb.classCount;
  pb.q = rb.q;
  pb.epsilon = rb.epsilon;

  SelectedKernel kernel = selectLabelPlaneKernel(choice, raster.bands, rb.classCount);

  LabelPlane plane;
  plane.width = raster.width;
  plane.height = raster.height;
  plane.classCount = rb.classCount;
  plane.values.assign(raster.pixelCount() * static_cast<std::size_t>(rb.classCount), 0.0);

  double* out = plane.values.data();
  parallelForRows(raster.height, threads,
                  [&pb, out, &kernel](int b, int e) { kernel.fn(pb, out, b, e); });
  return plane;
}

} // namespace pixfuse::kernels
