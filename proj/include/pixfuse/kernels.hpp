#pragma once

#include <cstdint>

#include "pixfuse/raster.hpp"
#include "pixfuse/rulebase.hpp"

namespace pixfuse::kernels {

enum class KernelChoice { Auto, Scalar, Avx2 };

// Flattened rulebase plus raster planes, the shared input of every
// label-plane kernel variant.
struct PlaneProblem {
  const std::uint8_t* const* bandPlanes = nullptr; // one width*height plane per band
  int width = 0, height = 0, bands = 0;
  const double* centers = nullptr;    // ruleCount x bands
  const double* invSpreads = nullptr; // ruleCount x bands
  const int* consequents = nullptr;   // ruleCount
  int ruleCount = 0, classCount = 0;
  double q = -10.0, epsilon = 0.01;
};

using LabelPlaneFn = void (*)(const PlaneProblem&, double* out, int rowBegin, int rowEnd);

// Reference implementation; defines the exact semantics the SIMD variants
// must reproduce. out is pixel-major: out[(row*width+col)*classCount + k].
void labelPlaneRowsScalar(const PlaneProblem& pb, double* out, int rowBegin, int rowEnd);

// Vectorized over groups of four pixels; leftover columns take the scalar
// path. Fixed-size per-lane scratch bounds the supported problem shape.
inline constexpr int kAvx2MaxBands = 32;
inline constexpr int kAvx2MaxClasses = 64;
#ifdef PIXFUSE_HAVE_AVX2_BUILD
void labelPlaneRowsAvx2(const PlaneProblem& pb, double* out, int rowBegin, int rowEnd);
#endif

bool cpuHasAvx2();

struct SelectedKernel {
  LabelPlaneFn fn = nullptr;
  const char* name = "";
};

// Auto picks AVX2 when the build, the CPU and the problem shape allow it,
// otherwise the scalar reference. Asking for Avx2 explicitly when any of
// those fail is an error.
SelectedKernel selectLabelPlaneKernel(KernelChoice choice, int bands, int classCount);

// Full-image label vectors through the selected kernel. Rows are split
// across threads; the output is identical for every thread count.
LabelPlane computeLabelPlane(const MultibandRaster& raster, const Rulebase& rb,
                             KernelChoice choice = KernelChoice::Auto, int threads = 1);

} // namespace pixfuse::kernels
