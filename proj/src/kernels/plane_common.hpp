#pragma once

#include "pixfuse/kernels.hpp"

namespace pixfuse::kernels {

// One pixel through the reference math; xScratch must hold bands doubles.
// Also the tail path of the SIMD kernels, so their leftover columns match
// the scalar kernel bit for bit.
inline void labelOnePixel(const PlaneProblem& pb, std::size_t pixel, double* xScratch,
                          double* alphaOut) {
  for (int j = 0; j < pb.bands; ++j) xScratch[j] = pb.bandPlanes[j][pixel];
  for (int k = 0; k < pb.classCount; ++k) alphaOut[k] = 0.0;
  for (int r = 0; r < pb.ruleCount; ++r) {
    double f = detail::ruleFiring(xScratch, pb.centers + static_cast<std::size_t>(r) * pb.bands,
                                  pb.invSpreads + static_cast<std::size_t>(r) * pb.bands,
                                  pb.bands, pb.q);
    int k = pb.consequents[r];
    if (f > alphaOut[k]) alphaOut[k] = f;
  }
  for (int k = 0; k < pb.classCount; ++k)
    if (alphaOut[k] < pb.epsilon) alphaOut[k] = 0.0;
}

} // namespace pixfuse::kernels
