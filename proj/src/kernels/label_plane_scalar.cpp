#include <vector>

#include "plane_common.hpp"

namespace pixfuse::kernels {

void labelPlaneRowsScalar(const PlaneProblem& pb, double* out, int rowBegin, int rowEnd) {
  std::vector<double> x(pb.bands);
  for (int row = rowBegin; row < rowEnd; ++row) {
    for (int col = 0; col < pb.width; ++col) {
      std::size_t pixel = static_cast<std::size_t>(row) * pb.width + col;
      labelOnePixel(pb, pixel, x.data(), out + pixel * pb.classCount);
    }
  }
}

} // namespace pixfuse::kernels
