#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pixfuse/common.hpp"

namespace pixfuse {

// Multiband image, 8 bits per sample, band-sequential in memory:
// data[(band*height + row)*width + col].
struct MultibandRaster {
  int width = 0;
  int height = 0;
  int bands = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t at(int row, int col, int band) const {
    return data[(static_cast<std::size_t>(band) * height + row) * width + col];
  }
  std::uint8_t& at(int row, int col, int band) {
    return data[(static_cast<std::size_t>(band) * height + row) * width + col];
  }
  const std::uint8_t* bandPlane(int band) const {
    return data.data() + static_cast<std::size_t>(band) * height * width;
  }
  // All bands of one pixel as doubles, raw [0,255] units.
  void featuresAt(int row, int col, double* out) const {
    for (int b = 0; b < bands; ++b) out[b] = at(row, col, b);
  }
  std::size_t pixelCount() const { return static_cast<std::size_t>(width) * height; }
};

// Per-pixel class labels; kUnlabeledSentinel marks pixels without one.
struct GroundTruth {
  int width = 0;
  int height = 0;
  int classCount = 0;
  std::vector<std::uint8_t> labels; // row*width + col

  std::uint8_t at(int row, int col) const {
    return labels[static_cast<std::size_t>(row) * width + col];
  }
};

// Classifier output; class index per pixel, kOutlierSentinel where no
// rule fired.
struct ClassMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;

  std::uint8_t at(int row, int col) const {
    return labels[static_cast<std::size_t>(row) * width + col];
  }
};

// Possibilistic label vectors for a whole image, pixel-major:
// values[(row*width + col)*classCount + k].
struct LabelPlane {
  int width = 0;
  int height = 0;
  int classCount = 0;
  std::vector<double> values;

  const double* at(int row, int col) const {
    return values.data() + (static_cast<std::size_t>(row) * width + col) * classCount;
  }
  double* at(int row, int col) {
    return values.data() + (static_cast<std::size_t>(row) * width + col) * classCount;
  }
};

struct LabeledSample {
  std::vector<double> features;
  int label = kNoClass;
};

// On-disk format: <base>.hdr holds key=value lines (width, height, bands,
// dtype, layout, optionally classes), <base>.bsq holds the raw samples
// band plane after band plane. u8 rasters store one byte per sample;
// label planes store native little-endian doubles (dtype=f64) and round
// trip bit-exactly. A trailing .hdr/.bsq on the base path is ignored.
MultibandRaster readRaster(const std::string& base);
void writeRaster(const MultibandRaster& raster, const std::string& base);

GroundTruth readGroundTruth(const std::string& base);
void writeGroundTruth(const GroundTruth& truth, const std::string& base);

ClassMap readClassMap(const std::string& base);
void writeClassMap(const ClassMap& map, const std::string& base);

LabelPlane readLabelPlane(const std::string& base);
void writeLabelPlane(const LabelPlane& plane, const std::string& base);

struct TrainingSet {
  std::vector<LabeledSample> samples;
  std::vector<std::string> warnings; // classes with fewer labeled pixels than asked for
};

// Draws up to perClassCount labeled pixels per class, without replacement.
// Classes are processed in ascending order; for each, the row-major list of
// its pixel indices is shuffled with a single mt19937_64 engine seeded with
// `seed` and the prefix is taken. A class with no labeled pixels is an error.
TrainingSet sampleTrainingSet(const MultibandRaster& raster, const GroundTruth& truth,
                              int perClassCount, std::uint64_t seed);

} // namespace pixfuse
