#include "pixfuse/raster.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace pixfuse {
namespace {

std::string stripKnownExtension(const std::string& base) {
  for (const char* ext : {".hdr", ".bsq"}) {
    if (base.size() > 4 && base.compare(base.size() - 4, 4, ext) == 0)
      return base.substr(0, base.size() - 4);
  }
  return base;
}

struct Header {
  int width = 0, height = 0, bands = 0;
  std::string dtype, layout;
  int classes = -1; // optional
};

Header readHeader(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open header: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(path + ": malformed header line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(path + ": missing header key '" + std::string(key) + "'");
    return it->second;
  };
  auto toInt = [&](const std::string& key, const std::string& value) {
    try {
      std::size_t pos = 0;
      int v = std::stoi(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw DataError(path + ": bad integer for '" + key + "': '" + value + "'");
    }
  };
  Header h;
  h.width = toInt("width", need("width"));
  h.height = toInt("height", need("height"));
  h.bands = toInt("bands", need("bands"));
  h.dtype = need("dtype");
  h.layout = need("layout");
  if (kv.count("classes")) h.classes = toInt("classes", kv["classes"]);
  if (h.width <= 0 || h.height <= 0 || h.bands <= 0)
    throw DataError(path + ": non-positive dimensions");
  if (h.layout != "bsq") throw DataError(path + ": unsupported layout '" + h.layout + "'");
  return h;
}

std::vector<std::uint8_t> readBytes(const std::string& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file: " + path);
  std::vector<std::uint8_t> bytes(expected);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(expected));
  if (static_cast<std::size_t>(in.gcount()) != expected)
    throw DataError(path + ": truncated data file");
  char extra;
  if (in.read(&extra, 1))
    throw DataError(path + ": data file larger than header dimensions");
  return bytes;
}

void writeHeader(const std::string& path, int width, int height, int bands,
                 const char* dtype, int classes) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write header: " + path);
  out << "width=" << width << "\nheight=" << height << "\nbands=" << bands
      << "\ndtype=" << dtype << "\nlayout=bsq\n";
  if (classes >= 0) out << "classes=" << classes << "\n";
  if (!out) throw DataError("write failed: " + path);
}

void writeBytes(const std::string& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write data file: " + path);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw DataError("write failed: " + path);
}

} // namespace

MultibandRaster readRaster(const std::string& base) {
  std::string stem = stripKnownExtension(base);
  Header h = readHeader(stem + ".hdr");
  if (h.dtype != "u8") throw DataError(stem + ".hdr: unsupported dtype '" + h.dtype + "'");
  MultibandRaster r;
  r.width = h.width;
  r.height = h.height;
  r.bands = h.bands;
  r.data = readBytes(stem + ".bsq", r.pixelCount() * h.bands);
  return r;
}

void writeRaster(const MultibandRaster& raster, const std::string& base) {
  std::string stem = stripKnownExtension(base);
  writeHeader(stem + ".hdr", raster.width, raster.height, raster.bands, "u8", -1);
  writeBytes(stem + ".bsq", raster.data.data(), raster.data.size());
}

GroundTruth readGroundTruth(const std::string& base) {
  std::string stem = stripKnownExtension(base);
  Header h = readHeader(stem + ".hdr");
  if (h.dtype != "u8") throw DataError(stem + ".hdr: unsupported dtype '" + h.dtype + "'");
  if (h.bands != 1) throw DataError(stem + ".hdr: ground truth must have bands=1");
  if (h.classes <= 0) throw DataError(stem + ".hdr: ground truth needs a classes key");
  if (h.classes > 254) throw DataError(stem + ".hdr: at most 254 classes fit the format");
  GroundTruth t;
  t.width = h.width;
  t.height = h.height;
  t.classCount = h.classes;
  t.labels = readBytes(stem + ".bsq", static_cast<std::size_t>(h.width) * h.height);
  for (std::uint8_t v : t.labels)
    if (v != kUnlabeledSentinel && v >= t.classCount)
      throw DataError(stem + ".bsq: label " + std::to_string(v) + " outside classes=" +
                      std::to_string(t.classCount));
  return t;
}

void writeGroundTruth(const GroundTruth& truth, const std::string& base) {
  std::string stem = stripKnownExtension(base);
  writeHeader(stem + ".hdr", truth.width, truth.height, 1, "u8", truth.classCount);
  writeBytes(stem + ".bsq", truth.labels.data(), truth.labels.size());
}

ClassMap readClassMap(const std::string& base) {
  std::string stem = stripKnownExtension(base);
  Header h = readHeader(stem + ".hdr");
  if (h.dtype != "u8") throw DataError(stem + ".hdr: unsupported dtype '" + h.dtype + "'");
  if (h.bands != 1) throw DataError(stem + ".hdr: class map must have bands=1");
  ClassMap m;
  m.width = h.width;
  m.height = h.height;
  m.labels = readBytes(stem + ".bsq", static_cast<std::size_t>(h.width) * h.height);
  return m;
}

void writeClassMap(const ClassMap& map, const std::string& base) {
  std::string stem = stripKnownExtension(base);
  writeHeader(stem + ".hdr", map.width, map.height, 1, "u8", -1);
  writeBytes(stem + ".bsq", map.labels.data(), map.labels.size());
}

LabelPlane readLabelPlane(const std::string& base) {
  std::string stem = stripKnownExtension(base);
  Header h = readHeader(stem + ".hdr");
  if (h.dtype != "f64") throw DataError(stem + ".hdr: label plane needs dtype=f64");
  std::size_t n = static_cast<std::size_t>(h.width) * h.height * h.bands;
  std::vector<std::uint8_t> bytes = readBytes(stem + ".bsq", n * sizeof(double));
  LabelPlane p;
  p.width = h.width;
  p.height = h.height;
  p.classCount = h.bands;
  p.values.resize(n);
  // disk keeps one class plane after another; memory is pixel-major
  const double* src = reinterpret_cast<const double*>(bytes.data());
  std::size_t pixels = static_cast<std::size_t>(h.width) * h.height;
  for (int k = 0; k < h.bands; ++k)
    for (std::size_t i = 0; i < pixels; ++i)
      p.values[i * h.bands + k] = src[static_cast<std::size_t>(k) * pixels + i];
  return p;
}

void writeLabelPlane(const LabelPlane& plane, const std::string& base) {
  std::string stem = stripKnownExtension(base);
  writeHeader(stem + ".hdr", plane.width, plane.height, plane.classCount, "f64", -1);
  std::size_t pixels = static_cast<std::size_t>(plane.width) * plane.height;
  std::vector<double> bsq(pixels * plane.classCount);
  for (std::size_t i = 0; i < pixels; ++i)
    for (int k = 0; k < plane.classCount; ++k)
      bsq[static_cast<std::size_t>(k) * pixels + i] = plane.values[i * plane.classCount + k];
  writeBytes(stem + ".bsq", bsq.data(), bsq.size() * sizeof(double));
}

TrainingSet sampleTrainingSet(const MultibandRaster& raster, const GroundTruth& truth,
                              int perClassCount, std::uint64_t seed) {
  if (raster.width != truth.width || raster.height != truth.height)
    throw DataError("raster and ground truth dimensions differ");
  if (perClassCount <= 0) throw DataError("perClassCount must be positive");

  std::vector<std::vector<std::size_t>> byClass(truth.classCount);
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    std::uint8_t v = truth.labels[i];
    if (v != kUnlabeledSentinel) byClass[v].push_back(i);
  }

  TrainingSet out;
  std::mt19937_64 rng(seed);
  for (int k = 0; k < truth.classCount; ++k) {
    auto& indices = byClass[k];
    if (indices.empty())
      throw DataError("class " + std::to_string(k) + " has no labeled pixels");
    std::shuffle(indices.begin(), indices.end(), rng);
    std::size_t take = std::min<std::size_t>(indices.size(), perClassCount);
    if (take < static_cast<std::size_t>(perClassCount))
      out.warnings.push_back("class " + std::to_string(k) + ": only " +
                             std::to_string(take) + " labeled pixels, asked for " +
                             std::to_string(perClassCount));
    for (std::size_t s = 0; s < take; ++s) {
      std::size_t idx = indices[s];
      int row = static_cast<int>(idx) / truth.width;
      int col = static_cast<int>(idx) % truth.width;
      LabeledSample sample;
      sample.features.resize(raster.bands);
      raster.featuresAt(row, col, sample.features.data());
      sample.label = k;
      out.samples.push_back(std::move(sample));
    }
  }
  return out;
}

} // namespace pixfuse
