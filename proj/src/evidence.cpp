#include "pixfuse/evidence.hpp"

#include <bit>
#include <map>

#include "pixfuse/common.hpp"

namespace pixfuse {
namespace {

constexpr double kPruneThreshold = 1e-12;
constexpr double kConflictLimit = 1.0 - 1e-12;
constexpr int kDenseClassLimit = 12; // dense scratch array up to 2^12 subsets

void checkWellFormed(const Bpa& bpa) {
  if (bpa.classCount <= 0 || bpa.classCount > 64)
    throw DataError("BPA class count out of range");
  FocalSet frame = fullSet(bpa.classCount);
  for (const auto& [mask, mass] : bpa.masses) {
    if (mask == 0) throw DataError("BPA assigns mass to the empty set");
    if ((mask & ~frame) != 0) throw DataError("BPA focal set outside the class frame");
    if (!(mass > 0.0)) throw DataError("BPA stores a non-positive mass");
  }
}

Bpa finish(int classCount, std::vector<std::pair<FocalSet, double>> entries) {
  double kept = 0.0;
  std::size_t n = 0;
  for (auto& [mask, mass] : entries) {
    if (mass > kPruneThreshold) {
      entries[n++] = {mask, mass};
      kept += mass;
    }
  }
  entries.resize(n);
  if (entries.empty() || kept <= 0.0) throw TotalConflictError();
  for (auto& [mask, mass] : entries) mass /= kept;
  return Bpa{classCount, std::move(entries)};
}

} // namespace

Bpa combine(const Bpa& a, const Bpa& b) {
  if (a.classCount != b.classCount)
    throw DataError("cannot combine BPAs over different class frames");
  checkWellFormed(a);
  checkWellFormed(b);

  std::vector<std::pair<FocalSet, double>> entries;
  double conflict = 0.0;

  if (a.classCount <= kDenseClassLimit) {
    std::vector<double> dense(std::size_t{1} << a.classCount, 0.0);
    for (const auto& [ma, va] : a.masses)
      for (const auto& [mb, vb] : b.masses)
        dense[ma & mb] += va * vb;
    conflict = dense[0];
    if (conflict >= kConflictLimit) throw TotalConflictError();
    double scale = 1.0 / (1.0 - conflict);
    for (std::size_t mask = 1; mask < dense.size(); ++mask)
      if (dense[mask] > 0.0) entries.emplace_back(mask, dense[mask] * scale);
  } else {
    std::map<FocalSet, double> acc;
    for (const auto& [ma, va] : a.masses)
      for (const auto& [mb, vb] : b.masses) {
        FocalSet inter = ma & mb;
        if (inter == 0)
          conflict += va * vb;
        else
          acc[inter] += va * vb;
      }
    if (conflict >= kConflictLimit) throw TotalConflictError();
    double scale = 1.0 / (1.0 - conflict);
    for (const auto& [mask, mass] : acc) entries.emplace_back(mask, mass * scale);
  }
  return finish(a.classCount, std::move(entries));
}

Bpa combineAll(std::span<const Bpa> bpas) {
  if (bpas.empty()) throw DataError("combineAll needs at least one BPA");
  Bpa acc = bpas[0];
  checkWellFormed(acc);
  for (std::size_t i = 1; i < bpas.size(); ++i) acc = combine(acc, bpas[i]);
  return acc;
}

std::vector<double> pignistic(const Bpa& bpa) {
  checkWellFormed(bpa);
  std::vector<double> p(bpa.classCount, 0.0);
  for (const auto& [mask, mass] : bpa.masses) {
    double share = mass / std::popcount(mask);
    FocalSet rest = mask;
    while (rest) {
      int k = std::countr_zero(rest);
      p[k] += share;
      rest &= rest - 1;
    }
  }
  return p;
}

int decide(std::span<const double> probabilities) {
  if (probabilities.empty()) throw DataError("decide needs at least one probability");
  int best = 0;
  for (std::size_t k = 1; k < probabilities.size(); ++k)
    if (probabilities[k] > probabilities[best]) best = static_cast<int>(k);
  return best;
}

} // namespace pixfuse
