#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pixfuse {

// Sentinels used in 8-bit class rasters on disk.
inline constexpr std::uint8_t kUnlabeledSentinel = 255; // ground truth: pixel carries no label
inline constexpr std::uint8_t kOutlierSentinel = 254;   // class map: classifier made no decision

// In-process "no decision" / "no label" marker.
inline constexpr int kNoClass = -1;

// Problem with user-supplied data: unreadable file, malformed header,
// dimension mismatch, empty class, and the like.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric breakdown that is not the caller's fault (e.g. total conflict
// when fusing evidence at top level).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pixfuse
