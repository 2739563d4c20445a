#pragma once

#include <cstdint>
#include <optional>

#include "cvguard/model.hpp"

namespace cvguard {

enum class Verdict : std::uint8_t { Go, Wait, Unknown };

const char* verdict_name(Verdict v);

/// SSGA advice to one minor-road vehicle at the stop line. A GO carries the
/// projected minimum gap (+inf when no major vehicle is approaching).
struct Advisory {
  VehicleId target;
  Verdict verdict = Verdict::Unknown;
  double issued_at = 0.0;
  std::optional<double> min_gap;

  friend bool operator==(const Advisory&, const Advisory&) = default;
};

}  // namespace cvguard
