#pragma once

#include <string>

namespace lvef {

// One patient's paired LVEF readings (percent) and follow-up.
struct PairedMeasurement {
  std::string patient_id;
  double visual_lvef = 0.0;
  double simpson_lvef = 0.0;
  double time_days = 0.0;
  bool event = false;

  bool operator==(const PairedMeasurement&) const = default;
};

}  // namespace lvef
