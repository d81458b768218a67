#pragma once

#include <sstream>

#include "ccopf/fixture_data.hpp"
#include "ccopf/grid_model.hpp"

namespace ccopf {

/// IEEE 33-bus feeder with 3 capacitors, 4 storage units, 6 DR resources and
/// 5 PV units of each type. Demand totals 3529 kW / 2185 kVAR. The data lives
/// in data/ieee33/*.csv and is embedded at configure time.
inline Network ieee33_fixture() {
  std::istringstream buses(fixture_data::ieee33_buses);
  std::istringstream lines(fixture_data::ieee33_lines);
  std::istringstream assets(fixture_data::ieee33_assets);
  return load_network_from_streams(buses, lines, assets, "ieee33/buses.csv", "ieee33/lines.csv",
                                   "ieee33/assets.csv");
}

}  // namespace ccopf
