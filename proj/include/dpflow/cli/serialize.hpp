#pragma once

#include <ostream>
#include <string>

#include <json.hpp>

#include "dpflow/census.hpp"
#include "dpflow/dynamics.hpp"
#include "dpflow/limits.hpp"
#include "dpflow/order.hpp"

namespace dpflow::cli {

using nlohmann::json;

json to_json(const Vec& v);
json to_json(const Point& p);
json to_json(const DPReport& r);
json to_json(const OrderVerdict& v);
json to_json(const OmegaEstimate& e);
json to_json(const PropertyReport& r);
json to_json(const EquilibriumSet& s);
json to_json(const MeasureEstimate& m);
json to_json(const CensusReport& r);

/// RFC-4180 grid: line_index, point_index, chart coordinates, class,
/// equilibrium_index, omega_residual; reals printed with 17 significant digits.
void write_census_csv(std::ostream& os, const CensusReport& r);

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace dpflow::cli
