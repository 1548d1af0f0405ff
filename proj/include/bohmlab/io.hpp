#ifndef BOHMLAB_IO_HPP
#define BOHMLAB_IO_HPP

#include "bohmlab/polar.hpp"
#include "bohmlab/propagate.hpp"

#include "json.hpp"

#include <iosfwd>

namespace bohmlab {

/// Grid metadata as {x_min, x_max, nx, t_min, t_max, nt}.
nlohmann::json to_json(const Grid& grid);
Grid grid_from_json(const nlohmann::json& j);

/// {linf, l2, order, excluded_fraction, grid}; order is null when it was
/// not measured.
nlohmann::json to_json(const ResidualReport& report);

/// {grid, values (row-major in t), excluded (cell indices, omitted when empty)}.
nlohmann::json to_json(const Field& field);

/// Snapshot time series as {grid, dt, snapshots: [{t, re: [...], im: [...]}]}.
nlohmann::json to_json(const PropagationResult& result, const PropagationSetup& setup);

/// CSV rows "x,t,value" (header included); excluded cells are skipped.
void write_csv(std::ostream& os, const Field& field);

/// CSV rows "t,x,re,im" over all snapshots (header included).
void write_csv(std::ostream& os, const PropagationResult& result,
               const PropagationSetup& setup);

} // namespace bohmlab

#endif
