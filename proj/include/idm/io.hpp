#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "idm/error.hpp"
#include "idm/model.hpp"

namespace idm {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal form; NaN is written as NA.
void write_number(std::ostream& out, double v);
/// Non-finite values become null.
Json json_number(double v);

/// β̂ (with covariate names), σ̂ when present, convergence flag and trace,
/// bandwidths, warnings, and each baseline cumulative hazard as its grid.
Json fit_to_json(const ModelFit& fit);
/// Rebuilds a fit whose hazards are the stored grids. Throws ParseError on
/// a malformed document.
ModelFit fit_from_json(const Json& j);

void save_fit(const std::string& path, const ModelFit& fit);
ModelFit load_fit(const std::string& path);

/// t,H rows of one transition's baseline cumulative hazard grid.
void write_hazard_grid_csv(std::ostream& out, const TransitionFit& tf);

/// {"error": kind, "message": text}
Json error_json(ErrorKind kind, const std::string& message);

/// Writes `text` to `path`, throwing IoError when the file cannot be opened.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace idm
