#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracelab/analysis.hpp"
#include "tracelab/capacity.hpp"
#include "tracelab/geometry.hpp"
#include "tracelab/membership.hpp"

namespace tracelab::io {

using nlohmann::json;

/// Domain description: {"rects": [{"lo": [x, y], "size": [w, h]}, ...],
///                      "D": [{"a": [x, y], "b": [x, y]}, ...]}.
struct DomainFile {
  geometry::RectDomain dom;
  geometry::BoundarySet dirichlet;
};

json domain_to_json(const geometry::RectDomain& dom, const geometry::BoundarySet& d);
/// Throws ParseError with the 1-based line of the offending text.
DomainFile parse_domain(const std::string& text);
DomainFile read_domain(const std::filesystem::path& path);
void write_domain(const std::filesystem::path& path, const geometry::RectDomain& dom,
                  const geometry::BoundarySet& d);

/// Reads a whole file; throws Error when it cannot be opened.
std::string read_text(const std::filesystem::path& path);
/// Writes a whole file, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Shortest round-trip decimal form.
std::string format_double(double x);

std::string series_csv(const analysis::AverageSeries& s);
std::string sweep_csv(std::span<const membership::DistanceReport> sweep);

json to_json(const analysis::TraceVerdict& v);
json to_json(const analysis::HardyResult& r);
json to_json(const membership::DistanceReport& r);
/// Without the density field.
json to_json(const capacity::CapacityEstimate& e);

}  // namespace tracelab::io
