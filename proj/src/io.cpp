#include "tracelab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tracelab/errors.hpp"

namespace tracelab::io {

namespace {

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// Line of every element of the top-level arrays "rects" and "D".
struct ElementLines {
  std::vector<std::size_t> rects;
  std::vector<std::size_t> d;
};

ElementLines scan_elements(const std::string& text) {
  ElementLines out;
  std::size_t line = 1;
  int depth = 0;
  std::string last_key, current_array;
  bool in_string = false, escape = false;
  std::string token;
  for (char c : text) {
    if (in_string) {
      if (escape) {
        escape = false;
      } else if (c == '\\') {
        escape = true;
      } else if (c == '"') {
        in_string = false;
        last_key = token;
      } else {
        token.push_back(c);
      }
      if (c == '\n') ++line;
      continue;
    }
    switch (c) {
      case '\n': ++line; break;
      case '"': in_string = true; token.clear(); break;
      case '[':
        if (depth == 1) current_array = last_key;
        ++depth;
        break;
      case '{':
        if (depth == 2 && current_array == "rects") out.rects.push_back(line);
        if (depth == 2 && current_array == "D") out.d.push_back(line);
        ++depth;
        break;
      case ']':
      case '}':
        --depth;
        if (depth == 1) current_array.clear();
        break;
      default: break;
    }
  }
  return out;
}

Point read_pair(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw std::invalid_argument(std::string("field '") + key + "' must be [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

json pair(Point p) { return json::array({p.x, p.y}); }

}  // namespace

json domain_to_json(const geometry::RectDomain& dom, const geometry::BoundarySet& d) {
  json rects = json::array();
  for (const Rect& r : dom.rects()) rects.push_back({{"lo", pair(r.lo)}, {"size", pair(r.size)}});
  json segs = json::array();
  for (const auto& s : d.segments()) segs.push_back({{"a", pair(s.a)}, {"b", pair(s.b)}});
  return json{{"rects", rects}, {"D", segs}};
}

DomainFile parse_domain(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("domain file: ") + e.what(), line_of(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  const ElementLines lines = scan_elements(text);
  if (!j.is_object() || !j.contains("rects") || !j["rects"].is_array()) {
    throw ParseError("domain file: missing array 'rects'", 1);
  }
  std::vector<Rect> rects;
  for (std::size_t k = 0; k < j["rects"].size(); ++k) {
    const std::size_t line = k < lines.rects.size() ? lines.rects[k] : 1;
    try {
      const json& e = j["rects"][k];
      Rect r{read_pair(e, "lo"), read_pair(e, "size")};
      geometry::validate(r);
      rects.push_back(r);
    } catch (const std::exception& e) {
      throw ParseError("domain file: rect " + std::to_string(k) + ": " + e.what(), line);
    }
  }
  std::vector<geometry::Segment> segs;
  if (j.contains("D")) {
    if (!j["D"].is_array()) throw ParseError("domain file: 'D' must be an array", 1);
    for (std::size_t k = 0; k < j["D"].size(); ++k) {
      const std::size_t line = k < lines.d.size() ? lines.d[k] : 1;
      try {
        const json& e = j["D"][k];
        const Point a = read_pair(e, "a"), b = read_pair(e, "b");
        if (!std::isfinite(a.x) || !std::isfinite(a.y) || !std::isfinite(b.x) || !std::isfinite(b.y)) {
          throw std::invalid_argument("non-finite coordinate");
        }
        segs.push_back({a, b});
      } catch (const std::exception& e) {
        throw ParseError("domain file: D piece " + std::to_string(k) + ": " + e.what(), line);
      }
    }
  }
  try {
    return DomainFile{geometry::RectDomain(std::move(rects)), geometry::BoundarySet(std::move(segs))};
  } catch (const Error& e) {
    throw ParseError(std::string("domain file: ") + e.what(), 1);
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

DomainFile read_domain(const std::filesystem::path& path) { return parse_domain(read_text(path)); }

void write_domain(const std::filesystem::path& path, const geometry::RectDomain& dom,
                  const geometry::BoundarySet& d) {
  write_text(path, domain_to_json(dom, d).dump(2) + "\n");
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string series_csv(const analysis::AverageSeries& s) {
  std::string out = "r,value,err\n";
  for (const auto& e : s.entries) {
    out += format_double(e.r) + "," + format_double(e.value) + "," + format_double(e.err) + "\n";
  }
  return out;
}

std::string sweep_csv(std::span<const membership::DistanceReport> sweep) {
  std::string out = "delta,distance,converged\n";
  for (const auto& r : sweep) {
    out += format_double(r.delta) + "," + format_double(r.distance) + "," +
           (r.converged ? "1" : "0") + "\n";
  }
  return out;
}

namespace {
// JSON has no infinity; emit it as a string.
json number(double x) { return std::isfinite(x) ? json(x) : json(format_double(x)); }
}  // namespace

json to_json(const analysis::TraceVerdict& v) {
  return json{{"vanishing", v.vanishing},
              {"slope", number(v.slope)},
              {"slope_is_sentinel", v.slope_is_sentinel},
              {"smallest_value", v.smallest_value}};
}

json to_json(const analysis::HardyResult& r) {
  return json{{"value", number(r.value)},   {"err", number(r.err)},
              {"lower_bound", number(r.lower_bound)}, {"diverging", r.diverging},
              {"cells", r.cells}};
}

json to_json(const membership::DistanceReport& r) {
  return json{{"delta", r.delta},         {"distance", r.distance}, {"energy", r.energy},
              {"converged", r.converged}, {"iterations", r.iterations}};
}

json to_json(const capacity::CapacityEstimate& e) {
  return json{{"value", e.value},   {"lower_bound", e.lower_bound}, {"gap", e.gap},
              {"residual", e.residual}, {"iterations", e.iterations}};
}

}  // namespace tracelab::io
