#include "sgldr/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sgldr/errors.hpp"

namespace sgldr {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_field(std::string_view text, std::size_t offset, const char* what) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("invalid " + std::string(what) + " '" + std::string(text) + "'", offset);
  }
  return value;
}

}  // namespace

void write_trace_csv(const TraceStore& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace to '" + path + "'");
  out << "iter,wall_s,particle";
  for (std::size_t c = 0; c < trace.dim; ++c) out << ",dim_" << c;
  out << '\n';
  for (const Snapshot& s : trace.snapshots) {
    const std::string wall = format_double(s.wall_s);
    for (Eigen::Index p = 0; p < s.particles.rows(); ++p) {
      out << s.iteration << ',' << wall << ',' << p;
      for (Eigen::Index c = 0; c < s.particles.cols(); ++c) out << ',' << format_double(s.particles(p, c));
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing trace to '" + path + "'");
}

TraceStore read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open trace '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line, std::size_t& start) {
    if (pos >= text.size()) return false;
    start = pos;
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string::npos ? text.size() : nl;
    line = std::string_view(text).substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    return true;
  };
  auto split = [](std::string_view line) {
    std::vector<std::pair<std::string_view, std::size_t>> fields;  // text, offset within line
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::size_t end = comma == std::string_view::npos ? line.size() : comma;
      fields.emplace_back(line.substr(start, end - start), start);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return fields;
  };

  std::string_view line;
  std::size_t line_start = 0;
  if (!next_line(line, line_start) || line.empty()) throw ArgumentError("trace '" + path + "' is empty");
  const auto header = split(line);
  if (header.size() < 4 || header[0].first != "iter" || header[1].first != "wall_s" || header[2].first != "particle") {
    throw ParseError("trace header must start with iter,wall_s,particle,dim_0", 0);
  }
  for (std::size_t c = 3; c < header.size(); ++c) {
    if (header[c].first != "dim_" + std::to_string(c - 3)) {
      throw ParseError("unexpected header column '" + std::string(header[c].first) + "'", header[c].second);
    }
  }

  TraceStore trace;
  trace.dim = header.size() - 3;
  std::vector<std::vector<double>> rows;
  std::size_t current_iter = 0;
  double current_wall = 0.0;
  std::size_t expected_particle = 0;
  bool open = false;

  auto close_snapshot = [&](std::size_t offset) {
    if (!open) return;
    if (trace.particle_count == 0) {
      trace.particle_count = rows.size();
    } else if (rows.size() != trace.particle_count) {
      throw ParseError("snapshot at iteration " + std::to_string(current_iter) + " has " +
                           std::to_string(rows.size()) + " particles, expected " +
                           std::to_string(trace.particle_count),
                       offset);
    }
    Snapshot s;
    s.iteration = current_iter;
    s.wall_s = current_wall;
    s.particles.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(trace.dim));
    for (std::size_t p = 0; p < rows.size(); ++p) {
      for (std::size_t c = 0; c < trace.dim; ++c) {
        s.particles(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) = rows[p][c];
      }
    }
    trace.snapshots.push_back(std::move(s));
    rows.clear();
    open = false;
  };

  while (next_line(line, line_start)) {
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw ParseError("row has " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(header.size()),
                       line_start);
    }
    const auto iter = parse_field<std::size_t>(fields[0].first, line_start + fields[0].second, "iteration");
    const auto wall = parse_field<double>(fields[1].first, line_start + fields[1].second, "wall clock");
    const auto particle = parse_field<std::size_t>(fields[2].first, line_start + fields[2].second, "particle index");
    if (!open || iter != current_iter) {
      if (open && iter <= current_iter) {
        throw ParseError("iterations must be strictly increasing", line_start);
      }
      close_snapshot(line_start);
      open = true;
      current_iter = iter;
      current_wall = wall;
      expected_particle = 0;
    }
    if (particle != expected_particle) {
      throw ParseError("expected particle " + std::to_string(expected_particle) + ", found " +
                           std::to_string(particle),
                       line_start + fields[2].second);
    }
    ++expected_particle;
    std::vector<double> values(trace.dim);
    for (std::size_t c = 0; c < trace.dim; ++c) {
      values[c] = parse_field<double>(fields[c + 3].first, line_start + fields[c + 3].second, "coordinate");
    }
    rows.push_back(std::move(values));
  }
  close_snapshot(text.size());
  if (trace.snapshots.empty()) throw ArgumentError("trace '" + path + "' holds no snapshots");
  return trace;
}

std::string sidecar_path(const std::string& trace_csv_path) {
  const auto slash = trace_csv_path.find_last_of('/');
  const auto dot = trace_csv_path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return trace_csv_path + ".json";
  return trace_csv_path.substr(0, dot) + ".json";
}

nlohmann::json sidecar_json(const TraceStore& trace, const nlohmann::json& extra) {
  nlohmann::json doc;
  doc["config_fingerprint"] = trace.config_fingerprint;
  doc["seed"] = trace.seed;
  doc["particle_count"] = trace.particle_count;
  doc["dim"] = trace.dim;
  doc["snapshots"] = trace.snapshots.size();
  doc["burn_in_wall_s"] = trace.burn_in_wall_s;
  doc["total_wall_s"] = trace.total_wall_s;

  nlohmann::json jitter;
  if (!trace.jitters.empty()) {
    std::size_t nonzero = 0;
    double max_jitter = 0.0;
    for (double j : trace.jitters) {
      nonzero += j > 0.0 ? 1 : 0;
      max_jitter = std::max(max_jitter, j);
    }
    jitter["steps"] = trace.jitters.size();
    jitter["nonzero_steps"] = nonzero;
    jitter["max"] = max_jitter;
    nlohmann::json ladder = nlohmann::json::object();
    for (double level : kJitterLadder) {
      ladder[format_double(level)] = std::count(trace.jitters.begin(), trace.jitters.end(), level);
    }
    jitter["per_level"] = ladder;
  }
  doc["jitter"] = jitter;

  nlohmann::json bandwidth;
  if (!trace.bandwidths.empty()) {
    const auto [lo, hi] = std::minmax_element(trace.bandwidths.begin(), trace.bandwidths.end());
    double sum = 0.0;
    for (double h : trace.bandwidths) sum += h;
    bandwidth["min"] = *lo;
    bandwidth["max"] = *hi;
    bandwidth["mean"] = sum / static_cast<double>(trace.bandwidths.size());
    bandwidth["last"] = trace.bandwidths.back();
  }
  doc["bandwidth"] = bandwidth;
  doc.update(extra);
  return doc;
}

void write_json(const nlohmann::json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("invalid JSON in '" + path + "': " + e.what(), e.byte);
  }
}

void apply_sidecar(TraceStore& trace, const nlohmann::json& sidecar) {
  trace.config_fingerprint = sidecar.value("config_fingerprint", std::string{});
  trace.seed = sidecar.value("seed", std::uint64_t{0});
  trace.burn_in_wall_s = sidecar.value("burn_in_wall_s", 0.0);
  trace.total_wall_s = sidecar.value("total_wall_s", 0.0);
}

}  // namespace sgldr
