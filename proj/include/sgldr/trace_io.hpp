#pragma once

#include <string>

#include "json.hpp"

#include "sgldr/sampler.hpp"

namespace sgldr {

// CSV layout: header `iter,wall_s,particle,dim_0,...,dim_{d-1}`, then one row per particle
// per snapshot. Values are written with 17 significant digits so they read back exactly.
void write_trace_csv(const TraceStore& trace, const std::string& path);

// Throws ParseError (with byte offset) on malformed content, ArgumentError on an empty trace.
// Fields that only live in the sidecar (fingerprint, seed, burn-in clock) are left default.
TraceStore read_trace_csv(const std::string& path);

// Sidecar path for a trace CSV: same stem, `.json` extension.
std::string sidecar_path(const std::string& trace_csv_path);

// Fingerprint, seed, clock stamps plus jitter and bandwidth summaries. `extra` is merged in.
nlohmann::json sidecar_json(const TraceStore& trace, const nlohmann::json& extra = nlohmann::json::object());
void write_json(const nlohmann::json& doc, const std::string& path);
nlohmann::json read_json(const std::string& path);

// Copies fingerprint, seed and clock fields from a sidecar into `trace`.
void apply_sidecar(TraceStore& trace, const nlohmann::json& sidecar);

}  // namespace sgldr
