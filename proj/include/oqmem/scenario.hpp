#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oqmem/io.hpp"

// One scenario document = one run. Outputs are written next to a manifest
// that every output file names on its first line or in every record.

namespace oqmem::scenario {

inline constexpr std::string_view kVersion = "0.3.0";

enum class Kind { ExchangeSweep, CouplingMap, Protocol, HomFidelity, BandProfile, RateEstimate };

std::string_view kind_name(Kind k);
std::optional<Kind> parse_kind(std::string_view name);

struct Scenario {
  Kind kind = Kind::ExchangeSweep;
  std::uint64_t seed = 0;
  std::string output;  ///< base name of the output files
  io::Json parameters;
  std::string source_text;  ///< raw document, hashed into the manifest
  std::string source_name;
};

/// Parses a document and validates its kind-specific parameters.
Scenario load(const std::string& path);
Scenario parse(const std::string& text, const std::string& source_name);
/// Builds the typed run plan without executing it.
void validate(const Scenario& s);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::filesystem::path out_dir = ".";
};

struct RunResult {
  std::vector<std::filesystem::path> outputs;  ///< excludes the manifest
  std::filesystem::path manifest;
};

RunResult run(const Scenario& s, const RunOptions& options);

struct RateEstimate {
  double effective_cycle = 0;  ///< ps
  double attempts_per_second = 0;
  double success_probability = 0;
  double successes_per_second = 0;
};

/// Per-attempt success 0.5·p_herald·collection, at one attempt per
/// max(cycle, dead time).
RateEstimate estimate_rate(double p_herald, double collection_efficiency, double cycle_time,
                           double detector_dead_time);
/// Same timing, with the per-attempt success probability given directly.
RateEstimate estimate_rate_from_success(double p_success, double cycle_time,
                                        double detector_dead_time);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);
/// Shortest round-trip decimal for a double.
std::string format_number(double v);

/// Human-readable field reference for one kind, or for all.
std::string schema_text(std::optional<Kind> kind = std::nullopt);

}  // namespace oqmem::scenario
