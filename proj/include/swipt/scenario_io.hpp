/**
 * @file scenario_io.hpp
 * @brief Scenario documents (JSON) in, CSV traces out. Every CSV starts
 *        with a header row and a comment row carrying the seed and a hash
 *        of the effective configuration, so outputs are self-describing
 *        and reproducible runs diff byte-identically.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swipt/simulator.hpp"

namespace swipt {

/// Frame snapshot for the solve and rp-region subcommands: which users
/// are served/charged, and optionally pinned channel matrices.
struct SolveSnapshot {
  UserSets sets;
  std::optional<ChannelSet> channels;
};

struct ScenarioDocument {
  ScenarioConfig scenario;
  std::optional<SolveSnapshot> snapshot;
};

/// Parse a scenario document; throws std::runtime_error with a
/// field-qualified message on malformed input.
ScenarioDocument parse_scenario(const std::string& text);

/// Read and parse a scenario file; I/O failures throw std::system_error.
ScenarioDocument load_scenario(const std::string& path);

Strategy parse_strategy(const std::string& name);
const char* strategy_name(Strategy s);

/// Canonical text form of the effective configuration (fixed field order,
/// full precision); its FNV-1a hash goes into every CSV comment row.
std::string canonical_scenario(const ScenarioConfig& scenario);
std::uint64_t config_hash(const ScenarioConfig& scenario);

void write_battery_trace(const std::string& path, const SimTrace& trace,
                         std::uint64_t seed, std::uint64_t hash);
void write_sumrate_trace(const std::string& path, const SimTrace& trace,
                         std::uint64_t seed, std::uint64_t hash);
void write_rate_samples(const std::string& path, const SimTrace& trace,
                        std::uint64_t seed, std::uint64_t hash);
void write_harvest_trace(const std::string& path, const SimTrace& trace,
                         std::uint64_t seed, std::uint64_t hash);
void write_groups_trace(const std::string& path, const SimTrace& trace,
                        std::uint64_t seed, std::uint64_t hash);

void write_rp_surface(const std::string& path, const RpRegion& region,
                      std::uint64_t seed, std::uint64_t hash);
void write_boundary_points(const std::string& path, const RpRegion& region,
                           std::uint64_t seed, std::uint64_t hash);

struct ComparisonRow {
  std::string strategy;
  double avg_sum_rate = 0.0;
  double aggregate_harvested = 0.0;
  double ms_per_frame = 0.0;
};

void write_comparison(const std::string& path,
                      const std::vector<ComparisonRow>& rows,
                      std::uint64_t seed, std::uint64_t hash);

}  // namespace swipt
