#include "swipt/scenario_io.hpp"

#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <system_error>

#include "json.hpp"

namespace swipt {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& ctx, const std::string& msg) {
  throw std::runtime_error("scenario: " + ctx + ": " + msg);
}

void expect_keys(const json& obj, const std::string& ctx,
                 std::initializer_list<std::string_view> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (std::string_view k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail(ctx, "unknown field '" + it.key() + "'");
  }
}

double num(const json& o, const std::string& ctx, const char* key,
           double def) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  if (!v.is_number()) {
    fail(ctx, std::string("field '") + key + "' must be a number");
  }
  return v.get<double>();
}

int integer(const json& o, const std::string& ctx, const char* key, int def) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  if (!v.is_number_integer()) {
    fail(ctx, std::string("field '") + key + "' must be an integer");
  }
  return v.get<int>();
}

bool flag(const json& o, const std::string& ctx, const char* key, bool def) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  if (!v.is_boolean()) {
    fail(ctx, std::string("field '") + key + "' must be a boolean");
  }
  return v.get<bool>();
}

TerminalConfig parse_terminal(const json& o, const std::string& ctx,
                              const TerminalConfig& defaults) {
  expect_keys(o, ctx,
              {"antennas", "capacity", "zeta", "q_target", "distance",
               "initial_battery"});
  TerminalConfig t = defaults;
  t.antennas = integer(o, ctx, "antennas", defaults.antennas);
  t.capacity = num(o, ctx, "capacity", defaults.capacity);
  t.zeta = num(o, ctx, "zeta", defaults.zeta);
  t.q_target = num(o, ctx, "q_target", defaults.q_target);
  t.distance = num(o, ctx, "distance", defaults.distance);
  t.initial_battery = num(o, ctx, "initial_battery", defaults.initial_battery);
  if (t.antennas < 1) fail(ctx, "antennas must be >= 1");
  return t;
}

std::vector<int> parse_id_list(const json& v, const std::string& ctx,
                               int num_users) {
  if (!v.is_array()) fail(ctx, "must be an array of user ids");
  std::vector<int> ids;
  for (const json& e : v) {
    if (!e.is_number_integer()) fail(ctx, "user ids must be integers");
    const int id = e.get<int>();
    if (id < 0 || id >= num_users) {
      fail(ctx, "user id " + std::to_string(id) + " out of range");
    }
    ids.push_back(id);
  }
  return ids;
}

CxMatrix parse_matrix(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.empty()) fail(ctx, "matrix must be a nonempty array");
  const std::size_t cols = v.front().is_array() ? v.front().size() : 0;
  if (cols == 0) fail(ctx, "matrix rows must be nonempty arrays");
  CxMatrix m(v.size(), cols);
  for (std::size_t r = 0; r < v.size(); ++r) {
    const json& row = v.at(r);
    if (!row.is_array() || row.size() != cols) {
      fail(ctx, "ragged matrix rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const json& cell = row.at(c);
      if (!cell.is_array() || cell.size() != 2 || !cell.at(0).is_number() ||
          !cell.at(1).is_number()) {
        fail(ctx, "entries must be [re, im] pairs");
      }
      m(r, c) = Complex(cell.at(0).get<double>(), cell.at(1).get<double>());
    }
  }
  return m;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fmt9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) {
    throw std::system_error(errno, std::generic_category(),
                            "cannot open output file " + path);
  }
  return f;
}

void comment_row(std::ofstream& f, std::uint64_t seed, std::uint64_t hash) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "# seed=%" PRIu64 " config=%016" PRIx64,
                seed, hash);
  f << buf << '\n';
}

}  // namespace

ScenarioDocument parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("scenario: ") + e.what());
  }
  if (!root.is_object()) fail("document", "top level must be an object");
  expect_keys(root, "document",
              {"n_t", "total_frames", "rng_seed", "pathloss_exponent",
               "initial_battery_frac", "power", "frame", "grouping", "solver",
               "terminals", "terminal_default", "num_terminals", "snapshot"});

  ScenarioDocument doc;
  ScenarioConfig& sc = doc.scenario;
  sc.n_t = integer(root, "document", "n_t", sc.n_t);
  sc.total_frames = integer(root, "document", "total_frames", sc.total_frames);
  if (root.contains("rng_seed")) {
    const json& v = root.at("rng_seed");
    if (!v.is_number_integer()) fail("document", "rng_seed must be an integer");
    sc.rng_seed = v.get<std::uint64_t>();
  }
  sc.pathloss_exponent =
      num(root, "document", "pathloss_exponent", sc.pathloss_exponent);
  sc.initial_battery_frac =
      num(root, "document", "initial_battery_frac", sc.initial_battery_frac);
  if (sc.n_t < 1) fail("document", "n_t must be >= 1");
  if (sc.total_frames < 1) fail("document", "total_frames must be >= 1");

  if (root.contains("power")) {
    const json& o = root.at("power");
    expect_keys(o, "power", {"p_c_tx", "p_c_rx", "c1", "c2", "p_max"});
    sc.power.p_c_tx = num(o, "power", "p_c_tx", sc.power.p_c_tx);
    sc.power.p_c_rx = num(o, "power", "p_c_rx", sc.power.p_c_rx);
    sc.power.c1 = num(o, "power", "c1", sc.power.c1);
    sc.power.c2 = num(o, "power", "c2", sc.power.c2);
    sc.power.p_max = num(o, "power", "p_max", sc.power.p_max);
    if (sc.power.radiated_budget() <= 0.0) {
      fail("power", "p_max must exceed p_c_tx");
    }
  }
  if (root.contains("frame")) {
    const json& o = root.at("frame");
    expect_keys(o, "frame", {"t_f", "superframe_frames", "t_c", "alpha"});
    sc.frame.t_f = num(o, "frame", "t_f", sc.frame.t_f);
    sc.frame.superframe_frames =
        integer(o, "frame", "superframe_frames", sc.frame.superframe_frames);
    sc.frame.t_c = num(o, "frame", "t_c", sc.frame.t_c);
    sc.frame.alpha = num(o, "frame", "alpha", sc.frame.alpha);
    if (sc.frame.t_f <= 0.0) fail("frame", "t_f must be positive");
    if (sc.frame.superframe_frames < 1) {
      fail("frame", "superframe_frames must be >= 1");
    }
  }
  if (root.contains("grouping")) {
    const json& o = root.at("grouping");
    expect_keys(o, "grouping",
                {"strategy", "max_info_users", "harvest_group_size",
                 "per_round_harvest"});
    if (o.contains("strategy")) {
      const json& v = o.at("strategy");
      if (!v.is_string()) fail("grouping", "strategy must be a string");
      try {
        sc.grouping.strategy = parse_strategy(v.get<std::string>());
      } catch (const std::invalid_argument& e) {
        fail("grouping", e.what());
      }
    }
    sc.grouping.max_info_users =
        integer(o, "grouping", "max_info_users", sc.grouping.max_info_users);
    sc.grouping.harvest_group_size = integer(
        o, "grouping", "harvest_group_size", sc.grouping.harvest_group_size);
    sc.grouping.per_round_harvest = integer(
        o, "grouping", "per_round_harvest", sc.grouping.per_round_harvest);
    if (sc.grouping.max_info_users < 1) {
      fail("grouping", "max_info_users must be >= 1");
    }
  }
  if (root.contains("solver")) {
    const json& o = root.at("solver");
    expect_keys(o, "solver",
                {"ellipsoid_tol", "max_iters", "initial_radius", "kkt_tol",
                 "bisection_tol", "restore_infeasible"});
    sc.solver.ellipsoid_tol =
        num(o, "solver", "ellipsoid_tol", sc.solver.ellipsoid_tol);
    sc.solver.max_iters = integer(o, "solver", "max_iters", sc.solver.max_iters);
    sc.solver.initial_radius =
        num(o, "solver", "initial_radius", sc.solver.initial_radius);
    sc.solver.kkt_tol = num(o, "solver", "kkt_tol", sc.solver.kkt_tol);
    sc.solver.bisection_tol =
        num(o, "solver", "bisection_tol", sc.solver.bisection_tol);
    sc.solver.restore_infeasible =
        flag(o, "solver", "restore_infeasible", sc.solver.restore_infeasible);
  }

  const TerminalConfig defaults =
      root.contains("terminal_default")
          ? parse_terminal(root.at("terminal_default"), "terminal_default",
                           TerminalConfig{})
          : TerminalConfig{};
  if (root.contains("terminals")) {
    const json& arr = root.at("terminals");
    if (!arr.is_array()) fail("terminals", "must be an array");
    int idx = 0;
    for (const json& o : arr) {
      sc.terminals.push_back(
          parse_terminal(o, "terminals[" + std::to_string(idx) + "]",
                         defaults));
      ++idx;
    }
  }
  const int replicate = integer(root, "document", "num_terminals", 0);
  for (int i = static_cast<int>(sc.terminals.size()); i < replicate; ++i) {
    sc.terminals.push_back(defaults);
  }
  if (sc.terminals.empty()) fail("terminals", "at least one terminal needed");

  if (root.contains("snapshot")) {
    const json& o = root.at("snapshot");
    expect_keys(o, "snapshot", {"info", "harvest", "channels"});
    SolveSnapshot snap;
    if (o.contains("info")) {
      snap.sets.info =
          parse_id_list(o.at("info"), "snapshot.info", sc.num_users());
    }
    if (o.contains("harvest")) {
      snap.sets.harvest =
          parse_id_list(o.at("harvest"), "snapshot.harvest", sc.num_users());
    }
    for (int id : snap.sets.info) {
      for (int other : snap.sets.harvest) {
        if (id == other) {
          fail("snapshot", "user " + std::to_string(id) +
                               " is in both info and harvest");
        }
      }
    }
    if (o.contains("channels")) {
      const json& arr = o.at("channels");
      if (!arr.is_array()) fail("snapshot.channels", "must be an array");
      ChannelSet set;
      set.users.resize(sc.num_users());
      std::vector<bool> seen(sc.num_users(), false);
      for (const json& e : arr) {
        expect_keys(e, "snapshot.channels[]", {"user", "matrix"});
        const int id = integer(e, "snapshot.channels[]", "user", -1);
        if (id < 0 || id >= sc.num_users()) {
          fail("snapshot.channels", "user id out of range");
        }
        if (seen[id]) fail("snapshot.channels", "duplicate user entry");
        seen[id] = true;
        ChannelMatrix h;
        h.user_id = id;
        h.entries = parse_matrix(e.at("matrix"),
                                 "snapshot.channels[user " +
                                     std::to_string(id) + "]");
        if (h.n_rx() != sc.terminals[id].antennas || h.n_tx() != sc.n_t) {
          fail("snapshot.channels",
               "matrix of user " + std::to_string(id) +
                   " must be antennas x n_t");
        }
        set.users[id] = std::move(h);
      }
      for (int id = 0; id < sc.num_users(); ++id) {
        if (!seen[id]) {
          fail("snapshot.channels",
               "missing channel for user " + std::to_string(id));
        }
      }
      snap.channels = std::move(set);
    }
    doc.snapshot = std::move(snap);
  }
  return doc;
}

ScenarioDocument load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::system_error(errno, std::generic_category(),
                            "cannot read scenario file " + path);
  }
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_scenario(buf.str());
}

Strategy parse_strategy(const std::string& name) {
  std::string low;
  for (char c : name) {
    low.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  if (low == "lb-dhs" || low == "dhs") return Strategy::kDhs;
  if (low == "lb-chs" || low == "chs") return Strategy::kChs;
  if (low == "rr" || low == "round-robin") return Strategy::kRoundRobin;
  if (low == "random") return Strategy::kRandom;
  if (low == "no-swipt" || low == "noswipt") return Strategy::kNoSwipt;
  if (low == "no-harvest-mgmt" || low == "no-harvest-management") {
    return Strategy::kNoHarvestMgmt;
  }
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kDhs: return "LB-DHS";
    case Strategy::kChs: return "LB-CHS";
    case Strategy::kRoundRobin: return "RR";
    case Strategy::kRandom: return "Random";
    case Strategy::kNoSwipt: return "no-swipt";
    case Strategy::kNoHarvestMgmt: return "no-harvest-mgmt";
  }
  return "?";
}

std::string canonical_scenario(const ScenarioConfig& sc) {
  std::ostringstream s;
  s << "n_t=" << sc.n_t << ";frames=" << sc.total_frames
    << ";seed=" << sc.rng_seed << ";gamma=" << fmt17(sc.pathloss_exponent)
    << ";init_frac=" << fmt17(sc.initial_battery_frac) << ";power="
    << fmt17(sc.power.p_c_tx) << ',' << fmt17(sc.power.p_c_rx) << ','
    << fmt17(sc.power.c1) << ',' << fmt17(sc.power.c2) << ','
    << fmt17(sc.power.p_max) << ";frame=" << fmt17(sc.frame.t_f) << ','
    << sc.frame.superframe_frames << ',' << fmt17(sc.frame.t_c) << ','
    << fmt17(sc.frame.alpha) << ";grouping="
    << strategy_name(sc.grouping.strategy) << ','
    << sc.grouping.max_info_users << ',' << sc.grouping.harvest_group_size
    << ',' << sc.grouping.per_round_harvest << ";solver="
    << fmt17(sc.solver.ellipsoid_tol) << ',' << sc.solver.max_iters << ','
    << fmt17(sc.solver.initial_radius) << ',' << fmt17(sc.solver.kkt_tol)
    << ',' << fmt17(sc.solver.bisection_tol) << ','
    << (sc.solver.restore_infeasible ? 1 : 0);
  for (const TerminalConfig& t : sc.terminals) {
    s << ";t=" << t.antennas << ',' << fmt17(t.capacity) << ','
      << fmt17(t.zeta) << ',' << fmt17(t.q_target) << ','
      << fmt17(t.distance) << ',' << fmt17(t.initial_battery);
  }
  return s.str();
}

std::uint64_t config_hash(const ScenarioConfig& scenario) {
  return fnv1a64(canonical_scenario(scenario));
}

void write_battery_trace(const std::string& path, const SimTrace& trace,
                         std::uint64_t seed, std::uint64_t hash) {
  std::ofstream f = open_out(path);
  f << "frame,user_id,battery\n";
  comment_row(f, seed, hash);
  for (const FrameRecord& rec : trace.frames) {
    for (int u = 0; u < trace.num_users; ++u) {
      f << rec.frame << ',' << u << ',' << fmt9(rec.batteries[u]) << '\n';
    }
  }
}

void write_sumrate_trace(const std::string& path, const SimTrace& trace,
                         std::uint64_t seed, std::uint64_t hash) {
  std::ofstream f = open_out(path);
  f << "frame,running_avg_sr,instantaneous_sr\n";
  comment_row(f, seed, hash);
  for (const FrameRecord& rec : trace.frames) {
    f << rec.frame << ',' << fmt9(rec.running_avg_sr) << ','
      << fmt9(rec.instantaneous_sr) << '\n';
  }
}

void write_rate_samples(const std::string& path, const SimTrace& trace,
                        std::uint64_t seed, std::uint64_t hash) {
  std::ofstream f = open_out(path);
  f << "frame,user_id,rate\n";
  comment_row(f, seed, hash);
  for (const FrameRecord& rec : trace.frames) {
    std::vector<double> rates(trace.num_users, 0.0);
    for (std::size_t i = 0; i < rec.info_ids.size(); ++i) {
      rates[rec.info_ids[i]] = rec.delivered[i];
    }
    for (int u = 0; u < trace.num_users; ++u) {
      f << rec.frame << ',' << u << ',' << fmt9(rates[u]) << '\n';
    }
  }
}

void write_harvest_trace(const std::string& path, const SimTrace& trace,
                         std::uint64_t seed, std::uint64_t hash) {
  std::ofstream f = open_out(path);
  f << "frame,user_id,harvested\n";
  comment_row(f, seed, hash);
  for (const FrameRecord& rec : trace.frames) {
    std::vector<double> harv(trace.num_users, 0.0);
    for (std::size_t j = 0; j < rec.harvest_ids.size(); ++j) {
      harv[rec.harvest_ids[j]] = rec.harvested[j];
    }
    for (int u = 0; u < trace.num_users; ++u) {
      f << rec.frame << ',' << u << ',' << fmt9(harv[u]) << '\n';
    }
  }
}

void write_groups_trace(const std::string& path, const SimTrace& trace,
                        std::uint64_t seed, std::uint64_t hash) {
  std::ofstream f = open_out(path);
  f << "frame,user_id,role\n";
  comment_row(f, seed, hash);
  for (const FrameRecord& rec : trace.frames) {
    std::vector<const char*> role(trace.num_users, "idle");
    for (int id : rec.info_ids) role[id] = "I";
    for (int id : rec.harvest_ids) role[id] = "E";
    for (int u = 0; u < trace.num_users; ++u) {
      f << rec.frame << ',' << u << ',' << role[u] << '\n';
    }
  }
}

void write_rp_surface(const std::string& path, const RpRegion& region,
                      std::uint64_t seed, std::uint64_t hash) {
  std::ofstream f = open_out(path);
  const Eigen::Index m = region.boundary.q_max.size();
  for (Eigen::Index j = 0; j < m; ++j) f << "q_" << (j + 1) << ',';
  f << "sum_rate\n";
  comment_row(f, seed, hash);
  for (const RpSample& s : region.samples) {
    for (Eigen::Index j = 0; j < s.q.size(); ++j) f << fmt9(s.q[j]) << ',';
    if (s.feasible) {
      f << fmt9(s.sum_rate) << '\n';
    } else {
      f << "infeasible\n";
    }
  }
}

void write_boundary_points(const std::string& path, const RpRegion& region,
                           std::uint64_t seed, std::uint64_t hash) {
  std::ofstream f = open_out(path);
  f << "harvest_index,sr_max,q_info_opt,q_max,sr_energy_beam\n";
  comment_row(f, seed, hash);
  for (Eigen::Index j = 0; j < region.boundary.q_max.size(); ++j) {
    f << (j + 1) << ',' << fmt9(region.boundary.sr_max) << ','
      << fmt9(region.boundary.q_info_opt[j]) << ','
      << fmt9(region.boundary.q_max[j]) << ','
      << fmt9(region.boundary.sr_energy_beam[j]) << '\n';
  }
}

void write_comparison(const std::string& path,
                      const std::vector<ComparisonRow>& rows,
                      std::uint64_t seed, std::uint64_t hash) {
  std::ofstream f = open_out(path);
  f << "strategy,avg_sum_rate,aggregate_harvested,ms_per_frame\n";
  comment_row(f, seed, hash);
  for (const ComparisonRow& r : rows) {
    f << r.strategy << ',' << fmt9(r.avg_sum_rate) << ','
      << fmt9(r.aggregate_harvested) << ',' << fmt9(r.ms_per_frame) << '\n';
  }
}

}  // namespace swipt
