/**
 * @file core_model.hpp
 * @brief Domain types and the power/battery/scheduling arithmetic shared by
 *        every other module: channel containers, the exponential decoding
 *        model, battery updates and proportional-fair averaging.
 */
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace swipt {

using CxMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Baseband channel of one terminal: n_R x n_T, noise-normalized.
struct ChannelMatrix {
  int user_id = 0;
  CxMatrix entries;

  int n_rx() const { return static_cast<int>(entries.rows()); }
  int n_tx() const { return static_cast<int>(entries.cols()); }
};

/// One frame's channel realization for all terminals, indexed by user id.
struct ChannelSet {
  std::vector<ChannelMatrix> users;

  const ChannelMatrix& of(int user_id) const { return users.at(user_id); }
  int size() const { return static_cast<int>(users.size()); }
};

/// Transmitter/receiver power-consumption model. The decoding cost is
/// exponential in rate, p_dec(r) = c1 * exp(c2 * r).
struct PowerModel {
  double p_c_tx = 1.0;   // fixed transmit-chain consumption (W)
  double p_c_rx = 0.1;   // receiver front-end consumption (W)
  double c1 = 30.0;      // decoding floor (W)
  double c2 = 0.75;      // decoding exponent (s/bit per bit/s/Hz)
  double p_max = 11.0;   // total transmit power limit (W)

  double radiated_budget() const { return p_max - p_c_tx; }
};

/// Per-terminal mutable state carried across frames.
struct TerminalState {
  int user_id = 0;
  double battery = 0.0;    // energy units
  double capacity = 0.0;   // energy units
  double zeta = 1.0;       // harvesting transducer efficiency, (0, 1]
  double q_min = 0.0;      // harvest target in radiated units (pre-divided by zeta)
  double pf_avg = 1e-6;    // exponentially averaged delivered rate
  double weight = 1e6;     // scheduling weight, 1 / pf_avg
  int n_antennas = 1;
};

/// Frame/superframe timing and the supergrouping threshold.
struct FrameConfig {
  double t_f = 0.1;            // frame duration (s)
  int superframe_frames = 30;  // frames per supergrouping period
  double t_c = 5.0;            // effective PF window length (frames)
  double alpha = 0.1;          // battery-ratio threshold in [0, 1]
};

/// The four user partitions: per-superframe candidate sets and the
/// per-frame scheduled groups drawn from them.
struct UserSets {
  std::vector<int> super_info;
  std::vector<int> super_harvest;
  std::vector<int> info;
  std::vector<int> harvest;
};

/// pf_avg never decays below this, so weights stay finite.
inline constexpr double kPfFloor = 1e-6;

/// Decoding power c1 * exp(c2 * rate); rate in bit/s/Hz.
double decoding_power(double rate, const PowerModel& model);

/// Largest decodable rate a battery can sustain for one frame:
/// inverse of the decoding model, clamped at 0 when the battery cannot
/// even cover the decode floor plus front-end draw. A 0 return means
/// the user is unservable this frame; callers schedule around it.
double max_rate(double battery, const PowerModel& model, double t_f);

/// zeta * sum_i Tr(H S_i H^H), the electrical power collected by the
/// terminal with channel h_j while the covariances in `covariances` are
/// radiated. Throws std::invalid_argument on dimension mismatch.
double harvested_power(const ChannelMatrix& h_j,
                       const std::vector<CxMatrix>& covariances, double zeta);

/// Battery after one frame of information reception at `rate`.
TerminalState update_battery_info(TerminalState state, double rate,
                                  const PowerModel& model, double t_f);

/// Battery after one frame of harvesting `harvested` electrical power.
TerminalState update_battery_harvest(TerminalState state, double harvested,
                                     const PowerModel& model, double t_f);

/// One EWMA step of the proportional-fair average and weight refresh.
TerminalState pf_update(TerminalState state, double achieved_rate, double t_c);

}  // namespace swipt
