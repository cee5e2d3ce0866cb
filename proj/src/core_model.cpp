#include "swipt/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace swipt {

namespace {

double clamp_battery(double value, double capacity) {
  return std::clamp(value, 0.0, capacity);
}

}  // namespace

double decoding_power(double rate, const PowerModel& model) {
  return model.c1 * std::exp(model.c2 * rate);
}

double max_rate(double battery, const PowerModel& model, double t_f) {
  const double available = battery / t_f - model.p_c_rx;
  return (1.0 / model.c2) * std::log(std::max(available, model.c1) / model.c1);
}

double harvested_power(const ChannelMatrix& h_j,
                       const std::vector<CxMatrix>& covariances, double zeta) {
  const CxMatrix& h = h_j.entries;
  double total = 0.0;
  for (const CxMatrix& s : covariances) {
    if (s.rows() != h.cols() || s.cols() != h.cols()) {
      throw std::invalid_argument(
          "harvested_power: covariance dimensions do not match channel");
    }
    total += (h * s * h.adjoint()).trace().real();
  }
  return zeta * total;
}

TerminalState update_battery_info(TerminalState state, double rate,
                                  const PowerModel& model, double t_f) {
  const double draw = decoding_power(rate, model) + model.p_c_rx;
  state.battery = clamp_battery(state.battery - t_f * draw, state.capacity);
  return state;
}

TerminalState update_battery_harvest(TerminalState state, double harvested,
                                     const PowerModel& model, double t_f) {
  state.battery = clamp_battery(
      state.battery + t_f * (harvested - model.p_c_rx), state.capacity);
  return state;
}

TerminalState pf_update(TerminalState state, double achieved_rate, double t_c) {
  state.pf_avg = std::max(
      (1.0 - 1.0 / t_c) * state.pf_avg + achieved_rate / t_c, kPfFloor);
  state.weight = 1.0 / state.pf_avg;
  return state;
}

}  // namespace swipt
