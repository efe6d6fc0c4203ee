#include "mafw/energy.hpp"

#include <stdexcept>

namespace mafw::energy {

void ComputeProfile::validate() const {
  if (!(kappa > 0.0)) throw std::invalid_argument("compute: kappa must be > 0");
  if (!(freq_max_hz > 0.0)) throw std::invalid_argument("compute: f_max must be > 0");
  if (freq_hz < 0.0 || freq_hz > freq_max_hz) {
    throw std::invalid_argument("compute: frequency outside [0, f_max]");
  }
  if (!(cycles_per_bit > 0.0)) throw std::invalid_argument("compute: cycles_per_bit must be > 0");
  if (!(flops_per_cycle > 0.0)) throw std::invalid_argument("compute: flops_per_cycle must be > 0");
  if (gradient_bits < 0.0 || state_bits < 0.0 || task_bits < 0.0) {
    throw std::invalid_argument("compute: workload sizes must be >= 0");
  }
}

EnergyLatency cycle_cost(double kappa, double bits, double cycles_per_bit, double freq_hz) {
  if (bits == 0.0) return {};
  if (!(freq_hz > 0.0)) throw std::domain_error("infeasible frequency: nonzero work at f = 0");
  const double cycles = bits * cycles_per_bit;
  return {kappa * cycles * freq_hz * freq_hz, cycles / freq_hz};
}

EnergyLatency actor_local(const ComputeProfile& profile, const TrainingLoad& load) {
  const double bits = profile.gradient_bits * load.batch_samples + profile.task_bits;
  return cycle_cost(profile.kappa, bits, profile.cycles_per_bit, profile.freq_hz);
}

EnergyLatency nn_training_cost(const ComputeProfile& profile, double flops) {
  // flops / c cycles at frequency f.
  return cycle_cost(profile.kappa, flops, 1.0 / profile.flops_per_cycle, profile.freq_hz);
}

EnergyLatency critic_server_cost(const ComputeProfile& server, double state_bits,
                                 double batch_samples, double server_task_bits) {
  const double bits = state_bits * batch_samples + server_task_bits;
  return cycle_cost(server.kappa, bits, server.cycles_per_bit, server.freq_hz);
}

EnergyLatency sensitive_local(const ComputeProfile& profile, const TrainingLoad& load) {
  const double bits =
      (profile.gradient_bits + profile.state_bits) * load.batch_samples + profile.task_bits;
  return cycle_cost(profile.kappa, bits, profile.cycles_per_bit, profile.freq_hz) +
         nn_training_cost(profile, load.flops_actor + load.flops_critic);
}

EnergyLatency insensitive_total(const ComputeProfile& local, const ComputeProfile& server,
                                const TrainingLoad& load, double server_task_bits) {
  return actor_local(local, load) + nn_training_cost(local, load.flops_actor) +
         critic_server_cost(server, local.state_bits, load.batch_samples, server_task_bits) +
         nn_training_cost(server, load.flops_critic);
}

double system_energy(std::span<const AgentCost> agents) {
  double total = 0.0;
  for (const auto& a : agents) total += a.cost.energy_j;
  return total;
}

double mlp_flops(std::span<const std::size_t> layer_sizes) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("mlp_flops: need at least two layers");
  double macs = 0.0;
  for (std::size_t p = 0; p + 1 < layer_sizes.size(); ++p) {
    macs += static_cast<double>(layer_sizes[p]) * static_cast<double>(layer_sizes[p + 1]);
  }
  return 6.0 * macs;
}

}  // namespace mafw::energy
