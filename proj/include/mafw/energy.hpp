#pragma once

#include <cstddef>
#include <span>
#include <vector>

/// CPU energy and latency of local computing, NN training and server-side
/// critic work, for both privacy classes. Dynamic power is kappa * f^3.
namespace mafw::energy {

struct ComputeProfile {
  double kappa = 1e-26;             // effective switched capacitance
  double freq_hz = 5e8;             // current CPU frequency
  double freq_max_hz = 5e8;
  double cycles_per_bit = 330.0;
  double flops_per_cycle = 8.0;
  double gradient_bits = 1e3;       // zeta: bits per returned gradient vector
  double state_bits = 1e3;          // rho: bits per channel-state sample
  double task_bits = 1e5;           // d: local task bits this slot

  void validate() const;
};

struct TrainingLoad {
  double batch_samples = 8.0;
  double flops_actor = 0.0;
  double flops_critic = 0.0;
};

struct EnergyLatency {
  double energy_j = 0.0;
  double latency_s = 0.0;

  EnergyLatency& operator+=(const EnergyLatency& o) {
    energy_j += o.energy_j;
    latency_s += o.latency_s;
    return *this;
  }
  friend EnergyLatency operator+(EnergyLatency a, const EnergyLatency& b) { return a += b; }
};

/// Cost of `bits` of work at `cycles_per_bit`; throws std::domain_error when
/// freq is zero and work is nonzero.
EnergyLatency cycle_cost(double kappa, double bits, double cycles_per_bit, double freq_hz);

/// Actor-side local computing of an insensitive agent.
EnergyLatency actor_local(const ComputeProfile& profile, const TrainingLoad& load);

/// Training `flops` on a CPU described by `profile`.
EnergyLatency nn_training_cost(const ComputeProfile& profile, double flops);

/// Server-side critic computing for one insensitive agent. The server profile
/// supplies kappa, frequency and cycles per bit.
EnergyLatency critic_server_cost(const ComputeProfile& server, double state_bits,
                                 double batch_samples, double server_task_bits);

/// Local computing plus local actor and critic training of a sensitive agent.
EnergyLatency sensitive_local(const ComputeProfile& profile, const TrainingLoad& load);

/// Full per-slot cost of an insensitive agent: local actor work, local actor
/// training, server critic computing and server critic training.
EnergyLatency insensitive_total(const ComputeProfile& local, const ComputeProfile& server,
                                const TrainingLoad& load, double server_task_bits);

struct AgentCost {
  bool privacy_sensitive = false;
  EnergyLatency cost;
};

/// Sum of per-agent energies over both classes.
double system_energy(std::span<const AgentCost> agents);

/// Flops per sample of one forward and backward pass: 6 * sum(B_p * B_{p+1}).
/// Throws std::invalid_argument with fewer than two layers.
double mlp_flops(std::span<const std::size_t> layer_sizes);

}  // namespace mafw::energy
