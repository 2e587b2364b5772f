#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "redor/env.hpp"
#include "redor/numeric.hpp"

namespace redor {

struct Transition {
  Vector state;
  Vector action;
  double reward = 0.0;
  Vector next_state;
  bool terminal = false;
};

struct Trajectory {
  std::vector<Transition> transitions;
  double total_return = 0.0;  // == returns_to_go[0]
  Vector returns_to_go;       // discounted suffix sums at the dataset gamma

  std::size_t length() const { return transitions.size(); }
};

struct PolicyMixEntry {
  PolicyKind policy = PolicyKind::random;
  int count = 0;
  double noise_scale = 0.0;
};

struct OfflineDataset {
  EnvSpec env;
  double gamma = 0.99;
  std::vector<Trajectory> trajectories;
  std::uint64_t seed = 0;
  std::string provenance;

  std::size_t transition_count() const;
  void validate() const;
};

// Sum gamma^k r_k; empty input gives 0.
double discounted_return(const std::vector<double>& rewards, double gamma);

// Single backward pass; out[t] = discounted_return(rewards[t:], gamma).
Vector returns_to_go(const std::vector<double>& rewards, double gamma);

// Fills total_return and returns_to_go from the transitions' rewards.
Trajectory make_trajectory(std::vector<Transition> transitions, double gamma);

// Rolls out each mix entry's policy for its trajectory count, in order.
// Deterministic per seed.
OfflineDataset generate_dataset(const ToyEnv& env,
                                const std::vector<PolicyMixEntry>& mix,
                                double gamma, std::uint64_t seed);

// Line-oriented text format: one header object, then one trajectory object
// per line. read(write(d)) reproduces d bit-exactly.
void write_dataset(const OfflineDataset& dataset,
                   const std::filesystem::path& path);
OfflineDataset read_dataset(const std::filesystem::path& path);

// Exact numeric equality of payload and metadata.
bool datasets_equal(const OfflineDataset& a, const OfflineDataset& b);

}  // namespace redor
