#pragma once

#include <cstdint>
#include <string>

#include "rba/network/embedding.hpp"
#include "rba/optimize/train.hpp"
#include "rba/physics/evaluator.hpp"

namespace rba::io {

enum class BcMode { fourier, adf, soft };
enum class SamplingMethod { latin_hypercube, uniform_grid };

/// Fully resolved experiment description. Defaults are filled per problem
/// before file values are applied; every key in the file must be known and
/// every value must satisfy the module preconditions.
struct ExperimentConfig {
  // [problem]
  phys::ProblemKind problem = phys::ProblemKind::helmholtz;
  phys::HelmholtzSpec helmholtz;
  BcMode bc_mode = BcMode::fourier;  // Helmholtz only
  double time_scale = 1.0;           // Allen-Cahn input scaling for t

  // [network]
  int hidden_layers = 6;
  int width = 128;
  bool modified_mlp = true;

  // [embedding]
  net::EmbeddingConfig embedding;

  // [rba]
  phys::RbaConfig rba;

  // [loss]
  phys::LossWeights weights;

  // [optimizer]
  std::int64_t adam_iters = 0;
  opt::LrSchedule schedule;
  std::int64_t lbfgs_iters = 0;
  int lbfgs_memory = 10;

  // [sampling]
  SamplingMethod sampling = SamplingMethod::uniform_grid;
  int collocation_points = 0;
  int ic_points = 0;
  int bc_points = 0;

  // [diagnostics]
  std::int64_t metric_every = 100;
  std::int64_t snapshot_every = 0;
  std::int64_t snr_every = 0;
  int snr_batches = 100;
  bool snr_sample_std = false;
  bool snr_all_layers = false;

  // [run]
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 0;
  int chunk_points = 256;
};

/// Parses the sectioned key=value text, filling per-problem defaults first.
/// Unknown sections or keys are rejected by name.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Canonical text round-trippable through parse_config_text.
std::string serialize_config(const ExperimentConfig& cfg);

/// FNV-1a hash of the canonical text, as fixed-width hex.
std::string config_hash(const ExperimentConfig& cfg);

/// Derived wiring helpers shared by the run driver and tests.
phys::ProblemConfig problem_config(const ExperimentConfig& cfg);
net::Architecture architecture(const ExperimentConfig& cfg);
phys::CollocationSet build_collocation(const ExperimentConfig& cfg);
opt::TrainConfig train_config(const ExperimentConfig& cfg);

}  // namespace rba::io
