#pragma once

#include "scaservo/run_config.hpp"
#include "scaservo/sac.hpp"

#include <stdexcept>
#include <string>

namespace scaservo {

// Raised when a checkpoint file is unreadable, malformed, or was produced
// under an incompatible configuration.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  SacNets nets;
  Normalizer normalizer;
  std::uint64_t config_hash = 0;
};

// Writes all network parameters, the entropy temperature, the observation
// normalizer, and the config signature hash as JSON.  Doubles are printed
// with shortest-round-trip formatting, so a load restores them bit-exactly.
void save_checkpoint(const std::string& path, const SacNets& nets,
                     const Normalizer& norm, const RunConfig& cfg);

// Loads and validates a checkpoint.  Refuses (CheckpointError) on a bad
// magic/version, truncated or malformed JSON, layer-shape inconsistencies,
// or a config whose signature differs from `expected`.
Checkpoint load_checkpoint(const std::string& path, const RunConfig& expected);

}  // namespace scaservo
