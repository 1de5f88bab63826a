#ifndef ARACL_MODEL_IO_HPP_
#define ARACL_MODEL_IO_HPP_

#include <string>

#include "aracl/classifiers.hpp"

namespace aracl {

// Versioned, self-describing model container (JSON):
//   { "format": "aracl-model", "version": 1,
//     "architecture": {"type": "mr"|"mlp", "k":.., "d":.. [, "h":.., "activation":"relu"]},
//     "params": { tensors, row-major }, "config_hash": "<hex>" }
// Particle sets use format "aracl-particles" with a "particles" array of the
// same per-model objects. Doubles are emitted with shortest round-trip
// formatting, so save/load is bit-exact for finite parameters.
std::string serialize_model(const SoftmaxModel& m, const std::string& config_hash = "0");
SoftmaxModel deserialize_model(const std::string& text);

std::string serialize_particles(const ParticleSet& p, const std::string& config_hash = "0");
ParticleSet deserialize_particles(const std::string& text);

void save_model_file(const SoftmaxModel& m, const std::string& path,
                     const std::string& config_hash = "0");
SoftmaxModel load_model_file(const std::string& path);

void save_particles_file(const ParticleSet& p, const std::string& path,
                         const std::string& config_hash = "0");
ParticleSet load_particles_file(const std::string& path);

// True if `path` holds a particle container rather than a single model.
bool file_is_particles(const std::string& path);

// FNV-1a 64-bit over a canonical config string; used for config_hash fields.
std::string fnv1a_hex(const std::string& text);

}  // namespace aracl

#endif  // ARACL_MODEL_IO_HPP_
