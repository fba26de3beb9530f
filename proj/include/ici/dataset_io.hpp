#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ici/types.hpp"

namespace ici {

// Labeled embedding collection grouped by class. Class ids are dense from 0;
// every vector has length `dim` with finite entries.
struct FeatureStore {
  Index dim = 0;
  std::vector<std::vector<Vector>> classes;
  std::map<std::uint32_t, std::string> class_names;

  Index num_classes() const { return static_cast<Index>(classes.size()); }
  Index total_instances() const {
    Index total = 0;
    for (const auto& c : classes) total += static_cast<Index>(c.size());
    return total;
  }
};

enum class StoreFormat { icif, csv };

// Gaussian-mixture generator parameters for desk-scale runs.
struct SynthSpec {
  Index num_classes = 5;
  Index dim = 16;
  Index per_class = 50;
  double cluster_separation = 8.0;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
};

// Raised on malformed input files; the message carries a byte offset (ICIF)
// or line number (CSV).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

FeatureStore load_store(const std::string& path, StoreFormat format);
void save_store(const FeatureStore& store, const std::string& path, StoreFormat format);

// Class centers drawn uniformly on the sphere of radius cluster_separation;
// instances are center plus isotropic Gaussian noise of scale noise_scale.
// Features are quantized to 32-bit float precision so a store round-trips
// bit-exactly through the ICIF file format.
FeatureStore generate_synthetic(const SynthSpec& spec);

}  // namespace ici
