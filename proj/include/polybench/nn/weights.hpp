#pragma once

#include <map>
#include <string>
#include <vector>

#include "polybench/nn/tensor.hpp"

namespace polybench::nn {

// safetensors-compatible container: u64-le header length, JSON header with
// per-tensor {dtype:"F32", shape, data_offsets} plus a string __metadata__
// block, then the raw little-endian payload.
void save_weights(const std::string& path, const std::vector<const Param*>& params,
                  const std::map<std::string, std::string>& metadata);

struct LoadedWeights {
  std::map<std::string, std::pair<std::vector<int64_t>, Eigen::VectorXf>> tensors;
  std::map<std::string, std::string> metadata;
};

LoadedWeights load_weights(const std::string& path);

// Copies every named tensor into the matching Param; throws on a missing
// name or shape mismatch.
void assign_weights(const LoadedWeights& w, const std::vector<Param*>& params);

}  // namespace polybench::nn
