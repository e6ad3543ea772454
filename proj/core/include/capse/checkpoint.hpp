#pragma once

#include <cstdint>
#include <filesystem>

#include "capse/capsule.hpp"
#include "capse/embedding.hpp"
#include "capse/triple.hpp"

namespace capse {

// Trained model snapshot: embeddings plus scorer parameters.
struct Checkpoint {
  EmbeddingTable embeddings;
  CapsEParams params;
  std::int64_t step = 0;
};

// Text format, all space-separated:
//   capse <k> <N> <d> <m> <step>
//   <embedding sections as in embedding.hpp>
//   filters <N> 3      followed by N rows of 3
//   biases <N>         followed by 1 row of N
//   W_<i> <d> <N>      followed by d rows of N, for each i in [0, k)
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt,
                     const Vocab& vocab);
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const Vocab& vocab);

}  // namespace capse
