#pragma once

#include <string>
#include <vector>

#include "morphrl/numeric/array.hpp"
#include "morphrl/trainer/rollout.hpp"

namespace morphrl {

struct ChunkSpan {
  std::size_t start = 0;
  std::size_t valid_len = 0;
  std::size_t burn_in = 0;

  friend bool operator==(const ChunkSpan&, const ChunkSpan&) = default;
};

// Chunk layout for one episode. Starts are k·stride; an episode no longer
// than m is a single chunk. Every step is a non-burn-in step of exactly one
// chunk: the chunk at t = 0 has no burn-in (its hidden state is exact) and
// later chunks burn in over their overlap with the predecessor.
std::vector<ChunkSpan> chunk_spans(std::size_t episode_len, std::size_t m, std::size_t l, std::size_t stride = 0);

struct Chunk {
  const Episode* episode = nullptr;
  std::string robot_id;
  std::size_t start_t = 0;
  std::size_t valid_len = 0;
  std::size_t burn_in = 0;
  Array initial_hidden;  // [slots, hidden]; empty for feed-forward policies

  const StepRecord& step(std::size_t i) const { return episode->steps[start_t + i]; }
  std::size_t trained_steps() const { return valid_len - burn_in; }
};

// Chunks borrow their steps from buffer, which must outlive them.
std::vector<Chunk> make_chunks(const RolloutBuffer& buffer, std::size_t m, std::size_t l, bool stored_hidden,
                               std::size_t stride = 0);

}  // namespace morphrl
