#include "morphrl/trainer/chunks.hpp"

#include <algorithm>

#include "morphrl/errors.hpp"

namespace morphrl {

std::vector<ChunkSpan> chunk_spans(std::size_t len, std::size_t m, std::size_t l, std::size_t stride) {
  if (m <= l) throw ConfigError("chunk size m must exceed burn-in l");
  if (stride == 0) stride = m - l;
  if (stride > m - l) throw ConfigError("chunk stride must not exceed m - l");
  std::vector<ChunkSpan> spans;
  if (len == 0) return spans;
  if (len <= m) return {ChunkSpan{0, len, 0}};
  const std::size_t overlap = m - stride;
  for (std::size_t s = 0; s < len; s += stride) {
    const std::size_t valid = std::min(m, len - s);
    spans.push_back(ChunkSpan{s, valid, s == 0 ? 0 : std::min(valid, overlap)});
  }
  return spans;
}

std::vector<Chunk> make_chunks(const RolloutBuffer& buffer, std::size_t m, std::size_t l, bool stored_hidden,
                               std::size_t stride) {
  std::vector<Chunk> chunks;
  for (const Episode& ep : buffer.episodes) {
    for (const ChunkSpan& span : chunk_spans(ep.steps.size(), m, l, stride)) {
      Chunk c;
      c.episode = &ep;
      c.robot_id = ep.robot_id;
      c.start_t = span.start;
      c.valid_len = span.valid_len;
      c.burn_in = span.burn_in;
      if (!ep.hidden_snapshots.empty()) {
        auto it = ep.hidden_snapshots.find(span.start);
        if (it == ep.hidden_snapshots.end()) {
          throw InvalidInput("no hidden snapshot at t=" + std::to_string(span.start) + " for " + ep.robot_id);
        }
        c.initial_hidden = stored_hidden ? it->second : Array::zeros_like(it->second);
      }
      chunks.push_back(std::move(c));
    }
  }
  return chunks;
}

}  // namespace morphrl
