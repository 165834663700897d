#pragma once

#include <cstdint>
#include <random>

namespace gffdrift {

enum class StreamTag : std::uint32_t { field = 1, noise = 2, aux = 3 };

// Independent generator for (master seed, index, tag). The same triple always
// yields the same sequence; it does not depend on thread scheduling.
std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t index, StreamTag tag);

// Seed value used to label a replica's stream in outputs.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index, StreamTag tag);

}  // namespace gffdrift
