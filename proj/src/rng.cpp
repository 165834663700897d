#include "gffdrift/rng.hpp"

#include <array>

namespace gffdrift {

namespace {

std::array<std::uint32_t, 6> seed_words(std::uint64_t master, std::uint64_t index, StreamTag tag) {
    return {static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
            static_cast<std::uint32_t>(index),  static_cast<std::uint32_t>(index >> 32),
            static_cast<std::uint32_t>(tag),    0x67666664u};
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index, StreamTag tag) {
    const auto w = seed_words(master, index, tag);
    std::seed_seq seq(w.begin(), w.end());
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t index, StreamTag tag) {
    const auto w = seed_words(master, index, tag);
    std::seed_seq seq(w.begin(), w.end());
    return std::mt19937_64(seq);
}

}  // namespace gffdrift
