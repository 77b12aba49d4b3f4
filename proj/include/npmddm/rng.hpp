#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace npmddm {

/// Counter-based seed derivation. Every random stream in the library is
/// addressed by (root seed, key path), so the draws a task sees do not depend
/// on which thread runs it or in what order tasks are scheduled.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> keys);

/// Engine for the stream addressed by (root, keys).
std::mt19937_64 make_stream(std::uint64_t root, std::initializer_list<std::uint64_t> keys);

/// Stream identifiers used across modules.
namespace stream {
inline constexpr std::uint64_t kBootstrap = 0x626f6f74;   // "boot"
inline constexpr std::uint64_t kVariogram = 0x76617267;   // "varg"
inline constexpr std::uint64_t kFixture = 0x66697874;     // "fixt"
}  // namespace stream

}  // namespace npmddm
