#pragma once
// Counter-based randomness: every draw is a pure function of an integer key,
// so results never depend on scheduling or thread count.
#include <cstdint>
#include <initializer_list>

namespace wrgsim {

std::uint64_t mix64(std::uint64_t z);
std::uint64_t hash_key(std::initializer_list<std::uint64_t> key);

// uniform in [0,1) with 53 random bits
double to_unit(std::uint64_t h);
// uniform in (0,1)
double to_open_unit(std::uint64_t h);

double keyed_uniform(std::initializer_list<std::uint64_t> key);
double keyed_normal(std::initializer_list<std::uint64_t> key);

// Stream tags keep unrelated consumers of one seed apart.
namespace stream {
inline constexpr std::uint64_t positions = 0x706f73;
inline constexpr std::uint64_t edges = 0x65646765;
inline constexpr std::uint64_t noise = 0x6e6f6973;
inline constexpr std::uint64_t init = 0x696e6974;
inline constexpr std::uint64_t disorder = 0x646973;
inline constexpr std::uint64_t mf_noise = 0x6d666e;
inline constexpr std::uint64_t mf_init = 0x6d6669;
inline constexpr std::uint64_t mf_disorder = 0x6d6664;
inline constexpr std::uint64_t heuristic = 0x68657572;
inline constexpr std::uint64_t trials = 0x7472;
inline constexpr std::uint64_t probe = 0x7072;
}  // namespace stream

// Sequential draws from a fixed base key.
class KeyedStream {
 public:
  explicit KeyedStream(std::uint64_t base) : base_(base) {}
  std::uint64_t next_bits() { return mix64(base_ ^ mix64(++counter_)); }
  double uniform() { return to_unit(next_bits()); }
  double normal();
  std::uint64_t below(std::uint64_t bound) { return next_bits() % bound; }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace wrgsim
