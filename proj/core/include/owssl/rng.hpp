#pragma once

#include <cstdint>
#include <initializer_list>

namespace owssl {

/// Counter-based splittable RNG (SplittableRandom construction: a Weyl
/// sequence with a per-stream odd gamma, finalized by a 64-bit mixer).
/// A given (seed, stream_id) pair always yields the same sequence; distinct
/// stream ids walk distinct orbits, so per-sample streams can be consumed in
/// any order or in parallel without changing results. Value type, cheap to
/// copy; never share one instance mutably across threads.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53-bit resolution.
  double next_double();
  /// Uniform in (0, 1); safe to pass to log().
  double next_open();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (two uniforms per draw).
  double normal();
  /// Uniform integer in [0, n), unbiased. n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_;
  std::uint64_t gamma_;
};

/// Fold path components into a single stream id, for hierarchical stream
/// derivation (e.g. {tag, epoch, sample}).
std::uint64_t derive_stream(std::initializer_list<std::uint64_t> parts);

/// Gamma(shape, 1) via Marsaglia-Tsang squeeze; shape > 0.
double sample_gamma(RngStream& rng, double shape);

/// Beta(alpha, beta) as the usual two-Gamma ratio. Throws on nonpositive
/// parameters.
double sample_beta(RngStream& rng, double alpha, double beta);

}  // namespace owssl
