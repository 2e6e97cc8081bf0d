#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace spotvol {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for all runtime failures raised by the library.
/// Precondition violations throw std::invalid_argument instead.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteState : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct EmptySeries : Error { using Error::Error; };
struct AllDegenerate : Error { using Error::Error; };
struct EigenFailure : Error { using Error::Error; };
struct NonPositiveDiagonal : Error { using Error::Error; };
struct NoPDInRange : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct SingularInner : Error { using Error::Error; };
struct NotPD : Error { using Error::Error; };
struct RaggedInput : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Seed derivation
//
// Every random stream is seeded as splitmix(base ^ f(stream, index)), so the
// draws of one stream never depend on how many draws another stream consumed.
// This is the documented splitting rule behind the determinism guarantees:
// replications, assets and purposes all map to fixed (stream, index) pairs.
// ---------------------------------------------------------------------------

enum class Stream : std::uint64_t {
    Rho = 1,
    LoadingDriver = 2,
    IdioDriver = 3,
    FactorDriver = 4,
    Noise = 5,
    SamplingClock = 6,
    Replication = 7,
    CvReplication = 8,
    LoadingSign = 9,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Derive the seed of an independent sub-stream from a base seed.
std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index);

inline std::mt19937_64 make_rng(std::uint64_t base, Stream stream, std::uint64_t index) {
    return std::mt19937_64(derive_seed(base, stream, index));
}

// ---------------------------------------------------------------------------
// Parallel helpers
// ---------------------------------------------------------------------------

/// Number of worker threads to use: min(requested or hardware, SPOTVOL_THREADS).
unsigned thread_budget(unsigned requested = 0);

/// Run body(i) for i in [0, n). Work items must be independent; results keyed
/// by i so the schedule cannot change outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned max_threads = 0);

/// Flip eigenvector columns so the first nonzero coordinate is positive.
void canonicalize_column_signs(Matrix& vectors);

/// Replace m with (m + m') / 2, evaluated out of place so the result is
/// exactly symmetric.
inline void symmetrize(Matrix& m) { m = Matrix(0.5 * (m + m.transpose())); }

}  // namespace spotvol
