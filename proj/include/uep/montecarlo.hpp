#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "uep/channel.hpp"
#include "uep/codebook.hpp"
#include "uep/partition.hpp"

namespace uep {

// Decoder interface for the Monte Carlo estimator. decode() may use internal
// scratch space; parallel workers each run on their own clone().
class BlockDecoder {
public:
    virtual ~BlockDecoder() = default;
    virtual std::size_t decode(const Vec& y) = 0;
    virtual std::unique_ptr<BlockDecoder> clone() const = 0;
};

struct ClassCount {
    std::uint64_t trials = 0;
    std::uint64_t errors = 0;
};

// Per-class error estimates with their raw counters, plus the overall message
// error counter tracked alongside. Message-wise classes count only trials
// with m in the class; bit-wise classes count every trial.
struct ErrorProfile {
    std::vector<ClassCount> classes;
    std::uint64_t total_trials = 0;
    std::uint64_t message_errors = 0;
    bool ci_limited = false;  // max_trials hit before every class had min_errors

    // Metadata carried into result rows.
    double ebn0_db = 0.0;
    double sigma2 = 0.0;
    double param = std::numeric_limits<double>::quiet_NaN();  // lambda or mu
    std::uint64_t seed = 0;
    std::uint64_t code_digest = 0;

    double estimate(std::size_t c) const {
        return classes[c].trials == 0
                   ? 0.0
                   : static_cast<double>(classes[c].errors) / static_cast<double>(classes[c].trials);
    }
    std::pair<double, double> wilson(std::size_t c, double confidence = 0.95) const;
};

struct StoppingRule {
    std::uint64_t min_errors_per_class = 100;
    std::uint64_t max_trials = 100000000ULL;  // 1e8
};

enum class Execution { serial_reference, openmp };

// Draws messages uniformly, transmits codebook rows through the AWGN channel
// at the given operating point, decodes, and accumulates per-class counters
// until every class has min_errors_per_class errors or max_trials is reached
// (then ci_limited is set). Trials are processed in fixed chunks of
// kTrialsPerChunk whose RNG streams derive from (seed, "mc-chunk", chunk
// index) and the stopping rule is applied at fixed round boundaries, so the
// profile is identical for both executions and any thread count.
ErrorProfile estimate_profile(const Codebook& code, BlockDecoder& decoder,
                              const ClassPartition& partition, const SnrSpec& snr,
                              const StoppingRule& stop, std::uint64_t seed,
                              Execution exec = Execution::openmp);

constexpr std::uint64_t kTrialsPerChunk = 4096;
constexpr std::uint64_t kChunksPerRound = 16;

// Average message error probability. Message-wise profiles combine the
// per-class estimates with their class priors M_i/M; bit-wise profiles use
// the overall message error counter.
double average_error(const ErrorProfile& profile, const ClassPartition& partition);

// Wilson score interval for a binomial proportion. errors == 0 pins the lower
// bound to 0 and errors == trials pins the upper bound to 1.
std::pair<double, double> wilson_interval(std::uint64_t errors, std::uint64_t trials,
                                          double confidence = 0.95);

// Points not dominated by any other ((a dominates b) iff a1 <= b1 and
// a2 <= b2 with at least one strict). Preserves input order; duplicates of a
// surviving point all survive.
std::vector<std::pair<double, double>> pareto_frontier(
    const std::vector<std::pair<double, double>>& points);
std::vector<std::size_t> pareto_frontier_indices(
    const std::vector<std::pair<double, double>>& points);

}  // namespace uep
