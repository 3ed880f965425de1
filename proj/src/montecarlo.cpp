#include "uep/montecarlo.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace uep {

std::pair<double, double> ErrorProfile::wilson(std::size_t c, double confidence) const {
    return wilson_interval(classes[c].errors, classes[c].trials, confidence);
}

namespace {

struct Counters {
    std::vector<ClassCount> classes;
    std::uint64_t trials = 0;
    std::uint64_t message_errors = 0;

    explicit Counters(std::size_t num_classes) : classes(num_classes) {}

    void merge(const Counters& other) {
        for (std::size_t c = 0; c < classes.size(); ++c) {
            classes[c].trials += other.classes[c].trials;
            classes[c].errors += other.classes[c].errors;
        }
        trials += other.trials;
        message_errors += other.message_errors;
    }
};

// One chunk of trials with its own derived RNG stream. Pure function of
// (code, partition, sigma2, seed, chunk index, chunk size).
void run_chunk(const Codebook& code, BlockDecoder& decoder, const ClassPartition& partition,
               double sigma2, std::uint64_t seed, std::uint64_t chunk_index,
               std::uint64_t chunk_trials, Counters& out) {
    Rng rng(derive_seed(seed, "mc-chunk", chunk_index));
    const std::size_t M = code.message_count();
    const std::size_t n = code.block_length();
    const double sigma = std::sqrt(sigma2);
    Vec y(n);
    PerClassOutcome outcome;
    for (std::uint64_t t = 0; t < chunk_trials; ++t) {
        const std::size_t m = static_cast<std::size_t>(rng.below(M));
        const double* row = code.codewords.row_ptr(m);
        for (std::size_t i = 0; i < n; ++i) y[i] = row[i] + sigma * rng.gaussian();
        const std::size_t m_hat = decoder.decode(y);
        perclass_correct(m, m_hat, partition, outcome);
        for (std::size_t c = 0; c < outcome.applicable.size(); ++c) {
            if (!outcome.applicable[c]) continue;
            out.classes[c].trials += 1;
            out.classes[c].errors += outcome.correct[c] ? 0 : 1;
        }
        out.trials += 1;
        out.message_errors += (m_hat != m) ? 1 : 0;
    }
}

bool all_classes_done(const Counters& counts, const StoppingRule& stop) {
    for (const ClassCount& c : counts.classes)
        if (c.errors < stop.min_errors_per_class) return false;
    return true;
}

}  // namespace

ErrorProfile estimate_profile(const Codebook& code, BlockDecoder& decoder,
                              const ClassPartition& partition, const SnrSpec& snr,
                              const StoppingRule& stop, std::uint64_t seed, Execution exec) {
    if (partition.num_messages() != code.message_count())
        throw std::invalid_argument("estimate_profile: partition does not match codebook");
    if (stop.min_errors_per_class < 1)
        throw std::invalid_argument("estimate_profile: min_errors_per_class must be >= 1");

    const double sigma2 = ebn0_to_sigma2(snr);
    const std::size_t C = partition.num_classes();
    Counters total(C);

    const std::uint64_t num_chunks = (stop.max_trials + kTrialsPerChunk - 1) / kTrialsPerChunk;
    auto chunk_trials = [&](std::uint64_t c) {
        const std::uint64_t begin = c * kTrialsPerChunk;
        return std::min(kTrialsPerChunk, stop.max_trials - begin);
    };

    std::uint64_t next_chunk = 0;
    while (next_chunk < num_chunks && !all_classes_done(total, stop)) {
        const std::uint64_t round_end = std::min(next_chunk + kChunksPerRound, num_chunks);

        if (exec == Execution::serial_reference) {
            for (std::uint64_t c = next_chunk; c < round_end; ++c) {
                Counters local(C);
                run_chunk(code, decoder, partition, sigma2, seed, c, chunk_trials(c), local);
                total.merge(local);
            }
        } else {
#ifdef _OPENMP
            const std::int64_t begin = static_cast<std::int64_t>(next_chunk);
            const std::int64_t end = static_cast<std::int64_t>(round_end);
#pragma omp parallel
            {
                std::unique_ptr<BlockDecoder> worker = decoder.clone();
                Counters local(C);
#pragma omp for schedule(dynamic) nowait
                for (std::int64_t c = begin; c < end; ++c) {
                    run_chunk(code, *worker, partition, sigma2, seed,
                              static_cast<std::uint64_t>(c),
                              chunk_trials(static_cast<std::uint64_t>(c)), local);
                }
#pragma omp critical(uep_mc_merge)
                total.merge(local);
            }
#else
            for (std::uint64_t c = next_chunk; c < round_end; ++c) {
                Counters local(C);
                run_chunk(code, decoder, partition, sigma2, seed, c, chunk_trials(c), local);
                total.merge(local);
            }
#endif
        }
        next_chunk = round_end;
    }

    ErrorProfile profile;
    profile.classes = total.classes;
    profile.total_trials = total.trials;
    profile.message_errors = total.message_errors;
    profile.ci_limited = !all_classes_done(total, stop);
    profile.ebn0_db = snr.ebn0_db;
    profile.sigma2 = sigma2;
    profile.seed = seed;
    profile.code_digest = code.digest();
    return profile;
}

double average_error(const ErrorProfile& profile, const ClassPartition& partition) {
    if (partition.kind == PartitionKind::message_wise) {
        const double M = static_cast<double>(partition.num_messages());
        double avg = 0.0;
        for (std::size_t c = 0; c < partition.class_sizes.size(); ++c) {
            if (profile.classes[c].trials == 0 && profile.total_trials > 0)
                return std::numeric_limits<double>::quiet_NaN();
            avg += (static_cast<double>(partition.class_sizes[c]) / M) * profile.estimate(c);
        }
        return avg;
    }
    return profile.total_trials == 0 ? 0.0
                                     : static_cast<double>(profile.message_errors) /
                                           static_cast<double>(profile.total_trials);
}

namespace {

// Inverse standard normal CDF: Acklam's rational approximation refined with
// one Halley step against erfc.
double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_normal_cdf: p in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement: F(x) - p with F the normal CDF.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

}  // namespace

std::pair<double, double> wilson_interval(std::uint64_t errors, std::uint64_t trials,
                                          double confidence) {
    if (errors > trials) throw std::invalid_argument("wilson_interval: errors > trials");
    if (trials == 0) return {0.0, 1.0};
    const double z = inverse_normal_cdf(0.5 + confidence / 2.0);
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = p + z2 / (2.0 * n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    double lo = (center - half) / denom;
    double hi = (center + half) / denom;
    if (errors == 0) lo = 0.0;
    if (errors == trials) hi = 1.0;
    return {lo, hi};
}

std::vector<std::size_t> pareto_frontier_indices(
    const std::vector<std::pair<double, double>>& points) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
            if (j == i) continue;
            const auto& a = points[j];
            const auto& b = points[i];
            dominated = a.first <= b.first && a.second <= b.second &&
                        (a.first < b.first || a.second < b.second);
        }
        if (!dominated) keep.push_back(i);
    }
    return keep;
}

std::vector<std::pair<double, double>> pareto_frontier(
    const std::vector<std::pair<double, double>>& points) {
    std::vector<std::pair<double, double>> out;
    for (std::size_t i : pareto_frontier_indices(points)) out.push_back(points[i]);
    return out;
}

}  // namespace uep
