// Times the Monte Carlo error-rate estimator: serial reference vs the
// OpenMP kernel at several thread counts, on a fixed coset-code + ML-decoder
// workload. The two paths must produce identical profiles; the checksum
// column makes a silent divergence visible.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "uep/baselines.hpp"
#include "uep/montecarlo.hpp"

using namespace uep;

namespace {

double run_timed(const Codebook& code, const ClassPartition& partition, const SnrSpec& snr,
                 const StoppingRule& stop, Execution exec, ErrorProfile& profile) {
    MlDecoder decoder(code);
    const auto t0 = std::chrono::steady_clock::now();
    profile = estimate_profile(code, decoder, partition, snr, stop, 7, exec);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

std::uint64_t checksum(const ErrorProfile& p) {
    std::uint64_t h = p.total_trials * 1000003ULL + p.message_errors;
    for (const ClassCount& c : p.classes) h = h * 1000003ULL + c.trials * 31ULL + c.errors;
    return h;
}

}  // namespace

int main(int argc, char** argv) {
    std::uint64_t trials = 2'000'000;
    if (argc > 1) trials = std::strtoull(argv[1], nullptr, 10);

    Rng gen(42);
    CosetSpec spec;
    spec.class_bits = {3, 3};
    spec.n = 7;
    Codebook code = gen_coset_code(spec, gen);

    const SnrSpec snr{5.0, code.rate()};
    StoppingRule stop;
    stop.min_errors_per_class = ~0ULL >> 1;  // never stop early; fixed workload
    stop.max_trials = trials;

    std::printf("workload: %llu trials, M=%zu n=%zu, ML decoding at %.1f dB\n",
                static_cast<unsigned long long>(trials), code.message_count(),
                code.block_length(), snr.ebn0_db);

    ErrorProfile ref;
    const double t_serial = run_timed(code, code.partition, snr, stop, Execution::serial_reference,
                                      ref);
    std::printf("%-22s %8.3fs  %12.0f trials/s  checksum %016llx\n", "serial reference",
                t_serial, trials / t_serial, static_cast<unsigned long long>(checksum(ref)));

#ifdef _OPENMP
    const int max_threads = omp_get_max_threads();
    for (int t = 1; t <= max_threads; t *= 2) {
        omp_set_num_threads(t);
        ErrorProfile p;
        const double dt = run_timed(code, code.partition, snr, stop, Execution::openmp, p);
        std::printf("openmp %2d thread(s)    %8.3fs  %12.0f trials/s  checksum %016llx%s\n", t,
                    dt, trials / dt, static_cast<unsigned long long>(checksum(p)),
                    checksum(p) == checksum(ref) ? "" : "  MISMATCH");
    }
#else
    std::printf("built without OpenMP; only the serial path is available\n");
#endif
    return 0;
}
