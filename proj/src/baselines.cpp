#include "uep/baselines.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace uep {

Codebook gen_coset_code(const CosetSpec& spec, Rng& rng) {
    if (spec.class_bits.empty()) throw std::invalid_argument("coset: need at least one class");
    const std::size_t n = spec.n;
    std::vector<std::size_t> sizes;
    std::size_t M = 0;
    for (unsigned k : spec.class_bits) {
        sizes.push_back(std::size_t{1} << k);
        M += sizes.back();
    }

    Codebook cb;
    cb.codewords = Matrix(M, n);
    cb.partition = ClassPartition::message_wise(sizes);
    cb.provenance = Provenance::coset;

    // Draw order per class: G_i row-major, then v_i.
    std::size_t base = 0;
    for (std::size_t c = 0; c < spec.class_bits.size(); ++c) {
        const unsigned kc = spec.class_bits[c];
        std::vector<std::uint8_t> G(kc * n), v(n);
        for (auto& bit : G) bit = static_cast<std::uint8_t>(rng.below(2));
        for (auto& bit : v) bit = static_cast<std::uint8_t>(rng.below(2));

        for (std::size_t local = 0; local < (std::size_t{1} << kc); ++local) {
            double* row = cb.codewords.row_ptr(base + local);
            for (std::size_t j = 0; j < n; ++j) {
                unsigned bit = v[j];
                for (unsigned r = 0; r < kc; ++r) {
                    const unsigned s_r = (local >> (kc - 1 - r)) & 1u;  // big-endian local bits
                    bit ^= s_r & G[r * n + j];
                }
                row[j] = bit ? -1.0 : 1.0;
            }
        }
        base += std::size_t{1} << kc;
    }
    return cb;
}

Codebook gen_superposition_code(const SuperpositionSpec& spec, Rng& rng) {
    if (!(spec.mu > 0.0 && spec.mu < 1.0))
        throw std::invalid_argument("superposition: mu must be in (0,1)");
    const std::size_t n = spec.n;
    const std::size_t num_centers = std::size_t{1} << spec.k1;
    const std::size_t num_offsets = std::size_t{1} << spec.k2;
    const std::size_t M = num_centers * num_offsets;
    const double s1 = std::sqrt(spec.mu);
    const double s2 = std::sqrt(1.0 - spec.mu);

    Matrix centers(num_centers, n), offsets(num_offsets, n);
    for (double& x : centers.data) x = s1 * rng.gaussian();
    for (double& x : offsets.data) x = s2 * rng.gaussian();

    Codebook cb;
    cb.codewords = Matrix(M, n);
    cb.partition = ClassPartition::bit_wise({spec.k1, spec.k2});
    cb.provenance = Provenance::superposition;
    {
        char note[64];
        std::snprintf(note, sizeof note, "mu=%.17g norm=%s", spec.mu,
                      spec.normalization == SuperpositionSpec::Normalization::per_codeword
                          ? "per_codeword"
                          : "codebook_average");
        cb.note = note;
    }

    auto build_rows = [&] {
        for (std::size_t m = 0; m < M; ++m) {
            const std::size_t c = m >> spec.k2;           // first k1 bits
            const std::size_t o = m & (num_offsets - 1);  // last k2 bits
            double* row = cb.codewords.row_ptr(m);
            for (std::size_t j = 0; j < n; ++j) row[j] = centers(c, j) + offsets(o, j);
        }
    };

    // A row that sums to (near) zero cannot be normalized; redraw its
    // constituents and rebuild every row they touch.
    for (int attempt = 0;; ++attempt) {
        build_rows();
        bool degenerate = false;
        for (std::size_t m = 0; m < M; ++m) {
            const double* row = cb.codewords.row_ptr(m);
            double norm2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) norm2 += row[j] * row[j];
            if (norm2 < 1e-24) {
                degenerate = true;
                const std::size_t c = m >> spec.k2;
                const std::size_t o = m & (num_offsets - 1);
                for (std::size_t j = 0; j < n; ++j) centers(c, j) = s1 * rng.gaussian();
                for (std::size_t j = 0; j < n; ++j) offsets(o, j) = s2 * rng.gaussian();
            }
        }
        if (!degenerate) break;
        if (attempt >= 100) throw std::runtime_error("superposition: persistent degenerate row");
    }

    if (spec.normalization == SuperpositionSpec::Normalization::per_codeword) {
        for (std::size_t m = 0; m < M; ++m) {
            double* row = cb.codewords.row_ptr(m);
            double norm2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) norm2 += row[j] * row[j];
            const double scale = std::sqrt(static_cast<double>(n) / norm2);
            for (std::size_t j = 0; j < n; ++j) row[j] *= scale;
        }
    } else {
        double total = 0.0;
        for (double x : cb.codewords.data) total += x * x;
        const double scale =
            std::sqrt(static_cast<double>(M) * static_cast<double>(n) / total);
        for (double& x : cb.codewords.data) x *= scale;
    }
    return cb;
}

std::size_t ml_decode(const Codebook& code, const Vec& y) {
    if (y.size() != code.block_length())
        throw std::invalid_argument("ml_decode: received word width mismatch");
    const std::size_t M = code.message_count();
    const std::size_t n = code.block_length();
    std::size_t best = 0;
    double best_d = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        const double* row = code.codewords.row_ptr(m);
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double diff = y[j] - row[j];
            d += diff * diff;
        }
        if (m == 0 || d < best_d) {
            best = m;
            best_d = d;
        }
    }
    return best;
}

std::vector<SampledCode> sample_random_codes(const EnsembleSpec& spec, std::size_t count,
                                             const SnrSpec& snr, const StoppingRule& stop,
                                             std::uint64_t seed, Execution exec) {
    if (count < 1) throw std::invalid_argument("sample_random_codes: count must be >= 1");
    std::vector<SampledCode> out(count);

    auto run_one = [&](std::size_t i) {
        Rng rng(derive_seed(seed, "code", i));
        Codebook code = spec.kind == EnsembleSpec::Kind::coset
                            ? gen_coset_code(spec.coset, rng)
                            : gen_superposition_code(spec.superposition, rng);
        MlDecoder decoder(code);
        // Distinct codes already run in parallel here; keep each evaluation on
        // the serial path.
        ErrorProfile profile =
            estimate_profile(code, decoder, code.partition, snr, stop,
                             derive_seed(seed, "code-eval", i), Execution::serial_reference);
        out[i] = SampledCode{i, std::move(code), std::move(profile)};
    };

    if (exec == Execution::openmp) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i)
            run_one(static_cast<std::size_t>(i));
#else
        for (std::size_t i = 0; i < count; ++i) run_one(i);
#endif
    } else {
        for (std::size_t i = 0; i < count; ++i) run_one(i);
    }
    return out;
}

}  // namespace uep
