#pragma once

#include <cstdint>
#include <vector>

#include "uep/codebook.hpp"
#include "uep/montecarlo.hpp"
#include "uep/rng.hpp"

namespace uep {

// Union of random coset codes: one coset per message class. Class i draws a
// uniform binary k_i x n generator G_i and length-n shift v_i; the message
// with class-local bits s maps to BPSK(s G_i + v_i mod 2) with 0 -> +1 and
// 1 -> -1. Rows have energy exactly n.
struct CosetSpec {
    std::vector<unsigned> class_bits;  // k_i; class i holds 2^{k_i} messages
    std::size_t n = 7;
};

Codebook gen_coset_code(const CosetSpec& spec, Rng& rng);

// Superposition of random Gaussian codes: 2^{k1} cloud centers with per-symbol
// variance mu and 2^{k2} offsets with variance 1-mu; message m maps to
// center(s1(m)) + offset(s2(m)), then normalized. Class 1 rides on the
// centers (higher protection).
struct SuperpositionSpec {
    unsigned k1 = 1;
    unsigned k2 = 3;
    std::size_t n = 7;
    double mu = 0.5;
    enum class Normalization { per_codeword, codebook_average };
    Normalization normalization = Normalization::per_codeword;
};

Codebook gen_superposition_code(const SuperpositionSpec& spec, Rng& rng);

// Exhaustive nearest-neighbor search: argmin_m ||y - x_m||^2, ties to the
// lowest index. This is the ML decoder for the AWGN channel.
std::size_t ml_decode(const Codebook& code, const Vec& y);

class MlDecoder final : public BlockDecoder {
public:
    explicit MlDecoder(const Codebook& code) : code_(code) {}
    std::size_t decode(const Vec& y) override { return ml_decode(code_, y); }
    std::unique_ptr<BlockDecoder> clone() const override {
        return std::make_unique<MlDecoder>(code_);
    }

private:
    Codebook code_;
};

// Generator spec for random-ensemble scatter runs.
struct EnsembleSpec {
    enum class Kind { coset, superposition };
    Kind kind = Kind::coset;
    CosetSpec coset;
    SuperpositionSpec superposition;
};

struct SampledCode {
    std::size_t index = 0;
    Codebook code;
    ErrorProfile profile;
};

// Generates `count` random codes with seeds derived from (seed, "code", i),
// evaluates each with the ML decoder at the given operating point, and
// returns the profiles ordered by code index. Code generation and evaluation
// of distinct codes run in parallel.
std::vector<SampledCode> sample_random_codes(const EnsembleSpec& spec, std::size_t count,
                                             const SnrSpec& snr, const StoppingRule& stop,
                                             std::uint64_t seed,
                                             Execution exec = Execution::openmp);

}  // namespace uep
