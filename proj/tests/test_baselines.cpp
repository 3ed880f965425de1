#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "uep/baselines.hpp"

using namespace uep;

namespace {

// Reconstructs the affine GF(2) structure of one coset from its rows and
// re-derives every codeword independently: bits(s) = s G + v with
// v = bits(0) and G rows recovered from the single-bit messages.
void check_coset_class_against_gf2(const Codebook& cb, std::size_t base, unsigned kc,
                                   std::size_t n) {
    auto bits_of_row = [&](std::size_t m) {
        std::vector<int> bits(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double x = cb.codewords(m, j);
            REQUIRE((x == 1.0 || x == -1.0));
            bits[j] = x < 0.0 ? 1 : 0;
        }
        return bits;
    };

    const std::vector<int> v = bits_of_row(base);
    std::vector<std::vector<int>> G;
    for (unsigned r = 0; r < kc; ++r) {
        // Message with a single one in class-local position r (big-endian).
        const std::size_t local = std::size_t{1} << (kc - 1 - r);
        std::vector<int> row = bits_of_row(base + local);
        for (std::size_t j = 0; j < n; ++j) row[j] ^= v[j];
        G.push_back(row);
    }

    for (std::size_t local = 0; local < (std::size_t{1} << kc); ++local) {
        std::vector<int> expect = v;
        for (unsigned r = 0; r < kc; ++r)
            if ((local >> (kc - 1 - r)) & 1u)
                for (std::size_t j = 0; j < n; ++j) expect[j] ^= G[r][j];
        CHECK(bits_of_row(base + local) == expect);
    }
}

}  // namespace

TEST_CASE("coset codes: BPSK rows with exact energy and affine GF(2) structure") {
    CosetSpec spec;
    spec.class_bits = {3, 3};
    spec.n = 7;
    Rng rng(1);
    const Codebook cb = gen_coset_code(spec, rng);

    CHECK(cb.codewords.rows == 16);  // 8 + 8 messages
    CHECK(cb.codewords.cols == 7);
    CHECK(cb.partition.kind == PartitionKind::message_wise);
    CHECK(cb.partition.class_sizes == std::vector<std::size_t>{8, 8});
    CHECK(cb.provenance == Provenance::coset);

    for (std::size_t m = 0; m < 16; ++m) {
        double e = 0.0;
        for (std::size_t j = 0; j < 7; ++j) {
            const double x = cb.codewords(m, j);
            CHECK((x == 1.0 || x == -1.0));
            e += x * x;
        }
        CHECK(e == 7.0);  // exact for BPSK symbols
    }

    check_coset_class_against_gf2(cb, 0, 3, 7);
    check_coset_class_against_gf2(cb, 8, 3, 7);

    // Unequal class sizes are allowed.
    CosetSpec uneven;
    uneven.class_bits = {2, 4};
    uneven.n = 5;
    Rng rng2(2);
    const Codebook cb2 = gen_coset_code(uneven, rng2);
    CHECK(cb2.codewords.rows == 4 + 16);
    check_coset_class_against_gf2(cb2, 0, 2, 5);
    check_coset_class_against_gf2(cb2, 4, 4, 5);
}

TEST_CASE("superposition codes: shape, partition, and energy normalization") {
    SuperpositionSpec spec;
    spec.k1 = 1;
    spec.k2 = 3;
    spec.n = 7;
    spec.mu = 0.5;
    Rng rng(3);
    const Codebook cb = gen_superposition_code(spec, rng);

    CHECK(cb.codewords.rows == 16);  // 2 centers x 8 offsets
    CHECK(cb.codewords.cols == 7);
    CHECK(cb.partition.kind == PartitionKind::bit_wise);
    CHECK(cb.partition.bit_lengths == std::vector<unsigned>{1, 3});
    CHECK(cb.note.find("per_codeword") != std::string::npos);

    for (std::size_t m = 0; m < 16; ++m) {
        double e = 0.0;
        for (std::size_t j = 0; j < 7; ++j) e += cb.codewords(m, j) * cb.codewords(m, j);
        CHECK(std::abs(e - 7.0) <= 1e-9);
    }
}

TEST_CASE("superposition codebook_average mode preserves the offset structure") {
    SuperpositionSpec spec;
    spec.k1 = 2;
    spec.k2 = 2;
    spec.n = 6;
    spec.mu = 0.4;
    spec.normalization = SuperpositionSpec::Normalization::codebook_average;
    Rng rng(4);
    const Codebook cb = gen_superposition_code(spec, rng);

    // Mean energy equals n under the global scaling.
    double total = 0.0;
    for (double x : cb.codewords.data) total += x * x;
    CHECK(std::abs(total / 16.0 - 6.0) <= 1e-9);

    // Within-cloud differences depend only on the offsets: compare across two
    // clouds sharing the same offset pair.
    for (std::size_t cloud = 1; cloud < 4; ++cloud) {
        for (std::size_t oa = 0; oa < 4; ++oa) {
            for (std::size_t ob = 0; ob < 4; ++ob) {
                for (std::size_t j = 0; j < 6; ++j) {
                    const double d0 = cb.codewords(0 * 4 + oa, j) - cb.codewords(0 * 4 + ob, j);
                    const double dc =
                        cb.codewords(cloud * 4 + oa, j) - cb.codewords(cloud * 4 + ob, j);
                    CHECK(d0 == doctest::Approx(dc).epsilon(1e-9));
                }
            }
        }
    }
}

TEST_CASE("superposition mu near 1 collapses clouds: class 2 drops to chance") {
    SuperpositionSpec spec;
    spec.k1 = 1;
    spec.k2 = 3;
    spec.n = 7;
    spec.mu = 1.0 - 1e-9;
    Rng rng(5);
    const Codebook cb = gen_superposition_code(spec, rng);

    MlDecoder decoder(cb);
    StoppingRule stop;
    stop.min_errors_per_class = 200;
    stop.max_trials = 400000;
    // Noise far above the within-cloud spread but far below the cloud
    // separation: sigma2 ~ 1e-2.
    const double ebn0_db = 10.0 * std::log10(1.0 / (2.0 * cb.rate() * 1e-2));
    const ErrorProfile profile = estimate_profile(cb, decoder, cb.partition,
                                                  {ebn0_db, cb.rate()}, stop, 99);

    CHECK(profile.estimate(0) < 0.05);             // centers still separable
    CHECK(profile.estimate(1) > 0.70);             // offsets indistinguishable
    CHECK(profile.estimate(1) < 0.95);             // ~ 1 - 2^-k2
}

TEST_CASE("ml_decode: hand-computed distances and tie handling") {
    Codebook cb;
    cb.codewords = Matrix(2, 2);
    cb.codewords(0, 0) = 1.0;
    cb.codewords(0, 1) = 1.0;
    cb.codewords(1, 0) = -1.0;
    cb.codewords(1, 1) = -1.0;
    cb.partition = ClassPartition::message_wise({1, 1});

    // Squared distances 1.22 vs 4.42.
    CHECK(ml_decode(cb, {0.9, -0.1}) == 0);
    CHECK(ml_decode(cb, {-0.9, -1.1}) == 1);
    CHECK(ml_decode(cb, {1.0, 1.0}) == 0);  // exact codeword

    // Duplicate rows tie toward the lowest index.
    Codebook dup;
    dup.codewords = Matrix(3, 1);
    dup.codewords(0, 0) = 1.0;
    dup.codewords(1, 0) = -1.0;
    dup.codewords(2, 0) = -1.0;
    dup.partition = ClassPartition::message_wise({3});
    CHECK(ml_decode(dup, {-0.4}) == 1);
}

TEST_CASE("antipodal code matches the analytic error probability") {
    Codebook cb;
    cb.codewords = Matrix(2, 1);
    cb.codewords(0, 0) = 1.0;
    cb.codewords(1, 0) = -1.0;
    cb.partition = ClassPartition::message_wise({2});

    const double sigma2 = 0.25;
    const double rate = 1.0;  // k=1, n=1
    const double ebn0_db = 10.0 * std::log10(1.0 / (2.0 * rate * sigma2));

    MlDecoder decoder(cb);
    StoppingRule stop;
    stop.min_errors_per_class = ~0ULL >> 1;
    stop.max_trials = 1000000;
    const ErrorProfile profile =
        estimate_profile(cb, decoder, cb.partition, {ebn0_db, rate}, stop, 2024);

    CHECK(profile.total_trials == 1000000);
    const double expect = oracle::q_function(1.0 / std::sqrt(sigma2));  // Q(2)
    const auto [lo, hi] = profile.wilson(0);
    const double half = (hi - lo) / 2.0;
    CHECK(std::abs(profile.estimate(0) - expect) <= 3.0 * half);
}

TEST_CASE("random-ensemble sampling is deterministic and ordered") {
    EnsembleSpec spec;
    spec.kind = EnsembleSpec::Kind::coset;
    spec.coset.class_bits = {3, 3};
    spec.coset.n = 7;

    StoppingRule stop;
    stop.min_errors_per_class = 50;
    stop.max_trials = 200000;
    const SnrSpec snr{5.0, std::log2(16.0) / 7.0};

    const auto a = sample_random_codes(spec, 24, snr, stop, 77);
    const auto b = sample_random_codes(spec, 24, snr, stop, 77);
    REQUIRE(a.size() == 24);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].index == i);
        CHECK(a[i].profile.total_trials == b[i].profile.total_trials);
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(a[i].profile.classes[c].errors == b[i].profile.classes[c].errors);
            CHECK(a[i].profile.classes[c].trials == b[i].profile.classes[c].trials);
        }
        CHECK(a[i].code.digest() == b[i].code.digest());
    }

    // Different codes across indices.
    CHECK(a[0].code.digest() != a[1].code.digest());

    EnsembleSpec sp;
    sp.kind = EnsembleSpec::Kind::superposition;
    sp.superposition.k1 = 1;
    sp.superposition.k2 = 3;
    sp.superposition.n = 7;
    sp.superposition.mu = 0.5;
    const auto s = sample_random_codes(sp, 5, snr, stop, 78);
    CHECK(s.size() == 5);
    for (const auto& sc : s) CHECK(sc.profile.classes.size() == 2);
}
