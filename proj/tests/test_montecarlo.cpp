#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "uep/baselines.hpp"
#include "uep/montecarlo.hpp"

using namespace uep;

namespace {

Codebook antipodal_code() {
    Codebook cb;
    cb.codewords = Matrix(2, 1);
    cb.codewords(0, 0) = 1.0;
    cb.codewords(1, 0) = -1.0;
    cb.partition = ClassPartition::message_wise({2});
    return cb;
}

double ebn0_for_sigma2(double sigma2, double rate) {
    return 10.0 * std::log10(1.0 / (2.0 * rate * sigma2));
}

bool profiles_identical(const ErrorProfile& a, const ErrorProfile& b) {
    if (a.total_trials != b.total_trials || a.message_errors != b.message_errors ||
        a.ci_limited != b.ci_limited || a.classes.size() != b.classes.size())
        return false;
    for (std::size_t c = 0; c < a.classes.size(); ++c)
        if (a.classes[c].trials != b.classes[c].trials ||
            a.classes[c].errors != b.classes[c].errors)
            return false;
    return true;
}

}  // namespace

TEST_CASE("wilson interval: closed-form check and edge pinning") {
    const auto [lo, hi] = wilson_interval(50, 1000);
    CHECK(lo == doctest::Approx(0.03813026239274881).epsilon(1e-9));
    CHECK(hi == doctest::Approx(0.06531382024425081).epsilon(1e-9));

    const auto zero = wilson_interval(0, 100);
    CHECK(zero.first == 0.0);
    CHECK(zero.second == doctest::Approx(0.03699349820698568).epsilon(1e-9));

    const auto full = wilson_interval(100, 100);
    CHECK(full.second == 1.0);
    CHECK(full.first == doctest::Approx(0.9630065017930143).epsilon(1e-9));

    CHECK(wilson_interval(0, 0) == std::pair<double, double>{0.0, 1.0});
    CHECK_THROWS_AS(wilson_interval(5, 4), std::invalid_argument);

    // Wider confidence, wider interval.
    const auto w99 = wilson_interval(50, 1000, 0.99);
    CHECK(w99.first < lo);
    CHECK(w99.second > hi);
}

TEST_CASE("noiseless estimation reports zero errors and the CI-limited flag") {
    const Codebook cb = antipodal_code();
    MlDecoder decoder(cb);
    StoppingRule stop;
    stop.min_errors_per_class = 100;
    stop.max_trials = 20000;
    const SnrSpec snr{std::numeric_limits<double>::infinity(), 1.0};
    const ErrorProfile p = estimate_profile(cb, decoder, cb.partition, snr, stop, 5);

    CHECK(p.total_trials == 20000);
    CHECK(p.message_errors == 0);
    CHECK(p.classes[0].errors == 0);
    CHECK(p.estimate(0) == 0.0);
    CHECK(p.ci_limited);
    CHECK(p.sigma2 == 0.0);
}

TEST_CASE("antipodal code tracks the analytic oracle at several noise levels") {
    const Codebook cb = antipodal_code();
    StoppingRule stop;
    stop.min_errors_per_class = ~0ULL >> 1;
    stop.max_trials = 1000000;

    for (double sigma2 : {0.1, 0.25, 0.5}) {
        MlDecoder decoder(cb);
        const ErrorProfile p = estimate_profile(
            cb, decoder, cb.partition, {ebn0_for_sigma2(sigma2, 1.0), 1.0}, stop, 31);
        const double expect = oracle::q_function(1.0 / std::sqrt(sigma2));
        const auto [lo, hi] = p.wilson(0);
        CHECK(std::abs(p.estimate(0) - expect) <= 3.0 * (hi - lo) / 2.0);
    }
}

TEST_CASE("per-class counters: message-wise split vs bit-wise totals") {
    Rng rng(6);
    CosetSpec cs;
    cs.class_bits = {2, 2};
    cs.n = 5;
    const Codebook coset = gen_coset_code(cs, rng);
    MlDecoder dec(coset);
    StoppingRule stop;
    stop.min_errors_per_class = 30;
    stop.max_trials = 300000;
    const SnrSpec snr{3.0, coset.rate()};
    const ErrorProfile p = estimate_profile(coset, dec, coset.partition, snr, stop, 7);

    // Message-wise: class trial counts partition the total.
    CHECK(p.classes[0].trials + p.classes[1].trials == p.total_trials);
    CHECK(p.classes[0].trials > 0);
    CHECK(p.classes[1].trials > 0);

    SuperpositionSpec sp;
    sp.k1 = 1;
    sp.k2 = 2;
    sp.n = 5;
    sp.mu = 0.5;
    Rng rng2(8);
    const Codebook sup = gen_superposition_code(sp, rng2);
    MlDecoder dec2(sup);
    const ErrorProfile q =
        estimate_profile(sup, dec2, sup.partition, {3.0, sup.rate()}, stop, 9);
    // Bit-wise: every class sees every trial.
    CHECK(q.classes[0].trials == q.total_trials);
    CHECK(q.classes[1].trials == q.total_trials);
}

TEST_CASE("progressive estimation is monotone across classes by construction") {
    SuperpositionSpec sp;
    sp.k1 = 2;
    sp.k2 = 2;
    sp.n = 6;
    sp.mu = 0.6;
    Rng rng(10);
    Codebook code = gen_superposition_code(sp, rng);
    code.partition = ClassPartition::progressive({2, 2});

    MlDecoder dec(code);
    StoppingRule stop;
    stop.min_errors_per_class = 50;
    stop.max_trials = 200000;
    const ErrorProfile p =
        estimate_profile(code, dec, code.partition, {2.0, code.rate()}, stop, 11);
    CHECK(p.classes[1].errors >= p.classes[0].errors);
    CHECK(p.estimate(1) >= p.estimate(0));
}

TEST_CASE("estimation is deterministic and identical across execution paths") {
    Rng rng(12);
    CosetSpec cs;
    cs.class_bits = {3, 3};
    cs.n = 7;
    const Codebook code = gen_coset_code(cs, rng);
    MlDecoder dec(code);
    StoppingRule stop;
    stop.min_errors_per_class = 100;
    stop.max_trials = 500000;
    const SnrSpec snr{4.0, code.rate()};

    const ErrorProfile serial =
        estimate_profile(code, dec, code.partition, snr, stop, 13, Execution::serial_reference);
    const ErrorProfile parallel =
        estimate_profile(code, dec, code.partition, snr, stop, 13, Execution::openmp);
    const ErrorProfile parallel2 =
        estimate_profile(code, dec, code.partition, snr, stop, 13, Execution::openmp);

    CHECK(profiles_identical(serial, parallel));
    CHECK(profiles_identical(parallel, parallel2));

    const ErrorProfile other =
        estimate_profile(code, dec, code.partition, snr, stop, 14, Execution::openmp);
    CHECK(!profiles_identical(serial, other));
}

TEST_CASE("estimator is unbiased against the analytic oracle across seeds") {
    const Codebook cb = antipodal_code();
    StoppingRule stop;
    stop.min_errors_per_class = ~0ULL >> 1;
    stop.max_trials = 100000;
    const double sigma2 = 0.25;
    const double expect = oracle::q_function(2.0);
    const SnrSpec snr{ebn0_for_sigma2(sigma2, 1.0), 1.0};

    int within = 0;
    for (int rep = 0; rep < 100; ++rep) {
        MlDecoder dec(cb);
        const ErrorProfile p =
            estimate_profile(cb, dec, cb.partition, snr, stop, 40000 + rep);
        const auto [lo, hi] = p.wilson(0);
        if (std::abs(p.estimate(0) - expect) <= 3.0 * (hi - lo) / 2.0) ++within;
    }
    CHECK(within >= 99);
}

TEST_CASE("average error combines class estimates with their priors") {
    ErrorProfile p;
    p.classes = {{1000, 100}, {1000, 300}};
    p.total_trials = 2000;
    p.message_errors = 400;
    const ClassPartition part = ClassPartition::message_wise({8, 8});
    CHECK(average_error(p, part) == doctest::Approx(0.2).epsilon(1e-15));

    ErrorProfile zero;
    zero.classes = {{500, 0}, {500, 0}};
    zero.total_trials = 1000;
    CHECK(average_error(zero, part) == 0.0);

    ErrorProfile single;
    single.classes = {{400, 40}};
    single.total_trials = 400;
    single.message_errors = 40;
    CHECK(average_error(single, ClassPartition::message_wise({4})) ==
          doctest::Approx(0.1).epsilon(1e-15));

    // Bit-wise: overall message error rate.
    ErrorProfile bw;
    bw.classes = {{1000, 10}, {1000, 50}};
    bw.total_trials = 1000;
    bw.message_errors = 55;
    CHECK(average_error(bw, ClassPartition::bit_wise({1, 1})) ==
          doctest::Approx(0.055).epsilon(1e-15));
}

TEST_CASE("pareto frontier: dominance pruning with stable order") {
    using P = std::pair<double, double>;
    const std::vector<P> pts{{0.1, 0.2}, {0.2, 0.1}, {0.15, 0.15}, {0.2, 0.2}};
    const auto front = pareto_frontier(pts);
    CHECK(front == std::vector<P>{{0.1, 0.2}, {0.2, 0.1}, {0.15, 0.15}});

    CHECK(pareto_frontier({{0.3, 0.4}}) == std::vector<P>{{0.3, 0.4}});

    // Duplicates of a surviving point are all retained.
    const auto dup = pareto_frontier({{0.1, 0.1}, {0.1, 0.1}, {0.2, 0.05}});
    CHECK(dup == std::vector<P>{{0.1, 0.1}, {0.1, 0.1}, {0.2, 0.05}});

    // Idempotence.
    CHECK(pareto_frontier(front) == front);
}
