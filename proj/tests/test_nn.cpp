#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "uep/autoencoder.hpp"
#include "uep/nn.hpp"

using namespace uep;

namespace {

DenseLayerParams make_layer(std::size_t out_w, std::size_t in_w, Activation act) {
    DenseLayerParams layer;
    layer.weights = Matrix(out_w, in_w);
    layer.biases = Vec(out_w, 0.0);
    layer.activation = act;
    return layer;
}

// Init that avoids the z = 0 degeneracy (all hidden ReLUs dead for the probe
// message), where the sphere projection has no linearization.
MlpParams init_at_differentiable_point(const TrainConfig& tc, std::uint64_t seed, std::size_t m) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        Rng rng(seed + 10000ULL * static_cast<std::uint64_t>(attempt));
        MlpParams params = init_model(tc, rng);
        ForwardTrace trace;
        encode_forward(params, m, trace);
        if (std::sqrt(squared_norm(trace.bottleneck())) >= 1e-3) return params;
    }
    REQUIRE(false);
    return {};
}

TrainConfig small_config(PartitionKind kind, unsigned k, std::size_t n, std::size_t hidden,
                         const std::vector<double>& lambdas) {
    TrainConfig tc;
    switch (kind) {
        case PartitionKind::message_wise: {
            const std::size_t M = std::size_t{1} << k;
            tc.partition = ClassPartition::message_wise(
                lambdas.size() == 1 ? std::vector<std::size_t>{M}
                                    : std::vector<std::size_t>{M / 2, M - M / 2});
            break;
        }
        case PartitionKind::bit_wise:
            tc.partition = ClassPartition::bit_wise({k / 2, k - k / 2});
            break;
        case PartitionKind::progressive_bit_wise:
            tc.partition = ClassPartition::progressive({k / 2, k - k / 2});
            break;
    }
    tc.n = n;
    tc.weights.lambdas = lambdas;
    tc.encoder_hidden = hidden ? std::vector<std::size_t>{hidden} : std::vector<std::size_t>{};
    tc.decoder_hidden = hidden ? std::vector<std::size_t>{hidden} : std::vector<std::size_t>{};
    return tc;
}

}  // namespace

TEST_CASE("dense_forward identity and hand-checked affine maps") {
    DenseLayerParams relu = make_layer(2, 2, Activation::relu);
    relu.weights(0, 0) = 1.0;
    relu.weights(1, 1) = 1.0;
    CHECK(dense_forward(relu, {1.0, -1.0}) == Vec{1.0, 0.0});

    DenseLayerParams lin = make_layer(2, 2, Activation::linear);
    lin.weights(0, 0) = 1.0;
    lin.weights(1, 1) = 1.0;
    CHECK(dense_forward(lin, {3.0, 4.0}) == Vec{3.0, 4.0});

    // W=[[1,2],[0,1]], b=(1,0), input (1,1): rows give 1+2+1=4 and 0+1+0=1.
    DenseLayerParams aff = make_layer(2, 2, Activation::linear);
    aff.weights(0, 0) = 1.0;
    aff.weights(0, 1) = 2.0;
    aff.weights(1, 1) = 1.0;
    aff.biases = {1.0, 0.0};
    CHECK(dense_forward(aff, {1.0, 1.0}) == Vec{4.0, 1.0});

    CHECK_THROWS_AS(dense_forward(aff, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("softmax: uniform, closed form, shift invariance, unit mass") {
    CHECK(softmax({0.0, 0.0, 0.0, 0.0}) == Vec{0.25, 0.25, 0.25, 0.25});

    const Vec two = softmax({std::log(1.0), std::log(3.0)});
    CHECK(two[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(two[1] == doctest::Approx(0.75).epsilon(1e-12));

    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    for (int rep = 0; rep < 200; ++rep) {
        Vec logits(8);
        for (double& v : logits) v = u(gen);
        const Vec a = softmax(logits);
        double mass = 0.0;
        for (double v : a) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
            mass += v;
        }
        CHECK(std::abs(mass - 1.0) <= 1e-12);

        const double shift = u(gen);
        Vec shifted = logits;
        for (double& v : shifted) v += shift;
        const Vec b = softmax(shifted);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    }
}

TEST_CASE("energy_normalize: forced values, idempotence, sphere invariant") {
    const Vec x = energy_normalize({3.0, 4.0}, 2);
    CHECK(x[0] == doctest::Approx(0.8485281374238571).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(1.1313708498984760).epsilon(1e-14));
    CHECK(std::abs(squared_norm(x) - 2.0) <= 1e-12);

    // Already on the sphere: unchanged to machine precision.
    const Vec again = energy_normalize(x, 2);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(again[i] == doctest::Approx(x[i]).epsilon(1e-15));

    Vec e1(7, 0.0);
    e1[0] = 1.0;
    const Vec y = energy_normalize(e1, 7);
    CHECK(y[0] == doctest::Approx(2.6457513110645907).epsilon(1e-14));
    for (std::size_t i = 1; i < 7; ++i) CHECK(y[i] == 0.0);

    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t n = 1 + static_cast<std::size_t>(gen() % 12);
        Vec z(n);
        for (double& v : z) v = u(gen);
        const double scale = std::pow(10.0, u(gen) * 3.0);
        for (double& v : z) v *= scale;
        if (std::sqrt(squared_norm(z)) < 1e-6) continue;
        CHECK(std::abs(squared_norm(energy_normalize(z, n)) - static_cast<double>(n)) <= 1e-9);
    }

    // Below the floor: still finite.
    const Vec tiny = energy_normalize({1e-300, 0.0}, 2);
    CHECK(all_finite(tiny));

    CHECK_THROWS_AS(energy_normalize({1.0, 2.0}, 3), std::invalid_argument);
}

TEST_CASE("normalization is invariant along the radial direction") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        Vec z(5);
        for (double& v : z) v = u(gen) + 2.0;
        const double eps = 1e-6;
        Vec zp = z, zm = z;
        for (std::size_t i = 0; i < z.size(); ++i) {
            zp[i] = z[i] * (1.0 + eps);
            zm[i] = z[i] * (1.0 - eps);
        }
        const Vec xp = energy_normalize(zp, 5);
        const Vec xm = energy_normalize(zm, 5);
        for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(xp[i] - xm[i]) <= 1e-9);
    }
}

TEST_CASE("standard cross-entropy logit gradient is b - u") {
    const std::size_t M = 8;
    const ClassPartition part = ClassPartition::message_wise({M});
    const LossWeights w{{1.0}};
    std::mt19937_64 gen(4);
    const Vec b = testutil::random_simplex_point(gen, M);
    const std::size_t m = 5;
    const Vec g =
        compound_loss_logit_gradient(build_onehot(m, M), w, part, BitwiseLossForm::literal, b);
    for (std::size_t i = 0; i < M; ++i) {
        const double expect = b[i] - (i == m ? 1.0 : 0.0);
        CHECK(g[i] == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("zero-weight class contributes zero loss and zero gradient") {
    TrainConfig tc = small_config(PartitionKind::message_wise, 3, 4, 6, {1.0, 0.0});
    Rng rng(7);
    const MlpParams params = init_model(tc, rng);
    const Vec noise(tc.n, 0.25);

    for (std::size_t m = 4; m < 8; ++m) {  // class 2 block
        const double err = gradient_check(params, tc.partition, tc.weights,
                                          BitwiseLossForm::literal, m, noise);
        CHECK(err == 0.0);  // analytic and numeric both identically zero
    }
}

TEST_CASE("adam: zero gradient is the identity; constant gradient steps by alpha") {
    TrainConfig tc = small_config(PartitionKind::message_wise, 2, 2, 3, {1.0});
    Rng rng(8);
    MlpParams params = init_model(tc, rng);
    const MlpParams before = params;
    AdamState state = init_adam(tc, params);
    adam_step(state, params, zero_like(params));
    for (std::size_t l = 0; l < params.encoder.size(); ++l)
        CHECK(params.encoder[l].weights.data == before.encoder[l].weights.data);
    CHECK(state.step_count == 1);

    // Single scalar parameter, grad 1: bias-corrected m/sqrt(v) is exactly 1 at
    // every step, so each update is ~alpha.
    MlpParams scalar;
    scalar.encoder.push_back(make_layer(1, 1, Activation::linear));
    scalar.decoder.push_back(make_layer(1, 1, Activation::softmax));
    scalar.encoder[0].weights(0, 0) = 1.0;
    AdamState s2 = make_adam_state(scalar, AdamHyper{});
    MlpParams g = zero_like(scalar);
    g.encoder[0].weights(0, 0) = 1.0;

    adam_step(s2, scalar, g);
    const double after1 = scalar.encoder[0].weights(0, 0);
    CHECK(std::abs((1.0 - after1) - 0.001) <= 1e-9);

    adam_step(s2, scalar, g);
    const double after2 = scalar.encoder[0].weights(0, 0);
    CHECK(std::abs((after1 - after2) - 0.001) <= 1e-9);
}

TEST_CASE("gradient check: architecture of the main experiments") {
    TrainConfig tc;
    tc.partition = ClassPartition::message_wise({8, 8});
    tc.n = 7;
    tc.weights.lambdas = {0.3, 0.7};
    tc.encoder_hidden = {16};
    tc.decoder_hidden = {16};
    Rng rng(9);
    const MlpParams params = init_model(tc, rng);
    Rng noise_rng(10);
    Vec noise(7);
    for (double& v : noise) v = 0.66 * noise_rng.gaussian();
    const double err =
        gradient_check(params, tc.partition, tc.weights, BitwiseLossForm::literal, 11, noise);
    CHECK(err < 1e-5);
}

TEST_CASE("gradient check: linear single-layer model is near machine precision") {
    TrainConfig tc = small_config(PartitionKind::message_wise, 2, 2, 0, {1.0});
    Rng rng(11);
    const MlpParams params = init_model(tc, rng);
    const Vec noise = {0.1, -0.2};
    const double err =
        gradient_check(params, tc.partition, tc.weights, BitwiseLossForm::literal, 2, noise);
    CHECK(err < 1e-7);
}

TEST_CASE("gradient check property: all loss modes over random configurations") {
    std::mt19937_64 gen(12);
    int checked = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const unsigned k = 2 + static_cast<unsigned>(gen() % 3);
        const std::size_t n = 2 + static_cast<std::size_t>(gen() % 5);
        const std::size_t hidden = 3 + static_cast<std::size_t>(gen() % 10);
        const std::size_t M = std::size_t{1} << k;

        std::uniform_real_distribution<double> lam(0.1, 0.9);
        const double l1 = lam(gen);
        const std::vector<double> lambdas{l1, 1.0 - l1};

        TrainConfig tc;
        BitwiseLossForm form = BitwiseLossForm::literal;
        switch (rep % 4) {
            case 0:
                tc = small_config(PartitionKind::message_wise, k, n, hidden, {1.0});
                break;
            case 1:
                tc = small_config(PartitionKind::message_wise, k, n, hidden, lambdas);
                break;
            case 2:
                tc = small_config(PartitionKind::bit_wise, k, n, hidden, lambdas);
                if (rep % 8 == 2) form = BitwiseLossForm::class_mass;
                break;
            default:
                tc = small_config(PartitionKind::progressive_bit_wise, k, n, hidden, lambdas);
                break;
        }

        const std::size_t m = gen() % M;
        const MlpParams params = init_at_differentiable_point(tc, 1000 + rep, m);
        Rng noise_rng(5000 + rep);
        Vec noise(n);
        for (double& v : noise) v = 0.5 * noise_rng.gaussian();

        const double err = gradient_check(params, tc.partition, tc.weights, form, m, noise);
        CHECK(err <= 1e-4);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("forward and backward stay finite for large bounded inputs") {
    TrainConfig tc = small_config(PartitionKind::message_wise, 3, 4, 8, {1.0});
    Rng rng(13);
    MlpParams params = init_model(tc, rng);
    for (auto half : {&MlpParams::encoder, &MlpParams::decoder})
        for (DenseLayerParams& layer : params.*half)
            for (double& w : layer.weights.data) w *= 500.0;

    ForwardTrace trace;
    encode_forward(params, 3, trace);
    trace.y = trace.x;
    for (double& v : trace.y) v += 1.0;
    decode_forward(params, trace);
    CHECK(all_finite(trace.x));
    CHECK(all_finite(trace.posteriors()));

    const LabelSet labels = build_onehot(3, 8);
    const Vec g = compound_loss_logit_gradient(labels, tc.weights, tc.partition,
                                               BitwiseLossForm::literal, trace.posteriors());
    MlpParams grads = zero_like(params);
    backward(params, trace, g, grads);
    CHECK(all_finite(grads));
}
