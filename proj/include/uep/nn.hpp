#pragma once

#include <cstdint>
#include <vector>

#include "uep/matrix.hpp"
#include "uep/partition.hpp"
#include "uep/rng.hpp"

namespace uep {

enum class Activation { relu, linear, softmax };

struct DenseLayerParams {
    Matrix weights;  // out x in
    Vec biases;      // out
    Activation activation = Activation::linear;

    std::size_t in_width() const { return weights.cols; }
    std::size_t out_width() const { return weights.rows; }
};

// Encoder ends in a width-n linear bottleneck, decoder in a width-M softmax.
// The same struct doubles as the container for gradients and Adam moments.
struct MlpParams {
    std::vector<DenseLayerParams> encoder;
    std::vector<DenseLayerParams> decoder;

    std::size_t message_count() const { return encoder.front().in_width(); }
    std::size_t block_length() const { return encoder.back().out_width(); }
};

struct AdamHyper {
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    MlpParams first_moment;
    MlpParams second_moment;
    long step_count = 0;
    AdamHyper hyper;
};

// output = activation(W * input + biases). Optionally stores the
// pre-activation for backprop. Throws on width mismatch.
Vec dense_forward(const DenseLayerParams& layer, const Vec& input, Vec* pre_activation = nullptr);

// Numerically stable softmax (max-subtraction); output sums to 1.
Vec softmax(const Vec& logits);

// Projects z onto the radius-sqrt(n) sphere: x = sqrt(n) * z / ||z||, so that
// ||x||^2 = n. A 1e-12 floor is added to the denominator when ||z|| falls
// below it. Requires z.size() == n.
Vec energy_normalize(const Vec& z, std::size_t n);

// Everything the backward pass needs from one example's forward pass.
struct ForwardTrace {
    std::size_t message = 0;
    std::vector<Vec> enc_pre, enc_out;  // per encoder layer
    Vec x;                              // normalized codeword, energy n
    Vec y;                              // channel output (decoder input)
    std::vector<Vec> dec_pre, dec_out;  // per decoder layer

    const Vec& bottleneck() const { return enc_out.back(); }
    const Vec& posteriors() const { return dec_out.back(); }
};

// One-hot input m -> encoder layers -> energy normalization; fills the
// encoder half of the trace.
void encode_forward(const MlpParams& params, std::size_t m, ForwardTrace& trace);
// trace.y -> decoder layers -> softmax posteriors.
void decode_forward(const MlpParams& params, ForwardTrace& trace);

// Loss value and its gradient w.r.t. decoder logits for the selected
// compound loss. Labels must match the partition kind; the standard
// cross-entropy is the single-class message-wise case.
double compound_loss_value(const LabelSet& labels, const LossWeights& weights,
                           const ClassPartition& partition, BitwiseLossForm form, const Vec& b);
Vec compound_loss_logit_gradient(const LabelSet& labels, const LossWeights& weights,
                                 const ClassPartition& partition, BitwiseLossForm form,
                                 const Vec& b);

MlpParams zero_like(const MlpParams& shape);

// Exact analytic gradients of the compound loss for one example, accumulated
// (+=) into grad_accum. Backpropagates through the softmax, ReLU (subgradient
// 0 at 0), the additive channel (identity), and the energy-normalization
// Jacobian sqrt(n) * (I/||z|| - z z^T/||z||^3).
void backward(const MlpParams& params, const ForwardTrace& trace, const Vec& dloss_dlogits,
              MlpParams& grad_accum);

AdamState make_adam_state(const MlpParams& shape, const AdamHyper& hyper);

// Standard Adam update with bias-corrected moments; increments step_count
// before the correction.
void adam_step(AdamState& state, MlpParams& params, const MlpParams& grads);

// Central-difference check (step 1e-5) of backward() over every weight and
// bias, with the channel noise held fixed at fixed_noise. Returns
// max |analytic - numeric| / max(1, |analytic| + |numeric|).
double gradient_check(const MlpParams& params, const ClassPartition& partition,
                      const LossWeights& weights, BitwiseLossForm form, std::size_t message,
                      const Vec& fixed_noise);

// Uniform init in +/- sqrt(6/(fan_in+fan_out)), biases zero. Draw order:
// encoder then decoder, each weight matrix row-major.
void glorot_init(MlpParams& params, Rng& rng);

bool all_finite(const MlpParams& params);

}  // namespace uep
