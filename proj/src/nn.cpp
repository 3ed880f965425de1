#include "uep/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uep {

namespace {

void apply_activation(Activation act, const Vec& pre, Vec& out) {
    switch (act) {
        case Activation::relu:
            out.resize(pre.size());
            for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
            break;
        case Activation::linear:
            out = pre;
            break;
        case Activation::softmax:
            out = softmax(pre);
            break;
    }
}

void affine(const DenseLayerParams& layer, const Vec& input, Vec& pre) {
    const std::size_t out_w = layer.out_width();
    const std::size_t in_w = layer.in_width();
    pre.resize(out_w);
    for (std::size_t i = 0; i < out_w; ++i) {
        const double* wrow = layer.weights.row_ptr(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < in_w; ++j) acc += wrow[j] * input[j];
        pre[i] = acc + layer.biases[i];
    }
}

// W * e_m + b without materializing the one-hot vector; identical arithmetic.
void affine_onehot(const DenseLayerParams& layer, std::size_t m, Vec& pre) {
    const std::size_t out_w = layer.out_width();
    pre.resize(out_w);
    for (std::size_t i = 0; i < out_w; ++i) pre[i] = layer.weights(i, m) + layer.biases[i];
}

double normalize_denominator(const Vec& z) {
    double d = std::sqrt(squared_norm(z));
    if (d < 1e-12) d += 1e-12;
    return d;
}

}  // namespace

Vec dense_forward(const DenseLayerParams& layer, const Vec& input, Vec* pre_activation) {
    if (input.size() != layer.in_width())
        throw std::invalid_argument("dense_forward: input width mismatch");
    if (layer.biases.size() != layer.out_width())
        throw std::invalid_argument("dense_forward: bias width mismatch");
    Vec pre;
    affine(layer, input, pre);
    Vec out;
    apply_activation(layer.activation, pre, out);
    if (pre_activation) *pre_activation = std::move(pre);
    return out;
}

Vec softmax(const Vec& logits) {
    Vec out(logits.size());
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

Vec energy_normalize(const Vec& z, std::size_t n) {
    if (z.size() != n) throw std::invalid_argument("energy_normalize: width mismatch");
    const double scale = std::sqrt(static_cast<double>(n)) / normalize_denominator(z);
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = scale * z[i];
    return x;
}

void encode_forward(const MlpParams& params, std::size_t m, ForwardTrace& trace) {
    const std::size_t L = params.encoder.size();
    trace.message = m;
    trace.enc_pre.resize(L);
    trace.enc_out.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        const DenseLayerParams& layer = params.encoder[l];
        if (l == 0)
            affine_onehot(layer, m, trace.enc_pre[l]);
        else
            affine(layer, trace.enc_out[l - 1], trace.enc_pre[l]);
        apply_activation(layer.activation, trace.enc_pre[l], trace.enc_out[l]);
    }
    trace.x = energy_normalize(trace.enc_out.back(), params.block_length());
}

void decode_forward(const MlpParams& params, ForwardTrace& trace) {
    const std::size_t L = params.decoder.size();
    trace.dec_pre.resize(L);
    trace.dec_out.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        const DenseLayerParams& layer = params.decoder[l];
        affine(layer, l == 0 ? trace.y : trace.dec_out[l - 1], trace.dec_pre[l]);
        apply_activation(layer.activation, trace.dec_pre[l], trace.dec_out[l]);
    }
}

double compound_loss_value(const LabelSet& labels, const LossWeights& weights,
                           const ClassPartition& partition, BitwiseLossForm form, const Vec& b) {
    if (partition.kind == PartitionKind::message_wise)
        return loss_messagewise(labels, b, weights, partition);
    return loss_bitwise(labels, b, weights, form);
}

Vec compound_loss_logit_gradient(const LabelSet& labels, const LossWeights& weights,
                                 const ClassPartition& partition, BitwiseLossForm form,
                                 const Vec& b) {
    const std::size_t M = b.size();
    Vec grad(M);

    if (partition.kind == PartitionKind::message_wise) {
        // loss = -lambda_c log b_m  =>  grad = lambda_c * (b - e_m)
        const std::size_t m = labels.supports[0][0];
        const double lam = weights.lambdas[partition.class_of(m)];
        for (std::size_t i = 0; i < M; ++i) grad[i] = lam * b[i];
        grad[m] -= lam;
        return grad;
    }

    double lambda_sum = 0.0;
    for (double l : weights.lambdas) lambda_sum += l;
    for (std::size_t i = 0; i < M; ++i) grad[i] = lambda_sum * b[i];

    if (form == BitwiseLossForm::literal) {
        // loss = -sum_j lambda_j sum_{i in S_j} log b_i  =>  grad = (sum w) b - w
        for (std::size_t j = 0; j < labels.supports.size(); ++j) {
            const double lam = weights.lambdas[j];
            double support_weight = 0.0;
            for (std::uint32_t i : labels.supports[j]) {
                grad[i] -= lam;
                support_weight += 1.0;
            }
            // (sum w) b already includes lambda_sum * b; the remaining
            // (support term) of sum w is (|S_j| - 1) * lambda_j spread below.
            const double extra = lam * (support_weight - 1.0);
            for (std::size_t i = 0; i < M; ++i) grad[i] += extra * b[i];
        }
    } else {
        // loss_j = -log(mass_j)  =>  grad_j = lambda_j * (b - 1_{S_j} .* b / mass_j)
        for (std::size_t j = 0; j < labels.supports.size(); ++j) {
            const double lam = weights.lambdas[j];
            double mass = 0.0;
            for (std::uint32_t i : labels.supports[j]) mass += b[i];
            mass = std::max(mass, kLogClamp);
            for (std::uint32_t i : labels.supports[j]) grad[i] -= lam * b[i] / mass;
        }
    }
    return grad;
}

MlpParams zero_like(const MlpParams& shape) {
    MlpParams z = shape;
    for (auto* half : {&z.encoder, &z.decoder})
        for (DenseLayerParams& layer : *half) {
            std::fill(layer.weights.data.begin(), layer.weights.data.end(), 0.0);
            std::fill(layer.biases.begin(), layer.biases.end(), 0.0);
        }
    return z;
}

namespace {

// delta: dloss/d(pre-activation) of layer l. Accumulates weight/bias grads and
// returns dloss/d(input of layer l).
Vec layer_backward(const DenseLayerParams& layer, const Vec& input, const Vec& delta,
                   DenseLayerParams& grad) {
    const std::size_t out_w = layer.out_width();
    const std::size_t in_w = layer.in_width();
    for (std::size_t i = 0; i < out_w; ++i) {
        double* grow = grad.weights.row_ptr(i);
        const double d = delta[i];
        for (std::size_t j = 0; j < in_w; ++j) grow[j] += d * input[j];
        grad.biases[i] += d;
    }
    Vec din(in_w, 0.0);
    for (std::size_t i = 0; i < out_w; ++i) {
        const double* wrow = layer.weights.row_ptr(i);
        const double d = delta[i];
        for (std::size_t j = 0; j < in_w; ++j) din[j] += wrow[j] * d;
    }
    return din;
}

// Same but with one-hot input e_m: only column m of the weight grad moves.
void layer_backward_onehot(const DenseLayerParams& layer, std::size_t m, const Vec& delta,
                           DenseLayerParams& grad) {
    const std::size_t out_w = layer.out_width();
    for (std::size_t i = 0; i < out_w; ++i) {
        grad.weights(i, m) += delta[i];
        grad.biases[i] += delta[i];
    }
}

void relu_mask(const Vec& pre, Vec& delta) {
    for (std::size_t i = 0; i < delta.size(); ++i)
        if (!(pre[i] > 0.0)) delta[i] = 0.0;
}

}  // namespace

void backward(const MlpParams& params, const ForwardTrace& trace, const Vec& dloss_dlogits,
              MlpParams& grad_accum) {
    // Decoder, last layer first. dloss_dlogits is already the gradient at the
    // softmax layer's pre-activation.
    Vec delta = dloss_dlogits;
    for (std::size_t l = params.decoder.size(); l-- > 0;) {
        const Vec& input = (l == 0) ? trace.y : trace.dec_out[l - 1];
        Vec din = layer_backward(params.decoder[l], input, delta, grad_accum.decoder[l]);
        if (l > 0) {
            if (params.decoder[l - 1].activation == Activation::relu)
                relu_mask(trace.dec_pre[l - 1], din);
            delta = std::move(din);
        } else {
            delta = std::move(din);  // dloss/dy
        }
    }

    // Channel is additive: dloss/dx = dloss/dy.
    // Normalization: g_z = sqrt(n)/d * (g_x - z (z . g_x) / d^2).
    const Vec& z = trace.bottleneck();
    const std::size_t n = z.size();
    const double d = [&] {
        double v = std::sqrt(squared_norm(z));
        if (v < 1e-12) v += 1e-12;
        return v;
    }();
    const double radial = dot(z, delta) / (d * d);
    const double scale = std::sqrt(static_cast<double>(n)) / d;
    Vec gz(n);
    for (std::size_t i = 0; i < n; ++i) gz[i] = scale * (delta[i] - z[i] * radial);
    delta = std::move(gz);

    // Encoder, last layer first. The bottleneck is linear; hidden layers ReLU.
    for (std::size_t l = params.encoder.size(); l-- > 0;) {
        if (params.encoder[l].activation == Activation::relu)
            relu_mask(trace.enc_pre[l], delta);
        if (l == 0) {
            layer_backward_onehot(params.encoder[l], trace.message, delta, grad_accum.encoder[l]);
        } else {
            Vec din = layer_backward(params.encoder[l], trace.enc_out[l - 1], delta,
                                     grad_accum.encoder[l]);
            delta = std::move(din);
        }
    }
}

AdamState make_adam_state(const MlpParams& shape, const AdamHyper& hyper) {
    AdamState s;
    s.first_moment = zero_like(shape);
    s.second_moment = zero_like(shape);
    s.step_count = 0;
    s.hyper = hyper;
    return s;
}

namespace {

void adam_update_block(Vec& p, Vec& m, Vec& v, const Vec& g, const AdamHyper& h, double bc1,
                       double bc2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
        v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= h.alpha * mhat / (std::sqrt(vhat) + h.epsilon);
    }
}

}  // namespace

void adam_step(AdamState& state, MlpParams& params, const MlpParams& grads) {
    state.step_count += 1;
    const AdamHyper& h = state.hyper;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step_count));
    for (auto half : {&MlpParams::encoder, &MlpParams::decoder}) {
        auto& players = params.*half;
        auto& mlayers = state.first_moment.*half;
        auto& vlayers = state.second_moment.*half;
        const auto& glayers = grads.*half;
        for (std::size_t l = 0; l < players.size(); ++l) {
            adam_update_block(players[l].weights.data, mlayers[l].weights.data,
                              vlayers[l].weights.data, glayers[l].weights.data, h, bc1, bc2);
            adam_update_block(players[l].biases, mlayers[l].biases, vlayers[l].biases,
                              glayers[l].biases, h, bc1, bc2);
        }
    }
}

namespace {

double loss_for_params(const MlpParams& params, const ClassPartition& partition,
                       const LossWeights& weights, BitwiseLossForm form, std::size_t message,
                       const Vec& fixed_noise, const LabelSet& labels) {
    ForwardTrace trace;
    encode_forward(params, message, trace);
    trace.y.resize(trace.x.size());
    for (std::size_t i = 0; i < trace.x.size(); ++i) trace.y[i] = trace.x[i] + fixed_noise[i];
    decode_forward(params, trace);
    return compound_loss_value(labels, weights, partition, form, trace.posteriors());
}

}  // namespace

double gradient_check(const MlpParams& params, const ClassPartition& partition,
                      const LossWeights& weights, BitwiseLossForm form, std::size_t message,
                      const Vec& fixed_noise) {
    LabelSet labels;
    switch (partition.kind) {
        case PartitionKind::message_wise:
            labels = build_onehot(message, partition.num_messages());
            break;
        case PartitionKind::bit_wise:
            labels = build_bitwise_labels(message, partition);
            break;
        case PartitionKind::progressive_bit_wise:
            labels = build_progressive_labels(message, partition);
            break;
    }

    MlpParams analytic = zero_like(params);
    {
        ForwardTrace trace;
        encode_forward(params, message, trace);
        trace.y.resize(trace.x.size());
        for (std::size_t i = 0; i < trace.x.size(); ++i) trace.y[i] = trace.x[i] + fixed_noise[i];
        decode_forward(params, trace);
        Vec glogits = compound_loss_logit_gradient(labels, weights, partition, form,
                                                   trace.posteriors());
        backward(params, trace, glogits, analytic);
    }

    const double h = 1e-5;
    double worst = 0.0;
    MlpParams probe = params;
    for (auto half : {&MlpParams::encoder, &MlpParams::decoder}) {
        auto& players = probe.*half;
        const auto& alayers = analytic.*half;
        for (std::size_t l = 0; l < players.size(); ++l) {
            auto check_block = [&](Vec& block, const Vec& ablock) {
                for (std::size_t i = 0; i < block.size(); ++i) {
                    const double saved = block[i];
                    block[i] = saved + h;
                    const double up = loss_for_params(probe, partition, weights, form, message,
                                                      fixed_noise, labels);
                    block[i] = saved - h;
                    const double dn = loss_for_params(probe, partition, weights, form, message,
                                                      fixed_noise, labels);
                    block[i] = saved;
                    const double numeric = (up - dn) / (2.0 * h);
                    const double a = ablock[i];
                    const double rel =
                        std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric));
                    worst = std::max(worst, rel);
                }
            };
            check_block(players[l].weights.data, alayers[l].weights.data);
            check_block(players[l].biases, alayers[l].biases);
        }
    }
    return worst;
}

void glorot_init(MlpParams& params, Rng& rng) {
    for (auto half : {&MlpParams::encoder, &MlpParams::decoder}) {
        for (DenseLayerParams& layer : params.*half) {
            const double limit =
                std::sqrt(6.0 / static_cast<double>(layer.in_width() + layer.out_width()));
            for (double& w : layer.weights.data) w = (2.0 * rng.uniform() - 1.0) * limit;
            std::fill(layer.biases.begin(), layer.biases.end(), 0.0);
        }
    }
}

bool all_finite(const MlpParams& params) {
    for (auto half : {&MlpParams::encoder, &MlpParams::decoder})
        for (const DenseLayerParams& layer : params.*half)
            if (!all_finite(layer.weights) || !all_finite(layer.biases)) return false;
    return true;
}

}  // namespace uep
