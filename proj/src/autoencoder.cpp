#include "uep/autoencoder.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uep {

double TrainConfig::rate() const {
    return std::log2(static_cast<double>(message_count())) / static_cast<double>(n);
}

void TrainConfig::validate() const {
    partition.validate();
    weights.validate(partition.kind);
    if (weights.lambdas.size() != partition.num_classes())
        throw std::invalid_argument("train config: lambda count must match class count");
    if (n < 1) throw std::invalid_argument("train config: n must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (num_iterations < 1) throw std::invalid_argument("train config: num_iterations must be >= 1");
    for (std::size_t w : encoder_hidden)
        if (w < 1) throw std::invalid_argument("train config: hidden width must be >= 1");
    for (std::size_t w : decoder_hidden)
        if (w < 1) throw std::invalid_argument("train config: hidden width must be >= 1");
}

std::uint64_t TrainConfig::digest() const {
    std::ostringstream os;
    os << to_string(partition.kind) << '|';
    for (std::size_t s : partition.class_sizes) os << s << ',';
    for (unsigned b : partition.bit_lengths) os << b << ',';
    os << '|' << n << '|';
    char buf[128];
    for (double l : weights.lambdas) {
        std::snprintf(buf, sizeof buf, "%.17g", l);
        os << buf << ',';
    }
    os << '|' << (bitwise_form == BitwiseLossForm::literal ? "literal" : "class_mass") << '|';
    for (std::size_t w : encoder_hidden) os << w << ',';
    os << '|';
    for (std::size_t w : decoder_hidden) os << w << ',';
    std::snprintf(buf, sizeof buf, "%.17g", train_ebn0_db);
    os << '|' << buf << '|' << batch_size << '|' << num_iterations << '|';
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", adam.alpha, adam.beta1, adam.beta2,
                  adam.epsilon);
    os << buf << '|' << seed;
    return fnv1a64(os.str());
}

TrainingDiverged::TrainingDiverged(std::size_t iter)
    : std::runtime_error("training diverged: loss not finite at iteration " +
                         std::to_string(iter)),
      iteration(iter) {}

namespace {

DenseLayerParams make_layer(std::size_t out_w, std::size_t in_w, Activation act) {
    DenseLayerParams layer;
    layer.weights = Matrix(out_w, in_w);
    layer.biases = Vec(out_w, 0.0);
    layer.activation = act;
    return layer;
}

}  // namespace

MlpParams init_model(const TrainConfig& config, Rng& rng) {
    config.validate();
    const std::size_t M = config.message_count();
    MlpParams params;
    std::size_t width = M;
    for (std::size_t h : config.encoder_hidden) {
        params.encoder.push_back(make_layer(h, width, Activation::relu));
        width = h;
    }
    params.encoder.push_back(make_layer(config.n, width, Activation::linear));
    width = config.n;
    for (std::size_t h : config.decoder_hidden) {
        params.decoder.push_back(make_layer(h, width, Activation::relu));
        width = h;
    }
    params.decoder.push_back(make_layer(M, width, Activation::softmax));
    glorot_init(params, rng);
    return params;
}

AdamState init_adam(const TrainConfig& config, const MlpParams& params) {
    return make_adam_state(params, config.adam);
}

namespace {

std::vector<LabelSet> build_all_labels(const TrainConfig& config) {
    const std::size_t M = config.message_count();
    std::vector<LabelSet> labels;
    labels.reserve(M);
    for (std::size_t m = 0; m < M; ++m) {
        switch (config.partition.kind) {
            case PartitionKind::message_wise:
                labels.push_back(build_onehot(m, M));
                break;
            case PartitionKind::bit_wise:
                labels.push_back(build_bitwise_labels(m, config.partition));
                break;
            case PartitionKind::progressive_bit_wise:
                labels.push_back(build_progressive_labels(m, config.partition));
                break;
        }
    }
    return labels;
}

void scale_params(MlpParams& p, double s) {
    for (auto half : {&MlpParams::encoder, &MlpParams::decoder})
        for (DenseLayerParams& layer : p.*half) {
            for (double& w : layer.weights.data) w *= s;
            for (double& b : layer.biases) b *= s;
        }
}

}  // namespace

TrainResult train(const TrainConfig& config) {
    config.validate();
    Rng init_rng(derive_seed(config.seed, "train-init", 0));
    MlpParams params = init_model(config, init_rng);
    AdamState adam = init_adam(config, params);

    const std::size_t M = config.message_count();
    const std::size_t n = config.n;
    const double sigma2 = ebn0_to_sigma2({config.train_ebn0_db, config.rate()});
    const double sigma = std::sqrt(sigma2);
    const std::vector<LabelSet> labels = build_all_labels(config);

    Rng batch_rng(derive_seed(config.seed, "train-batch", 0));
    TrainResult result;
    result.loss_trace.reserve(config.num_iterations);

    MlpParams grads = zero_like(params);
    ForwardTrace trace;
    const double inv_batch = 1.0 / static_cast<double>(config.batch_size);

    for (std::size_t iter = 0; iter < config.num_iterations; ++iter) {
        grads = zero_like(params);
        double batch_loss = 0.0;
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            const std::size_t m = static_cast<std::size_t>(batch_rng.below(M));
            encode_forward(params, m, trace);
            if ((iter * config.batch_size + b) % 1024 == 0) {
                const double e = squared_norm(trace.x);
                if (!std::isfinite(e)) throw TrainingDiverged(iter);
                // The sphere projection is only defined away from z = 0; a
                // fully dead ReLU layer can put a message there transiently.
                if (squared_norm(trace.bottleneck()) >= 1e-12 &&
                    std::abs(e - static_cast<double>(n)) > 1e-6)
                    throw std::logic_error("train: codeword energy constraint violated");
            }
            trace.y.resize(n);
            for (std::size_t i = 0; i < n; ++i) trace.y[i] = trace.x[i] + sigma * batch_rng.gaussian();
            decode_forward(params, trace);

            batch_loss += compound_loss_value(labels[m], config.weights, config.partition,
                                              config.bitwise_form, trace.posteriors());
            Vec glogits = compound_loss_logit_gradient(labels[m], config.weights, config.partition,
                                                       config.bitwise_form, trace.posteriors());
            backward(params, trace, glogits, grads);
        }
        batch_loss *= inv_batch;
        if (!std::isfinite(batch_loss)) throw TrainingDiverged(iter);
        result.loss_trace.push_back(batch_loss);

        scale_params(grads, inv_batch);
        adam_step(adam, params, grads);
    }

    if (!all_finite(params)) throw TrainingDiverged(config.num_iterations);
    result.params = std::move(params);
    return result;
}

Codebook export_codebook(const MlpParams& params, const TrainConfig& config) {
    const std::size_t M = config.message_count();
    Codebook cb;
    cb.codewords = Matrix(M, config.n);
    cb.partition = config.partition;
    cb.provenance = Provenance::trained_ae;
    cb.config_digest = config.digest();
    ForwardTrace trace;
    for (std::size_t m = 0; m < M; ++m) {
        encode_forward(params, m, trace);
        for (std::size_t i = 0; i < config.n; ++i) cb.codewords(m, i) = trace.x[i];
    }
    return cb;
}

std::size_t nn_decode(const MlpParams& params, const Vec& y) {
    // argmax of the softmax equals argmax of the logits; skip the exp.
    Vec act = y;
    for (const DenseLayerParams& layer : params.decoder) {
        if (layer.activation == Activation::softmax) {
            Vec logits;
            dense_forward(layer, act, &logits);
            act = std::move(logits);
        } else {
            act = dense_forward(layer, act);
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < act.size(); ++i)
        if (act[i] > act[best]) best = i;
    return best;
}

void save_model(const MlpParams& params, std::uint64_t config_digest, std::ostream& os) {
    char buf[64];
    os << "uepsim-model v1\n";
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_digest));
    os << "digest " << buf << '\n';
    os << "layers " << params.encoder.size() << ' ' << params.decoder.size() << '\n';
    auto dump_half = [&](const char* name, const std::vector<DenseLayerParams>& layers) {
        for (const DenseLayerParams& layer : layers) {
            const char* act = layer.activation == Activation::relu     ? "relu"
                              : layer.activation == Activation::linear ? "linear"
                                                                       : "softmax";
            os << name << ' ' << layer.out_width() << ' ' << layer.in_width() << ' ' << act
               << '\n';
            for (std::size_t r = 0; r < layer.out_width(); ++r) {
                const double* row = layer.weights.row_ptr(r);
                for (std::size_t c = 0; c < layer.in_width(); ++c) {
                    std::snprintf(buf, sizeof buf, "%a", row[c]);
                    os << (c ? " " : "") << buf;
                }
                os << '\n';
            }
            for (std::size_t r = 0; r < layer.out_width(); ++r) {
                std::snprintf(buf, sizeof buf, "%a", layer.biases[r]);
                os << (r ? " " : "") << buf;
            }
            os << '\n';
        }
    };
    dump_half("enc", params.encoder);
    dump_half("dec", params.decoder);
}

void save_model(const MlpParams& params, std::uint64_t config_digest, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    save_model(params, config_digest, os);
}

MlpParams load_model(std::istream& is, std::uint64_t* config_digest) {
    std::string line;
    if (!std::getline(is, line) || line != "uepsim-model v1")
        throw std::runtime_error("model: unrecognized header");
    std::string word, hex;
    is >> word >> hex;
    if (word != "digest") throw std::runtime_error("model: expected digest line");
    if (config_digest) *config_digest = std::stoull(hex, nullptr, 16);
    std::size_t enc_count, dec_count;
    is >> word >> enc_count >> dec_count;
    if (word != "layers") throw std::runtime_error("model: expected layers line");

    MlpParams params;
    auto read_half = [&](const char* name, std::vector<DenseLayerParams>& layers,
                         std::size_t count) {
        for (std::size_t l = 0; l < count; ++l) {
            std::string tag, act;
            std::size_t out_w, in_w;
            is >> tag >> out_w >> in_w >> act;
            if (tag != name) throw std::runtime_error("model: expected layer tag");
            DenseLayerParams layer;
            layer.weights = Matrix(out_w, in_w);
            layer.biases = Vec(out_w);
            layer.activation = act == "relu"     ? Activation::relu
                               : act == "linear" ? Activation::linear
                                                 : Activation::softmax;
            // Values are hexadecimal floats, which stream extraction does not
            // parse; go through strtod.
            std::string tok;
            auto read_value = [&](double& v) {
                if (!(is >> tok)) throw std::runtime_error("model: truncated parameters");
                v = std::strtod(tok.c_str(), nullptr);
            };
            for (double& w : layer.weights.data) read_value(w);
            for (double& b : layer.biases) read_value(b);
            layers.push_back(std::move(layer));
        }
    };
    read_half("enc", params.encoder, enc_count);
    read_half("dec", params.decoder, dec_count);
    return params;
}

MlpParams load_model(const std::string& path, std::uint64_t* config_digest) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return load_model(is, config_digest);
}

}  // namespace uep
