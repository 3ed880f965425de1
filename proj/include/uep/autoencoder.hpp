#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "uep/codebook.hpp"
#include "uep/montecarlo.hpp"
#include "uep/nn.hpp"

namespace uep {

struct TrainConfig {
    ClassPartition partition;
    std::size_t n = 7;
    LossWeights weights;
    BitwiseLossForm bitwise_form = BitwiseLossForm::literal;
    std::vector<std::size_t> encoder_hidden{16};
    std::vector<std::size_t> decoder_hidden{16};
    double train_ebn0_db = 3.0;
    std::size_t batch_size = 256;
    std::size_t num_iterations = 20000;
    AdamHyper adam;
    std::uint64_t seed = 1;

    std::size_t message_count() const { return partition.num_messages(); }
    double rate() const;
    void validate() const;
    std::uint64_t digest() const;
};

struct TrainResult {
    MlpParams params;
    Vec loss_trace;  // batch-mean loss per iteration
};

// Fresh model with the configured layer stack (one-hot input -> ReLU hidden
// layers -> linear width-n bottleneck; n -> ReLU hidden layers -> width-M
// softmax), Glorot-initialized from rng.
MlpParams init_model(const TrainConfig& config, Rng& rng);
AdamState init_adam(const TrainConfig& config, const MlpParams& params);

// End-to-end training: every iteration samples batch_size messages uniformly,
// runs encode -> energy normalization -> AWGN at the training SNR -> decode,
// averages the compound loss over the batch, backpropagates and takes one
// Adam step. Deterministic given the config (all streams derive from
// config.seed). Throws TrainingDiverged if the loss leaves the finite range.
TrainResult train(const TrainConfig& config);

struct TrainingDiverged : std::runtime_error {
    std::size_t iteration;
    explicit TrainingDiverged(std::size_t iter);
};

// Feeds every one-hot message through the encoder + normalization.
Codebook export_codebook(const MlpParams& params, const TrainConfig& config);

// argmax of the decoder posteriors; ties break to the lowest index.
std::size_t nn_decode(const MlpParams& params, const Vec& y);

// Neural decoder behind the Monte Carlo estimator interface.
class NnDecoder final : public BlockDecoder {
public:
    explicit NnDecoder(const MlpParams& params) : params_(params) {}
    std::size_t decode(const Vec& y) override { return nn_decode(params_, y); }
    std::unique_ptr<BlockDecoder> clone() const override {
        return std::make_unique<NnDecoder>(params_);
    }

private:
    MlpParams params_;
};

// Versioned text format: layer shapes and activations plus every parameter as
// a hexadecimal float (bit-exact round trip).
void save_model(const MlpParams& params, std::uint64_t config_digest, std::ostream& os);
void save_model(const MlpParams& params, std::uint64_t config_digest, const std::string& path);
MlpParams load_model(std::istream& is, std::uint64_t* config_digest = nullptr);
MlpParams load_model(const std::string& path, std::uint64_t* config_digest = nullptr);

}  // namespace uep
