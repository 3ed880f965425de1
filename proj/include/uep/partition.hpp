#pragma once

#include <cstdint>
#include <vector>

#include "uep/matrix.hpp"

namespace uep {

// Messages are 0-based indices 0..M-1 throughout. For bit-level views, message
// m maps to the big-endian k-bit binary expansion of m, and submessage 1
// occupies the most significant k_1 bits.

enum class PartitionKind { message_wise, bit_wise, progressive_bit_wise };

const char* to_string(PartitionKind k);

// Importance classes, either as disjoint message subsets (message-wise, stored
// as contiguous blocks of the given sizes) or as disjoint bit subsequences
// (bit-wise and progressive, stored as per-class bit lengths).
struct ClassPartition {
    PartitionKind kind = PartitionKind::message_wise;
    std::vector<std::size_t> class_sizes;  // message_wise: |M_i|, classes are contiguous blocks
    std::vector<unsigned> bit_lengths;     // bit-wise kinds: k_i with sum k

    static ClassPartition message_wise(std::vector<std::size_t> sizes);
    static ClassPartition bit_wise(std::vector<unsigned> bits);
    static ClassPartition progressive(std::vector<unsigned> bits);

    std::size_t num_classes() const;
    std::size_t num_messages() const;  // M
    unsigned message_bits() const;     // k (bit-wise kinds only)
    bool is_bitwise_kind() const { return kind != PartitionKind::message_wise; }

    std::size_t class_of(std::size_t m) const;       // message_wise only
    std::size_t class_offset(std::size_t c) const;   // message_wise: first message of class c
    unsigned bit_offset(std::size_t c) const;        // bit-wise kinds: first bit of class c

    // Throws std::invalid_argument on empty/oversized/ill-formed partitions.
    void validate() const;
};

// Big-endian bits of message m, length k. Throws if m >= 2^k.
std::vector<int> message_to_bits(std::size_t m, unsigned k);
std::size_t bits_to_message(const std::vector<int>& bits);

// Loss targets for one message: the plain one-hot vector, or the C multi-hot
// vectors of the bit-wise/progressive compound losses. Vectors of width M are
// stored as sorted index lists of their nonzero entries.
struct LabelSet {
    std::size_t width = 0;
    std::vector<std::vector<std::uint32_t>> supports;

    bool is_one_hot() const { return supports.size() == 1 && supports[0].size() == 1; }
};

LabelSet build_onehot(std::size_t m, std::size_t M);
// Vector j marks every message whose j-th submessage equals that of m
// (2^(k-k_j) ones). Requires kind == bit_wise.
LabelSet build_bitwise_labels(std::size_t m, const ClassPartition& partition);
// Vector i marks every message consistent with the first i submessages of m
// (2^(k-sum_{j<=i} k_j) ones); the last vector is the one-hot of m.
// Requires kind == progressive_bit_wise.
LabelSet build_progressive_labels(std::size_t m, const ClassPartition& partition);

// Per-class weights of the compound loss. Message-wise permits zero entries;
// bit-wise kinds require every entry >= 1e-6. Sum must be 1 within 1e-9.
struct LossWeights {
    std::vector<double> lambdas;

    void validate(PartitionKind kind) const;
};

enum class BitwiseLossForm {
    literal,     // -sum_i u_i log b_i over each multi-hot vector
    class_mass,  // -log(sum of b_i over the support); optional alternative
};

constexpr double kLogClamp = 1e-30;

// Compound message-wise loss: sum_j lambda_j * (-sum_{i in M_j} u_i log b_i).
// With a one-hot u this is -lambda_{class(m)} * log b_m.
double loss_messagewise(const LabelSet& onehot, const Vec& b, const LossWeights& weights,
                        const ClassPartition& partition);

// Compound bit-wise loss over multi-hot labels (progressive labels use the
// same operation): sum_j lambda_j * (-sum_{i in support_j} log b_i) in the
// literal form.
double loss_bitwise(const LabelSet& labels, const Vec& b, const LossWeights& weights,
                    BitwiseLossForm form = BitwiseLossForm::literal);

// Per-class decoding outcome for one trial. Message-wise marks only class(m)
// applicable; bit-wise marks class i correct iff submessage i matches;
// progressive marks class i correct iff all submessages j <= i match.
struct PerClassOutcome {
    std::vector<std::uint8_t> applicable;
    std::vector<std::uint8_t> correct;
};

PerClassOutcome perclass_correct(std::size_t m, std::size_t m_hat, const ClassPartition& partition);
void perclass_correct(std::size_t m, std::size_t m_hat, const ClassPartition& partition,
                      PerClassOutcome& out);

}  // namespace uep
