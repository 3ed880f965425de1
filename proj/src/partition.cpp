#include "uep/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace uep {

const char* to_string(PartitionKind k) {
    switch (k) {
        case PartitionKind::message_wise: return "message_wise";
        case PartitionKind::bit_wise: return "bit_wise";
        case PartitionKind::progressive_bit_wise: return "progressive_bit_wise";
    }
    return "?";
}

ClassPartition ClassPartition::message_wise(std::vector<std::size_t> sizes) {
    ClassPartition p;
    p.kind = PartitionKind::message_wise;
    p.class_sizes = std::move(sizes);
    p.validate();
    return p;
}

ClassPartition ClassPartition::bit_wise(std::vector<unsigned> bits) {
    ClassPartition p;
    p.kind = PartitionKind::bit_wise;
    p.bit_lengths = std::move(bits);
    p.validate();
    return p;
}

ClassPartition ClassPartition::progressive(std::vector<unsigned> bits) {
    ClassPartition p;
    p.kind = PartitionKind::progressive_bit_wise;
    p.bit_lengths = std::move(bits);
    p.validate();
    return p;
}

std::size_t ClassPartition::num_classes() const {
    return kind == PartitionKind::message_wise ? class_sizes.size() : bit_lengths.size();
}

unsigned ClassPartition::message_bits() const {
    if (kind == PartitionKind::message_wise)
        throw std::logic_error("message_bits: partition is message-wise");
    unsigned k = 0;
    for (unsigned b : bit_lengths) k += b;
    return k;
}

std::size_t ClassPartition::num_messages() const {
    if (kind == PartitionKind::message_wise)
        return std::accumulate(class_sizes.begin(), class_sizes.end(), std::size_t{0});
    return std::size_t{1} << message_bits();
}

std::size_t ClassPartition::class_of(std::size_t m) const {
    if (kind != PartitionKind::message_wise)
        throw std::logic_error("class_of: partition is not message-wise");
    std::size_t base = 0;
    for (std::size_t c = 0; c < class_sizes.size(); ++c) {
        base += class_sizes[c];
        if (m < base) return c;
    }
    throw std::out_of_range("class_of: message index " + std::to_string(m) + " out of range");
}

std::size_t ClassPartition::class_offset(std::size_t c) const {
    std::size_t base = 0;
    for (std::size_t i = 0; i < c; ++i) base += class_sizes[i];
    return base;
}

unsigned ClassPartition::bit_offset(std::size_t c) const {
    unsigned off = 0;
    for (std::size_t i = 0; i < c; ++i) off += bit_lengths[i];
    return off;
}

void ClassPartition::validate() const {
    if (kind == PartitionKind::message_wise) {
        if (class_sizes.empty())
            throw std::invalid_argument("partition: need at least one class");
        for (std::size_t s : class_sizes)
            if (s == 0) throw std::invalid_argument("partition: empty message class");
        if (!bit_lengths.empty())
            throw std::invalid_argument("partition: message-wise must not carry bit lengths");
    } else {
        if (bit_lengths.empty())
            throw std::invalid_argument("partition: need at least one class");
        unsigned k = 0;
        for (unsigned b : bit_lengths) {
            if (b == 0) throw std::invalid_argument("partition: zero-length submessage");
            k += b;
        }
        if (k > 20)
            throw std::invalid_argument("partition: total message length above 20 bits unsupported");
        if (!class_sizes.empty())
            throw std::invalid_argument("partition: bit-wise must not carry class sizes");
    }
}

std::vector<int> message_to_bits(std::size_t m, unsigned k) {
    if (k >= 64 || m >= (std::size_t{1} << k))
        throw std::out_of_range("message_to_bits: message index out of range");
    std::vector<int> bits(k);
    for (unsigned i = 0; i < k; ++i) bits[i] = static_cast<int>((m >> (k - 1 - i)) & 1u);
    return bits;
}

std::size_t bits_to_message(const std::vector<int>& bits) {
    std::size_t m = 0;
    for (int b : bits) m = (m << 1) | static_cast<unsigned>(b & 1);
    return m;
}

LabelSet build_onehot(std::size_t m, std::size_t M) {
    if (m >= M) throw std::out_of_range("build_onehot: message index out of range");
    LabelSet ls;
    ls.width = M;
    ls.supports.push_back({static_cast<std::uint32_t>(m)});
    return ls;
}

namespace {

// All messages whose bits equal those of m on the positions outside
// [free_off, free_off+free_len) ... inverted: the class bits of m are fixed and
// the remaining free positions run through all patterns. Positions are
// big-endian; enumeration order is increasing message index.
std::vector<std::uint32_t> fixed_bits_support(std::size_t m, unsigned k, unsigned fixed_off,
                                              unsigned fixed_len) {
    const unsigned free_len = k - fixed_len;
    const std::size_t fixed_mask = ((std::size_t{1} << fixed_len) - 1)
                                   << (k - fixed_off - fixed_len);
    const std::size_t fixed_bits = m & fixed_mask;

    // Free positions in big-endian order.
    std::vector<unsigned> free_shift;
    free_shift.reserve(free_len);
    for (unsigned p = 0; p < k; ++p) {
        if (p >= fixed_off && p < fixed_off + fixed_len) continue;
        free_shift.push_back(k - 1 - p);
    }

    std::vector<std::uint32_t> support;
    support.reserve(std::size_t{1} << free_len);
    for (std::size_t t = 0; t < (std::size_t{1} << free_len); ++t) {
        std::size_t idx = fixed_bits;
        for (unsigned j = 0; j < free_len; ++j) {
            const std::size_t bit = (t >> (free_len - 1 - j)) & 1u;
            idx |= bit << free_shift[j];
        }
        support.push_back(static_cast<std::uint32_t>(idx));
    }
    return support;
}

}  // namespace

LabelSet build_bitwise_labels(std::size_t m, const ClassPartition& partition) {
    if (partition.kind != PartitionKind::bit_wise)
        throw std::invalid_argument("build_bitwise_labels: partition kind mismatch");
    const unsigned k = partition.message_bits();
    const std::size_t M = partition.num_messages();
    if (m >= M) throw std::out_of_range("build_bitwise_labels: message index out of range");

    LabelSet ls;
    ls.width = M;
    unsigned off = 0;
    for (unsigned kj : partition.bit_lengths) {
        ls.supports.push_back(fixed_bits_support(m, k, off, kj));
        off += kj;
    }
    return ls;
}

LabelSet build_progressive_labels(std::size_t m, const ClassPartition& partition) {
    if (partition.kind != PartitionKind::progressive_bit_wise)
        throw std::invalid_argument("build_progressive_labels: partition kind mismatch");
    const unsigned k = partition.message_bits();
    const std::size_t M = partition.num_messages();
    if (m >= M) throw std::out_of_range("build_progressive_labels: message index out of range");

    LabelSet ls;
    ls.width = M;
    unsigned prefix = 0;
    for (unsigned kj : partition.bit_lengths) {
        prefix += kj;
        ls.supports.push_back(fixed_bits_support(m, k, 0, prefix));
    }
    return ls;
}

void LossWeights::validate(PartitionKind kind) const {
    if (lambdas.empty()) throw std::invalid_argument("loss weights: empty lambda vector");
    double sum = 0.0;
    for (double l : lambdas) {
        if (kind == PartitionKind::message_wise) {
            if (l < 0.0) throw std::invalid_argument("loss weights: lambda_j must be >= 0");
        } else {
            if (l < 1e-6)
                throw std::invalid_argument("loss weights: bit-wise lambda_j must be >= 1e-6");
        }
        sum += l;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("loss weights: lambdas must sum to 1");
}

namespace {
inline double clamped_log(double b) { return std::log(std::max(b, kLogClamp)); }
}  // namespace

double loss_messagewise(const LabelSet& onehot, const Vec& b, const LossWeights& weights,
                        const ClassPartition& partition) {
    if (partition.kind != PartitionKind::message_wise)
        throw std::invalid_argument("loss_messagewise: partition kind mismatch");
    if (!onehot.is_one_hot())
        throw std::invalid_argument("loss_messagewise: label must be one-hot");
    const std::size_t m = onehot.supports[0][0];
    const std::size_t c = partition.class_of(m);
    return weights.lambdas.at(c) * (-clamped_log(b[m]));
}

double loss_bitwise(const LabelSet& labels, const Vec& b, const LossWeights& weights,
                    BitwiseLossForm form) {
    if (labels.supports.size() != weights.lambdas.size())
        throw std::invalid_argument("loss_bitwise: class count mismatch");
    double total = 0.0;
    for (std::size_t j = 0; j < labels.supports.size(); ++j) {
        double term = 0.0;
        if (form == BitwiseLossForm::literal) {
            for (std::uint32_t i : labels.supports[j]) term -= clamped_log(b[i]);
        } else {
            double mass = 0.0;
            for (std::uint32_t i : labels.supports[j]) mass += b[i];
            term = -clamped_log(mass);
        }
        total += weights.lambdas[j] * term;
    }
    return total;
}

void perclass_correct(std::size_t m, std::size_t m_hat, const ClassPartition& partition,
                      PerClassOutcome& out) {
    const std::size_t C = partition.num_classes();
    out.applicable.assign(C, 1);
    out.correct.assign(C, 0);

    if (partition.kind == PartitionKind::message_wise) {
        std::fill(out.applicable.begin(), out.applicable.end(), std::uint8_t{0});
        const std::size_t c = partition.class_of(m);
        out.applicable[c] = 1;
        out.correct[c] = (m == m_hat) ? 1 : 0;
        return;
    }

    const unsigned k = partition.message_bits();
    const std::size_t diff = m ^ m_hat;
    unsigned off = 0;
    bool prefix_ok = true;
    for (std::size_t c = 0; c < C; ++c) {
        const unsigned kc = partition.bit_lengths[c];
        const std::size_t mask = ((std::size_t{1} << kc) - 1) << (k - off - kc);
        const bool block_ok = (diff & mask) == 0;
        if (partition.kind == PartitionKind::bit_wise) {
            out.correct[c] = block_ok ? 1 : 0;
        } else {
            prefix_ok = prefix_ok && block_ok;
            out.correct[c] = prefix_ok ? 1 : 0;
        }
        off += kc;
    }
}

PerClassOutcome perclass_correct(std::size_t m, std::size_t m_hat,
                                 const ClassPartition& partition) {
    PerClassOutcome out;
    perclass_correct(m, m_hat, partition, out);
    return out;
}

}  // namespace uep
