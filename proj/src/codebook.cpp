#include "uep/codebook.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "uep/rng.hpp"

namespace uep {

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::trained_ae: return "trained-ae";
        case Provenance::coset: return "coset";
        case Provenance::superposition: return "superposition";
    }
    return "?";
}

double Codebook::rate() const {
    return std::log2(static_cast<double>(message_count())) / static_cast<double>(block_length());
}

std::uint64_t Codebook::digest() const {
    std::ostringstream os;
    save_codebook(*this, os);
    return fnv1a64(os.str());
}

namespace {

void write_partition(const ClassPartition& p, std::ostream& os) {
    os << "partition " << to_string(p.kind);
    if (p.kind == PartitionKind::message_wise)
        for (std::size_t s : p.class_sizes) os << ' ' << s;
    else
        for (unsigned b : p.bit_lengths) os << ' ' << b;
    os << '\n';
}

ClassPartition read_partition(std::istream& is) {
    std::string word, kind;
    is >> word >> kind;
    if (word != "partition") throw std::runtime_error("codebook: expected partition line");
    std::string rest;
    std::getline(is, rest);
    std::istringstream fields(rest);
    if (kind == "message_wise") {
        std::vector<std::size_t> sizes;
        std::size_t v;
        while (fields >> v) sizes.push_back(v);
        return ClassPartition::message_wise(std::move(sizes));
    }
    std::vector<unsigned> bits;
    unsigned v;
    while (fields >> v) bits.push_back(v);
    if (kind == "bit_wise") return ClassPartition::bit_wise(std::move(bits));
    if (kind == "progressive_bit_wise") return ClassPartition::progressive(std::move(bits));
    throw std::runtime_error("codebook: unknown partition kind '" + kind + "'");
}

}  // namespace

void save_codebook(const Codebook& cb, std::ostream& os) {
    char buf[40];
    os << "uepsim-codebook v1\n";
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(cb.config_digest));
    os << "provenance " << to_string(cb.provenance) << ' ' << buf;
    if (!cb.note.empty()) os << ' ' << cb.note;
    os << '\n';
    os << "size " << cb.codewords.rows << ' ' << cb.codewords.cols << '\n';
    write_partition(cb.partition, os);
    for (std::size_t r = 0; r < cb.codewords.rows; ++r) {
        for (std::size_t c = 0; c < cb.codewords.cols; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", cb.codewords(r, c));
            os << (c ? " " : "") << buf;
        }
        os << '\n';
    }
}

void save_codebook(const Codebook& cb, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    save_codebook(cb, os);
}

Codebook load_codebook(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "uepsim-codebook v1")
        throw std::runtime_error("codebook: unrecognized header");

    Codebook cb;
    std::string word, prov, digest;
    is >> word >> prov >> digest;
    if (word != "provenance") throw std::runtime_error("codebook: expected provenance line");
    if (prov == "trained-ae")
        cb.provenance = Provenance::trained_ae;
    else if (prov == "coset")
        cb.provenance = Provenance::coset;
    else if (prov == "superposition")
        cb.provenance = Provenance::superposition;
    else
        throw std::runtime_error("codebook: unknown provenance '" + prov + "'");
    cb.config_digest = std::stoull(digest, nullptr, 16);
    std::getline(is, line);
    if (!line.empty() && line[0] == ' ') line.erase(0, 1);
    cb.note = line;

    std::size_t M, n;
    is >> word >> M >> n;
    if (word != "size") throw std::runtime_error("codebook: expected size line");
    std::getline(is, line);

    cb.partition = read_partition(is);

    cb.codewords = Matrix(M, n);
    for (std::size_t r = 0; r < M; ++r)
        for (std::size_t c = 0; c < n; ++c)
            if (!(is >> cb.codewords(r, c)))
                throw std::runtime_error("codebook: truncated codeword matrix");
    return cb;
}

Codebook load_codebook(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return load_codebook(is);
}

}  // namespace uep
