#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "uep/matrix.hpp"
#include "uep/partition.hpp"

namespace uep {

enum class Provenance { trained_ae, coset, superposition };

const char* to_string(Provenance p);

// The encoder mapping materialized: M codewords of length n plus the class
// structure they were built for.
struct Codebook {
    Matrix codewords;  // M x n
    ClassPartition partition;
    Provenance provenance = Provenance::trained_ae;
    std::uint64_t config_digest = 0;
    std::string note;  // free-form provenance detail (e.g. normalization mode, mu)

    std::size_t message_count() const { return codewords.rows; }
    std::size_t block_length() const { return codewords.cols; }
    // Rate in bits per channel use, log2(M)/n.
    double rate() const;
    std::uint64_t digest() const;
};

// Plain-text matrix format: a version line, provenance, dimensions, the
// partition descriptor, then M rows of n decimal floats printed with 17
// significant digits (value-exact round trip).
void save_codebook(const Codebook& cb, std::ostream& os);
void save_codebook(const Codebook& cb, const std::string& path);
Codebook load_codebook(std::istream& is);
Codebook load_codebook(const std::string& path);

}  // namespace uep
