#pragma once

#include <bitset>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "uep/partition.hpp"

// Independent oracles for the label/loss machinery. These deliberately take a
// different route than the production code: messages become binary STRINGS via
// std::bitset and submessages are compared as substrings.
namespace oracle {

inline std::string bit_string(std::size_t m, unsigned k) {
    return std::bitset<32>(m).to_string().substr(32 - k);
}

inline unsigned total_bits(const std::vector<unsigned>& ks) {
    unsigned k = 0;
    for (unsigned b : ks) k += b;
    return k;
}

// Messages whose j-th submessage (as a substring) matches that of m.
inline std::vector<std::uint32_t> bitwise_support(std::size_t m, const std::vector<unsigned>& ks,
                                                  std::size_t j) {
    const unsigned k = total_bits(ks);
    unsigned off = 0;
    for (std::size_t i = 0; i < j; ++i) off += ks[i];
    const std::string target = bit_string(m, k).substr(off, ks[j]);
    std::vector<std::uint32_t> support;
    for (std::size_t mm = 0; mm < (std::size_t{1} << k); ++mm)
        if (bit_string(mm, k).substr(off, ks[j]) == target)
            support.push_back(static_cast<std::uint32_t>(mm));
    return support;
}

// Messages whose first i+1 submessages (prefix substring) match those of m.
inline std::vector<std::uint32_t> progressive_support(std::size_t m,
                                                      const std::vector<unsigned>& ks,
                                                      std::size_t i) {
    const unsigned k = total_bits(ks);
    unsigned prefix = 0;
    for (std::size_t j = 0; j <= i; ++j) prefix += ks[j];
    const std::string target = bit_string(m, k).substr(0, prefix);
    std::vector<std::uint32_t> support;
    for (std::size_t mm = 0; mm < (std::size_t{1} << k); ++mm)
        if (bit_string(mm, k).substr(0, prefix) == target)
            support.push_back(static_cast<std::uint32_t>(mm));
    return support;
}

// Literal compound loss evaluated from scratch over oracle supports.
inline double bitwise_loss(std::size_t m, const std::vector<unsigned>& ks,
                           const std::vector<double>& lambdas, const std::vector<double>& b,
                           bool progressive) {
    double total = 0.0;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        const auto support =
            progressive ? progressive_support(m, ks, j) : bitwise_support(m, ks, j);
        double term = 0.0;
        for (std::uint32_t i : support) term -= std::log(std::max(b[i], 1e-30));
        total += lambdas[j] * term;
    }
    return total;
}

inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace oracle

namespace testutil {

// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() /
               (name + "-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
};

inline std::vector<double> random_simplex_point(std::mt19937_64& gen, std::size_t M) {
    std::uniform_real_distribution<double> u(0.1, 4.0);
    std::vector<double> b(M);
    double sum = 0.0;
    for (double& x : b) {
        x = u(gen);
        sum += x;
    }
    for (double& x : b) x /= sum;
    return b;
}

}  // namespace testutil
