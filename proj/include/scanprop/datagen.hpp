// SPDX-License-Identifier: Apache-2.0
//
// Synthetic classification data: class-dependent Bernoulli bitstreams and
// class-shifted Gaussian feature sequences. Sample i draws from its own RNG
// stream, so generation order does not affect the result.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace scanprop::datagen {

enum class DatasetKind : std::uint8_t { bits = 0, features = 1 };

struct Dataset {
    DatasetKind kind = DatasetKind::bits;
    std::uint32_t samples = 0;
    /// Sequence length (bits) or frame count (features).
    std::uint32_t length = 0;
    /// 1 for bits, coefficients per frame for features.
    std::uint32_t channels = 1;
    std::uint64_t seed = 0;
    /// samples x length x channels; 0/1 for bits.
    std::vector<float> values;
    std::vector<std::uint8_t> labels;

    std::size_t sample_size() const noexcept { return std::size_t{length} * channels; }
    std::span<const float> sample(std::size_t i) const noexcept {
        return {values.data() + i * sample_size(), sample_size()};
    }
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Bit probability of class c.
double bit_probability(unsigned label) noexcept;

/// Throws ConfigError when length or count is zero.
Dataset gen_bitstreams(std::uint32_t length, std::uint32_t count, std::uint64_t seed);

/// N(0, 1) + 0.1 c per value, then normalized per coefficient over the whole
/// dataset to zero mean and unit variance.
Dataset gen_feature_sequences(std::uint32_t frames, std::uint32_t coefficients, std::uint32_t count,
                              std::uint32_t classes, std::uint64_t seed);

/// Binary layout: "BPDS", u32 version 1, u8 kind, u32 N, u32 T or F, u32 C,
/// u64 seed, payload (u8 bits or f32 features, row-major), u8 labels x N.
void write_dataset(std::ostream& out, const Dataset& d);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const Dataset& d);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace scanprop::datagen
