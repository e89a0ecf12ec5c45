// SPDX-License-Identifier: Apache-2.0
#include "scanprop/datagen.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "byte_io.hpp"
#include "scanprop/error.hpp"
#include "scanprop/rng.hpp"

namespace scanprop::datagen {

namespace {

constexpr std::array<char, 4> kMagic{'B', 'P', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr unsigned kBitClasses = 10;

// Stream 0 is left unused so sample streams never coincide with a plain Rng(seed).
Rng sample_rng(std::uint64_t seed, std::size_t sample) { return Rng(seed, std::uint64_t{sample} + 1); }

}  // namespace

double bit_probability(unsigned label) noexcept { return 0.05 + 0.1 * label; }

Dataset gen_bitstreams(std::uint32_t length, std::uint32_t count, std::uint64_t seed) {
    if (length == 0 || count == 0)
        throw ConfigError("bitstream length and sample count must be positive");
    Dataset d;
    d.kind = DatasetKind::bits;
    d.samples = count;
    d.length = length;
    d.channels = 1;
    d.seed = seed;
    d.values.resize(std::size_t{count} * length);
    d.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = sample_rng(seed, i);
        const auto label = static_cast<unsigned>(rng.below(kBitClasses));
        const double p = bit_probability(label);
        d.labels[i] = static_cast<std::uint8_t>(label);
        float* row = d.values.data() + i * length;
        for (std::size_t t = 0; t < length; ++t)
            row[t] = rng.bernoulli(p) ? 1.0f : 0.0f;
    }
    return d;
}

Dataset gen_feature_sequences(std::uint32_t frames, std::uint32_t coefficients, std::uint32_t count,
                              std::uint32_t classes, std::uint64_t seed) {
    if (frames == 0 || coefficients == 0 || count == 0 || classes == 0)
        throw ConfigError("frames, coefficients, sample count and classes must be positive");
    if (classes > 256)
        throw ConfigError("at most 256 classes fit the label format");
    const std::size_t per_sample = std::size_t{frames} * coefficients;
    std::vector<double> raw(per_sample * count);
    Dataset d;
    d.kind = DatasetKind::features;
    d.samples = count;
    d.length = frames;
    d.channels = coefficients;
    d.seed = seed;
    d.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = sample_rng(seed, i);
        const auto label = static_cast<unsigned>(rng.below(classes));
        d.labels[i] = static_cast<std::uint8_t>(label);
        double* row = raw.data() + i * per_sample;
        for (std::size_t k = 0; k < per_sample; ++k)
            row[k] = rng.normal() + 0.1 * label;
    }

    const double rows = static_cast<double>(std::size_t{count} * frames);
    std::vector<double> mean(coefficients, 0.0), inv_std(coefficients, 0.0);
    for (std::size_t k = 0; k < raw.size(); ++k)
        mean[k % coefficients] += raw[k];
    for (auto& m : mean)
        m /= rows;
    std::vector<double> var(coefficients, 0.0);
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const double dev = raw[k] - mean[k % coefficients];
        var[k % coefficients] += dev * dev;
    }
    for (std::size_t c = 0; c < coefficients; ++c)
        inv_std[c] = var[c] > 0.0 ? 1.0 / std::sqrt(var[c] / rows) : 1.0;
    d.values.resize(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const std::size_t c = k % coefficients;
        d.values[k] = static_cast<float>((raw[k] - mean[c]) * inv_std[c]);
    }
    return d;
}

void write_dataset(std::ostream& out, const Dataset& d) {
    using detail::put_le;
    if (d.values.size() != std::size_t{d.samples} * d.sample_size() || d.labels.size() != d.samples)
        throw FormatError("dataset arrays do not match the header");
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(d.kind));
    put_le<std::uint32_t>(out, d.samples);
    put_le<std::uint32_t>(out, d.length);
    put_le<std::uint32_t>(out, d.channels);
    put_le<std::uint64_t>(out, d.seed);
    if (d.kind == DatasetKind::bits) {
        std::vector<char> bytes(d.values.size());
        for (std::size_t k = 0; k < bytes.size(); ++k)
            bytes[k] = d.values[k] != 0.0f ? 1 : 0;
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    } else {
        for (const float v : d.values)
            put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
    out.write(reinterpret_cast<const char*>(d.labels.data()), static_cast<std::streamsize>(d.labels.size()));
    if (!out)
        throw FormatError("failed writing dataset stream");
}

Dataset read_dataset(std::istream& in) {
    auto get = [&]<typename U>(U) { return detail::get_le<U>(in, "dataset"); };
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic)
        throw FormatError("not a BPDS dataset");
    const auto version = get(std::uint32_t{});
    if (version != kVersion)
        throw FormatError(fmt::format("unsupported dataset version {}", version));
    Dataset d;
    const auto kind = get(std::uint8_t{});
    if (kind > 1)
        throw FormatError(fmt::format("unknown dataset kind {}", kind));
    d.kind = static_cast<DatasetKind>(kind);
    d.samples = get(std::uint32_t{});
    d.length = get(std::uint32_t{});
    d.channels = get(std::uint32_t{});
    d.seed = get(std::uint64_t{});
    if (d.kind == DatasetKind::bits && d.channels != 1)
        throw FormatError("bit datasets have one channel");
    const std::size_t total = std::size_t{d.samples} * d.sample_size();
    d.values.resize(total);
    if (d.kind == DatasetKind::bits) {
        std::vector<char> bytes(total);
        in.read(bytes.data(), static_cast<std::streamsize>(total));
        if (!in)
            throw FormatError("dataset stream truncated");
        for (std::size_t k = 0; k < total; ++k) {
            if (bytes[k] != 0 && bytes[k] != 1)
                throw FormatError("bit payload holds a value other than 0 or 1");
            d.values[k] = static_cast<float>(bytes[k]);
        }
    } else {
        for (auto& v : d.values)
            v = std::bit_cast<float>(get(std::uint32_t{}));
    }
    d.labels.resize(d.samples);
    in.read(reinterpret_cast<char*>(d.labels.data()), static_cast<std::streamsize>(d.samples));
    if (!in)
        throw FormatError("dataset stream truncated");
    return d;
}

void save_dataset(const std::filesystem::path& path, const Dataset& d) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(fmt::format("cannot open '{}' for writing", path.string()));
    write_dataset(out, d);
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(fmt::format("cannot open dataset '{}'", path.string()));
    return read_dataset(in);
}

}  // namespace scanprop::datagen
