// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <istream>
#include <sstream>

#include <fmt/format.h>

#include "scanprop/analysis.hpp"
#include "scanprop/error.hpp"
#include "scanprop/jacobians.hpp"
#include "scanprop/rng.hpp"

namespace scanprop::analysis {

std::size_t LayerSpec::input_size() const noexcept {
    switch (kind) {
    case LayerKind::conv3x3: return in_channels * height * width;
    case LayerKind::relu:
    case LayerKind::maxpool: return in_channels * height * width;
    case LayerKind::dense: return in_dim;
    }
    return 0;
}

std::size_t LayerSpec::output_size() const noexcept {
    switch (kind) {
    case LayerKind::conv3x3: return out_channels * height * width;
    case LayerKind::relu: return in_channels * height * width;
    case LayerKind::maxpool: return window ? in_channels * (height / window) * (width / window) : 0;
    case LayerKind::dense: return out_dim;
    }
    return 0;
}

void ChainSpec::validate() const {
    if (layers.empty())
        throw ConfigError("layer chain is empty");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto& l = layers[k];
        if (l.input_size() == 0 || l.output_size() == 0)
            throw ConfigError(fmt::format("layer {} has an empty shape", k + 1));
        if (l.kind == LayerKind::maxpool && (l.height % l.window != 0 || l.width % l.window != 0))
            throw ConfigError(fmt::format("layer {}: {}x{} input is not divisible by window {}", k + 1, l.height,
                                          l.width, l.window));
        if (l.density && !(*l.density >= 0.0 && *l.density <= 1.0))
            throw ConfigError(fmt::format("layer {}: density must lie in [0, 1]", k + 1));
        if (k > 0 && layers[k - 1].output_size() != l.input_size())
            throw ConfigError(fmt::format("layer {} expects {} inputs but layer {} produces {}", k + 1, l.input_size(),
                                          k, layers[k - 1].output_size()));
    }
}

namespace {

std::size_t to_size(const std::string& token, std::size_t line) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(token, &used);
        if (used == token.size())
            return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("chain line {}: '{}' is not a count", line, token));
}

std::optional<double> parse_density(const std::vector<std::string>& tokens, std::size_t first, std::size_t line) {
    if (tokens.size() <= first)
        return std::nullopt;
    const std::string& t = tokens[first];
    if (tokens.size() > first + 1 || t.rfind("density=", 0) != 0)
        throw ConfigError(fmt::format("chain line {}: unexpected '{}'", line, t));
    try {
        return std::stod(t.substr(8));
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("chain line {}: bad density '{}'", line, t));
    }
}

}  // namespace

ChainSpec ChainSpec::parse(std::istream& in) {
    ChainSpec chain;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        std::istringstream words(line);
        std::vector<std::string> tokens;
        for (std::string w; words >> w;)
            tokens.push_back(w);
        if (tokens.empty())
            continue;
        auto need = [&](std::size_t count) {
            if (tokens.size() < count + 1)
                throw ConfigError(fmt::format("chain line {}: '{}' needs {} numbers", line_no, tokens[0], count));
        };
        LayerSpec l;
        const std::string& kind = tokens[0];
        if (kind == "conv3x3") {
            need(4);
            l.kind = LayerKind::conv3x3;
            l.in_channels = to_size(tokens[1], line_no);
            l.out_channels = to_size(tokens[2], line_no);
            l.height = to_size(tokens[3], line_no);
            l.width = to_size(tokens[4], line_no);
            l.density = parse_density(tokens, 5, line_no);
        } else if (kind == "relu") {
            need(3);
            if (tokens.size() > 4)
                throw ConfigError(fmt::format("chain line {}: too many fields", line_no));
            l.kind = LayerKind::relu;
            l.in_channels = l.out_channels = to_size(tokens[1], line_no);
            l.height = to_size(tokens[2], line_no);
            l.width = to_size(tokens[3], line_no);
        } else if (kind == "maxpool") {
            need(4);
            if (tokens.size() > 5)
                throw ConfigError(fmt::format("chain line {}: too many fields", line_no));
            l.kind = LayerKind::maxpool;
            l.in_channels = l.out_channels = to_size(tokens[1], line_no);
            l.height = to_size(tokens[2], line_no);
            l.width = to_size(tokens[3], line_no);
            l.window = to_size(tokens[4], line_no);
        } else if (kind == "dense") {
            need(2);
            l.kind = LayerKind::dense;
            l.in_dim = to_size(tokens[1], line_no);
            l.out_dim = to_size(tokens[2], line_no);
            l.density = parse_density(tokens, 3, line_no);
        } else {
            throw ConfigError(fmt::format("chain line {}: unknown layer kind '{}'", line_no, kind));
        }
        chain.layers.push_back(l);
    }
    chain.validate();
    return chain;
}

ChainSpec ChainSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(fmt::format("cannot open chain file '{}'", path.string()));
    return parse(in);
}

ChainSpec ChainSpec::vgg11_conv() {
    ChainSpec chain;
    std::size_t size = 32;
    std::size_t channels = 3;
    auto conv = [&](std::size_t out) {
        LayerSpec c;
        c.kind = LayerKind::conv3x3;
        c.in_channels = channels;
        c.out_channels = out;
        c.height = c.width = size;
        chain.layers.push_back(c);
        LayerSpec r;
        r.kind = LayerKind::relu;
        r.in_channels = r.out_channels = out;
        r.height = r.width = size;
        chain.layers.push_back(r);
        channels = out;
    };
    auto pool = [&] {
        LayerSpec p;
        p.kind = LayerKind::maxpool;
        p.in_channels = p.out_channels = channels;
        p.height = p.width = size;
        p.window = 2;
        chain.layers.push_back(p);
        size /= 2;
    };
    conv(64);
    pool();
    conv(128);
    pool();
    conv(256);
    conv(256);
    pool();
    conv(512);
    conv(512);
    pool();
    conv(512);
    conv(512);
    pool();
    return chain;
}

std::vector<std::string> load_masks(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(fmt::format("cannot open mask file '{}'", path.string()));
    std::vector<std::string> masks;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
            line.pop_back();
        if (line.empty())
            continue;
        if (line.find_first_not_of("01") != std::string::npos)
            throw ConfigError(fmt::format("mask line {} holds characters other than 0 and 1", masks.size() + 1));
        masks.push_back(std::move(line));
    }
    return masks;
}

namespace {

// Random weights bounded away from zero so that only the mask creates zeros.
template <typename T>
std::vector<T> draw_weights(std::size_t count, std::uint64_t seed, std::size_t layer) {
    Rng rng(seed, layer);
    std::vector<T> w(count);
    for (auto& v : w) {
        const double mag = rng.uniform(0.5, 1.0);
        v = static_cast<T>(rng.bernoulli(0.5) ? mag : -mag);
    }
    return w;
}

template <typename T>
void apply_mask(std::vector<T>& w, const PruneOptions& prune, const LayerSpec& layer, std::size_t prunable,
                std::size_t layer_index) {
    if (prunable < prune.masks.size()) {
        const std::string& mask = prune.masks[prunable];
        if (mask.size() != w.size())
            throw ConfigError(fmt::format("mask {} has {} entries for {} weights", prunable + 1, mask.size(), w.size()));
        for (std::size_t k = 0; k < w.size(); ++k)
            if (mask[k] == '0')
                w[k] = T{0};
        return;
    }
    const std::optional<double> density = layer.density ? layer.density : prune.density;
    if (!density)
        return;
    if (!(*density >= 0.0 && *density <= 1.0))
        throw ConfigError("prune density must lie in [0, 1]");
    Rng rng(prune.seed, (std::uint64_t{1} << 32) + layer_index);
    for (auto& v : w)
        if (!rng.bernoulli(*density))
            v = T{0};
}

}  // namespace

template <typename T>
std::vector<sparse::CsrMatrix<T>> build_chain_jacobians(const ChainSpec& chain, const PruneOptions& prune,
                                                        std::uint64_t weight_seed) {
    chain.validate();
    std::vector<sparse::CsrMatrix<T>> out;
    out.reserve(chain.layers.size());
    std::size_t prunable = 0;
    for (std::size_t k = 0; k < chain.layers.size(); ++k) {
        const LayerSpec& l = chain.layers[k];
        switch (l.kind) {
        case LayerKind::conv3x3: {
            jacobians::ConvSpec<T> spec{l.in_channels, l.out_channels, l.height, l.width,
                                        draw_weights<T>(l.in_channels * l.out_channels * 9, weight_seed, k)};
            apply_mask(spec.weights, prune, l, prunable++, k);
            out.push_back(jacobians::conv3x3_tjac_direct(spec, true));
            break;
        }
        case LayerKind::relu: {
            const std::vector<T> positive(l.input_size(), T{1});
            out.push_back(jacobians::relu_tjac<T>(positive));
            break;
        }
        case LayerKind::maxpool: {
            jacobians::PoolSpec spec{l.in_channels, l.height, l.width, l.window, l.window, {}};
            const std::size_t ho = spec.out_height(), wo = spec.out_width();
            spec.pool_indices.resize(spec.output_size());
            for (std::size_t c = 0; c < l.in_channels; ++c)
                for (std::size_t p = 0; p < ho; ++p)
                    for (std::size_t q = 0; q < wo; ++q)
                        spec.pool_indices[(c * ho + p) * wo + q] =
                            static_cast<sparse::Index>(p * l.window * l.width + q * l.window);
            out.push_back(jacobians::maxpool_tjac<T>(spec));
            break;
        }
        case LayerKind::dense: {
            // Stored transposed: row i = input i, column j = output j.
            std::vector<T> w = draw_weights<T>(l.in_dim * l.out_dim, weight_seed, k);
            apply_mask(w, prune, l, prunable++, k);
            out.push_back(sparse::CsrMatrix<T>::from_dense(DenseMatrix<T>(l.in_dim, l.out_dim, std::move(w))));
            break;
        }
        }
    }
    return out;
}

template <typename T>
scan::ScanArray<T> chain_scan_array(const std::vector<sparse::CsrMatrix<T>>& jacobians, std::uint64_t seed) {
    if (jacobians.empty())
        throw ConfigError("layer chain is empty");
    Rng rng(seed);
    std::vector<T> grad(jacobians.back().cols());
    for (auto& g : grad)
        g = static_cast<T>(rng.normal());
    std::vector<scan::ScanElement<T>> elements;
    elements.reserve(jacobians.size() + 1);
    elements.push_back(scan::ScanElement<T>::vector(std::move(grad)));
    for (auto it = jacobians.rbegin(); it != jacobians.rend(); ++it)
        elements.push_back(scan::ScanElement<T>::sparse(*it));
    return scan::ScanArray<T>(std::move(elements));
}

#define SCANPROP_INSTANTIATE(T)                                                                                   \
    template std::vector<sparse::CsrMatrix<T>> build_chain_jacobians(const ChainSpec&, const PruneOptions&,       \
                                                                     std::uint64_t);                              \
    template scan::ScanArray<T> chain_scan_array(const std::vector<sparse::CsrMatrix<T>>&, std::uint64_t);
SCANPROP_INSTANTIATE(float)
SCANPROP_INSTANTIATE(double)
#undef SCANPROP_INSTANTIATE

}  // namespace scanprop::analysis
