// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include "strokesynth/encoder.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "strokesynth/errors.hpp"

namespace strokesynth {

namespace {

constexpr std::int64_t kToyChannels[5] = {3, 8, 16, 32, 64};

Tensor unit_normalize(const Tensor& v, const char* what) {
    Tensor n2 = ops::reduce_sum(ops::mul(v, v));
    if (n2.values()[0] < 1e-20f) {
        throw DegenerateInputError(std::string(what) + ": embedding collapsed to zero");
    }
    const Tensor n = ops::reshape(ops::sqrt(n2), {1});
    return ops::div(v, n);
}

} // namespace

ToyEncoder::ToyEncoder(std::uint64_t seed, std::int64_t input_size) : input_size_(input_size) {
    if (input_size < 16) {
        throw ConfigError("ToyEncoder: input size must be at least 16");
    }
    Pcg32 rng(seed);
    for (int layer = 0; layer < 4; ++layer) {
        const std::int64_t out_ch = kToyChannels[layer + 1];
        const std::int64_t in_ch = kToyChannels[layer];
        const float gain = std::sqrt(2.0f / static_cast<float>(in_ch * 9));
        std::vector<float> w(static_cast<std::size_t>(out_ch * in_ch * 9));
        for (auto& x : w) {
            x = rng.next_normal() * gain;
        }
        weights_.push_back(Tensor::from_data({out_ch, in_ch, 3, 3}, std::move(w)));
    }
}

std::vector<Tensor> ToyEncoder::forward_blocks(const Tensor& img) const {
    if (img.shape() != Shape{3, input_size_, input_size_}) {
        std::ostringstream msg;
        msg << "ToyEncoder: expected (3," << input_size_ << "," << input_size_ << ") input";
        throw ShapeError(msg.str());
    }
    ops::Conv2dSpec spec;
    spec.stride_h = spec.stride_w = 2;
    spec.pad_h = spec.pad_w = 1;
    Tensor x = ops::reshape(img, {1, 3, input_size_, input_size_});
    x = ops::mul(ops::add(x, -0.5f), 2.0f); // mean 0.5, std 0.5
    std::vector<Tensor> blocks;
    for (const Tensor& w : weights_) {
        x = ops::relu(ops::conv2d(x, w, spec));
        blocks.push_back(x);
    }
    return blocks;
}

Tensor ToyEncoder::embed(const Tensor& img) const {
    const std::vector<Tensor> blocks = forward_blocks(img);
    Tensor gap = ops::reduce_mean(blocks[3], {2, 3});
    gap = ops::reshape(gap, {64});
    return unit_normalize(gap, "ToyEncoder::embed");
}

std::vector<std::pair<std::string, Tensor>> ToyEncoder::taps(const Tensor& img) const {
    const std::vector<Tensor> blocks = forward_blocks(img);
    std::vector<std::pair<std::string, Tensor>> out;
    for (int b = 0; b < 3; ++b) {
        const Shape& s = blocks[static_cast<std::size_t>(b)].shape();
        out.emplace_back("block" + std::to_string(b + 1),
                         ops::reshape(blocks[static_cast<std::size_t>(b)], {s[1], s[2], s[3]}));
    }
    return out;
}

TextEmbedding load_text_embedding(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("load_text_embedding: cannot open " + path);
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("load_text_embedding: " + path + ": " + e.what());
    }
    try {
        const auto dim = doc.at("dim").get<std::int64_t>();
        auto values = doc.at("embedding").get<std::vector<float>>();
        if (dim < 1 || static_cast<std::int64_t>(values.size()) != dim) {
            throw ParseError("load_text_embedding: dim does not match embedding length");
        }
        TextEmbedding out;
        out.model = doc.value("model", "");
        out.embedding =
            unit_normalize(Tensor::from_data({dim}, std::move(values)), "load_text_embedding");
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("load_text_embedding: " + path + ": " + e.what());
    }
}

std::vector<std::int64_t> sample_locations(std::int64_t available, std::int64_t m, Pcg32& rng) {
    if (available < 1) {
        throw ConfigError("sample_locations: nothing to sample from");
    }
    if (m < 1 || m > kMaxFeatureLocations) {
        throw ConfigError("sample_locations: count must be in [1, 1024]");
    }
    std::vector<std::int64_t> idx(static_cast<std::size_t>(available));
    for (std::int64_t i = 0; i < available; ++i) {
        idx[static_cast<std::size_t>(i)] = i;
    }
    if (m >= available) {
        return idx;
    }
    for (std::int64_t i = 0; i < m; ++i) {
        const std::int64_t j =
            i + static_cast<std::int64_t>(rng.next_below(static_cast<std::uint32_t>(available - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(m));
    return idx;
}

FeatureSet sample_features(const std::vector<std::pair<std::string, Tensor>>& maps, std::int64_t m,
                           Pcg32& rng) {
    FeatureSet out;
    for (const auto& [name, map] : maps) {
        if (map.shape().size() != 3) {
            throw ShapeError("sample_features: maps must be (C,H,W)");
        }
        FeatureSet::Layer layer;
        layer.name = name;
        layer.coords = sample_locations(map.shape()[1] * map.shape()[2], m, rng);
        layer.features = ops::gather_hw(map, layer.coords);
        out.layers.push_back(std::move(layer));
    }
    return out;
}

FeatureSet gather_features(const std::vector<std::pair<std::string, Tensor>>& maps,
                           const FeatureSet& like) {
    if (maps.size() != like.layers.size()) {
        throw ShapeError("gather_features: layer count mismatch");
    }
    FeatureSet out;
    for (std::size_t k = 0; k < maps.size(); ++k) {
        if (maps[k].first != like.layers[k].name) {
            throw ShapeError("gather_features: layer name mismatch at index " + std::to_string(k));
        }
        FeatureSet::Layer layer;
        layer.name = like.layers[k].name;
        layer.coords = like.layers[k].coords;
        layer.features = ops::gather_hw(maps[k].second, layer.coords);
        out.layers.push_back(std::move(layer));
    }
    return out;
}

} // namespace strokesynth
