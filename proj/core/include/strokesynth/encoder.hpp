// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "strokesynth/rng.hpp"
#include "strokesynth/tensor.hpp"

namespace strokesynth {

inline constexpr std::int64_t kMaxFeatureLocations = 1024;

/// Maps an image to a unit-length embedding vector, differentiably.
class ImageEncoder {
public:
    virtual ~ImageEncoder() = default;
    virtual std::int64_t input_size() const = 0;
    virtual std::int64_t embed_dim() const = 0;
    /// img: (3, input_size, input_size), values in [0,1]. Returns a unit (D,)
    /// vector on img's tape. Throws DegenerateInputError when the raw
    /// embedding is the zero vector.
    virtual Tensor embed(const Tensor& img) const = 0;
};

/// Exposes named intermediate feature maps of an encoder, differentiably.
class StyleFeatureExtractor {
public:
    virtual ~StyleFeatureExtractor() = default;
    virtual std::int64_t input_size() const = 0;
    /// img: (3, input_size, input_size). Returns (name, map (C,H,W)) pairs in
    /// a fixed order, on img's tape.
    virtual std::vector<std::pair<std::string, Tensor>> taps(const Tensor& img) const = 0;
};

/// Seeded four-block convnet (3x3 stride-2 convs, channels 8/16/32/64, ReLU,
/// no bias). Weights come from one PCG32 stream: layer by layer, each kernel
/// element in (out,in,kh,kw) row-major order, value = normal * sqrt(2/fan_in).
/// Inputs are normalized with mean 0.5 / std 0.5. The embedding is the
/// L2-normalized global average of the last block; style taps are the
/// post-ReLU maps of blocks 1-3.
class ToyEncoder : public ImageEncoder, public StyleFeatureExtractor {
public:
    explicit ToyEncoder(std::uint64_t seed, std::int64_t input_size = 224);

    std::int64_t input_size() const override { return input_size_; }
    std::int64_t embed_dim() const override { return 64; }
    Tensor embed(const Tensor& img) const override;
    std::vector<std::pair<std::string, Tensor>> taps(const Tensor& img) const override;

    /// Kernel tensors in layer order, for determinism checks.
    const std::vector<Tensor>& weights() const { return weights_; }

private:
    std::vector<Tensor> forward_blocks(const Tensor& img) const;

    std::int64_t input_size_;
    std::vector<Tensor> weights_;
};

/// Precomputed text embedding: JSON {"model": string, "dim": int,
/// "embedding": [f32...]}, re-normalized to unit length on load.
struct TextEmbedding {
    std::string model;
    Tensor embedding; // (dim,), unit length
};

TextEmbedding load_text_embedding(const std::string& path);

/// Per-layer feature vectors sampled at shared spatial locations.
struct FeatureSet {
    struct Layer {
        std::string name;
        Tensor features;                    // (M, C), differentiable
        std::vector<std::int64_t> coords;   // flat row-major H*W indices
    };
    std::vector<Layer> layers;
};

/// m distinct indices drawn uniformly from [0, available) by partial
/// Fisher-Yates; when m >= available, all indices in row-major order.
std::vector<std::int64_t> sample_locations(std::int64_t available, std::int64_t m, Pcg32& rng);

/// Samples up to m locations per layer and gathers the channel vectors.
FeatureSet sample_features(const std::vector<std::pair<std::string, Tensor>>& maps,
                           std::int64_t m, Pcg32& rng);

/// Gathers from maps at the coordinates of a previously sampled set, so a
/// paired image reuses the exact same locations.
FeatureSet gather_features(const std::vector<std::pair<std::string, Tensor>>& maps,
                           const FeatureSet& like);

} // namespace strokesynth
