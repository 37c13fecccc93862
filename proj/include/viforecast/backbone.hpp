#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "viforecast/core.hpp"
#include "viforecast/image.hpp"

namespace viforecast {

/// Masked-autoencoder hyperparameters. `heads` is the number of parallel
/// quantile reconstruction heads.
struct ModelConfig {
    int width = 32;
    int patch = 8;
    int enc_dim = 64;
    int enc_depth = 2;
    int enc_heads = 4;
    int dec_dim = 32;
    int dec_depth = 1;
    int dec_heads = 4;
    double mlp_ratio = 4.0;
    int heads = 9;
    std::uint64_t seed = 0;

    static ModelConfig desk();
    /// Base-size backbone (ViT-B/16 encoder, 8 x 512 decoder).
    static ModelConfig full_size();

    void validate() const;
    ImageGeometry geometry() const { return ImageGeometry(width, patch); }
    int patches_per_side() const { return width / patch; }
    int patch_dim() const { return patch * patch * 3; }
    int enc_hidden() const { return static_cast<int>(enc_dim * mlp_ratio); }
    int dec_hidden() const { return static_cast<int>(dec_dim * mlp_ratio); }

    bool operator==(const ModelConfig&) const = default;
};

struct LinearParams {
    Matrix weight;  // out x in
    Vector bias;
};

struct LayerNormParams {
    Vector weight;
    Vector bias;
};

struct BlockParams {
    LayerNormParams norm1;
    LinearParams qkv;
    LinearParams proj;
    LayerNormParams norm2;
    LinearParams fc1;
    LinearParams fc2;
};

/// Trainable parameter tree. Positional tables are not parameters.
struct Parameters {
    LinearParams patch_embed;
    std::vector<BlockParams> encoder;
    LayerNormParams enc_norm;
    LinearParams dec_embed;
    Vector mask_token;
    std::vector<BlockParams> decoder;
    LayerNormParams dec_norm;
    std::vector<LinearParams> heads;

    /// Zero-filled tree (norm gains one) with the shapes the config implies.
    static Parameters allocate(const ModelConfig& config);
    /// Same structure, every tensor zero.
    static Parameters zeros_like(const Parameters& other);
};

/// Named window onto one tensor of a Parameters tree, in canonical order.
template <class T>
struct BasicTensorRef {
    std::string name;
    std::vector<std::int64_t> shape;
    std::span<T> data;
    bool decay = true;  // false for biases, norm parameters and the mask token
};

using TensorRef = BasicTensorRef<double>;
using ConstTensorRef = BasicTensorRef<const double>;

std::vector<TensorRef> tensors(Parameters& params);
std::vector<ConstTensorRef> tensors(const Parameters& params);

/// Name and shape of every tensor the config implies, without allocating.
struct TensorSpec {
    std::string name;
    std::vector<std::int64_t> shape;
};
std::vector<TensorSpec> tensor_specs(const ModelConfig& config);
std::int64_t parameter_count(const ModelConfig& config);

Parameters init_random(const ModelConfig& config);

/// Fixed 2D sin-cos table (N*N x dim); first half encodes the column, second
/// half the row.
Matrix sincos_position_table(int patches_per_side, int dim);

/// (N*N) x (S*S*3), patches row-major, pixels row-major then channel.
Matrix patchify(const Image& image, int patch);
Image unpatchify(const Matrix& patches, int patch, int width);

/// Batched forward pass output over images sharing one mask. Head outputs
/// cover the masked patches only: `masked[i]` is (B * n_masked) x patch_dim
/// with rows grouped by sample, masked patches in increasing patch index.
struct BatchOutput {
    std::vector<Matrix> masked;
    int batch = 0;
    int n_masked = 0;
};

struct LayerNormCache {
    Matrix xhat;
    Vector rstd;
};

struct BlockCache {
    LayerNormCache ln1;
    Matrix h1;
    Matrix qkv;
    std::vector<Matrix> probs;  // one (seq x seq) per sample and attention head
    Matrix attn;
    LayerNormCache ln2;
    Matrix h2;
    Matrix pre;
    Matrix act;
};

/// Activations retained by forward_batch for the backward pass.
struct ForwardCache {
    int batch = 0;
    std::vector<int> visible;
    std::vector<int> masked;
    Matrix patches;  // (B * n_visible) x patch_dim
    std::vector<BlockCache> encoder;
    LayerNormCache enc_norm;
    Matrix enc_out;
    std::vector<BlockCache> decoder;
    LayerNormCache dec_norm;
    Matrix dec_masked;  // (B * n_masked) x dec_dim
};

class Backbone {
public:
    Backbone(const ModelConfig& config, const Parameters& params);

    const ModelConfig& config() const { return config_; }
    const Parameters& params() const { return *params_; }

    BatchOutput forward_batch(std::span<const Image* const> images, const PatchMask& mask,
                              ForwardCache* cache = nullptr) const;

    /// Accumulates parameter gradients given d loss / d head outputs
    /// (same layout as BatchOutput::masked).
    void backward(const ForwardCache& cache, const std::vector<Matrix>& grad_masked, Parameters& grads) const;

    /// Per-head images: head pixels on masked patches, input pixels elsewhere.
    std::vector<Image> compose(const BatchOutput& out, int sample, const Image& input, const PatchMask& mask) const;

private:
    ModelConfig config_;
    const Parameters* params_;
    Matrix enc_pos_;
    Matrix dec_pos_;
};

/// Single-image convenience wrapper: h reconstructed W x W x 3 images.
std::vector<Image> forward(const Image& image, const PatchMask& mask, const Parameters& params,
                           const ModelConfig& config);

}  // namespace viforecast
