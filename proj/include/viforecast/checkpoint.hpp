#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "viforecast/backbone.hpp"

namespace viforecast {

/// A named tensor as stored on disk.
struct StoredTensor {
    std::vector<std::int64_t> shape;
    std::vector<double> values;
};

/// Flat tensor archive: an 8-byte magic, a little-endian u64 manifest length,
/// a JSON manifest {"config": ..., "tensors": {name: {shape, dtype, offset}}}
/// and the raw tensor bytes. dtype is "float64" (written) or "float32"
/// (accepted on read).
struct TensorArchive {
    std::string config_json;  // serialized model config, may be empty
    std::map<std::string, StoredTensor> tensors;
    std::vector<std::string> order;  // write order of `tensors`
};

void write_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive read_archive(const std::filesystem::path& path);

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config, const Parameters& params);

struct Checkpoint {
    ModelConfig config;
    Parameters params;
};

/// Reads a checkpoint written by save_checkpoint; the stored config is
/// authoritative.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Canonical parameter name for a tensor in a standard masked-autoencoder
/// checkpoint (`blocks.3.attn.qkv.weight` -> `enc.3.attn.qkv.weight`,
/// `decoder_pred.weight` -> `head.weight`, ...). Returns an empty string for
/// tensors with no counterpart (class token, stored positional tables).
std::string map_pretrained_name(const std::string& name);

/// Loads trunk weights from a pretrained archive and initializes every
/// quantile head as a copy of the single pretrained reconstruction head.
/// Throws ShapeError naming the first mismatching tensor; no partial state
/// escapes.
Parameters init_from_pretrained(const std::filesystem::path& path, const ModelConfig& config);

}  // namespace viforecast
