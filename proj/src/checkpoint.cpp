#include "viforecast/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <regex>
#include <set>

namespace viforecast {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'V', 'F', 'C', 'K', 'P', 'T', '\0', '\1'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const std::vector<std::int64_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

}  // namespace

void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
    json manifest;
    manifest["format"] = "viforecast-tensors";
    manifest["version"] = 1;
    manifest["config"] = archive.config_json.empty() ? json(nullptr) : json::parse(archive.config_json);
    json entries = json::object();
    std::uint64_t offset = 0;
    for (const auto& name : archive.order) {
        const auto& t = archive.tensors.at(name);
        if (element_count(t.shape) != static_cast<std::int64_t>(t.values.size())) {
            throw ShapeError("tensor " + name + " has " + std::to_string(t.values.size()) +
                             " values for shape " + shape_string(t.shape));
        }
        entries[name] = {{"shape", t.shape}, {"dtype", "float64"}, {"offset", offset}};
        offset += t.values.size() * sizeof(double);
    }
    manifest["tensors"] = entries;
    const std::string text = manifest.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    const std::uint64_t len = text.size();
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& name : archive.order) {
        const auto& v = archive.tensors.at(name).values;
        out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    if (!out) {
        throw DataError("failed writing " + path.string());
    }
}

TensorArchive read_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    char magic[8];
    std::uint64_t len = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw DataError(path.string() + " is not a tensor archive");
    }
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    const auto data_start = in.tellg();
    json manifest;
    try {
        manifest = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": bad manifest: " + e.what());
    }
    TensorArchive archive;
    if (manifest.contains("config") && !manifest["config"].is_null()) {
        archive.config_json = manifest["config"].dump();
    }
    std::vector<std::pair<std::uint64_t, std::string>> by_offset;
    for (const auto& [name, entry] : manifest.at("tensors").items()) {
        StoredTensor t;
        t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
        const auto dtype = entry.at("dtype").get<std::string>();
        const auto offset = entry.at("offset").get<std::uint64_t>();
        const auto n = static_cast<std::size_t>(element_count(t.shape));
        in.seekg(data_start + static_cast<std::streamoff>(offset));
        t.values.resize(n);
        if (dtype == "float64") {
            in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(n * sizeof(double)));
        } else if (dtype == "float32") {
            std::vector<float> buf(n);
            in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
            std::copy(buf.begin(), buf.end(), t.values.begin());
        } else {
            throw DataError("tensor " + name + " has unsupported dtype " + dtype);
        }
        if (!in) {
            throw DataError("tensor " + name + " is truncated in " + path.string());
        }
        by_offset.emplace_back(offset, name);
        archive.tensors.emplace(name, std::move(t));
    }
    std::sort(by_offset.begin(), by_offset.end());
    for (auto& [off, name] : by_offset) archive.order.push_back(name);
    return archive;
}

std::string config_to_json(const ModelConfig& c) {
    json j = {{"width", c.width},         {"patch", c.patch},         {"enc_dim", c.enc_dim},
              {"enc_depth", c.enc_depth}, {"enc_heads", c.enc_heads}, {"dec_dim", c.dec_dim},
              {"dec_depth", c.dec_depth}, {"dec_heads", c.dec_heads}, {"mlp_ratio", c.mlp_ratio},
              {"heads", c.heads},         {"seed", c.seed}};
    return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
    const json j = json::parse(text);
    ModelConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "width") c.width = value.get<int>();
        else if (key == "patch") c.patch = value.get<int>();
        else if (key == "enc_dim") c.enc_dim = value.get<int>();
        else if (key == "enc_depth") c.enc_depth = value.get<int>();
        else if (key == "enc_heads") c.enc_heads = value.get<int>();
        else if (key == "dec_dim") c.dec_dim = value.get<int>();
        else if (key == "dec_depth") c.dec_depth = value.get<int>();
        else if (key == "dec_heads") c.dec_heads = value.get<int>();
        else if (key == "mlp_ratio") c.mlp_ratio = value.get<double>();
        else if (key == "heads") c.heads = value.get<int>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else throw ConfigError("model." + key + ": unknown key");
    }
    c.validate();
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config, const Parameters& params) {
    TensorArchive archive;
    archive.config_json = config_to_json(config);
    for (const auto& t : tensors(params)) {
        archive.order.push_back(t.name);
        archive.tensors[t.name] = StoredTensor{t.shape, std::vector<double>(t.data.begin(), t.data.end())};
    }
    write_archive(path, archive);
}

namespace {

// Copies archive tensors into a fresh parameter tree. `lookup` maps canonical
// names to stored tensors (or nullptr when missing).
template <class Lookup>
Parameters fill_parameters(const ModelConfig& config, Lookup&& lookup) {
    Parameters params = Parameters::allocate(config);
    for (auto& t : tensors(params)) {
        const StoredTensor* stored = lookup(t.name);
        if (stored == nullptr) {
            throw ShapeError("checkpoint is missing tensor " + t.name);
        }
        if (stored->shape != t.shape) {
            throw ShapeError("tensor " + t.name + " has shape " + shape_string(stored->shape) + ", model expects " +
                             shape_string(t.shape));
        }
        std::copy(stored->values.begin(), stored->values.end(), t.data.begin());
    }
    return params;
}

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const TensorArchive archive = read_archive(path);
    if (archive.config_json.empty()) {
        throw DataError(path.string() + " carries no model config");
    }
    Checkpoint ck;
    ck.config = config_from_json(archive.config_json);
    ck.params = fill_parameters(ck.config, [&](const std::string& name) -> const StoredTensor* {
        auto it = archive.tensors.find(name);
        return it == archive.tensors.end() ? nullptr : &it->second;
    });
    std::set<std::string> known;
    for (const auto& spec : tensor_specs(ck.config)) known.insert(spec.name);
    for (const auto& name : archive.order) {
        if (!known.contains(name)) throw ShapeError("checkpoint has unexpected tensor " + name);
    }
    return ck;
}

std::string map_pretrained_name(const std::string& name) {
    static const std::vector<std::pair<std::regex, std::string>> rules = {
        {std::regex(R"(^patch_embed\.proj\.(weight|bias)$)"), "patch_embed.$1"},
        {std::regex(R"(^blocks\.(\d+)\.(.+)$)"), "enc.$1.$2"},
        {std::regex(R"(^norm\.(weight|bias)$)"), "enc_norm.$1"},
        {std::regex(R"(^decoder_embed\.(weight|bias)$)"), "dec_embed.$1"},
        {std::regex(R"(^decoder_blocks\.(\d+)\.(.+)$)"), "dec.$1.$2"},
        {std::regex(R"(^decoder_norm\.(weight|bias)$)"), "dec_norm.$1"},
        {std::regex(R"(^decoder_pred\.(weight|bias)$)"), "head.$1"},
        {std::regex(R"(^head\.0\.(weight|bias)$)"), "head.$1"},
        {std::regex(R"(^head\.(weight|bias)$)"), "head.$1"},
        {std::regex(R"(^head\.\d+\.(weight|bias)$)"), ""},
        {std::regex(R"(^(cls_token|pos_embed|decoder_pos_embed)$)"), ""},
    };
    for (const auto& [pattern, replacement] : rules) {
        if (std::regex_match(name, pattern)) {
            return std::regex_replace(name, pattern, replacement);
        }
    }
    return name;
}

Parameters init_from_pretrained(const std::filesystem::path& path, const ModelConfig& config) {
    config.validate();
    const TensorArchive archive = read_archive(path);
    std::map<std::string, StoredTensor> mapped;
    for (const auto& [name, stored] : archive.tensors) {
        const std::string target = map_pretrained_name(name);
        if (target.empty()) continue;
        StoredTensor t = stored;
        if (target == "patch_embed.weight" && t.shape.size() == 4) {
            // Convolution layout (D, C, S, S) -> linear (D, S*S*C), pixels row-major then channel.
            const auto d = t.shape[0], ch = t.shape[1], sy = t.shape[2], sx = t.shape[3];
            StoredTensor lin{{d, sy * sx * ch}, std::vector<double>(t.values.size())};
            for (std::int64_t o = 0; o < d; ++o)
                for (std::int64_t c = 0; c < ch; ++c)
                    for (std::int64_t y = 0; y < sy; ++y)
                        for (std::int64_t x = 0; x < sx; ++x)
                            lin.values[static_cast<std::size_t>(o * sy * sx * ch + (y * sx + x) * ch + c)] =
                                t.values[static_cast<std::size_t>(((o * ch + c) * sy + y) * sx + x)];
            t = std::move(lin);
        } else {
            // Drop leading singleton axes, e.g. a (1, 1, D) mask token.
            while (t.shape.size() > 1 && t.shape.front() == 1) t.shape.erase(t.shape.begin());
        }
        mapped[target] = std::move(t);
    }
    const std::regex head_re(R"(^head\.\d+\.(weight|bias)$)");
    return fill_parameters(config, [&](const std::string& name) -> const StoredTensor* {
        std::string key = name;
        if (std::regex_match(name, head_re)) {
            key = std::regex_replace(name, head_re, "head.$1");
        }
        auto it = mapped.find(key);
        return it == mapped.end() ? nullptr : &it->second;
    });
}

}  // namespace viforecast
