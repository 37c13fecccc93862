#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "gradcheck.hpp"
#include "viforecast/backbone.hpp"
#include "viforecast/checkpoint.hpp"

using namespace viforecast;

namespace {

Image random_image(int w, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Image img(w, w);
    for (auto& v : img.data()) v = n(rng);
    return img;
}

bool params_equal(const Parameters& a, const Parameters& b) {
    const auto ta = tensors(a);
    const auto tb = tensors(b);
    if (ta.size() != tb.size()) return false;
    for (std::size_t k = 0; k < ta.size(); ++k) {
        if (ta[k].name != tb[k].name || ta[k].shape != tb[k].shape) return false;
        if (!std::equal(ta[k].data.begin(), ta[k].data.end(), tb[k].data.begin())) return false;
    }
    return true;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("viforecast_test_" + name);
}

}  // namespace

TEST_CASE("patchify shapes and inverse") {
    std::mt19937_64 rng(1);
    const Image big = random_image(224, rng);
    const Matrix p = patchify(big, 16);
    CHECK(p.rows() == 196);
    CHECK(p.cols() == 768);
    CHECK(unpatchify(p, 16, 224) == big);

    const Image small = random_image(32, rng);
    const Matrix q = patchify(small, 8);
    CHECK(q.rows() == 16);
    CHECK(q.cols() == 192);
    CHECK(unpatchify(q, 8, 32) == small);
    // Second patch of the first row starts at pixel (0, 8), channel-fastest.
    CHECK(q(1, 0) == small.at(0, 8, 0));
    CHECK(q(1, 2) == small.at(0, 8, 2));
    CHECK(q(1, 3) == small.at(0, 9, 0));
    CHECK(q(4, 0) == small.at(8, 0, 0));
    CHECK(q(0, 8 * 3) == small.at(1, 0, 0));

    CHECK_THROWS(patchify(small, 5));
}

TEST_CASE("config validation and presets") {
    CHECK_NOTHROW(ModelConfig::desk().validate());
    CHECK_NOTHROW(ModelConfig::full_size().validate());
    ModelConfig c = ModelConfig::desk();
    c.heads = 4;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ModelConfig::desk();
    c.enc_heads = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ModelConfig::desk();
    c.patch = 5;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    const auto full = ModelConfig::full_size();
    CHECK(full.width == 224);
    CHECK(full.patch == 16);
    const double count = static_cast<double>(parameter_count(full));
    CHECK(count >= 112e6 * 0.95);
    CHECK(count <= 112e6 * 1.05);
}

TEST_CASE("positional table") {
    const Matrix t = sincos_position_table(4, 16);
    CHECK(t.rows() == 16);
    CHECK(t.cols() == 16);
    // Patch 0 sits at (0, 0): sines vanish and cosines are one.
    for (int j = 0; j < 4; ++j) {
        CHECK(t(0, j) == 0.0);
        CHECK(t(0, 4 + j) == 1.0);
    }
    // First half follows the column, second half the row.
    CHECK(t(1, 0) == doctest::Approx(std::sin(1.0)));
    CHECK(t(1, 8) == 0.0);
    CHECK(t(4, 0) == 0.0);
    CHECK(t(4, 8) == doctest::Approx(std::sin(1.0)));
    CHECK(sincos_position_table(4, 16) == t);
}

TEST_CASE("forward shapes, copy-through and determinism") {
    const ModelConfig cfg = ModelConfig::desk();
    const Parameters p = init_random(cfg);
    std::mt19937_64 rng(2);
    const Image img = random_image(32, rng);
    const PatchMask mask = PatchMask::right_half(4);
    const auto out = forward(img, mask, p, cfg);
    REQUIRE(out.size() == 9);
    for (const auto& o : out) {
        CHECK(o.height() == 32);
        CHECK(o.width() == 32);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 16; ++x)
                for (int c = 0; c < 3; ++c) REQUIRE(o.at(y, x, c) == img.at(y, x, c));
    }
    const auto again = forward(img, mask, p, cfg);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == again[i]);

    CHECK_THROWS_AS(forward(img, PatchMask::right_half(2), p, cfg), ShapeError);
    CHECK_THROWS_AS(forward(Image(16, 16), mask, p, cfg), ShapeError);
}

TEST_CASE("batched forward matches single-image forward") {
    const ModelConfig cfg = ModelConfig::desk();
    const Parameters p = init_random(cfg);
    Backbone model(cfg, p);
    std::mt19937_64 rng(3);
    std::vector<Image> imgs;
    for (int i = 0; i < 3; ++i) imgs.push_back(random_image(32, rng));
    std::vector<const Image*> ptrs{&imgs[0], &imgs[1], &imgs[2]};
    const PatchMask mask = PatchMask::right_half(4);
    const BatchOutput out = model.forward_batch(ptrs, mask);
    for (int b = 0; b < 3; ++b) {
        const auto single = forward(imgs[static_cast<std::size_t>(b)], mask, p, cfg);
        const auto composed = model.compose(out, b, imgs[static_cast<std::size_t>(b)], mask);
        for (std::size_t h = 0; h < single.size(); ++h) {
            for (std::size_t i = 0; i < single[h].data().size(); ++i)
                REQUIRE(std::abs(single[h].data()[i] - composed[h].data()[i]) < 1e-12);
        }
    }
}

TEST_CASE("masked patches never influence the output") {
    const ModelConfig cfg = ModelConfig::desk();
    const Parameters p = init_random(cfg);
    Backbone model(cfg, p);
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        PatchMask mask(4);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) mask.set(r, c, coin(rng) == 1);
        mask.set(0, 0, false);
        mask.set(3, 3, true);
        Image a = random_image(32, rng);
        Image b = a;
        std::normal_distribution<double> n(0, 10);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                if (mask.masked(y / 8, x / 8))
                    for (int c = 0; c < 3; ++c) b.at(y, x, c) = n(rng);
        const Image* pa = &a;
        const Image* pb = &b;
        const auto oa = model.forward_batch(std::span<const Image* const>(&pa, 1), mask);
        const auto ob = model.forward_batch(std::span<const Image* const>(&pb, 1), mask);
        for (std::size_t h = 0; h < oa.masked.size(); ++h) REQUIRE(oa.masked[h] == ob.masked[h]);
    }
}

TEST_CASE("equal heads give identical outputs") {
    const ModelConfig cfg = ModelConfig::desk();
    Parameters p = init_random(cfg);
    for (auto& h : p.heads) h = p.heads[0];
    std::mt19937_64 rng(5);
    const auto out = forward(random_image(32, rng), PatchMask::right_half(4), p, cfg);
    for (const auto& o : out) CHECK(o == out[0]);
}

TEST_CASE("random init is seeded") {
    ModelConfig cfg = ModelConfig::desk();
    const Parameters a = init_random(cfg);
    const Parameters b = init_random(cfg);
    CHECK(params_equal(a, b));
    cfg.seed = 1;
    CHECK_FALSE(params_equal(a, init_random(cfg)));

    for (const auto& t : tensors(a)) {
        const bool is_bias = t.name.ends_with(".bias");
        for (double v : t.data) {
            if (is_bias) REQUIRE(v == 0.0);
            else if (t.name.find("norm") == std::string::npos) REQUIRE(std::abs(v) <= 0.04);
        }
    }
    const auto specs = tensor_specs(cfg);
    const auto refs = tensors(a);
    REQUIRE(specs.size() == refs.size());
    std::int64_t total = 0;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        CHECK(specs[k].name == refs[k].name);
        CHECK(specs[k].shape == refs[k].shape);
        total += static_cast<std::int64_t>(refs[k].data.size());
    }
    CHECK(total == parameter_count(cfg));
}

TEST_CASE("analytic gradients match finite differences") {
    const auto results = gradcheck::run(17);
    CHECK(results.size() > 10);
    for (const auto& r : results) {
        INFO(r.name, " rel error ", r.rel_error, " grad norm ", r.grad_norm);
        CHECK(r.rel_error < 1e-3);
    }
}

TEST_CASE("checkpoint round trip") {
    const ModelConfig cfg = ModelConfig::desk();
    const Parameters p = init_random(cfg);
    const auto path = temp_path("ckpt.bin");
    save_checkpoint(path, cfg, p);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.config == cfg);
    CHECK(params_equal(back.params, p));

    const auto path2 = temp_path("ckpt2.bin");
    save_checkpoint(path2, back.config, back.params);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), {});
    const std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("pretrained loading maps names and copies the head") {
    ModelConfig cfg = ModelConfig::desk();
    const Parameters src = init_random(cfg);
    // Write an archive in the single-head masked-autoencoder layout.
    TensorArchive ar;
    auto put = [&](const std::string& name, std::vector<std::int64_t> shape, std::vector<double> values) {
        ar.tensors[name] = StoredTensor{std::move(shape), std::move(values)};
        ar.order.push_back(name);
    };
    for (const auto& t : tensors(src)) {
        std::string name = t.name;
        if (name.starts_with("head.")) {
            if (!name.starts_with("head.0.")) continue;
            name = "decoder_pred" + name.substr(6);
        } else if (name.starts_with("patch_embed.")) {
            continue;
        } else if (name.starts_with("enc.")) {
            name = "blocks." + name.substr(4);
        } else if (name.starts_with("dec.")) {
            name = "decoder_blocks." + name.substr(4);
        } else if (name.starts_with("enc_norm.")) {
            name = "norm." + name.substr(9);
        } else if (name.starts_with("dec_norm.")) {
            name = "decoder_norm." + name.substr(9);
        } else if (name.starts_with("dec_embed.")) {
            name = "decoder_embed." + name.substr(10);
        } else if (name == "mask_token") {
            put(name, {1, 1, static_cast<std::int64_t>(t.data.size())}, {t.data.begin(), t.data.end()});
            continue;
        }
        put(name, t.shape, {t.data.begin(), t.data.end()});
    }
    // Convolutional patch embedding (D, C, S, S).
    const int d = cfg.enc_dim, s = cfg.patch;
    std::vector<double> conv(static_cast<std::size_t>(d * 3 * s * s));
    for (int o = 0; o < d; ++o)
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x)
                    conv[static_cast<std::size_t>(((o * 3 + c) * s + y) * s + x)] =
                        src.patch_embed.weight(o, (y * s + x) * 3 + c);
    put("patch_embed.proj.weight", {d, 3, s, s}, conv);
    put("patch_embed.proj.bias", {d}, {src.patch_embed.bias.data(), src.patch_embed.bias.data() + d});
    put("cls_token", {1, 1, d}, std::vector<double>(static_cast<std::size_t>(d), 0.5));
    put("pos_embed", {1, 17, d}, std::vector<double>(static_cast<std::size_t>(17 * d), 0.0));

    const auto path = temp_path("pretrained.bin");
    write_archive(path, ar);
    const Parameters loaded = init_from_pretrained(path, cfg);
    CHECK(loaded.patch_embed.weight == src.patch_embed.weight);
    CHECK(loaded.mask_token == src.mask_token);
    CHECK(loaded.enc_norm.weight == src.enc_norm.weight);
    for (const auto& h : loaded.heads) {
        CHECK(h.weight == src.heads[0].weight);
        CHECK(h.bias == src.heads[0].bias);
    }

    ModelConfig wrong = cfg;
    wrong.dec_dim = 36;
    wrong.dec_heads = 4;
    try {
        init_from_pretrained(path, wrong);
        FAIL("expected a shape error");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("dec") != std::string::npos);
    }
    std::filesystem::remove(path);

    CHECK(map_pretrained_name("blocks.3.attn.qkv.weight") == "enc.3.attn.qkv.weight");
    CHECK(map_pretrained_name("decoder_pred.weight") == "head.weight");
    CHECK(map_pretrained_name("cls_token").empty());
}

TEST_CASE("checkpoint shape mismatch is reported") {
    const ModelConfig cfg = ModelConfig::desk();
    Parameters p = init_random(cfg);
    p.heads[2].bias.resize(5);
    p.heads[2].bias.setZero();
    const auto path = temp_path("bad.bin");
    save_checkpoint(path, cfg, p);
    CHECK_THROWS_AS(load_checkpoint(path), ShapeError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(temp_path("missing.bin")), Error);
}
