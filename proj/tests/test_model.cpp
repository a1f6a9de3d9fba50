#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fcvae/errors.hpp"
#include "fcvae/model.hpp"
#include "fcvae/nn/ops.hpp"
#include "grad_check.hpp"
#include "reference_model.hpp"

using namespace fcvae;
using namespace fcvae::testing;
using nn::NoiseSource;
using nn::Tensor;

namespace {

FcvaeConfig tiny(std::size_t w = 8, std::size_t k = 4, std::size_t s = 2) {
    FcvaeConfig c;
    c.window = w;
    c.small_window = k;
    c.small_stride = s;
    c.embed_dim = 2;
    c.latent_dim = 2;
    c.hidden = {5};
    c.dropout = 0.2;
    return c;
}

Vec random_window(Rng& rng, std::size_t w) {
    Vec x(w);
    for (auto& v : x) v = rng.normal();
    return x;
}

bool close(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(a)); }

}  // namespace

TEST_CASE("config validation") {
    FcvaeConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.small_window_count() == 10);
    auto key_of = [](FcvaeConfig cfg) {
        try {
            cfg.validate();
        } catch (const ConfigError& e) {
            return e.key();
        }
        return std::string();
    };
    c = {};
    c.small_stride = 7;
    CHECK(key_of(c) == "small_stride");
    c = {};
    c.small_window = 200;
    CHECK(key_of(c) == "small_window");
    c = {};
    c.window = 4;
    CHECK(key_of(c) == "window");
    c = {};
    c.small_window = 120;
    CHECK(key_of(c) == "small_window");  // one small window leaves attention without keys
    c.lfm_mode = LfmMode::latest;
    CHECK(key_of(c).empty());
    c = {};
    c.dropout = 1.0;
    CHECK(key_of(c) == "dropout");
    c = {};
    c.mc_samples = 0;
    CHECK(key_of(c) == "mc_samples");
    CHECK(parse_lfm_mode("average_pooling") == LfmMode::average_pooling);
    CHECK(to_string(LfmMode::latest) == "latest");
    CHECK_THROWS_AS(parse_lfm_mode("max"), ConfigError);
}

TEST_CASE("parameters are checked against the config") {
    const FcvaeModel m(tiny(), 1);
    CHECK(m.params().contains("gfm.dense.weight"));
    CHECK(m.params().contains("lfm.ffn.bias"));
    CHECK(m.params().at("encoder.hidden0.weight").shape() == nn::Shape{8 + 4, 5});
    CHECK(m.params().at("decoder.mean.weight").shape() == nn::Shape{5, 8});
    CHECK_NOTHROW(FcvaeModel(tiny(), m.params().clone()));
    auto other = tiny();
    other.latent_dim = 3;
    CHECK_THROWS_AS(FcvaeModel(other, m.params().clone()), ConfigError);
    auto plain = tiny();
    plain.use_gfm = plain.use_lfm = false;
    CHECK_THROWS_AS(FcvaeModel(plain, m.params().clone()), ConfigError);
}

TEST_CASE("global module with zero weights returns its bias") {
    auto cfg = tiny();
    cfg.dropout = 0.0;
    FcvaeModel m(cfg, 2);
    for (auto& v : m.params().at("gfm.dense.weight").mutable_data()) v = 0.0;
    m.params().at("gfm.dense.bias").mutable_data()[0] = 0.25;
    m.params().at("gfm.dense.bias").mutable_data()[1] = -1.5;
    Rng rng(3);
    for (int t = 0; t < 5; ++t) {
        const auto c = m.condition(random_window(rng, 8));
        CHECK(c.f_global == Vec{0.25, -1.5});
    }
}

TEST_CASE("condition shapes") {
    for (std::size_t w : {16u, 60u, 128u}) {
        FcvaeConfig cfg;
        cfg.window = w;
        cfg.small_window = w / 4;
        cfg.small_stride = w / 4;
        cfg.embed_dim = 6;
        FcvaeModel m(cfg, 4);
        Rng rng(w);
        const auto c = m.condition(random_window(rng, w));
        CHECK(c.f_global.size() == 6);
        CHECK(c.f_local.size() == 6);
    }
}

TEST_CASE("conditions ignore the last point") {
    const FcvaeModel m(tiny(16, 8, 4), 5);
    Rng rng(6);
    auto x = random_window(rng, 16);
    const auto ref = m.condition(x);
    for (int t = 0; t < 20; ++t) {
        x.back() = rng.uniform(-1e3, 1e3);
        const auto c = m.condition(x);
        CHECK(c.f_global == ref.f_global);
        CHECK(c.f_local == ref.f_local);
    }
    auto cfg = tiny(16, 8, 4);
    cfg.mask_last = false;
    const FcvaeModel unmasked(cfg, 5);
    const auto a = unmasked.condition(x);
    x.back() += 10.0;
    CHECK(unmasked.condition(x).f_global != a.f_global);
}

TEST_CASE("attention weights") {
    FcvaeConfig cfg;
    cfg.window = 40;
    cfg.small_window = 10;
    cfg.small_stride = 5;
    cfg.embed_dim = 4;
    const FcvaeModel m(cfg, 7);
    const std::size_t keys = cfg.small_window_count() - 1;

    SUBCASE("identical keys get uniform weight") {
        const Vec flat(40, 3.0);
        const auto a = m.attention_weights(flat);
        REQUIRE(a.size() == keys);
        for (double v : a) CHECK(v == doctest::Approx(1.0 / static_cast<double>(keys)));
    }
    SUBCASE("random windows: a distribution matching the reference") {
        Rng rng(8);
        const ReferenceModel ref(m);
        for (int t = 0; t < 10; ++t) {
            const auto x = random_window(rng, 40);
            const auto a = m.attention_weights(x);
            const auto r = ref.attention(x);
            CHECK(std::abs(std::accumulate(a.begin(), a.end(), 0.0) - 1.0) < 1e-9);
            for (std::size_t j = 0; j < a.size(); ++j) {
                CHECK(a[j] >= 0.0);
                CHECK(close(a[j], r[j]));
            }
        }
    }
    SUBCASE("permuting keys permutes weights") {
        Rng rng(9);
        const std::size_t d = 4, n = 5;
        Tensor q({1, d}, random_window(rng, d));
        Tensor k({n, d}, random_window(rng, n * d));
        const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
        const auto w = nn::softmax(nn::group_dot(q, k)).to_vector();
        const auto wp = nn::softmax(nn::group_dot(q, nn::gather_rows(k, perm))).to_vector();
        for (std::size_t j = 0; j < n; ++j) CHECK(close(wp[j], w[perm[j]]));
    }
    SUBCASE("single key passes straight through") {
        const FcvaeModel two(tiny(16, 8, 8), 10);  // n = 2
        const ReferenceModel ref(two);
        Rng rng(11);
        const auto x = random_window(rng, 16);
        CHECK(two.attention_weights(x) == Vec{1.0});
        Vec expected = ref.dense("lfm.ffn", ref.local_embeddings(x)[0]);
        for (auto& v : expected) v = std::tanh(v);
        const auto got = two.condition(x).f_local;
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(close(got[i], expected[i]));
    }
    SUBCASE("pooling modes match the reference") {
        for (auto mode : {LfmMode::latest, LfmMode::average_pooling}) {
            auto c2 = cfg;
            c2.lfm_mode = mode;
            const FcvaeModel mm(c2, 12);
            const ReferenceModel ref(mm);
            Rng rng(13);
            const auto x = random_window(rng, 40);
            const auto got = mm.condition(x).f_local;
            const auto want = ref.local(x);
            for (std::size_t i = 0; i < got.size(); ++i) CHECK(close(got[i], want[i]));
            CHECK_THROWS_AS(mm.attention_weights(x), UsageError);
        }
    }
}

TEST_CASE("disabled modules give zero conditions") {
    auto cfg = tiny();
    cfg.use_gfm = false;
    cfg.use_lfm = false;
    const FcvaeModel m(cfg, 14);
    CHECK_FALSE(m.params().contains("gfm.dense.weight"));
    CHECK_FALSE(m.params().contains("lfm.embed.weight"));
    Rng rng(15);
    const auto c = m.condition(random_window(rng, 8));
    CHECK(c.f_global == Vec(2, 0.0));
    CHECK(c.f_local == Vec(2, 0.0));
}

TEST_CASE("encoder and decoder heads") {
    auto cfg = tiny(16, 8, 4);
    cfg.latent_dim = 3;
    const FcvaeModel m(cfg, 16);
    Rng rng(17);
    NoiseSource noise(1);
    const Tensor x({4, 16}, random_window(rng, 64));
    const auto c = m.condition(x, false, noise);
    const auto q = m.encode(x, c);
    CHECK(q.mean.shape() == nn::Shape{4, 3});
    CHECK(q.std.shape() == nn::Shape{4, 3});
    const auto q2 = m.encode(x, m.condition(x, false, noise));
    CHECK(q.mean.to_vector() == q2.mean.to_vector());
    const Tensor z({4, 3}, random_window(rng, 12));
    const auto p = m.decode(z, c);
    CHECK(p.mean.shape() == nn::Shape{4, 16});
    CHECK(p.std.shape() == nn::Shape{4, 16});
    CHECK(p.mean.to_vector() == m.decode(z, c).mean.to_vector());

    // Push the std pre-activations far negative; the floor must hold.
    FcvaeModel squashed(cfg, 18);
    for (auto& v : squashed.params().at("encoder.std.bias").mutable_data()) v = -500.0;
    for (auto& v : squashed.params().at("decoder.std.bias").mutable_data()) v = -500.0;
    const auto c2 = squashed.condition(x, false, noise);
    const auto q3 = squashed.encode(x, c2);
    const auto p3 = squashed.decode(z, c2);
    for (double s : q3.std.data()) CHECK(s >= kStdFloor);
    for (double s : p3.std.data()) CHECK(s >= kStdFloor);
    CHECK_THROWS_AS(m.condition(Tensor::zeros({2, 8}), false, noise), ShapeError);
}

TEST_CASE("bound matches the straight-line transcription") {
    for (bool training : {false, true}) {
        for (std::size_t samples : {1u, 3u}) {
            auto cfg = tiny();
            cfg.mc_samples = samples;
            const FcvaeModel m(cfg, 19 + samples);
            const ReferenceModel ref(m);
            Rng rng(20);
            for (int t = 0; t < 5; ++t) {
                const auto x = random_window(rng, 8);
                Vec alpha(8, 1.0);
                alpha[static_cast<std::size_t>(t) % 8] = 0.0;
                alpha[3] = 0.0;
                const double beta = std::accumulate(alpha.begin(), alpha.end(), 0.0) / 8.0;
                NoiseSource a(100 + t), b(100 + t);
                const double loss = m.cm_elbo(x, alpha, a, training);
                const auto expect = ref.bound(x, alpha, beta, draw_noise(cfg, b, training));
                CHECK_MESSAGE(close(loss, -expect.total()), "training=" << training << " samples=" << samples);
            }
        }
    }
}

TEST_CASE("unit alpha reduces to the plain bound") {
    const FcvaeModel m(tiny(), 21);
    const ReferenceModel ref(m);
    Rng rng(22);
    const Vec ones(8, 1.0);
    for (int t = 0; t < 5; ++t) {
        const Tensor x({1, 8}, random_window(rng, 8));
        NoiseSource a(t), b(t), c(t);
        const double masked = m.bound(x, Tensor({1, 8}, ones), ElboKind::masked, false, a).item();
        const double plain = m.bound(x, Tensor::zeros({1, 8}), ElboKind::plain, false, b).item();
        const auto r = ref.bound(x.to_vector(), ones, 1.0, draw_noise(m.config(), c, false));
        CHECK(masked == plain);
        CHECK(close(masked, r.total()));
    }
}

TEST_CASE("zero alpha leaves only the posterior term") {
    const FcvaeModel m(tiny(), 23);
    const ReferenceModel ref(m);
    Rng rng(24);
    const auto x = random_window(rng, 8);
    const Vec zeros(8, 0.0);
    NoiseSource a(5), b(5);
    const double loss = m.cm_elbo(x, zeros, a);
    const auto r = ref.bound(x, zeros, 0.0, draw_noise(m.config(), b, false));
    CHECK(r.log_px == 0.0);
    CHECK(r.log_pz == 0.0);
    CHECK(close(loss, r.log_qz));
}

TEST_CASE("dropping one alpha changes only that term and beta") {
    const FcvaeModel m(tiny(), 25);
    const ReferenceModel ref(m);
    Rng rng(26);
    const auto x = random_window(rng, 8);
    const Vec ones(8, 1.0);
    Vec alpha = ones;
    alpha[5] = 0.0;
    NoiseSource n1(7), n2(7), n3(7);
    const auto noise = draw_noise(m.config(), n3, false);
    const auto full = ref.bound(x, ones, 1.0, noise);
    const double full_loss = m.cm_elbo(x, ones, n1);
    const double dropped_loss = m.cm_elbo(x, alpha, n2);

    // Recompute the one reconstruction term by hand.
    const auto fl = ref.local(x), fg = ref.global(x);
    const auto [mu, sd] = ref.mlp("encoder", ReferenceModel::concat(x, fl, fg));
    Vec z(mu.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = mu[i] + sd[i] * noise.eps[0][i];
    const auto [mx, sx] = ref.mlp("decoder", ReferenceModel::concat(z, fl, fg));
    const double term5 = ReferenceModel::log_normal(x[5], mx[5], sx[5]);
    const double expected = full_loss + term5 + (1.0 - 7.0 / 8.0) * full.log_pz;
    CHECK(close(dropped_loss, expected, 1e-11));
}

TEST_CASE("batched bound equals per-window bounds with per-row noise") {
    const FcvaeModel m(tiny(), 27);
    Rng rng(28);
    const auto xs = random_window(rng, 24);
    const Vec alpha(24, 1.0);
    auto batch_noise = NoiseSource::per_row({1, 2, 3});
    const auto batched = m.bound(window_tensor(xs, 8), window_tensor(alpha, 8), ElboKind::masked, false, batch_noise)
                             .to_vector();
    for (std::size_t r = 0; r < 3; ++r) {
        auto one = NoiseSource::per_row({r + 1});
        const Vec x(xs.begin() + static_cast<std::ptrdiff_t>(8 * r), xs.begin() + static_cast<std::ptrdiff_t>(8 * r + 8));
        CHECK(close(batched[r], -m.cm_elbo(x, Vec(8, 1.0), one)));
    }
}

TEST_CASE("bound gradients match finite differences") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto cfg = tiny(12, 6, 3);
        cfg.hidden = {4, 3};
        cfg.embed_dim = 3;
        FcvaeModel m(cfg, 30 + seed);
        Rng rng(40 + seed);
        const Tensor x({2, 12}, random_window(rng, 24));
        Vec a(24, 1.0);
        a[4] = a[17] = 0.0;
        const Tensor alpha({2, 12}, a);
        auto loss = [&] {
            NoiseSource noise(seed);
            return m.loss(x, alpha, ElboKind::masked, true, noise);
        };
        m.params().zero_grad();
        nn::backward(loss());
        for (auto& [name, p] : m.params()) {
            REQUIRE(p.has_grad());
            const Vec analytic(p.grad().begin(), p.grad().end());
            const auto numeric = numeric_grad(p, [&] { return loss().item(); });
            CHECK_MESSAGE(max_relative_error(analytic, numeric) < 1e-3, name);
        }
    }
}
