#include <doctest.h>

#include <cmath>
#include <random>

#include "gia/moae.hpp"

using namespace gia;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(numel_of(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::from_data(std::move(shape), std::move(v));
}

MoAELayer make_layer(std::size_t d, std::size_t hidden, std::size_t n,
                     std::uint64_t seed) {
    MoAELayer layer(d, hidden, n);
    layer.set_name("enc.block0");
    layer.init(seed);
    return layer;
}

} // namespace

TEST_SUITE("moae") {

TEST_CASE("router fixtures") {
    SUBCASE("zero router weights give uniform mixing") {
        MoAELayer layer(4, 8, 3);
        layer.set_name("b");
        Tape t;
        std::mt19937_64 rng(1);
        Tensor x = random_tensor({5, 4}, rng);
        RouterOutput g = layer.route(t, x);
        for (std::size_t r = 0; r < 5; ++r) {
            for (std::size_t i = 0; i < 3; ++i) {
                CHECK(g.weights.at(r, i) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
            }
        }
    }
    SUBCASE("single expert always gets weight one") {
        MoAELayer layer = make_layer(4, 8, 1, 3);
        Tape t;
        std::mt19937_64 rng(2);
        Tensor x = random_tensor({3, 4}, rng);
        RouterOutput g = layer.route(t, x);
        for (std::size_t r = 0; r < 3; ++r) CHECK(g.weights.at(r, 0) == 1.0);
    }
    SUBCASE("hand softmax of crafted logits") {
        MoAELayer layer(2, 4, 3);
        layer.set_name("b");
        layer.router_w.value.data() = {std::log(2.0), 0.0, 0.0, 0.0, 0.0, 0.0};
        Tape t;
        Tensor x = Tensor::from_data({1, 2}, {1.0, 0.0});
        RouterOutput g = layer.route(t, x);
        CHECK(g.weights.at(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(g.weights.at(0, 1) == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(g.weights.at(0, 2) == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("width mismatch") {
        MoAELayer layer = make_layer(4, 8, 2, 5);
        Tape t;
        Tensor x = Tensor::zeros({2, 3});
        for (double& v : x.data()) v = 1.0;
        CHECK_THROWS_AS(layer.route(t, x), DimensionError);
    }
}

TEST_CASE("router rows sum to one") {
    std::mt19937_64 rng(9);
    MoAELayer layer = make_layer(6, 12, 4, 9);
    for (int rep = 0; rep < 10; ++rep) {
        Tape t;
        Tensor x = random_tensor({4, 6}, rng);
        RouterOutput g = layer.route(t, x);
        for (std::size_t r = 0; r < 4; ++r) {
            double s = 0.0;
            for (std::size_t i = 0; i < 4; ++i) s += g.weights.at(r, i);
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("forward fixtures") {
    SUBCASE("sigma zero means exactly the shared expert") {
        MoAELayer layer = make_layer(4, 8, 3, 11);
        // Perturb adaptive experts so the identity really comes from sigma.
        for (auto& e : layer.adaptive) {
            for (double& v : e.fc1.weight.value.data()) v += 0.5;
        }
        std::mt19937_64 rng(4);
        Tape t;
        Tensor x = random_tensor({5, 4}, rng);
        Tensor out = layer.forward(t, x);
        Tensor ref = layer.shared.forward(t, x);
        CHECK(out.data() == ref.data()); // bitwise
    }
    SUBCASE("zeroed adaptive output leaves shared for any sigma") {
        MoAELayer layer = make_layer(4, 8, 2, 13);
        for (auto& e : layer.adaptive) {
            std::fill(e.fc2.weight.value.data().begin(),
                      e.fc2.weight.value.data().end(), 0.0);
            std::fill(e.fc2.bias.value.data().begin(),
                      e.fc2.bias.value.data().end(), 0.0);
        }
        layer.sigma.value.data()[0] = -1.7;
        std::mt19937_64 rng(6);
        Tape t;
        Tensor x = random_tensor({3, 4}, rng);
        Tensor out = layer.forward(t, x);
        Tensor ref = layer.shared.forward(t, x);
        for (std::size_t i = 0; i < out.numel(); ++i) {
            CHECK(out.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-14));
        }
    }
    SUBCASE("hand-computed two-expert merge") {
        // shared(x) = [2], experts produce [1] and [3], uniform router,
        // sigma = -0.5: out = [2] + (-0.5) * [2] = [1].
        MoAELayer layer(1, 1, 2);
        layer.set_name("b");
        layer.shared.fc2.bias.value.data() = {2.0};
        layer.adaptive[0].fc2.bias.value.data() = {1.0};
        layer.adaptive[1].fc2.bias.value.data() = {3.0};
        layer.sigma.value.data()[0] = -0.5;
        Tape t;
        Tensor x = Tensor::from_data({1, 1}, {0.0});
        Tensor out = layer.forward(t, x);
        CHECK(out.value() == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("adaptive experts start as copies of the shared expert") {
    MoAELayer layer = make_layer(4, 8, 3, 21);
    std::mt19937_64 rng(8);
    Tensor x = random_tensor({2, 4}, rng);
    Tape t;
    Tensor ref = layer.shared.forward(t, x);
    for (const auto& e : layer.adaptive) {
        Tensor out = e.forward(t, x);
        CHECK(out.data() == ref.data());
    }

    SUBCASE("copies are independent storage") {
        layer.adaptive[1].fc1.weight.value.data()[0] += 1.0;
        CHECK(layer.shared.fc1.weight.value.data()[0] !=
              layer.adaptive[1].fc1.weight.value.data()[0]);
        CHECK(layer.adaptive[0].fc1.weight.value.data()[0] !=
              layer.adaptive[1].fc1.weight.value.data()[0]);
    }
    SUBCASE("uniform router with copies gives (1+sigma)*shared") {
        layer.router_w.value.data().assign(layer.router_w.value.numel(), 0.0);
        layer.sigma.value.data()[0] = 0.3;
        Tape t2;
        Tensor out = layer.forward(t2, x);
        Tensor sh = layer.shared.forward(t2, x);
        for (std::size_t i = 0; i < out.numel(); ++i) {
            CHECK(out.data()[i] == doctest::Approx(1.3 * sh.data()[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("forced single expert") {
    MoAELayer layer = make_layer(4, 8, 3, 33);
    // Diverge the experts so forcing is observable.
    std::mt19937_64 rng(10);
    for (auto& e : layer.adaptive) {
        for (double& v : e.fc2.weight.value.data()) {
            v += std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
        }
    }
    layer.sigma.value.data()[0] = 1.0;
    Tensor x = random_tensor({3, 4}, rng);

    Tape t;
    Tensor before = layer.forward(t, x);

    {
        ForcedExpertGuard guard(layer, 1);
        Tape t2;
        Tensor forced = layer.forward(t2, x);
        // With a one-hot mixture the output is shared + sigma * expert_1.
        Tensor sh = layer.shared.forward(t2, x);
        Tensor e1 = layer.adaptive[1].forward(t2, x);
        for (std::size_t i = 0; i < forced.numel(); ++i) {
            CHECK(forced.data()[i] ==
                  doctest::Approx(sh.data()[i] + e1.data()[i]).epsilon(1e-12));
        }
    }

    Tape t3;
    Tensor after = layer.forward(t3, x);
    CHECK(after.data() == before.data()); // bitwise restore

    SUBCASE("out-of-range index is a configuration error") {
        CHECK_THROWS_AS(ForcedExpertGuard(layer, 3), ConfigError);
    }
}

TEST_CASE("mixture matches an explicit loop oracle") {
    MoAELayer layer = make_layer(5, 10, 3, 41);
    std::mt19937_64 rng(12);
    for (auto& e : layer.adaptive) {
        for (double& v : e.fc1.weight.value.data()) {
            v += std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
        }
    }
    layer.sigma.value.data()[0] = 1.0; // forward output = shared + mixture
    for (double& v : layer.router_w.value.data()) {
        v = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    }
    Tensor x = random_tensor({4, 5}, rng);
    Tape t;
    Tensor out = layer.forward(t, x);
    Tensor sh = layer.shared.forward(t, x);
    RouterOutput g = layer.route(t, x);

    // Loop oracle: per token, explicitly sum g_i * E_i(x).
    std::vector<Tensor> expert_out;
    for (const auto& e : layer.adaptive) expert_out.push_back(e.forward(t, x));
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            double mix = 0.0;
            for (std::size_t i = 0; i < 3; ++i) {
                mix += g.weights.at(r, i) * expert_out[i].at(r, c);
            }
            CHECK(out.at(r, c) == doctest::Approx(sh.at(r, c) + mix).epsilon(1e-12));
        }
    }
}

TEST_CASE("routing and merge are differentiable") {
    MoAELayer layer = make_layer(4, 8, 3, 55);
    std::mt19937_64 rng(14);
    for (auto& e : layer.adaptive) {
        for (double& v : e.fc2.weight.value.data()) {
            v += std::uniform_real_distribution<double>(-0.4, 0.4)(rng);
        }
    }
    layer.sigma.value.data()[0] = 0.7; // nonzero so the adaptive path carries gradient
    Tensor x = random_tensor({3, 4}, rng);
    Tensor probe = random_tensor({3, 4}, rng);
    auto f = [&](Tape& t, const Tensor&) {
        return t.sum(t.mul(layer.forward(t, x), probe));
    };
    CHECK(grad_check(f, x, 1e-5, 1e-4).pass);
    CHECK(grad_check(f, layer.router_w.value, 1e-5, 1e-4).pass);
    CHECK(grad_check(f, layer.sigma.value, 1e-5, 1e-4).pass);
    CHECK(grad_check(f, layer.adaptive[0].fc1.weight.value, 1e-5, 1e-4).pass);
}

TEST_CASE("pooled routing applies one weight vector to all tokens") {
    MoAELayer layer = make_layer(4, 8, 3, 61);
    layer.routing = MoAELayer::Routing::Pooled;
    std::mt19937_64 rng(15);
    for (double& v : layer.router_w.value.data()) {
        v = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    }
    Tape t;
    Tensor x = random_tensor({4, 4}, rng);
    RouterOutput g = layer.route(t, x);
    CHECK(g.weights.shape() == Shape{4, 3});
    for (std::size_t r = 1; r < 4; ++r) {
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(g.weights.at(r, i) == g.weights.at(0, i));
        }
    }
}

TEST_CASE("router probe accumulates per-layer token means") {
    MoAELayer layer = make_layer(4, 8, 2, 71);
    std::mt19937_64 rng(16);
    RouterProbe probe;
    Tape t;
    layer.forward(t, random_tensor({3, 4}, rng), &probe, 5);
    layer.forward(t, random_tensor({2, 4}, rng), &probe, 5);
    CHECK(probe.token_counts().at(5) == 5);
    auto mean = probe.mean_weights(5);
    REQUIRE(mean.size() == 2);
    CHECK(mean[0] + mean[1] == doctest::Approx(1.0).epsilon(1e-12));
}

} // TEST_SUITE
