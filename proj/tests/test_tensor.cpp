#include <doctest.h>

#include <cmath>
#include <random>

#include "gia/tensor.hpp"

using namespace gia;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad = true) {
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> v(numel_of(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

} // namespace

TEST_SUITE("tensor") {

TEST_CASE("matmul identity") {
    Tape t;
    Tensor eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    Tensor m = Tensor::from_data({2, 2}, {3, 4, 5, 6});
    Tensor out = t.matmul(eye, m);
    CHECK(out.data() == std::vector<double>{3, 4, 5, 6});
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Tape t;
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({2, 3});
    CHECK_THROWS_AS(t.matmul(a, b), DimensionError);
    try {
        t.matmul(a, b);
    } catch (const DimensionError& e) {
        std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
    }
}

TEST_CASE("empty tensor is a domain error") {
    Tape t;
    Tensor empty = Tensor::zeros({0});
    Tensor v = Tensor::zeros({3});
    CHECK_THROWS_AS(t.add(empty, v), DomainError);
}

TEST_CASE("rectifier definition") {
    Tape t;
    Tensor x = Tensor::from_data({3}, {-1, 0, 2});
    CHECK(t.relu(x).data() == std::vector<double>{0, 0, 2});
}

TEST_CASE("mean over axis 0") {
    Tape t;
    Tensor x = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor m = t.mean_axis(x, 0);
    CHECK(m.data() == std::vector<double>{2, 3});
}

TEST_CASE("softmax fixtures") {
    Tape t;
    SUBCASE("symmetry") {
        Tensor x = Tensor::from_data({3}, {0, 0, 0});
        Tensor y = t.softmax(x, 0);
        for (double v : y.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
    SUBCASE("hand-evaluated") {
        Tensor x = Tensor::from_data({3}, {std::log(2.0), 0, 0});
        Tensor y = t.softmax(x, 0);
        CHECK(y.data()[0] == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(y.data()[1] == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(y.data()[2] == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("no overflow at large logits") {
        Tensor x = Tensor::from_data({2}, {1000, 0});
        Tensor y = t.softmax(x, 0);
        CHECK(y.data()[0] == doctest::Approx(1.0));
        CHECK(y.data()[1] < 1e-300);
        CHECK(std::isfinite(y.data()[0]));
    }
    SUBCASE("NaN input rejected") {
        Tensor x = Tensor::from_data({2}, {std::nan(""), 0});
        CHECK_THROWS_AS(t.softmax(x, 0), NumericError);
    }
}

TEST_CASE("softmax rows sum to one for any finite input") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-50.0, 50.0);
    for (int rep = 0; rep < 50; ++rep) {
        Tape t;
        std::vector<double> v(12);
        for (double& x : v) x = dist(rng);
        Tensor x = Tensor::from_data({3, 4}, v);
        Tensor y = t.softmax(x, 1);
        for (std::size_t r = 0; r < 3; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < 4; ++c) s += y.at(r, c);
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
        Tensor y0 = t.softmax(x, 0);
        for (std::size_t c = 0; c < 4; ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < 3; ++r) s += y0.at(r, c);
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("mse fixtures") {
    Tape t;
    Tensor a = Tensor::from_data({2}, {1, 1});
    CHECK(t.mse_loss(a, a).value() == 0.0);
    Tensor b = Tensor::from_data({2}, {0, 2});
    CHECK(t.mse_loss(a, b).value() == doctest::Approx(1.0));
    Tensor p = Tensor::from_data({1}, {0.5});
    Tensor z = Tensor::from_data({1}, {0.0});
    CHECK(t.mse_loss(p, z).value() == doctest::Approx(0.25));
    Tensor wrong = Tensor::zeros({3});
    CHECK_THROWS_AS(t.mse_loss(a, wrong), DimensionError);
}

TEST_CASE("backward fixtures") {
    SUBCASE("sum gradient is ones") {
        Tape t;
        Tensor w = Tensor::from_data({3}, {1, 2, 3}, true);
        Tensor loss = t.sum(w);
        t.backward(loss);
        CHECK(w.grad() == std::vector<double>{1, 1, 1});
    }
    SUBCASE("mse gradient d/dw w^2 = 2w") {
        Tape t;
        Tensor w = Tensor::from_data({1}, {0.5}, true);
        Tensor target = Tensor::from_data({1}, {0.0});
        Tensor loss = t.mse_loss(w, target);
        t.backward(loss);
        CHECK(w.grad()[0] == doctest::Approx(1.0));
    }
    SUBCASE("gradients accumulate when a tensor is used twice") {
        Tape t;
        Tensor w = Tensor::from_data({2}, {1, 2}, true);
        Tensor loss = t.dot(w, w);
        t.backward(loss);
        CHECK(w.grad() == std::vector<double>{2, 4});
    }
    SUBCASE("non-scalar loss rejected") {
        Tape t;
        Tensor w = Tensor::from_data({2}, {1, 2}, true);
        Tensor y = t.relu(w);
        CHECK_THROWS_AS(t.backward(y), ContractError);
    }
    SUBCASE("frozen tensors end up without grad") {
        Tape t;
        Tensor w = Tensor::from_data({2}, {1, 2}, true);
        Tensor frozen = Tensor::from_data({2}, {3, 4}, false);
        Tensor loss = t.dot(w, frozen);
        t.backward(loss);
        CHECK(w.has_grad());
        CHECK(!frozen.has_grad());
    }
}

TEST_CASE("backward is deterministic") {
    auto run = [](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        Tape t;
        Tensor a = random_tensor({4, 4}, rng);
        Tensor b = random_tensor({4, 4}, rng);
        Tensor c = t.matmul(a, b);
        Tensor s = t.softmax(c, 1);
        Tensor loss = t.sum(t.mul(s, s));
        t.backward(loss);
        return std::make_pair(a.grad(), b.grad());
    };
    auto [ga1, gb1] = run(99);
    auto [ga2, gb2] = run(99);
    CHECK(ga1 == ga2); // bitwise
    CHECK(gb1 == gb2);
}

TEST_CASE("grad_check fixtures") {
    SUBCASE("sum of squares") {
        Tensor x = Tensor::from_data({3}, {1, 2, 3});
        auto f = [](Tape& t, const Tensor& v) { return t.dot(v, v); };
        CheckReport r = grad_check(f, x, 1e-5, 1e-6);
        CHECK(r.pass);
    }
    SUBCASE("softmax then pick first") {
        std::mt19937_64 rng(5);
        Tensor x = random_tensor({6}, rng, false);
        auto f = [](Tape& t, const Tensor& v) {
            Tensor s = t.softmax(v, 0);
            Tensor mask = Tensor::from_data({6}, {1, 0, 0, 0, 0, 0});
            return t.dot(s, mask);
        };
        CheckReport r = grad_check(f, x, 1e-5, 1e-4);
        CHECK(r.pass);
    }
    SUBCASE("constant function has zero error") {
        Tensor x = Tensor::from_data({4}, {1, 2, 3, 4});
        auto f = [](Tape& t, const Tensor&) {
            (void)t;
            return Tensor::scalar(7.0);
        };
        CheckReport r = grad_check(f, x, 1e-5, 1e-6);
        CHECK(r.pass);
        CHECK(r.max_rel_error == 0.0);
    }
    SUBCASE("eps outside the contract range is rejected") {
        Tensor x = Tensor::from_data({1}, {1.0});
        auto f = [](Tape& t, const Tensor& v) { return t.sum(v); };
        CHECK_THROWS_AS(grad_check(f, x, 1e-2, 1e-4), ConfigError);
    }
}

// Finite-difference sweep across the whole op family on random inputs.
TEST_CASE("op family passes grad_check on random inputs") {
    std::mt19937_64 rng(2024);
    const double eps = 1e-5, tol = 1e-4;

    for (int rep = 0; rep < 3; ++rep) {
        Tensor a = random_tensor({3, 4}, rng);
        Tensor b = random_tensor({4, 5}, rng);
        Tensor bt = random_tensor({5, 4}, rng);
        Tensor same = random_tensor({3, 4}, rng);
        Tensor rowv = random_tensor({4}, rng);
        Tensor w3 = random_tensor({3}, rng);
        Tensor s1 = random_tensor({1}, rng);

        auto check = [&](const char* name, const Tensor& var,
                         const std::function<Tensor(Tape&, const Tensor&)>& f) {
            CheckReport r = grad_check(f, var, eps, tol);
            INFO(name << " max rel err " << r.max_rel_error);
            CHECK(r.pass);
        };

        check("matmul-a", a, [&](Tape& t, const Tensor& v) {
            return t.sum(t.softmax(t.matmul(v, b), 1));
        });
        check("matmul-b", b, [&](Tape& t, const Tensor& v) {
            return t.sum(t.softmax(t.matmul(a, v), 1));
        });
        check("matmul_nt-b", bt, [&](Tape& t, const Tensor& v) {
            return t.sum(t.softmax(t.matmul_nt(a, v), 1));
        });
        check("add+mul", same, [&](Tape& t, const Tensor& v) {
            return t.sum(t.mul(t.add(v, a), v));
        });
        check("scale", a, [&](Tape& t, const Tensor& v) {
            return t.sum(t.scale(v, -1.7));
        });
        check("mul_scalar-s", s1, [&](Tape& t, const Tensor& v) {
            return t.sum(t.mul_scalar(a, v));
        });
        check("div_scalar-a", a, [&](Tape& t, const Tensor& v) {
            Tensor denom = Tensor::from_data({1}, {1.5});
            return t.sum(t.div_scalar(v, denom));
        });
        check("div_scalar-s", s1, [&](Tape& t, const Tensor& v) {
            if (std::abs(v.data()[0]) < 0.2) v.raw()->data[0] = 0.7;
            return t.sum(t.div_scalar(a, v));
        });
        check("add_rowvec", rowv, [&](Tape& t, const Tensor& v) {
            return t.sum(t.mul(t.add_rowvec(a, v), a));
        });
        check("relu", a, [&](Tape& t, const Tensor& v) {
            return t.sum(t.mul(t.relu(v), a));
        });
        check("softmax-rows", a, [&](Tape& t, const Tensor& v) {
            return t.sum(t.mul(t.softmax(v, 1), a));
        });
        check("softmax-cols", a, [&](Tape& t, const Tensor& v) {
            return t.sum(t.mul(t.softmax(v, 0), a));
        });
        check("mean-axis0", a, [&](Tape& t, const Tensor& v) {
            return t.dot(t.mean_axis(v, 0), rowv);
        });
        check("mean-axis1", a, [&](Tape& t, const Tensor& v) {
            return t.dot(t.mean_axis(v, 1), w3);
        });
        check("mse", a, [&](Tape& t, const Tensor& v) {
            return t.mse_loss(v, same);
        });
        check("embed", a, [&](Tape& t, const Tensor& v) {
            Tensor e = t.embed(v, {0, 2, 2});
            return t.sum(t.mul(e, e));
        });
        check("concat_cols", a, [&](Tape& t, const Tensor& v) {
            Tensor cc = t.concat_cols({v, same});
            return t.sum(t.mul(cc, cc));
        });
        check("concat_rows", a, [&](Tape& t, const Tensor& v) {
            Tensor cr = t.concat_rows({v, same});
            return t.sum(t.mul(cr, cr));
        });
        check("stack+slice+take", w3, [&](Tape& t, const Tensor& v) {
            Tensor col = t.slice_col(a, 1);
            Tensor row = t.take_row(a, 2);
            Tensor st = t.stack_scalars({t.dot(col, v), t.dot(row, rowv)});
            return t.sum(t.mul(st, st));
        });
        check("scale_rows-x", a, [&](Tape& t, const Tensor& v) {
            return t.sum(t.mul(t.scale_rows(v, w3), a));
        });
        check("scale_rows-w", w3, [&](Tape& t, const Tensor& v) {
            return t.sum(t.mul(t.scale_rows(a, v), a));
        });
        check("reshape", a, [&](Tape& t, const Tensor& v) {
            return t.sum(t.mul(t.reshape(v, {4, 3}), t.reshape(same, {4, 3})));
        });
        check("layer_norm-x", a, [&](Tape& t, const Tensor& v) {
            Tensor g = Tensor::from_data({4}, {1.1, 0.9, 1.0, 1.2});
            Tensor be = Tensor::from_data({4}, {0.1, -0.2, 0.0, 0.3});
            return t.sum(t.mul(t.layer_norm(v, g, be), a));
        });
        check("layer_norm-gamma", rowv, [&](Tape& t, const Tensor& v) {
            Tensor be = Tensor::from_data({4}, {0.1, -0.2, 0.0, 0.3});
            return t.sum(t.mul(t.layer_norm(a, v, be), a));
        });
    }
}

TEST_CASE("no-grad tape records nothing") {
    Tape t;
    t.set_grad_enabled(false);
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4}, true);
    Tensor out = t.matmul(a, a);
    CHECK(t.node_count() == 0);
    CHECK(!out.requires_grad());
}

} // TEST_SUITE
