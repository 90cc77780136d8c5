#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "uwdiff/core/rng.hpp"
#include "uwdiff/nn/adam.hpp"
#include "uwdiff/nn/autograd.hpp"

using namespace uwdiff;

namespace {

Tensor randn(std::vector<int64_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = scale * rng.normal();
    return t;
}

// Central-difference check of d(loss)/d(params[k]) for a sampled subset of
// elements. `loss_fn` must rebuild the graph from scratch on every call.
void grad_check(std::vector<Tensor>& params,
                const std::function<double(const std::vector<Tensor>&)>& loss_fn,
                const std::function<std::vector<Tensor>()>& analytic_fn,
                double rel_tol = 2e-5) {
    const std::vector<Tensor> analytic = analytic_fn();
    REQUIRE(analytic.size() == params.size());
    const double h = 1e-6;
    Rng pick(42);
    for (size_t k = 0; k < params.size(); ++k) {
        REQUIRE(analytic[k].same_shape(params[k]));
        const int64_t n = params[k].numel();
        const int64_t samples = std::min<int64_t>(n, 24);
        for (int64_t s = 0; s < samples; ++s) {
            const int64_t i = samples == n
                                  ? s
                                  : static_cast<int64_t>(pick.uniform_below(
                                        static_cast<uint64_t>(n)));
            const double orig = params[k][i];
            params[k][i] = orig + h;
            const double lp = loss_fn(params);
            params[k][i] = orig - h;
            const double lm = loss_fn(params);
            params[k][i] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = analytic[k][i];
            const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-4});
            INFO("param " << k << " elem " << i << " fd=" << fd << " an=" << an);
            CHECK(std::fabs(fd - an) / denom < rel_tol);
        }
    }
}

}  // namespace

TEST_CASE("conv2d_3x3 forward matches a direct convolution") {
    Rng rng(1);
    Tensor x = randn({2, 3, 5, 7}, rng);
    Tensor w = randn({4, 3, 3, 3}, rng);
    Tensor b = randn({4}, rng);

    Tape tape;
    const Var y = tape.conv2d_3x3(tape.input(x), tape.input(w), tape.input(b));
    const Tensor& out = tape.val(y);
    REQUIRE(out.shape() == std::vector<int64_t>{2, 4, 5, 7});

    for (int64_t n = 0; n < 2; ++n)
        for (int64_t oc = 0; oc < 4; ++oc)
            for (int64_t i = 0; i < 5; ++i)
                for (int64_t j = 0; j < 7; ++j) {
                    double acc = b[oc];
                    for (int64_t c = 0; c < 3; ++c)
                        for (int64_t ky = 0; ky < 3; ++ky)
                            for (int64_t kx = 0; kx < 3; ++kx) {
                                const int64_t sy = i + ky - 1, sx = j + kx - 1;
                                if (sy < 0 || sy >= 5 || sx < 0 || sx >= 7) continue;
                                acc += w.at(oc, c, ky, kx) * x.at(n, c, sy, sx);
                            }
                    REQUIRE(out.at(n, oc, i, j) == Catch::Approx(acc).margin(1e-10));
                }
}

TEST_CASE("conv2d_3x3 gradients agree with finite differences") {
    Rng rng(2);
    std::vector<Tensor> params = {randn({2, 3, 4, 4}, rng), randn({4, 3, 3, 3}, rng),
                                  randn({4}, rng)};
    const Tensor target = randn({2, 4, 4, 4}, rng);

    auto loss_fn = [&](const std::vector<Tensor>& p) {
        Tape t;
        t.set_grad_enabled(false);
        const Var y = t.conv2d_3x3(t.input(p[0]), t.input(p[1]), t.input(p[2]));
        return t.val(t.mse(y, target))[0];
    };
    auto analytic_fn = [&]() {
        Tape t;
        const Var x = t.param(params[0]);
        const Var w = t.param(params[1]);
        const Var b = t.param(params[2]);
        t.backward(t.mse(t.conv2d_3x3(x, w, b), target));
        return std::vector<Tensor>{t.grad(x), t.grad(w), t.grad(b)};
    };
    grad_check(params, loss_fn, analytic_fn);
}

TEST_CASE("linear gradients agree with finite differences") {
    Rng rng(3);
    std::vector<Tensor> params = {randn({3, 5}, rng), randn({5, 4}, rng), randn({4}, rng)};
    const Tensor target = randn({3, 4}, rng);

    auto loss_fn = [&](const std::vector<Tensor>& p) {
        Tape t;
        t.set_grad_enabled(false);
        return t.val(t.mse(t.linear(t.input(p[0]), t.input(p[1]), t.input(p[2])), target))[0];
    };
    auto analytic_fn = [&]() {
        Tape t;
        const Var x = t.param(params[0]);
        const Var w = t.param(params[1]);
        const Var b = t.param(params[2]);
        t.backward(t.mse(t.linear(x, w, b), target));
        return std::vector<Tensor>{t.grad(x), t.grad(w), t.grad(b)};
    };
    grad_check(params, loss_fn, analytic_fn);
}

TEST_CASE("silu value and gradient") {
    Tape tape;
    Tensor x({3});
    x[0] = -2.0;
    x[1] = 0.0;
    x[2] = 1.5;
    const Var y = tape.silu(tape.input(x));
    CHECK(tape.val(y)[0] == Catch::Approx(-2.0 / (1.0 + std::exp(2.0))).margin(1e-12));
    CHECK(tape.val(y)[1] == Catch::Approx(0.0).margin(1e-15));
    CHECK(tape.val(y)[2] == Catch::Approx(1.5 / (1.0 + std::exp(-1.5))).margin(1e-12));

    Rng rng(4);
    std::vector<Tensor> params = {randn({2, 3, 4, 4}, rng)};
    const Tensor target = randn({2, 3, 4, 4}, rng);
    auto loss_fn = [&](const std::vector<Tensor>& p) {
        Tape t;
        t.set_grad_enabled(false);
        return t.val(t.mse(t.silu(t.input(p[0])), target))[0];
    };
    auto analytic_fn = [&]() {
        Tape t;
        const Var v = t.param(params[0]);
        t.backward(t.mse(t.silu(v), target));
        return std::vector<Tensor>{t.grad(v)};
    };
    grad_check(params, loss_fn, analytic_fn);
}

TEST_CASE("pool, upsample, concat and channel bias gradients") {
    Rng rng(5);
    std::vector<Tensor> params = {randn({2, 2, 4, 4}, rng), randn({2, 3, 4, 4}, rng),
                                  randn({2, 5}, rng)};
    const Tensor target = randn({2, 5, 4, 4}, rng);

    // concat(up(pool(a)), b) + channel bias, a composite of all four ops.
    auto build = [&](Tape& t, Var a, Var b, Var c) {
        const Var pooled = t.avgpool2(a);
        const Var up = t.upsample2(pooled);
        const Var cat = t.concat_c(up, b);
        return t.add_channel_bias(cat, c);
    };
    auto loss_fn = [&](const std::vector<Tensor>& p) {
        Tape t;
        t.set_grad_enabled(false);
        return t.val(t.mse(build(t, t.input(p[0]), t.input(p[1]), t.input(p[2])), target))[0];
    };
    auto analytic_fn = [&]() {
        Tape t;
        const Var a = t.param(params[0]);
        const Var b = t.param(params[1]);
        const Var c = t.param(params[2]);
        t.backward(t.mse(build(t, a, b, c), target));
        return std::vector<Tensor>{t.grad(a), t.grad(b), t.grad(c)};
    };
    grad_check(params, loss_fn, analytic_fn);
}

TEST_CASE("add gradients flow to both operands") {
    Rng rng(6);
    std::vector<Tensor> params = {randn({8}, rng), randn({8}, rng)};
    const Tensor target = randn({8}, rng);
    auto loss_fn = [&](const std::vector<Tensor>& p) {
        Tape t;
        t.set_grad_enabled(false);
        return t.val(t.mse(t.add(t.input(p[0]), t.input(p[1])), target))[0];
    };
    auto analytic_fn = [&]() {
        Tape t;
        const Var a = t.param(params[0]);
        const Var b = t.param(params[1]);
        t.backward(t.mse(t.add(a, b), target));
        return std::vector<Tensor>{t.grad(a), t.grad(b)};
    };
    grad_check(params, loss_fn, analytic_fn);
}

TEST_CASE("constants receive no gradient and sampling mode records nothing") {
    Rng rng(7);
    Tape tape;
    const Var x = tape.input(randn({2, 3, 4, 4}, rng));
    const Var w = tape.param(randn({3, 3, 3, 3}, rng, 0.1));
    const Var b = tape.param(Tensor({3}));
    const Var y = tape.conv2d_3x3(x, w, b);
    tape.backward(tape.mse(y, Tensor({2, 3, 4, 4})));
    CHECK_THROWS(tape.grad(x));
    CHECK_NOTHROW(tape.grad(w));

    Tape inf;
    inf.set_grad_enabled(false);
    const Var yi = inf.conv2d_3x3(inf.input(randn({1, 3, 4, 4}, rng)),
                                  inf.param(randn({3, 3, 3, 3}, rng)), inf.param(Tensor({3})));
    CHECK(inf.val(yi).numel() == 48);
    CHECK_THROWS(inf.backward(yi));
}

TEST_CASE("forward is bitwise deterministic") {
    Rng rng(8);
    const Tensor x = randn({2, 4, 8, 8}, rng);
    const Tensor w = randn({4, 4, 3, 3}, rng);
    const Tensor b = randn({4}, rng);

    auto run = [&]() {
        Tape t;
        return t.val(t.silu(t.conv2d_3x3(t.input(x), t.input(w), t.input(b))));
    };
    const Tensor a = run();
    const Tensor c = run();
    for (int64_t i = 0; i < a.numel(); ++i) REQUIRE(a[i] == c[i]);
}

TEST_CASE("adam first step moves by ~lr regardless of gradient scale") {
    for (const double gscale : {0.5, 100.0}) {
        Adam opt;
        const int slot = opt.add_slot(1);
        Tensor p({1});
        p[0] = 1.0;
        Tensor g({1});
        g[0] = gscale;
        opt.begin_step();
        opt.update(slot, p, g, 0.1);
        CHECK(p[0] == Catch::Approx(0.9).margin(1e-6));
    }
}

TEST_CASE("adam minimizes a quadratic") {
    Adam opt;
    const int slot = opt.add_slot(1);
    Tensor p({1});
    p[0] = -4.0;
    Tensor g({1});
    for (int i = 0; i < 800; ++i) {
        g[0] = 2.0 * (p[0] - 3.0);
        opt.begin_step();
        opt.update(slot, p, g, 0.05);
    }
    CHECK(p[0] == Catch::Approx(3.0).margin(1e-3));
}

TEST_CASE("linear decay lr hits the endpoints") {
    CHECK(linear_decay_lr(1e-4, 0, 1000) == Catch::Approx(1e-4));
    CHECK(linear_decay_lr(1e-4, 500, 1000) == Catch::Approx(5e-5));
    CHECK(linear_decay_lr(1e-4, 1000, 1000) == Catch::Approx(0.0));
    CHECK(linear_decay_lr(1e-4, 1200, 1000) == Catch::Approx(0.0));
}
