#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "stssl/autograd/autograd.hpp"
#include "stssl/core/rng.hpp"

using namespace stssl;
using autograd::Graph;
namespace ops = stssl::autograd::ops;

namespace {

using Var = Graph<double>::Var;
using BuildFn = std::function<Var(Graph<double>&, const std::vector<Var>&)>;

Tensor<double> random_tensor(std::vector<int> shape, Rng& rng, double lo = -1, double hi = 1) {
    Tensor<double> t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

double eval_loss(const std::vector<Tensor<double>>& inputs, const BuildFn& build) {
    Graph<double> g;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(g.leaf(t, false));
    return build(g, vars)->scalar();
}

/// Central-difference check of d(loss)/d(inputs) on a random probe set.
void check_grad(std::vector<Tensor<double>> inputs, const BuildFn& build, double tol = 1e-6,
                int probes = 48, std::uint64_t seed = 1234) {
    Graph<double> g;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(g.leaf(t, true));
    Var loss = build(g, vars);
    g.backward(loss);

    Rng rng(seed);
    for (int p = 0; p < probes; ++p) {
        const int ti = rng.uniform_int(static_cast<int>(inputs.size()));
        const auto& t = inputs[static_cast<std::size_t>(ti)];
        if (t.empty()) continue;
        const std::size_t ei =
            static_cast<std::size_t>(rng.uniform_int(static_cast<int>(t.size())));
        const double x = t[ei];
        const double h = 1e-6 * std::max(1.0, std::abs(x));

        auto plus = inputs;
        plus[static_cast<std::size_t>(ti)][ei] = x + h;
        auto minus = inputs;
        minus[static_cast<std::size_t>(ti)][ei] = x - h;
        const double fd = (eval_loss(plus, build) - eval_loss(minus, build)) / (2 * h);
        const double an = vars[static_cast<std::size_t>(ti)]->grad[ei];
        const double err = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
        INFO("tensor ", ti, " elem ", ei, " fd=", fd, " an=", an);
        CHECK(err < tol);
    }
}

/// Sum-of-squares readout turns any tensor node into a scalar loss.
Var sq_sum(Graph<double>& g, Var x) {
    Tensor<double> y({1});
    double s = 0;
    for (std::size_t i = 0; i < x->value.size(); ++i) s += x->value[i] * x->value[i];
    y[0] = 0.5 * s;
    return g.make(std::move(y), {x}, [x](autograd::Node<double>& n) {
        if (double* dx = autograd::grad_of(x))
            for (std::size_t i = 0; i < x->value.size(); ++i)
                dx[i] += n.grad[0] * x->value[i];
    });
}

}  // namespace

TEST_CASE("conv3d forward matches a direct loop") {
    Rng rng(5);
    auto x = random_tensor({2, 3, 5, 6}, rng);
    auto w = random_tensor({4, 2, 3, 3, 3}, rng);
    auto b = random_tensor({4}, rng);
    Graph<double> g;
    auto out = ops::conv3d(g, g.leaf(x), g.leaf(w), g.leaf(b), 1, 2, 2);
    CHECK(out->value.shape() == std::vector<int>{4, 3, 3, 3});

    // Direct summation oracle for a handful of output cells.
    Rng pick(99);
    for (int probe = 0; probe < 20; ++probe) {
        const int co = pick.uniform_int(4), to = pick.uniform_int(3), ho = pick.uniform_int(3),
                  wo = pick.uniform_int(3);
        double acc = b[static_cast<std::size_t>(co)];
        for (int ci = 0; ci < 2; ++ci)
            for (int dt = 0; dt < 3; ++dt)
                for (int dh = 0; dh < 3; ++dh)
                    for (int dw = 0; dw < 3; ++dw) {
                        const int t = to * 1 + dt - 1, h = ho * 2 + dh - 1, wx = wo * 2 + dw - 1;
                        if (t < 0 || t >= 3 || h < 0 || h >= 5 || wx < 0 || wx >= 6) continue;
                        acc += x.at4(ci, t, h, wx) *
                               w[(((static_cast<std::size_t>(co) * 2 + ci) * 3 + dt) * 3 + dh) * 3 +
                                 dw];
                    }
        CHECK(out->value.at4(co, to, ho, wo) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("conv3d gradients") {
    Rng rng(6);
    check_grad({random_tensor({2, 3, 4, 4}, rng), random_tensor({3, 2, 3, 3, 3}, rng),
                random_tensor({3}, rng)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   return sq_sum(g, ops::conv3d(g, v[0], v[1], v[2], 1, 2, 2));
               });
}

TEST_CASE("activation and shape op gradients") {
    Rng rng(7);
    check_grad({random_tensor({2, 2, 4, 4}, rng, -2, 2)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   return sq_sum(g, ops::silu(g, v[0]));
               });
    check_grad({random_tensor({2, 2, 4, 4}, rng, -2, 2)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   return sq_sum(g, ops::sigmoid(g, v[0]));
               });
    check_grad({random_tensor({3, 4, 2, 2}, rng)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   return sq_sum(g, ops::mean_over_t(g, v[0]));
               });
    check_grad({random_tensor({2, 2, 3, 3}, rng)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   return sq_sum(g, ops::upsample2x_hw(g, v[0]));
               });
    check_grad({random_tensor({2, 2, 3, 3}, rng), random_tensor({3, 2, 3, 3}, rng)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   return sq_sum(g, ops::concat_c(g, v[0], v[1]));
               });
    check_grad({random_tensor({6}, rng), random_tensor({4, 6}, rng), random_tensor({4}, rng)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   return sq_sum(g, ops::dense(g, v[0], v[1], v[2]));
               });
    check_grad({random_tensor({7}, rng, -3, 3)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   return sq_sum(g, ops::softmax1d(g, v[0]));
               });
}

TEST_CASE("capsule op gradients") {
    Rng rng(8);
    // squash + predict + softmax + mix + agree + norm, chained as in routing.
    check_grad({random_tensor({4, 3, 5}, rng), random_tensor({3, 2, 5, 4}, rng)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   auto u = ops::caps_squash_rows(g, v[0]);
                   auto uhat = ops::caps_predict(g, u, v[1]);
                   const int N = 4 * 3, K = 2;
                   auto b = g.constant(Tensor<double>({N, K}));
                   Var vcaps = nullptr;
                   for (int r = 0; r < 3; ++r) {
                       auto c = ops::caps_softmax_rows(g, b);
                       auto s = ops::caps_mix(g, c, uhat);
                       vcaps = ops::caps_squash_rows(g, s);
                       if (r < 2) b = ops::add(g, b, ops::caps_agree(g, uhat, vcaps));
                   }
                   return sq_sum(g, ops::caps_norm_rows(g, vcaps));
               },
               2e-6, 60);
}

TEST_CASE("squash matches its closed form") {
    Graph<double> g;
    Tensor<double> s({1, 3});
    s[0] = 1.0;
    s[1] = 0.0;
    s[2] = 0.0;  // norm 1 -> output norm 0.5
    auto v = ops::caps_squash_rows(g, g.leaf(s));
    CHECK(v->value[0] == doctest::Approx(0.5));
    CHECK(v->value[1] == doctest::Approx(0.0));

    Tensor<double> z({1, 4});
    auto vz = ops::caps_squash_rows(g, g.leaf(z));
    for (int i = 0; i < 4; ++i) CHECK(vz->value[static_cast<std::size_t>(i)] == 0.0);
}

TEST_CASE("warp op gradients and exactness") {
    Rng rng(9);
    check_grad({random_tensor({3, 4, 4}, rng)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   return sq_sum(g, ops::reverse_t(g, v[0]));
               });
    check_grad({random_tensor({3, 4, 4}, rng)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   return sq_sum(g, ops::flip_w(g, v[0]));
               });
    check_grad({random_tensor({2, 6, 6}, rng)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   Affine1D ay{1.0 / 0.6, -0.4}, ax{1.0 / 0.5, -1.1};
                   return sq_sum(g, ops::resample_hw(g, v[0], ay, ax, 6, 6, true));
               });

    // flip twice is identity, bit-exact.
    Graph<double> g;
    auto x = random_tensor({2, 3, 5}, rng);
    auto flipped = ops::flip_w(g, ops::flip_w(g, g.leaf(x)));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(flipped->value[i] == x[i]);
}

TEST_CASE("loss op gradients") {
    Rng rng(10);
    check_grad({random_tensor({4}, rng, 0.05, 0.95)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   return ops::margin_loss<double>(g, v[0], 1);
               });

    Rng grng(11);
    Tensor<double> gt({2, 3, 3});
    for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = grng.bernoulli(0.4) ? 1.0 : 0.0;
    check_grad({random_tensor({2, 3, 3}, rng, 0.05, 0.95)},
               [gt](Graph<double>& g, const std::vector<Var>& v) {
                   return ops::bce_mean(g, v[0], gt);
               });
    check_grad({random_tensor({2, 3, 3}, rng, 0.05, 0.95)},
               [gt](Graph<double>& g, const std::vector<Var>& v) {
                   return ops::dice_loss(g, v[0], gt, 1e-6);
               });

    check_grad({random_tensor({5}, rng, -2, 2), random_tensor({5}, rng, -2, 2)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   auto p = ops::softmax1d(g, v[0]);
                   auto q = ops::softmax1d(g, v[1]);
                   return ops::jsd(g, p, q);
               });

    Tensor<std::uint8_t> valid({2, 3, 3}, 1);
    valid[3] = 0;
    Tensor<double> wmask = random_tensor({2, 3, 3}, grng, 0.0, 1.0);
    check_grad({random_tensor({2, 3, 3}, rng), random_tensor({2, 3, 3}, rng)},
               [valid, wmask](Graph<double>& g, const std::vector<Var>& v) {
                   return ops::masked_sqdiff_mean(g, v[0], v[1], &wmask, valid);
               });
}

TEST_CASE("weighted_sum and add gradients") {
    Rng rng(12);
    check_grad({random_tensor({3}, rng), random_tensor({3}, rng)},
               [](Graph<double>& g, const std::vector<Var>& v) {
                   auto a = sq_sum(g, v[0]);
                   auto b = sq_sum(g, ops::add(g, v[0], v[1]));
                   return ops::weighted_sum<double>(g, {{0.3, a}, {1.7, b}});
               });
}
