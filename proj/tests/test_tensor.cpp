#include <algorithm>
#include <array>
#include <cmath>

#include <doctest.h>

#include "ragcn/errors.hpp"
#include "ragcn/tensor.hpp"
#include "support/gradient_checking.hpp"
#include "support/oracles.hpp"

using namespace ragcn;
using testing_support::check_gradients;
using testing_support::GradCheckOptions;

TEST_SUITE_BEGIN("tensor");

TEST_CASE("matmul identity and hand-computed products") {
    const Tensor eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    const Tensor b = Tensor::from_data({2, 2}, {3, 4, 5, 6});
    const Tensor prod = ops::matmul(eye, b);
    CHECK(prod.values() == std::vector<double>{3, 4, 5, 6});

    const Tensor row = Tensor::from_data({1, 2}, {1, 2});
    const Tensor col = Tensor::from_data({2, 1}, {3, 4});
    CHECK(ops::matmul(row, col).item() == 11.0);
}

TEST_CASE("matmul rejects mismatched inner extents, naming both shapes") {
    const Tensor a = Tensor::zeros({2, 3});
    const Tensor b = Tensor::zeros({4, 5});
    try {
        ops::matmul(a, b);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[4x5]") != std::string::npos);
    }
}

TEST_CASE("matmul gradient: d(sum(a.b))/da equals column sums of b") {
    Rng rng(11);
    Tensor a = Tensor::from_data({3, 4}, oracles::random_vector(12, rng), true);
    Tensor b = Tensor::from_data({4, 2}, oracles::random_vector(8, rng), true);
    std::array<Tensor, 2> leaves{a, b};
    check_gradients([&] { return ops::sum(ops::matmul(a, b)); }, leaves);

    // the closed form: dA[i,p] = sum_j b[p,j]
    Tape::active().clear();
    a.zero_grad();
    b.zero_grad();
    backward(ops::sum(ops::matmul(a, b)));
    for (int i = 0; i < 3; ++i)
        for (int p = 0; p < 4; ++p) {
            const double expect = b.at({p, 0}) + b.at({p, 1});
            CHECK(a.grad()[static_cast<std::size_t>(i) * 4 + p] == doctest::Approx(expect).epsilon(1e-12));
        }
    Tape::active().clear();
}

TEST_CASE("temporal_conv: 1x1 identity channel map preserves the input") {
    Rng rng(3);
    const Tensor x = Tensor::from_data({1, 2, 5, 3}, oracles::random_vector(30, rng));
    // weight [2,2,1,1] = channel identity
    const Tensor w = Tensor::from_data({2, 2, 1, 1}, {1, 0, 0, 1});
    const Tensor y = ops::temporal_conv(x, w, Tensor(), 1);
    CHECK(y.shape() == Shape{1, 2, 5, 3});
    for (std::size_t i = 0; i < x.values().size(); ++i) CHECK(y.values()[i] == x.values()[i]);
}

TEST_CASE("temporal_conv: constant-in-time input with a sum-normalized kernel stays constant") {
    const int t = 9, l = 5;
    std::vector<double> xv(static_cast<std::size_t>(t) * 2, 0.0);
    for (int ti = 0; ti < t; ++ti) {
        xv[static_cast<std::size_t>(ti) * 2] = 4.25;
        xv[static_cast<std::size_t>(ti) * 2 + 1] = -1.5;
    }
    const Tensor x = Tensor::from_data({1, 1, t, 2}, std::move(xv));
    const Tensor w = Tensor::full({1, 1, l, 1}, 1.0 / l);
    const Tensor y = ops::temporal_conv(x, w, Tensor(), 1);
    // interior frames only; zero padding bleeds into the first/last (l-1)/2
    for (int ti = (l - 1) / 2; ti < t - (l - 1) / 2; ++ti) {
        CHECK(y.at({0, 0, ti, 0}) == doctest::Approx(4.25).epsilon(1e-12));
        CHECK(y.at({0, 0, ti, 1}) == doctest::Approx(-1.5).epsilon(1e-12));
    }
}

TEST_CASE("temporal_conv matches the sliding-window oracle on random instances") {
    Rng rng(17);
    for (int stride : {1, 2}) {
        const int n = 2, c = 3, t = 12, v = 4, co = 5, l = 5;
        const auto xv = oracles::random_vector(static_cast<std::size_t>(n) * c * t * v, rng);
        const auto wv = oracles::random_vector(static_cast<std::size_t>(co) * c * l, rng);
        const auto bv = oracles::random_vector(static_cast<std::size_t>(co), rng);
        const Tensor x = Tensor::from_data({n, c, t, v}, xv);
        const Tensor w = Tensor::from_data({co, c, l, 1}, wv);
        const Tensor bias = Tensor::from_data({co}, bv);
        const Tensor y = ops::temporal_conv(x, w, bias, stride);
        const auto expect = oracles::temporal_conv(xv, wv, bv, n, c, t, v, co, l, stride);
        REQUIRE(y.values().size() == expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i)
            CHECK(y.values()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    }
}

TEST_CASE("temporal_conv rejects even windows") {
    const Tensor x = Tensor::zeros({1, 1, 4, 2});
    const Tensor w = Tensor::zeros({1, 1, 2, 1});
    CHECK_THROWS_AS(ops::temporal_conv(x, w, Tensor(), 1), ConfigError);
}

TEST_CASE("temporal_conv gradients agree with finite differences") {
    Rng rng(23);
    for (int stride : {1, 2}) {
        Tensor x = Tensor::from_data({2, 2, 6, 3}, oracles::random_vector(72, rng), true);
        Tensor w = Tensor::from_data({3, 2, 3, 1}, oracles::random_vector(18, rng), true);
        Tensor bias = Tensor::from_data({3}, oracles::random_vector(3, rng), true);
        std::array<Tensor, 3> leaves{x, w, bias};
        check_gradients([&] { return ops::sum(ops::relu(ops::temporal_conv(x, w, bias, stride))); },
                        leaves);
    }
}

TEST_CASE("batch_norm: identity transform on standardized input") {
    Rng rng(5);
    const int n = 4, c = 2, t = 5, v = 3;
    std::vector<double> xv = oracles::random_vector(static_cast<std::size_t>(n) * c * t * v, rng);
    // standardize each channel exactly
    const std::size_t plane = static_cast<std::size_t>(t) * v;
    for (int ch = 0; ch < c; ++ch) {
        double mean = 0.0, var = 0.0;
        for (int in = 0; in < n; ++in)
            for (std::size_t j = 0; j < plane; ++j) mean += xv[(in * c + ch) * plane + j];
        mean /= static_cast<double>(n * plane);
        for (int in = 0; in < n; ++in)
            for (std::size_t j = 0; j < plane; ++j) {
                auto& e = xv[(in * c + ch) * plane + j];
                e -= mean;
                var += e * e;
            }
        var /= static_cast<double>(n * plane);
        for (int in = 0; in < n; ++in)
            for (std::size_t j = 0; j < plane; ++j) xv[(in * c + ch) * plane + j] /= std::sqrt(var);
    }
    const Tensor x = Tensor::from_data({n, c, t, v}, xv);
    BatchNormState state = BatchNormState::make(c);
    const Tensor y = ops::batch_norm(x, state, /*training=*/true);
    for (std::size_t i = 0; i < xv.size(); ++i)
        CHECK(y.values()[i] == doctest::Approx(xv[i]).epsilon(1e-4));  // eps shifts the scale slightly
}

TEST_CASE("batch_norm: gamma=0, beta=5 pins every output to 5") {
    Rng rng(29);
    const Tensor x = Tensor::from_data({2, 3, 4, 2}, oracles::random_vector(48, rng));
    BatchNormState state = BatchNormState::make(3);
    std::fill(state.gamma.mutable_values().begin(), state.gamma.mutable_values().end(), 0.0);
    std::fill(state.beta.mutable_values().begin(), state.beta.mutable_values().end(), 5.0);
    const Tensor y = ops::batch_norm(x, state, /*training=*/true);
    for (double val : y.values()) CHECK(val == 5.0);
}

TEST_CASE("batch_norm: train-mode output has per-channel mean 0 and variance 1") {
    Rng rng(31);
    const int n = 6, c = 3, t = 7, v = 4;
    const Tensor x =
        Tensor::from_data({n, c, t, v}, oracles::random_vector(static_cast<std::size_t>(n) * c * t * v, rng, 2.5));
    BatchNormState state = BatchNormState::make(c);
    const Tensor y = ops::batch_norm(x, state, /*training=*/true);
    const std::size_t plane = static_cast<std::size_t>(t) * v;
    for (int ch = 0; ch < c; ++ch) {
        double mean = 0.0;
        for (int in = 0; in < n; ++in)
            for (std::size_t j = 0; j < plane; ++j) mean += y.values()[(in * c + ch) * plane + j];
        mean /= static_cast<double>(n * plane);
        double var = 0.0;
        for (int in = 0; in < n; ++in)
            for (std::size_t j = 0; j < plane; ++j) {
                const double d = y.values()[(in * c + ch) * plane + j] - mean;
                var += d * d;
            }
        var /= static_cast<double>(n * plane);
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("batch_norm: eval mode uses running statistics") {
    Rng rng(37);
    BatchNormState state = BatchNormState::make(2);
    const Tensor x1 = Tensor::from_data({3, 2, 4, 2}, oracles::random_vector(48, rng, 3.0));
    for (int i = 0; i < 20; ++i) ops::batch_norm(x1, state, /*training=*/true);
    const Tensor probe = Tensor::from_data({1, 2, 4, 2}, oracles::random_vector(16, rng));
    const Tensor y = ops::batch_norm(probe, state, /*training=*/false);
    for (int ch = 0; ch < 2; ++ch) {
        const double inv = 1.0 / std::sqrt(state.running_var[ch] + state.eps);
        for (int j = 0; j < 8; ++j) {
            const std::size_t idx = static_cast<std::size_t>(ch) * 8 + j;
            const double expect = (probe.values()[idx] - state.running_mean[ch]) * inv;
            CHECK(y.values()[idx] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("batch_norm gradients agree with finite differences (train and eval)") {
    Rng rng(41);
    for (bool training : {true, false}) {
        Tensor x = Tensor::from_data({3, 2, 4, 2}, oracles::random_vector(48, rng), true);
        BatchNormState state = BatchNormState::make(2);
        state.gamma = Tensor::from_data({2}, {1.3, 0.8}, true);
        state.beta = Tensor::from_data({2}, {0.2, -0.4}, true);
        std::array<Tensor, 3> leaves{x, state.gamma, state.beta};
        // weighted sum keeps the loss sensitive to every element
        Rng wrng(43);
        const Tensor weights = Tensor::from_data({3, 2, 4, 2}, oracles::random_vector(48, wrng));
        check_gradients(
            [&] { return ops::sum(ops::mul(ops::batch_norm(x, state, training), weights)); }, leaves,
            {.tolerance = 1e-4});
    }
}

TEST_CASE("relu clamps negatives and passes positives") {
    const Tensor x = Tensor::from_data({5}, {-2, -0.5, 0, 0.5, 2});
    CHECK(ops::relu(x).values() == std::vector<double>{0, 0, 0, 0.5, 2});
}

TEST_CASE("softmax of a constant row is uniform and sums to one") {
    const Tensor x = Tensor::zeros({1, 3});
    const Tensor y = ops::softmax(x, 1);
    for (double v : y.values()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("softmax rows are nonnegative and sum to 1 within 1e-12 on random input") {
    Rng rng(47);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3, k = 7;
        const Tensor x = Tensor::from_data({n, k}, oracles::random_vector(static_cast<std::size_t>(n) * k, rng, 5.0));
        const Tensor y = ops::softmax(x, 1);
        for (int i = 0; i < n; ++i) {
            double sum = 0.0;
            for (int j = 0; j < k; ++j) {
                const double p = y.values()[static_cast<std::size_t>(i) * k + j];
                CHECK(p >= 0.0);
                sum += p;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("softmax gradient agrees with finite differences over both axes") {
    Rng rng(53);
    for (int axis : {0, 1}) {
        Tensor x = Tensor::from_data({3, 4}, oracles::random_vector(12, rng), true);
        Rng wrng(55);
        const Tensor weights = Tensor::from_data({3, 4}, oracles::random_vector(12, wrng));
        std::array<Tensor, 1> leaves{x};
        check_gradients([&] { return ops::sum(ops::mul(ops::softmax(x, axis), weights)); }, leaves);
    }
}

TEST_CASE("global_avg_pool averages over frames and joints") {
    const Tensor x = Tensor::from_data({1, 2, 2, 2}, {1, 2, 3, 4, 10, 20, 30, 40});
    const Tensor y = ops::global_avg_pool(x);
    CHECK(y.shape() == Shape{1, 2});
    CHECK(y.at({0, 0}) == doctest::Approx(2.5));
    CHECK(y.at({0, 1}) == doctest::Approx(25.0));
}

TEST_CASE("cross_entropy: confident correct prediction has near-zero loss") {
    const Tensor logits = Tensor::from_data({1, 3}, {50.0, 0.0, 0.0});
    const std::vector<int> labels{0};
    CHECK(ops::cross_entropy(logits, labels).item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cross_entropy rejects out-of-range labels") {
    const Tensor logits = Tensor::zeros({2, 3});
    CHECK_THROWS_AS(ops::cross_entropy(logits, std::vector<int>{0, 3}), InputError);
    CHECK_THROWS_AS(ops::cross_entropy(logits, std::vector<int>{-1, 0}), InputError);
}

TEST_CASE("cross_entropy gradient equals softmax minus one-hot, and matches finite differences") {
    Rng rng(59);
    Tensor logits = Tensor::from_data({3, 4}, oracles::random_vector(12, rng), true);
    const std::vector<int> labels{1, 3, 0};
    std::array<Tensor, 1> leaves{logits};
    check_gradients([&] { return ops::cross_entropy(logits, labels); }, leaves);

    Tape::active().clear();
    logits.zero_grad();
    backward(ops::cross_entropy(logits, labels));
    const Tensor probs = ops::softmax(logits, 1);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) {
            const double onehot = labels[static_cast<std::size_t>(i)] == j ? 1.0 : 0.0;
            const double expect = (probs.at({i, j}) - onehot) / 3.0;
            CHECK(logits.grad()[static_cast<std::size_t>(i) * 4 + j] ==
                  doctest::Approx(expect).epsilon(1e-10));
        }
    Tape::active().clear();
}

TEST_CASE("backward of sum gives all-ones; of sum(x*x) gives 2x") {
    Tensor x = Tensor::from_data({2, 3}, {1, -2, 3, -4, 5, -6}, true);
    Tape::active().clear();
    backward(ops::sum(x));
    for (double g : x.grad()) CHECK(g == 1.0);

    Tape::active().clear();
    x.zero_grad();
    backward(ops::sum(ops::mul(x, x)));
    for (std::size_t i = 0; i < 6; ++i) CHECK(x.grad()[i] == doctest::Approx(2.0 * x.values()[i]));
    Tape::active().clear();
}

TEST_CASE("backward validates scalar losses and non-empty tapes") {
    Tensor x = Tensor::from_data({2}, {1, 2}, true);
    Tape::active().clear();
    CHECK_THROWS_AS(backward(x), UsageError);  // not scalar
    const Tensor untracked = Tensor::scalar(1.0);
    CHECK_THROWS_AS(backward(untracked), UsageError);
    const Tensor loss = ops::sum(x);
    Tape::active().clear();  // drop the recorded rule
    CHECK_THROWS_AS(backward(loss), UsageError);
}

TEST_CASE("gradients accumulate additively across uses and backward calls") {
    Tensor x = Tensor::from_data({2}, {3, 4}, true);
    Tape::active().clear();
    // y = sum(x) + sum(x) uses x twice
    const Tensor loss = ops::add(ops::sum(x), ops::sum(x));
    backward(loss);
    for (double g : x.grad()) CHECK(g == 2.0);
    backward(loss);  // second pass accumulates
    for (double g : x.grad()) CHECK(g == 4.0);
    Tape::active().clear();
}

TEST_CASE("concat then split is the identity") {
    Rng rng(61);
    const Tensor a = Tensor::from_data({2, 3, 2}, oracles::random_vector(12, rng));
    const Tensor b = Tensor::from_data({2, 1, 2}, oracles::random_vector(4, rng));
    const Tensor c = Tensor::from_data({2, 4, 2}, oracles::random_vector(16, rng));
    const std::array<Tensor, 3> parts{a, b, c};
    const Tensor joined = ops::concat(parts, 1);
    CHECK(joined.shape() == Shape{2, 8, 2});
    const Tensor sa = ops::slice(joined, 1, 0, 3);
    const Tensor sb = ops::slice(joined, 1, 3, 1);
    const Tensor sc = ops::slice(joined, 1, 4, 4);
    CHECK(sa.values() == a.values());
    CHECK(sb.values() == b.values());
    CHECK(sc.values() == c.values());
}

TEST_CASE("concat and slice route gradients to the right blocks") {
    Rng rng(67);
    Tensor a = Tensor::from_data({2, 2}, oracles::random_vector(4, rng), true);
    Tensor b = Tensor::from_data({2, 3}, oracles::random_vector(6, rng), true);
    std::array<Tensor, 2> leaves{a, b};
    check_gradients(
        [&] {
            const std::array<Tensor, 2> parts{a, b};
            const Tensor joined = ops::concat(parts, 1);
            return ops::sum(ops::mul(ops::slice(joined, 1, 1, 3), ops::slice(joined, 1, 1, 3)));
        },
        leaves);
}

TEST_CASE("permute and reshape invert cleanly and carry gradients") {
    Rng rng(71);
    Tensor x = Tensor::from_data({2, 3, 4}, oracles::random_vector(24, rng), true);
    const Tensor p = ops::permute(x, {2, 0, 1});
    CHECK(p.shape() == Shape{4, 2, 3});
    const Tensor back = ops::permute(p, {1, 2, 0});
    CHECK(back.values() == x.values());

    std::array<Tensor, 1> leaves{x};
    Rng wrng(73);
    const Tensor w = Tensor::from_data({4, 6}, oracles::random_vector(24, wrng));
    check_gradients(
        [&] { return ops::sum(ops::mul(ops::reshape(ops::permute(x, {2, 0, 1}), {4, 6}), w)); }, leaves);
}

TEST_CASE("joint_contract equals reshape + matmul") {
    Rng rng(79);
    const int n = 2, c = 3, t = 4, v = 5, w_cols = 5;
    const auto xv = oracles::random_vector(static_cast<std::size_t>(n) * c * t * v, rng);
    const auto bv = oracles::random_vector(static_cast<std::size_t>(v) * w_cols, rng);
    const Tensor x = Tensor::from_data({n, c, t, v}, xv);
    const Tensor b = Tensor::from_data({v, w_cols}, bv);
    const Tensor direct = ops::joint_contract(x, b);
    const Tensor viaMatmul =
        ops::reshape(ops::matmul(ops::reshape(x, {n * c * t, v}), b), {n, c, t, w_cols});
    REQUIRE(direct.shape() == viaMatmul.shape());
    for (std::size_t i = 0; i < direct.values().size(); ++i)
        CHECK(direct.values()[i] == doctest::Approx(viaMatmul.values()[i]).epsilon(1e-14));

    Tensor xt = Tensor::from_data({n, c, t, v}, xv, true);
    Tensor bt = Tensor::from_data({v, w_cols}, bv, true);
    std::array<Tensor, 2> leaves{xt, bt};
    check_gradients([&] { return ops::sum(ops::mul(ops::joint_contract(xt, bt), ops::joint_contract(xt, bt))); },
                    leaves);
}

TEST_CASE("masked_contract equals mul + joint_contract, values and gradients") {
    Rng rng(81);
    const int n = 2, c = 3, t = 4, v = 6;
    const auto xv = oracles::random_vector(static_cast<std::size_t>(n) * c * t * v, rng);
    // sparse gate with a few nonzeros, like an adjacency partition
    std::vector<double> gv(static_cast<std::size_t>(v) * v, 0.0);
    for (int k = 0; k < 9; ++k)
        gv[rng.uniform_int(static_cast<std::uint64_t>(v) * v)] = rng.uniform(0.2, 1.0);
    const auto mv = oracles::random_vector(static_cast<std::size_t>(v) * v, rng);

    Tensor x1 = Tensor::from_data({n, c, t, v}, xv, true);
    Tensor m1 = Tensor::from_data({v, v}, mv, true);
    const Tensor gate = Tensor::from_data({v, v}, gv);
    Tensor x2 = Tensor::from_data({n, c, t, v}, xv, true);
    Tensor m2 = Tensor::from_data({v, v}, mv, true);

    Tape::active().clear();
    const Tensor fused = ops::masked_contract(x1, gate, m1);
    const Tensor dense = ops::joint_contract(x2, ops::mul(gate, m2));
    REQUIRE(fused.shape() == dense.shape());
    for (std::size_t i = 0; i < fused.values().size(); ++i)
        CHECK(fused.values()[i] == doctest::Approx(dense.values()[i]).epsilon(1e-13));

    backward(ops::sum(ops::mul(fused, fused)));
    backward(ops::sum(ops::mul(dense, dense)));
    for (std::size_t i = 0; i < x1.grad().size(); ++i)
        CHECK(x1.grad()[i] == doctest::Approx(x2.grad()[i]).epsilon(1e-12));
    for (int i = 0; i < v; ++i)
        for (int j = 0; j < v; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * v + j;
            // the fused op sees zero gradient where the gate is zero; the
            // dense route agrees there because mul scales by the gate
            CHECK(m1.grad()[idx] == doctest::Approx(m2.grad()[idx]).epsilon(1e-12));
        }
    Tape::active().clear();

    // finite differences directly on the fused op
    std::array<Tensor, 2> leaves{x1, m1};
    testing_support::check_gradients(
        [&] { return ops::sum(ops::mul(ops::masked_contract(x1, gate, m1), ops::masked_contract(x1, gate, m1))); },
        leaves, {.max_probes_per_leaf = 30});

    // tracked gates are rejected
    Tensor tracked_gate = Tensor::from_data({v, v}, gv, true);
    CHECK_THROWS_AS(ops::masked_contract(x1, tracked_gate, m1), UsageError);
}

TEST_CASE("mean_axis averages and spreads gradients") {
    Tensor x = Tensor::from_data({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8}, true);
    const Tensor y = ops::mean_axis(x, 1);
    CHECK(y.shape() == Shape{2, 2});
    CHECK(y.at({0, 0}) == doctest::Approx(2.0));
    CHECK(y.at({1, 1}) == doctest::Approx(7.0));
    std::array<Tensor, 1> leaves{x};
    check_gradients([&] { return ops::sum(ops::mul(ops::mean_axis(x, 1), ops::mean_axis(x, 1))); }, leaves);
}

TEST_CASE("dropout is the identity in eval mode and rescales kept units in train mode") {
    Rng rng(83);
    const Tensor x = Tensor::from_data({1000}, oracles::random_vector(1000, rng));
    Rng drop_rng(5);
    const Tensor eval_out = ops::dropout(x, 0.5, /*training=*/false, drop_rng);
    CHECK(eval_out.values() == x.values());

    const Tensor train_out = ops::dropout(x, 0.5, /*training=*/true, drop_rng);
    int kept = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
        const double r = train_out.values()[i];
        if (r != 0.0) {
            CHECK(r == doctest::Approx(2.0 * x.values()[i]));
            ++kept;
        }
    }
    CHECK(kept > 380);
    CHECK(kept < 620);
    CHECK_THROWS_AS(ops::dropout(x, 1.0, true, drop_rng), ConfigError);
}

TEST_CASE("linear matches matmul plus bias and carries gradients") {
    Rng rng(89);
    Tensor x = Tensor::from_data({3, 4}, oracles::random_vector(12, rng), true);
    Tensor w = Tensor::from_data({2, 4}, oracles::random_vector(8, rng), true);
    Tensor b = Tensor::from_data({2}, oracles::random_vector(2, rng), true);
    const Tensor y = ops::linear(x, w, b);
    for (int i = 0; i < 3; ++i)
        for (int o = 0; o < 2; ++o) {
            double expect = b.values()[static_cast<std::size_t>(o)];
            for (int c = 0; c < 4; ++c) expect += x.at({i, c}) * w.at({o, c});
            CHECK(y.at({i, o}) == doctest::Approx(expect).epsilon(1e-12));
        }
    std::array<Tensor, 3> leaves{x, w, b};
    check_gradients([&] { return ops::sum(ops::mul(ops::linear(x, w, b), ops::linear(x, w, b))); }, leaves);
}

TEST_CASE("add_channel_bias broadcasts over trailing axes with correct gradients") {
    Rng rng(97);
    Tensor x = Tensor::from_data({2, 3, 2, 2}, oracles::random_vector(24, rng), true);
    Tensor b = Tensor::from_data({3}, {0.5, -1.0, 2.0}, true);
    const Tensor y = ops::add_channel_bias(x, b);
    CHECK(y.at({0, 1, 0, 0}) == doctest::Approx(x.at({0, 1, 0, 0}) - 1.0));
    std::array<Tensor, 2> leaves{x, b};
    check_gradients([&] { return ops::sum(ops::mul(ops::add_channel_bias(x, b), ops::add_channel_bias(x, b))); },
                    leaves);
}

TEST_CASE("forward operations on finite inputs produce finite values") {
    Rng rng(101);
    const Tensor x = Tensor::from_data({2, 3, 8, 4}, oracles::random_vector(192, rng, 10.0));
    BatchNormState bn = BatchNormState::make(3);
    const Tensor w = Tensor::from_data({3, 3, 3, 1}, oracles::random_vector(27, rng));
    Rng drng(7);
    const Tensor y =
        ops::relu(ops::batch_norm(ops::temporal_conv(ops::dropout(x, 0.3, true, drng), w, Tensor(), 2), bn, true));
    for (double v : y.values()) CHECK(std::isfinite(v));
}

TEST_CASE("ops reject zero or negative extents at construction") {
    CHECK_THROWS_AS(Tensor::zeros({0, 3}), DimensionError);
    CHECK_THROWS_AS(Tensor::zeros({2, -1}), DimensionError);
}

TEST_CASE("eval-mode forward is deterministic given fixed parameters and inputs") {
    Rng rng(103);
    const Tensor x = Tensor::from_data({2, 2, 6, 3}, oracles::random_vector(72, rng));
    const Tensor w = Tensor::from_data({2, 2, 3, 1}, oracles::random_vector(12, rng));
    BatchNormState bn = BatchNormState::make(2);
    Rng d1(9), d2(9);
    const Tensor y1 = ops::relu(ops::batch_norm(ops::temporal_conv(ops::dropout(x, 0.5, false, d1), w, Tensor(), 1), bn, false));
    const Tensor y2 = ops::relu(ops::batch_norm(ops::temporal_conv(ops::dropout(x, 0.5, false, d2), w, Tensor(), 1), bn, false));
    CHECK(y1.values() == y2.values());
}

TEST_SUITE_END();
