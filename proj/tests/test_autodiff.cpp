// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "uniloss/autodiff.hpp"
#include "uniloss/rng.hpp"

using namespace uniloss;
using ad::Parameter;
using ad::Tape;
using ad::Value;

TEST_CASE("forward op values") {
    Tape tape;

    SUBCASE("sigmoid") {
        Value v = ad::sigmoid(tape.constant(Tensor({3}, {0.0, 1.0, 50.0})));
        CHECK(v.tensor()[0] == 0.5);
        // frozen from evaluating 1/(1+e^-1) in high precision
        CHECK(v.tensor()[1] == doctest::Approx(0.7310585786300049).epsilon(1e-15));
        CHECK(std::abs(v.tensor()[2] - 1.0) < 1e-15);
    }

    SUBCASE("matmul identity") {
        Value a = tape.constant(Tensor({2, 2}, {1, 0, 0, 1}));
        Value b = tape.constant(Tensor({2, 2}, {3, 4, 5, 6}));
        const Tensor& out = ad::matmul(a, b).tensor();
        CHECK(out.vec() == std::vector<double>{3, 4, 5, 6});
    }

    SUBCASE("gather, sub, square, mean, sum, mul_scalar, add_bias, relu") {
        Value x = tape.constant(Tensor({2, 2}, {1, -2, 3, 4}));
        CHECK(ad::gather(x, {3, 0}).tensor().vec() == std::vector<double>{4, 1});
        Value y = tape.constant(Tensor({2, 2}, {1, 1, 1, 1}));
        CHECK(ad::sub(x, y).tensor().vec() == std::vector<double>{0, -3, 2, 3});
        CHECK(ad::square(x).tensor().vec() == std::vector<double>{1, 4, 9, 16});
        CHECK(ad::mean(x).tensor()[0] == doctest::Approx(1.5));
        CHECK(ad::sum(x).tensor()[0] == doctest::Approx(6.0));
        CHECK(ad::mul_scalar(x, -2.0).tensor().vec() == std::vector<double>{-2, 4, -6, -8});
        Value b = tape.constant(Tensor({2}, {10, 20}));
        CHECK(ad::add_bias(x, b).tensor().vec() == std::vector<double>{11, 18, 13, 24});
        CHECK(ad::relu(x).tensor().vec() == std::vector<double>{1, 0, 3, 4});
    }
}

TEST_CASE("ops do not mutate their inputs") {
    Tape tape;
    const Tensor orig({2, 2}, {1, -2, 3, 4});
    Value x = tape.constant(orig);
    ad::relu(x);
    ad::square(x);
    ad::mul_scalar(x, 3.0);
    CHECK(x.tensor().vec() == orig.vec());
}

TEST_CASE("forward pass is deterministic") {
    auto run = [] {
        Tape tape;
        Parameter w(Tensor({2, 2}, {0.25, -1.5, 3.0, 0.125}));
        Value v = ad::sigmoid(ad::matmul(tape.leaf(w), tape.leaf(w)));
        return v.tensor().vec();
    };
    CHECK(run() == run());
}

TEST_CASE("shape errors name both shapes") {
    Tape tape;
    Value a = tape.constant(Tensor({2, 3}));
    Value b = tape.constant(Tensor({2, 3}));
    try {
        ad::matmul(a, b);
        FAIL("matmul accepted incompatible shapes");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("[2x3]") != std::string::npos);
    }
    Value c = tape.constant(Tensor({3, 2}));
    CHECK_THROWS_AS(ad::sub(a, c), Error);
    try {
        ad::sub(a, c);
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[3x2]") != std::string::npos);
    }
}

TEST_CASE("backward rejects non-scalar roots") {
    Tape tape;
    Parameter w(Tensor({2}, {1, 2}));
    Value v = ad::square(tape.leaf(w));
    CHECK_THROWS_AS(tape.backward(v), Error);
}

TEST_CASE("backward basics") {
    SUBCASE("root = sum(w) gives all-ones gradient") {
        Tape tape;
        Parameter w(Tensor({3}, {5, -1, 2}));
        tape.backward(ad::sum(tape.leaf(w)));
        CHECK(w.grad.vec() == std::vector<double>{1, 1, 1});
    }
    SUBCASE("root = sum(square(w)), w=[1,2] gives [2,4]") {
        // analytic derivative of sum of squares is 2w
        Tape tape;
        Parameter w(Tensor({2}, {1, 2}));
        tape.backward(ad::sum(ad::square(tape.leaf(w))));
        CHECK(w.grad.vec() == std::vector<double>{2, 4});
    }
    SUBCASE("gradients accumulate across leaves of the same parameter") {
        Tape tape;
        Parameter w(Tensor({1}, {3}));
        Value a = tape.leaf(w);
        Value b = tape.leaf(w);
        tape.backward(ad::sum(ad::sub(a, ad::mul_scalar(b, -1.0))));  // w + w
        CHECK(w.grad[0] == 2.0);
    }
}

TEST_CASE("sigmoid chain matches central finite differences") {
    Rng rng(3);
    Parameter w(Tensor({4}, {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                             rng.uniform(-1, 1)}));
    Parameter* params[] = {&w};
    auto report = ad::check_gradient(
        [&](Tape& t) { return ad::sum(ad::sigmoid(ad::sigmoid(t.leaf(w)))); }, params, 1e-5,
        1e-4);
    CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("check_gradient") {
    SUBCASE("linear function is exact") {
        Parameter w(Tensor({3}, {0.5, -1.0, 2.0}));
        Parameter* params[] = {&w};
        auto report = ad::check_gradient(
            [&](Tape& t) { return ad::sum(ad::mul_scalar(t.leaf(w), 2.5)); }, params);
        CHECK(report.max_rel_error < 1e-8);
    }
    SUBCASE("constant function has zero gradient on both routes") {
        Parameter w(Tensor({2}, {1.0, -1.0}));
        Parameter* params[] = {&w};
        auto report = ad::check_gradient(
            [&](Tape& t) {
                (void)t.leaf(w);
                return ad::sum(t.constant(Tensor({2}, {3.0, 4.0})));
            },
            params);
        CHECK(report.max_rel_error == 0.0);
        CHECK(w.grad.vec() == std::vector<double>{0, 0});
    }
    SUBCASE("rejects non-positive step") {
        Parameter w(Tensor({1}, {1.0}));
        Parameter* params[] = {&w};
        CHECK_THROWS_AS(ad::check_gradient(
                            [&](Tape& t) { return ad::sum(t.leaf(w)); }, params, 0.0),
                        Error);
    }
}

TEST_CASE("two-layer MLP loss matches finite differences") {
    Rng rng(17);
    auto rnd = [&](std::vector<std::size_t> shape) {
        Tensor t(shape);
        for (auto& v : t.vec()) v = rng.uniform(-0.7, 0.7);
        return t;
    };
    Parameter w1(rnd({3, 5})), b1(rnd({5})), w2(rnd({5, 2})), b2(rnd({2}));
    Tensor x = rnd({4, 3});
    Parameter* params[] = {&w1, &b1, &w2, &b2};

    auto build = [&](Tape& t) {
        Value h = ad::relu(ad::add_bias(ad::matmul(t.constant(x), t.leaf(w1)), t.leaf(b1)));
        Value out = ad::add_bias(ad::matmul(h, t.leaf(w2)), t.leaf(b2));
        return ad::mean(ad::square(ad::sigmoid(out)));
    };
    auto report = ad::check_gradient(build, params, 1e-5, 1e-4);
    CHECK(report.max_rel_error < 1e-4);
}
