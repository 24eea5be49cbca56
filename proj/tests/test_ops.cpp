#include <doctest.h>

#include <cfloat>
#include <cmath>
#include <random>

#include "ctsynth/error.hpp"
#include "ctsynth/ops.hpp"
#include "support/oracles.hpp"

using namespace ctsynth;

TEST_SUITE("ops") {
  TEST_CASE("leaky_relu and sigmoid values") {
    Tape t;
    const Var x = t.constant(Tensor({4}, std::vector<double>{-2.0, -0.5, 0.0, 3.0}));
    const Tensor& y = t.value(leaky_relu(t, x, 0.2));
    CHECK(y[0] == doctest::Approx(-0.4));
    CHECK(y[1] == doctest::Approx(-0.1));
    CHECK(y[2] == 0.0);
    CHECK(y[3] == 3.0);
    const Tensor& s = t.value(sigmoid(t, x));
    CHECK(s[2] == 0.5);
    CHECK(s[3] == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))).epsilon(1e-15));
    CHECK_THROWS_AS(leaky_relu(t, x, 1.0), ConfigError);
  }

  TEST_CASE("sigmoid stays strictly inside (0, 1)") {
    for (double z : {-1e6, -800.0, -40.0, 0.0, 40.0, 800.0, 1e6}) {
      const double s = stable_sigmoid(z);
      CHECK(s > 0.0);
      CHECK(s < 1.0);
      CHECK(std::isfinite(std::log(s)));
      CHECK(std::isfinite(std::log1p(-s)));
    }
    CHECK(stable_sigmoid(-1e6) == DBL_MIN);
  }

  TEST_CASE("batch_norm normalizes each channel in train mode") {
    std::mt19937_64 rng(1);
    Tape t;
    const Tensor xv = oracle::random_tensor({4, 3, 3, 2}, rng, -3.0, 5.0);
    BatchNormState st(2);
    const Var y = batch_norm(t, t.constant(xv), t.constant(Tensor({2}, 1.0)), t.constant(Tensor({2}, 0.0)), st,
                             Mode::train);
    const Tensor& yv = t.value(y);
    for (std::size_t c = 0; c < 2; ++c) {
      double m = 0, v = 0;
      for (std::size_t i = c; i < yv.size(); i += 2) m += yv[i];
      m /= 36.0;
      for (std::size_t i = c; i < yv.size(); i += 2) v += (yv[i] - m) * (yv[i] - m);
      v /= 36.0;
      CHECK(std::abs(m) < 1e-12);
      CHECK(v == doctest::Approx(1.0).epsilon(1e-4));  // eps keeps it slightly under 1
    }
  }

  TEST_CASE("batch_norm gamma and beta act per channel") {
    Tape t;
    const Tensor xv({2, 1}, std::vector<double>{-1.0, 1.0});
    BatchNormState st(1);
    const Var y = batch_norm(t, t.constant(xv), t.constant(Tensor({1}, 3.0)), t.constant(Tensor({1}, 0.5)), st,
                             Mode::train);
    const double xhat = 1.0 / std::sqrt(1.0 + 1e-5);
    CHECK(t.value(y)[1] == doctest::Approx(3.0 * xhat + 0.5).epsilon(1e-14));
    CHECK(t.value(y)[0] == doctest::Approx(-3.0 * xhat + 0.5).epsilon(1e-14));
  }

  TEST_CASE("batch_norm running statistics use momentum 0.9") {
    Tape t;
    BatchNormState st(1);
    const Tensor xv({2, 1}, std::vector<double>{0.0, 2.0});  // mean 1, biased var 1
    batch_norm(t, t.constant(xv), t.constant(Tensor({1}, 1.0)), t.constant(Tensor({1}, 0.0)), st, Mode::train);
    CHECK(st.running_mean[0] == doctest::Approx(0.1));
    CHECK(st.running_var[0] == doctest::Approx(1.0));

    // Infer mode uses the running statistics and leaves them alone.
    const Var y = batch_norm(t, t.constant(Tensor({1, 1}, 0.1)), t.constant(Tensor({1}, 1.0)),
                             t.constant(Tensor({1}, 0.0)), st, Mode::infer);
    CHECK(std::abs(t.value(y)[0]) < 1e-15);
    CHECK(st.running_mean[0] == doctest::Approx(0.1));
  }

  TEST_CASE("batch_norm rejects degenerate batches and bad shapes") {
    Tape t;
    BatchNormState st(2);
    const Var g = t.constant(Tensor({2}, 1.0)), b = t.constant(Tensor({2}, 0.0));
    CHECK_THROWS_AS(batch_norm(t, t.constant(Tensor({1, 2})), g, b, st, Mode::train), ContractError);
    CHECK_NOTHROW(batch_norm(t, t.constant(Tensor({1, 2})), g, b, st, Mode::infer));
    CHECK_THROWS_AS(batch_norm(t, t.constant(Tensor({2, 3})), g, b, st, Mode::train), DimensionError);
    CHECK_THROWS_AS(BatchNormState(2, 1.0), ConfigError);
  }

  TEST_CASE("dropout keeps the expectation and drops about p of the elements") {
    Rng rng = derive_rng(5, 0);
    const Tensor x({200000}, 1.0);
    const auto r = dropout_forward(x, 0.3, Mode::train, rng);
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (r.mask[i] == 0.0) ++dropped;
      else CHECK_EQ(r.mask[i], 1.0 / 0.7);
    }
    const double frac = static_cast<double>(dropped) / static_cast<double>(x.size());
    CHECK(std::abs(frac - 0.3) < 0.3 * 0.02);
    CHECK(std::abs(mean(r.output) - 1.0) < 0.02);

    const auto inf = dropout_forward(x, 0.3, Mode::infer, rng);
    CHECK(inf.output == x);
    CHECK_THROWS_AS(dropout_forward(x, 1.0, Mode::train, rng), ConfigError);
  }

  TEST_CASE("dropout backward routes gradients through the mask") {
    Tape t;
    Rng rng = derive_rng(9, 0);
    const Var x = t.variable(Tensor({50}, 2.0));
    const Var y = dropout(t, x, 0.5, Mode::train, rng);
    const Tensor yv = t.value(y);
    t.backward(sum(t, y));
    const Tensor& g = *t.grad(x);
    for (std::size_t i = 0; i < 50; ++i) CHECK(g[i] == yv[i] / 2.0);
  }

  TEST_CASE("reshape and flatten") {
    Tape t;
    const Var x = t.variable(Tensor({2, 3, 4, 5}, 1.0));
    const Var f = flatten(t, x);
    CHECK(t.value(f).shape() == Shape{2, 60});
    CHECK(t.value(reshape(t, f, {2, 3, 4, 5})).shape() == Shape{2, 3, 4, 5});
    CHECK_THROWS_AS(reshape(t, x, {7}), DimensionError);
    CHECK_THROWS_AS(flatten(t, t.constant(Tensor({3}))), DimensionError);
    t.backward(sum(t, scale(t, f, 3.0)));
    CHECK(*t.grad(x) == Tensor({2, 3, 4, 5}, 3.0));
  }

  TEST_CASE("backward on small graphs") {
    SUBCASE("sum(w * x) gives x") {
      Parameter w{"w", ParamRole::weight, Tensor({3}, std::vector<double>{1, 2, 3}), {}, false};
      Tape t;
      const Tensor xv({3}, std::vector<double>{4, 5, 6});
      t.backward(sum(t, mul(t, t.parameter(w), t.constant(xv))));
      REQUIRE(w.has_grad);
      CHECK(w.grad == xv);
    }
    SUBCASE("sigmoid at 0 has slope 1/4") {
      Tape t;
      const Var c = t.variable(Tensor({1}, 0.0));
      t.backward(sum(t, scale(t, sigmoid(t, c), 2.0)));
      CHECK((*t.grad(c))[0] == 0.5);
    }
    SUBCASE("a parameter used twice accumulates") {
      Parameter w{"w", ParamRole::weight, Tensor({2}, std::vector<double>{1, -2}), {}, false};
      Tape t;
      const Var a = t.parameter(w), b = t.parameter(w);
      CHECK(a.id == b.id);
      t.backward(sum(t, add(t, mul(t, a, b), a)));  // w^2 + w
      CHECK(w.grad == Tensor({2}, std::vector<double>{3, -3}));
    }
    SUBCASE("unreachable parameters get zero gradients") {
      Parameter used{"u", ParamRole::weight, Tensor({1}, 1.0), {}, false};
      Parameter unused{"n", ParamRole::weight, Tensor({2}, 5.0), {}, false};
      Tape t;
      t.parameter(unused);
      t.backward(sum(t, t.parameter(used)));
      CHECK(unused.has_grad);
      CHECK(unused.grad == Tensor({2}, 0.0));
    }
    SUBCASE("leaky_relu slope on each side") {
      Tape t;
      const Var x = t.variable(Tensor({2}, std::vector<double>{-1.0, 1.0}));
      t.backward(sum(t, leaky_relu(t, x, 0.2)));
      CHECK(*t.grad(x) == Tensor({2}, std::vector<double>{0.2, 1.0}));
    }
  }

  TEST_CASE("tape misuse is reported") {
    Tape t;
    const Var x = t.variable(Tensor({2}, 1.0));
    CHECK_THROWS_AS(t.backward(x), ContractError);
    const Var s = sum(t, x);
    t.backward(s);
    CHECK(t.consumed());
    CHECK_THROWS_AS(t.backward(s), StateError);
    CHECK_THROWS_AS(t.constant(Tensor({1})), StateError);
    CHECK_THROWS_AS(t.value(Var{999}), ContractError);
    Tape u;
    CHECK_THROWS_AS(add(u, u.constant(Tensor({2})), u.constant(Tensor({3}))), DimensionError);
  }

  TEST_CASE("mean_log and mean_log1m values and domain") {
    Tape t;
    const Var p = t.variable(Tensor({2}, std::vector<double>{0.25, 0.5}));
    const Var l = mean_log(t, p);
    CHECK(t.value(l)[0] == doctest::Approx((std::log(0.25) + std::log(0.5)) / 2).epsilon(1e-15));
    CHECK(t.value(mean_log1m(t, p))[0] == doctest::Approx((std::log(0.75) + std::log(0.5)) / 2).epsilon(1e-15));
    t.backward(l);
    CHECK((*t.grad(p))[0] == doctest::Approx(0.5 / 0.25));
    Tape u;
    CHECK_THROWS_AS(mean_log(u, u.constant(Tensor({1}, 0.0))), DomainError);
    CHECK_THROWS_AS(mean_log1m(u, u.constant(Tensor({1}, 1.0))), DomainError);
  }

  TEST_CASE("log of a sigmoid is computed from the logits") {
    std::mt19937_64 rng(3);
    const Tensor z = oracle::random_tensor({64}, rng, -5.0, 5.0);
    for (bool one_minus : {false, true}) {
      Tape fused;
      const Var zf = fused.variable(z);
      const Var lf = one_minus ? mean_log1m(fused, sigmoid(fused, zf)) : mean_log(fused, sigmoid(fused, zf));
      Tape plain;
      const Var zp = plain.variable(z);
      const Var lp = one_minus ? mean_log1m(plain, plain.constant(plain.value(sigmoid(plain, zp))))
                               : mean_log(plain, plain.constant(plain.value(sigmoid(plain, zp))));
      CHECK(oracle::rel_err(fused.value(lf)[0], plain.value(lp)[0]) < 1e-13);
      fused.backward(lf);
      const Tensor& g = *fused.grad(zf);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-z[i]));
        const double expect = (one_minus ? -s : 1.0 - s) / 64.0;
        CHECK(oracle::rel_err(g[i], expect) < 1e-12);
      }
    }
    // Deep saturation: the clamped probability would give log(DBL_MIN); the logit path is exact.
    Tape t;
    const Var z0 = t.variable(Tensor({1}, -1000.0));
    const Var l = mean_log(t, sigmoid(t, z0));
    CHECK(t.value(l)[0] == doctest::Approx(-1000.0).epsilon(1e-15));
    t.backward(l);
    CHECK((*t.grad(z0))[0] == doctest::Approx(1.0));
  }
}
