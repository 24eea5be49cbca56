#include <doctest.h>

#include <cmath>
#include <random>

#include "ctsynth/error.hpp"
#include "ctsynth/optim.hpp"
#include "support/oracles.hpp"

using namespace ctsynth;

namespace {

Parameter make_param(const std::string& name, ParamRole role, Tensor value, Tensor grad) {
  Parameter p{name, role, std::move(value), std::move(grad), true};
  return p;
}

std::vector<double> as_vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_SUITE("optim") {
  TEST_CASE("single-element oracle values") {
    double w = 1.0, cache = 0.0;
    rmsprop_update(w, 0.1, cache, {0.01, 0.9, 1e-8, 0.0});
    CHECK(cache == doctest::Approx(0.001).epsilon(1e-14));
    CHECK(std::abs(w - 0.96837723340) < 1e-11);

    double a = 1.0, m = 0.0, v = 0.0;
    adam_update(a, 0.1, m, v, 1, {0.001, 0.9, 0.999, 1e-8, 0.0});
    CHECK(std::abs(a - 0.9990000001) < 1e-12);
  }

  TEST_CASE("zero gradient without decay leaves the value alone") {
    double w = 3.0, cache = 0.5;
    CHECK(rmsprop_update(w, 0.0, cache, {}) == 0.0);
    CHECK(w == 3.0);
    double a = -2.0, m = 0.0, v = 0.0;
    adam_update(a, 0.0, m, v, 1, {});
    CHECK(a == -2.0);
  }

  TEST_CASE("weight decay folds into the gradient") {
    double w = 2.0, cache = 0.0;
    RmsPropHyper hp{0.01, 0.9, 1e-8, 0.5};
    double w2 = 2.0, cache2 = 0.0;
    rmsprop_update(w, 0.0, cache, hp);
    rmsprop_update(w2, 1.0, cache2, {0.01, 0.9, 1e-8, 0.0});  // same effective gradient
    CHECK(w == w2);
    CHECK(decays(ParamRole::weight));
    CHECK(decays(ParamRole::bn_gamma));
    CHECK_FALSE(decays(ParamRole::bias));
    CHECK_FALSE(decays(ParamRole::bn_beta));
  }

  TEST_CASE("randomized steps match the brute-force oracles") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> lr(1e-5, 1e-1), rho(0.5, 0.999), wd(0.0, 1e-3);
    for (int trial = 0; trial < 100; ++trial) {
      const Tensor w0 = oracle::random_tensor({7}, rng);
      const Tensor g = oracle::random_tensor({7}, rng, -3.0, 3.0);
      const Tensor c0 = oracle::random_tensor({7}, rng, 0.0, 2.0);

      const RmsPropHyper rh{lr(rng), rho(rng), 1e-8, wd(rng)};
      Parameter p = make_param("w", ParamRole::weight, w0, g);
      RmsPropSlot slot{c0};
      rmsprop_step(p, slot, rh);
      auto ow = as_vec(w0), oc = as_vec(c0);
      oracle::RmsPropOracle{rh.lr, rh.rho, rh.eps, rh.weight_decay}.step(ow, as_vec(g), oc);
      for (std::size_t i = 0; i < 7; ++i) {
        CHECK(std::abs(p.value[i] - ow[i]) <= 1e-12);
        CHECK(std::abs(slot.cache[i] - oc[i]) <= 1e-12);
      }

      const AdamHyper ah{lr(rng), rho(rng), rho(rng), 1e-8, wd(rng)};
      const auto t = static_cast<std::uint64_t>(trial % 10);
      Parameter q = make_param("w", ParamRole::weight, w0, g);
      AdamSlot as{oracle::random_tensor({7}, rng), c0, t};
      auto am = as_vec(as.m), av = as_vec(as.v), aw = as_vec(w0);
      adam_step(q, as, ah);
      CHECK(as.t == t + 1);
      oracle::AdamOracle{ah.lr, ah.beta1, ah.beta2, ah.eps, ah.weight_decay}.step(aw, as_vec(g), am, av,
                                                                                  static_cast<int>(t + 1));
      for (std::size_t i = 0; i < 7; ++i) {
        CHECK(std::abs(q.value[i] - aw[i]) <= 1e-12);
        CHECK(std::abs(as.m[i] - am[i]) <= 1e-12);
        CHECK(std::abs(as.v[i] - av[i]) <= 1e-12);
      }
    }
  }

  TEST_CASE("doubling lr doubles the increment exactly") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
      std::uniform_real_distribution<double> u(-2.0, 2.0);
      const double w0 = u(rng), g = u(rng), c0 = std::abs(u(rng)), m0 = u(rng);
      double w1 = w0, w2 = w0, c1 = c0, c2 = c0;
      const double d1 = rmsprop_update(w1, g, c1, {1e-3, 0.9, 1e-8, 1e-5});
      const double d2 = rmsprop_update(w2, g, c2, {2e-3, 0.9, 1e-8, 1e-5});
      CHECK(d2 == 2.0 * d1);
      double a1 = w0, a2 = w0, m1 = m0, m2 = m0, v1 = c0, v2 = c0;
      const double e1 = adam_update(a1, g, m1, v1, 3, {1e-3, 0.9, 0.999, 1e-8, 0.0});
      const double e2 = adam_update(a2, g, m2, v2, 3, {2e-3, 0.9, 0.999, 1e-8, 0.0});
      CHECK(e2 == 2.0 * e1);
    }
  }

  TEST_CASE("updates are elementwise: permuting inputs permutes outputs") {
    std::mt19937_64 rng(9);
    const Tensor w = oracle::random_tensor({5}, rng), g = oracle::random_tensor({5}, rng);
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    Tensor wp({5}), gp({5});
    for (std::size_t i = 0; i < 5; ++i) {
      wp[i] = w[perm[i]];
      gp[i] = g[perm[i]];
    }
    Parameter a = make_param("a", ParamRole::weight, w, g), b = make_param("b", ParamRole::weight, wp, gp);
    AdamSlot sa{Tensor({5}), Tensor({5}), 0}, sb{Tensor({5}), Tensor({5}), 0};
    adam_step(a, sa, {});
    adam_step(b, sb, {});
    for (std::size_t i = 0; i < 5; ++i) CHECK(b.value[i] == a.value[perm[i]]);
  }

  TEST_CASE("Optimizer applies role-dependent decay and rejects missing gradients") {
    std::vector<Parameter> ps;
    ps.push_back(make_param("w", ParamRole::weight, Tensor({2}, 1.0), Tensor({2}, 0.0)));
    ps.push_back(make_param("b", ParamRole::bias, Tensor({2}, 1.0), Tensor({2}, 0.0)));
    OptimizerConfig cfg;
    cfg.weight_decay = 0.1;
    Optimizer opt(cfg, ps);
    CHECK(opt.slot_count() == 2);
    opt.step(ps);
    CHECK(ps[0].value[0] < 1.0);
    CHECK(ps[1].value[0] == 1.0);
    CHECK(opt.slot_tensors(ps).size() == 2);
    CHECK(opt.slot_tensors(ps)[0].name == "w/cache");

    cfg.kind = OptimizerKind::adam;
    Optimizer adam(cfg, ps);
    CHECK(adam.slot_tensors(ps).size() == 4);
    adam.step(ps);
    CHECK(adam.step_counters() == std::vector<std::uint64_t>{1, 1});

    ps[0].has_grad = false;
    CHECK_THROWS_AS(adam.step(ps), StateError);
    OptimizerConfig bad;
    bad.lr = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK(parse_optimizer_kind("adam") == OptimizerKind::adam);
    CHECK_THROWS_AS(parse_optimizer_kind("sgd"), ConfigError);
  }

  TEST_CASE("init_gaussian statistics and determinism") {
    Rng a = derive_rng(3, 0), b = derive_rng(3, 0);
    const Tensor x = init_gaussian({100000}, 0.02, a);
    CHECK(x == init_gaussian({100000}, 0.02, b));
    const double m = mean(x);
    double v = 0;
    for (double e : x.data()) v += (e - m) * (e - m);
    v /= static_cast<double>(x.size());
    CHECK(std::abs(m) < 5 * 0.02 / std::sqrt(1e5));
    CHECK(std::sqrt(v) == doctest::Approx(0.02).epsilon(0.01));
  }
}
