#include <doctest.h>

#include "ctsynth/error.hpp"
#include "ctsynth/gradcheck.hpp"
#include "ctsynth/ops.hpp"
#include "ctsynth_cli/gradcheck_harness.hpp"

using namespace ctsynth;

TEST_SUITE("gradcheck") {
  TEST_CASE("grad_check accepts a correct gradient and reports its error") {
    Parameter w{"w", ParamRole::weight, Tensor({3}, std::vector<double>{0.5, -1.5, 2.0}), {}, false};
    const auto f = [&](Tape& t) {
      const Var v = t.parameter(w);
      return sum(t, mul(t, v, v));
    };
    const auto rep = grad_check(f, {&w});
    REQUIRE(rep.entries.size() == 1);
    CHECK(rep.entries[0].elements == 3);
    CHECK(rep.max_rel_err < 1e-9);  // central differences are exact on quadratics up to rounding
    CHECK(rep.passed(1e-8));
    CHECK(rep.kink_crossings == 0);
  }

  TEST_CASE("grad_check flags kink crossings") {
    Parameter w{"w", ParamRole::weight, Tensor({2}, std::vector<double>{1e-6, 1.0}), {}, false};
    const auto f = [&](Tape& t) { return sum(t, leaky_relu(t, t.parameter(w), 0.2)); };
    const auto rep = grad_check(f, {&w});
    CHECK(rep.kink_crossings == 1);
    CHECK(rep.max_rel_err_smooth < 1e-9);
    CHECK(rep.max_rel_err > 0.1);
  }

  TEST_CASE("grad_check rejects a nondeterministic loss") {
    Parameter w{"w", ParamRole::weight, Tensor({1}, 1.0), {}, false};
    int calls = 0;
    const auto f = [&](Tape& t) { return sum(t, scale(t, t.parameter(w), 1.0 + ++calls)); };
    CHECK_THROWS_AS(grad_check(f, {&w}), ContractError);
    CHECK_THROWS_AS(grad_check([&](Tape& t) { return sum(t, t.parameter(w)); }, {&w}, 0.0), ConfigError);
  }

  TEST_CASE("both networks pass at reduced width") {
    for (int k : {3, 5}) {
      CAPTURE(k);
      cli::GradcheckOptions opts;
      opts.kernel = k;
      const auto out = cli::run_gradcheck(opts);
      CHECK(out.kink_crossings == 0);
      CHECK(out.max_rel_err <= 1e-5);
      CHECK(out.passed(opts.tol));
      // Every parameterized layer of both networks appears.
      std::size_t d_layers = 0, g_layers = 0;
      for (const auto& l : out.layers) (l.path == "d_loss" ? d_layers : g_layers)++;
      CHECK(d_layers == 6);
      CHECK(g_layers == 6);
    }
  }
}
