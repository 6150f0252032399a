#include <doctest.h>

#include "mired/gradcheck.hpp"

TEST_SUITE("gradcheck") {
  TEST_CASE("relative error") {
    const double a[] = {1.0, 2.0};
    const double b[] = {1.0, 2.0};
    const double c[] = {1.0, 2.2};
    CHECK(mired::relative_error(a, b) == 0.0);
    CHECK(mired::relative_error(a, c) > 0.01);
  }

  TEST_CASE("small run passes") {
    mired::GradcheckOptions opts;
    opts.entropy_trials = 5;
    opts.mi_trials = 5;
    opts.backward_trials = 3;
    const auto r = mired::run_gradcheck(opts);
    CHECK(r.all_pass());
    CHECK(r.categories.size() == 7);
    CHECK(r.summary() == mired::run_gradcheck(opts).summary());
  }

  TEST_CASE("sign-flipped gradients are caught") {
    mired::GradcheckOptions opts;
    opts.entropy_trials = 3;
    opts.mi_trials = 3;
    opts.backward_trials = 2;
    mired::GradcheckHooks hooks;
    hooks.entropy_grad = [](const mired::GramMatrix& g) {
      return mired::grad_entropy_wrt_gram(g) * -1.0;
    };
    hooks.mi_grad = [](const mired::GramMatrix& gx, const mired::DenseMatrix& z, double s) {
      auto r = mired::mi_with_latent_gradient(gx, z, s);
      r.grad_latent = r.grad_latent * -1.0;
      return r;
    };
    hooks.backward_fn = [](const mired::MlpModel& m, const mired::DenseMatrix& x,
                           std::span<const int> y, const mired::ObjectiveSpec& s,
                           const mired::BatchPartition& p) {
      auto g = mired::backward(m, x, y, s, p);
      for (double& v : g.encoder[0].weights.data()) v = -v;
      return g;
    };
    const auto r = mired::run_gradcheck(opts, hooks);
    CHECK_FALSE(r.all_pass());
    for (const auto& c : r.categories) {
      INFO(c.name);
      CHECK_FALSE(c.pass);
      CHECK_FALSE(c.failing_instance.empty());
    }
  }
}
