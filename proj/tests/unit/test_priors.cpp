#include <doctest.h>

#include <cmath>
#include <memory>

#include "helpers.hpp"
#include "kolchin/distributions.hpp"
#include "kolchin/kp_priors.hpp"

using namespace kolchin;
using kolchin::test::labels;

namespace {

double normalized(const ReseatWeights& w, Index i) { return w.probabilities()[i]; }

Partition random_partition(Index n, Rng& rng) {
  std::vector<std::int64_t> l(n);
  const Index k = 1 + uniform_index(rng, n);
  for (auto& x : l) x = static_cast<std::int64_t>(uniform_index(rng, k));
  return Partition::from_assignments(l);
}

}  // namespace

TEST_SUITE("kp-priors") {
  TEST_CASE("truncated negative binomial pmf") {
    CHECK(TruncNegBin(1, 0.5).log_pmf(1) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(TruncNegBin(1, 0.5).log_pmf(2) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
    CHECK(TruncNegBin(2, 0.5).log_pmf(1) == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
    CHECK_THROWS_AS(TruncNegBin(1, 0.5).log_pmf(0), std::domain_error);
    CHECK_THROWS(TruncNegBin(0, 0.5));
    CHECK_THROWS(TruncNegBin(1, 1.0));

    TruncNegBin d(2.5, 0.7);
    double total = 0;
    for (Index k = 1; k < 400; ++k) total += std::exp(d.log_pmf(k));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("kp_log_pmf small cases") {
    Geometric g(0.5);
    CHECK(kp_log_pmf(Partition::singletons(1), g, g) == doctest::Approx(std::log(0.25)));
    CHECK(kp_log_pmf(Partition::one_cluster(2), g, g) == doctest::Approx(std::log(0.125)));
    CHECK(kp_log_pmf(Partition::singletons(2), g, g) == doctest::Approx(std::log(0.0625)));
  }

  TEST_CASE("kp_log_pmf sums to P(N) over all partitions") {
    // Sum over partitions of [3] must equal P(N=3) under the forward model.
    Geometric g(0.5);
    double total = 0;
    for (auto l : {std::vector<std::int64_t>{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 1},
                   {0, 1, 2}}) {
      total += std::exp(kp_log_pmf(Partition::from_assignments(l), g, g));
    }
    // P(N=3) = sum_K kappa_K P(sum of K geometrics = 3).
    const double pn = 0.5 * 0.125 + 0.25 * 2 * 0.5 * 0.25 + 0.125 * 0.125;
    CHECK(total == doctest::Approx(pn).epsilon(1e-12));
  }

  TEST_CASE("nbnb conditional examples") {
    CHECK(std::exp(nbnb_log_beta(0.5, 1, 0.5)) == doctest::Approx(0.5));
    CHECK(std::exp(nbnb_cond_log_pmf_unnorm(Partition::one_cluster(2), 1, 0.5, 1, 0.5)) ==
          doctest::Approx(1.0));
    CHECK(std::exp(nbnb_cond_log_pmf_unnorm(Partition::singletons(2), 1, 0.5, 1, 0.5)) ==
          doctest::Approx(0.5));
  }

  TEST_CASE("nbd conditional examples") {
    std::vector<double> log_mu{0, std::log(0.5), std::log(0.25)};
    CHECK(std::exp(nbd_cond_log_pmf_unnorm(Partition::one_cluster(2), 1, 0.5, log_mu)) ==
          doctest::Approx(0.25));
    CHECK(std::exp(nbd_cond_log_pmf_unnorm(Partition::singletons(2), 1, 0.5, log_mu)) ==
          doctest::Approx(0.125));
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> only_ones{0, 0.0, ninf};
    CHECK(nbd_cond_log_pmf_unnorm(Partition::one_cluster(2), 1, 0.5, only_ones) == ninf);
    CHECK(std::isfinite(nbd_cond_log_pmf_unnorm(Partition::singletons(2), 1, 0.5, only_ones)));
  }

  TEST_CASE("generic reseating weights") {
    Geometric g(0.5);
    auto p = Partition::one_cluster(2);
    auto w = reseat_weights_generic(p, g, g);
    REQUIRE(w.weights.size() == 2);
    CHECK(w.weights[0] == doctest::Approx(1.5));
    CHECK(w.weights[1] == doctest::Approx(0.5));
    CHECK(normalized(w, 0) == doctest::Approx(0.75));
  }

  TEST_CASE("nbnb reseating weights") {
    auto p = Partition::one_cluster(2);
    auto w = reseat_weights_nbnb(p, 1, 0.5, 1, 0.5);
    CHECK(w.weights[0] == doctest::Approx(3.0));
    CHECK(w.weights[1] == doctest::Approx(1.0));
    CHECK(normalized(w, 0) == doctest::Approx(0.75));

    auto q = Partition::from_sizes(std::vector<Index>{1, 9});
    auto big = reseat_weights_nbnb(q, 1, 0.5, 1e9, 0.5);
    CHECK(big.weights[0] / big.weights[1] == doctest::Approx(1.0).epsilon(1e-7));
  }

  TEST_CASE("nbnb weights are proportional to the generic rule") {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
      const double a = 0.2 + 3 * uniform01(rng), q = 0.05 + 0.9 * uniform01(rng);
      const double r = 0.1 + 5 * uniform01(rng), pp = 0.05 + 0.9 * uniform01(rng);
      auto part = random_partition(2 + uniform_index(rng, 30), rng);
      auto x = reseat_weights_nbnb(part, a, q, r, pp);
      auto y = reseat_weights_generic(part, TruncNegBin(a, q), TruncNegBin(r, pp));
      const double k = x.weights[0] / y.weights[0];
      for (Index c = 0; c < x.weights.size(); ++c) {
        CHECK(x.weights[c] / y.weights[c] / k == doctest::Approx(1.0).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("nbd mu posterior parameters") {
    auto p = Partition::from_sizes(std::vector<Index>{1, 1, 2});
    auto params = nbd_mu_posterior(p, 1.0, Geometric(0.5));
    const std::vector<double> expected{2.5, 1.25, 0.125, 0.0625, 0.0625};
    REQUIRE(params.size() == expected.size());
    for (Index i = 0; i < expected.size(); ++i) CHECK(params[i] == doctest::Approx(expected[i]));

    auto tiny = nbd_mu_posterior(p, 1e-12, Geometric(0.5));
    CHECK(tiny[0] == doctest::Approx(2.0));
    CHECK(tiny[1] == doctest::Approx(1.0));
    CHECK(tiny[2] < 1e-11);
  }

  TEST_CASE("nbd prior draw follows the base truncation") {
    NbdPrior prior(1, 0.5, 2.0, std::make_shared<Geometric>(0.5), true);
    Rng rng(11);
    double mean1 = 0;
    const int reps = 20000;
    for (int i = 0; i < reps; ++i) {
      prior.draw_mu_prior(4, rng);
      mean1 += std::exp(prior.mu().log_mu[1]);
    }
    CHECK(mean1 / reps == doctest::Approx(0.5).epsilon(0.02));
  }

  TEST_CASE("r conditional matches the joint up to a constant") {
    auto part = Partition::from_sizes(std::vector<Index>{1, 2, 2, 3, 5});
    NbnbHyper h;
    h.p = 0.3;
    const double base = [&] {
      h.r = 0.5;
      return nbnb_log_joint(part, h) - r_log_cond(0.5, part, h.p, h.eta_r, h.s_r);
    }();
    for (double r : {0.7, 1.0, 2.0, 4.5, 9.0}) {
      h.r = r;
      CHECK(nbnb_log_joint(part, h) - r_log_cond(r, part, h.p, h.eta_r, h.s_r) ==
            doctest::Approx(base).epsilon(1e-10));
    }
    CHECK_THROWS_AS(r_log_cond(0.0, part, 0.5, 1, 1), std::domain_error);
    CHECK_THROWS_AS(r_log_cond(1.0, part, 1.0, 1, 1), std::domain_error);
  }

  TEST_CASE("p conditional matches the joint up to a constant") {
    auto part = Partition::from_sizes(std::vector<Index>{1, 2, 2, 3, 5});
    NbnbHyper h;
    h.r = 1.7;
    h.p = 0.2;
    const double base = nbnb_log_joint(part, h) - p_log_cond(0.2, part, h.r, h.u_p, h.v_p);
    for (double pp : {0.1, 0.4, 0.6, 0.9}) {
      h.p = pp;
      CHECK(nbnb_log_joint(part, h) - p_log_cond(pp, part, h.r, h.u_p, h.v_p) ==
            doctest::Approx(base).epsilon(1e-10));
    }
  }

  TEST_CASE("shifted r form vanishes on singletons") {
    auto part = Partition::singletons(6);
    for (double r : {0.3, 1.0, 7.0}) {
      const double shifted = r_log_cond(r, part, 0.4, 1, 1, RConditionalForm::kShiftedGamma);
      const double expected = -r + r * 6 * std::log(0.6) - 6 * std::log(1 - std::pow(0.6, r));
      CHECK(shifted == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  TEST_CASE("r conditional derivative matches finite differences") {
    auto part = Partition::from_sizes(std::vector<Index>{1, 1, 2, 4});
    for (double r : {0.5, 1.5, 3.0}) {
      const double h = 1e-5;
      const double fd = (r_log_cond(r + h, part, 0.5, 2, 1) - r_log_cond(r - h, part, 0.5, 2, 1)) /
                        (2 * h);
      // Analytic derivative of the kFromJoint form.
      const double K = 4, q = 0.5;
      double d = (2 - 1) / r - 1 + K * std::log(q) +
                 K * std::pow(q, r) * std::log(q) / (1 - std::pow(q, r));
      for (Index s : {1, 1, 2, 4}) {
        double dg = 0;
        for (Index j = 0; j < s; ++j) dg += 1.0 / (r + j);
        d += dg;
      }
      CHECK(fd == doctest::Approx(d).epsilon(1e-5));
    }
  }

  TEST_CASE("calibrate_kappa") {
    auto [a, q] = calibrate_kappa(789);
    CHECK(q == doctest::Approx(1 - 2.0 / 789).epsilon(1e-15));
    CHECK(a == doctest::Approx(789.0 / 787).epsilon(1e-15));
    auto [a4, q4] = calibrate_kappa(4);
    CHECK(a4 == 2.0);
    CHECK(q4 == 0.5);
    CHECK_THROWS_AS(calibrate_kappa(2), std::domain_error);
  }
}
