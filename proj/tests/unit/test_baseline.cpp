#include <doctest.h>

#include <cmath>

#include "kolchin/baseline_priors.hpp"

using namespace kolchin;

TEST_SUITE("baseline-priors") {
  TEST_CASE("crp weights") {
    auto w = crp_weights(Partition::one_cluster(2), 1.0);
    auto pr = w.probabilities();
    CHECK(pr[0] == doctest::Approx(2.0 / 3));
    CHECK(pr[1] == doctest::Approx(1.0 / 3));
    CHECK(crp_weights(Partition::one_cluster(2), 1e-12).probabilities()[1] < 1e-11);
    CHECK(crp_weights(Partition::one_cluster(2), 1e12).probabilities()[1] > 1 - 1e-11);
  }

  TEST_CASE("pyp weights") {
    auto w = pyp_weights(Partition::one_cluster(2), 1.0, 0.5);
    CHECK(w.weights[0] == doctest::Approx(1.5));
    CHECK(w.weights[1] == doctest::Approx(1.5));
    CHECK(w.probabilities()[0] == doctest::Approx(0.5));
    auto s = pyp_weights(Partition::singletons(1), 1.0, 0.5);
    CHECK(s.weights[0] == doctest::Approx(0.5));
  }

  TEST_CASE("dp calibration") {
    CHECK(calibrate_dp(2, 1.5) == doctest::Approx(1.0).epsilon(1e-9));
    for (Index n : {10, 789, 5000}) {
      const double theta = calibrate_dp(n);
      CHECK(dp_expected_clusters(theta, n) == doctest::Approx(n / 2.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(calibrate_dp(10, 10.0), std::domain_error);
    CHECK_THROWS_AS(calibrate_dp(10, 1.0), std::domain_error);
  }

  TEST_CASE("pyp calibration") {
    for (Index n : {50, 789}) {
      const double theta = calibrate_pyp(n, 0.5);
      CHECK(pyp_expected_clusters(theta, 0.5, n) == doctest::Approx(n / 2.0).epsilon(1e-9));
    }
    // d = 0 reduces to the DP.
    CHECK(pyp_expected_clusters(2.0, 0.0, 30) == doctest::Approx(dp_expected_clusters(2.0, 30)));
  }

  TEST_CASE("priors agree with their reseating weights") {
    DpPrior dp({1.3});
    PypPrior pyp({0.8, 0.4});
    auto p = Partition::from_sizes(std::vector<Index>{1, 3, 2});
    // Moving element 0 out of its singleton changes the conditional by the
    // inverse of its new-cluster weight times the join weight.
    for (const PartitionPrior* prior : {static_cast<const PartitionPrior*>(&dp),
                                        static_cast<const PartitionPrior*>(&pyp)}) {
      auto q = p;
      const Index target = q.cluster_of(1);
      q.detach(0);
      const double join = prior->log_join_weight(q.cluster_size(target));
      const double fresh = prior->log_new_weight(q.num_clusters());
      q.attach(0, target);
      CHECK(prior->log_conditional(q) - prior->log_conditional(p) ==
            doctest::Approx(join - fresh).epsilon(1e-12));
    }
  }
}
