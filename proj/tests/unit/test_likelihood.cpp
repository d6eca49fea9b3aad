#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kolchin/likelihood.hpp"

using namespace kolchin;

namespace {

RecordTable binary_table(std::vector<Category> values) {
  FieldSpec f{"x", {"a", "b"}};
  std::vector<std::string> ids;
  for (Index i = 0; i < values.size(); ++i) ids.push_back("r" + std::to_string(i));
  return RecordTable({f}, std::move(values), ids);
}

}  // namespace

TEST_SUITE("likelihood-er") {
  TEST_CASE("cluster marginal likelihood examples") {
    const std::vector<double> gamma{0.5, 0.5};
    std::vector<std::uint32_t> counts{0, 0};
    CHECK(cluster_field_log_ml(counts, 1.0, gamma) == 0.0);
    counts = {1, 0};
    CHECK(cluster_field_log_ml(counts, 1.0, gamma) == doctest::Approx(std::log(0.5)));
    counts = {2, 0};
    CHECK(cluster_field_log_ml(counts, 1.0, gamma) == doctest::Approx(std::log(0.375)));
    const std::vector<double> degenerate{1.0, 0.0};
    counts = {0, 1};
    CHECK_THROWS_AS(cluster_field_log_ml(counts, 1.0, degenerate), std::domain_error);
  }

  TEST_CASE("predictive weights") {
    auto table = binary_table({0, 0, 1});
    FieldPrior prior{{1.0}, {{0.5, 0.5}}, true};
    CollapsedCategorical lik(table, prior);
    auto p = Partition::singletons(3);
    SufficientStats stats(table, p);
    CHECK(lik.new_cluster_log_weight(0) == doctest::Approx(std::log(0.5)));
    stats.remove(0, p.cluster_of(0));
    p.detach(0);
    CHECK(lik.predictive_log_weight(stats, 0, p.cluster_of(1)) ==
          doctest::Approx(std::log(0.75)));
    CHECK(lik.predictive_log_weight(stats, 0, p.cluster_of(2)) ==
          doctest::Approx(std::log(0.25)));
  }

  TEST_CASE("predictive weight is a difference of marginals") {
    FieldSpec f{"x", {"a", "b", "c"}}, g{"y", {"u", "v"}};
    std::vector<Category> v{0, 1, 0, 1, 2, 0, 0, 0, 1, 1};
    std::vector<std::string> ids{"a", "b", "c", "d", "e"};
    RecordTable table({f, g}, v, ids);
    auto prior = FieldPrior::empirical(table, 0.7, true);
    CollapsedCategorical lik(table, prior);
    auto p = Partition::from_assignments(std::vector<std::int64_t>{0, 0, 1, 0, 1});
    SufficientStats stats(table, p);
    const double before = lik.log_likelihood(p, stats);
    const Index c = p.cluster_of(0);
    stats.remove(3, c);
    p.detach(3);
    const double without = lik.log_likelihood(p, stats);
    const double pred = lik.predictive_log_weight(stats, 3, c);
    CHECK(before - without == doctest::Approx(pred).epsilon(1e-12));
  }

  TEST_CASE("delta conditional reduces to the prior") {
    RecordTable empty({FieldSpec{"x", {"a"}}}, {}, {});
    const std::vector<std::vector<double>> g{{1.0}};
    CHECK(delta_log_cond(2.5, Partition(), empty, g, true) == doctest::Approx(-2.5));

    auto table = binary_table({0, 1, 1, 0});
    const std::vector<std::vector<double>> gamma{{0.5, 0.5}};
    auto singles = Partition::singletons(4);
    const double c = delta_log_cond(1.0, singles, table, gamma, true) + 1.0;
    for (double d : {0.01, 0.3, 5.0}) {
      CHECK(delta_log_cond(d, singles, table, gamma, true) + d == doctest::Approx(c));
    }
  }

  TEST_CASE("delta derivative matches finite differences") {
    auto table = binary_table({0, 1, 1, 0, 0, 0});
    auto p = Partition::from_assignments(std::vector<std::int64_t>{0, 0, 1, 1, 2, 2});
    const std::vector<std::vector<double>> gamma{{0.4, 0.6}};
    for (double d : {0.05, 0.5, 3.0}) {
      const double h = 1e-6 * d;
      const double fd = (delta_log_cond(d + h, p, table, gamma, true) -
                         delta_log_cond(d - h, p, table, gamma, true)) /
                        (2 * h);
      CHECK(fd == doctest::Approx(delta_log_cond_derivative(d, p, table, gamma, true))
                      .epsilon(1e-5));
    }
  }

  TEST_CASE("records csv round trip") {
    std::istringstream in(
        "record_id,entity_id,color,size\n"
        "a,1,red,s\n"
        "b,1,red,m\n"
        "c,2,blue,m\n");
    auto t = read_records_csv(in);
    CHECK(t.num_records() == 3);
    CHECK(t.num_fields() == 2);
    CHECK(t.has_truth());
    CHECK(t.truth_partition().num_clusters() == 2);
    CHECK(t.agreements(0, 1) == 1);
    CHECK(t.agreements(1, 2) == 1);
    std::ostringstream out;
    write_records_csv(out, t);
    std::istringstream again(out.str());
    auto u = read_records_csv(again);
    CHECK(u.agreements(0, 1) == 1);
    CHECK(u.record_ids() == t.record_ids());

    std::istringstream missing("record_id,color\na,\n");
    CHECK_THROWS(read_records_csv(missing));
  }
}
