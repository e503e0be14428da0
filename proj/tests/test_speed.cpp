#include <doctest.h>

#include <cmath>

#include "gwrc/speed.hpp"
#include "test_util.hpp"

using namespace gwrc;
using gwrc_test::code_of;

namespace {

ConductanceLawTable unit_table() { return ConductanceLawTable(ConductanceLaw::constant(1.0)); }

OffspringLaw binary() { return OffspringLaw::from_map({{2, 1.0}}); }

MonteCarloOptions small_opts(std::uint64_t seed) {
  MonteCarloOptions o;
  o.seed = seed;
  o.steps = 2000;
  o.replicas = 16;
  o.samples = 1500;
  return o;
}

}  // namespace

TEST_SUITE_BEGIN("speed");

TEST_CASE("closed-form srw speed") {
  CHECK(srw_speed(binary()) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(srw_speed(OffspringLaw::from_map({{3, 1.0}})) == doctest::Approx(0.5).epsilon(1e-15));
  // two-term hand sum: 0.5*0 + 0.5*(1/2)
  CHECK(srw_speed(OffspringLaw::from_map({{1, 0.5}, {3, 0.5}})) ==
        doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("root weight of the unit augmented binary root is one") {
  LazyTree tree(TreeMode::Augmented, binary(), unit_table(), 2);
  CHECK(root_weight(tree) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(root_weight(tree) ==
        doctest::Approx(tree.pi(tree.root()) /
                        (tree.record(tree.root()).index + 1.0)));
}

TEST_CASE("mean root weight reproduces gamma") {
  auto law = OffspringLaw::from_map({{1, 0.5}, {3, 0.5}});
  ConductanceLawTable table(ConductanceLaw::exponential(0.5));  // gamma = 2
  std::vector<double> weights;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    LazyTree tree(TreeMode::Augmented, law, table, derive_key(900, i));
    weights.push_back(root_weight(tree));
  }
  auto s = gwrc_test::mean_se(weights);
  CHECK(std::fabs(s.mean - mean_gamma(table, law)) < 4.0 * s.se);
}

TEST_CASE("direct estimate after one step is exactly one") {
  MonteCarloOptions o = small_opts(3);
  o.steps = 1;
  o.replicas = 10;
  SpeedEstimate est = direct_speed(binary(), unit_table(), o);
  CHECK(est.point == 1.0);
  CHECK(est.ci_halfwidth == 0.0);
}

TEST_CASE("direct estimate near 1/3 for unit conductances") {
  MonteCarloOptions o = small_opts(4);
  o.steps = 20000;
  o.replicas = 30;
  SpeedEstimate est = direct_speed(binary(), unit_table(), o);
  CHECK(std::fabs(est.point - 1.0 / 3.0) < 4.0 * est.ci_halfwidth / 1.96 + 0.003);
}

TEST_CASE("formula reduces to srw for constant conductances") {
  // E_k[C(T*_0)/C(T)] = 1/(k+1) makes the estimand exactly 1/3 on p_2 = 1
  MonteCarloOptions o = small_opts(5);
  o.samples = 400;
  SpeedEstimate est = formula_speed(binary(), unit_table(), o);
  CHECK(std::fabs(est.point - 1.0 / 3.0) <= est.ci_halfwidth + 1e-9);
  CHECK(est.ci_halfwidth < 2e-3);
  CHECK(est.diagnostics.at("tolerance_met_fraction") == 1.0);
}

TEST_CASE("formula requires finite gamma") {
  ConductanceLawTable heavy(ConductanceLaw::pareto(0.5, 1.0));
  CHECK(code_of([&] { formula_speed(binary(), heavy, small_opts(6)); }) ==
        Errc::InfiniteGamma);
  CHECK(code_of([&] { covariance_speed(binary(), heavy, small_opts(6)); }) ==
        Errc::InfiniteGamma);
}

TEST_CASE("covariance estimator on a constant law returns v_srw exactly") {
  MonteCarloOptions o = small_opts(7);
  o.samples = 300;
  SpeedEstimate est = covariance_speed(binary(), unit_table(), o);
  CHECK(est.diagnostics.at("covariance") == 0.0);
  CHECK(est.point == doctest::Approx(srw_speed(binary())).epsilon(1e-15));
}

TEST_CASE("equal-mean two-point law has significantly positive covariance") {
  ConductanceLawTable table(ConductanceLaw::two_point(0.5, 1.5, 0.5));
  MonteCarloOptions o = small_opts(8);
  o.samples = 2000;
  SpeedEstimate est = covariance_speed(binary(), table, o);
  double cov = est.diagnostics.at("covariance");
  double ci = est.diagnostics.at("covariance_ci");
  CHECK(cov - ci > 0.0);
}

TEST_CASE("formula and covariance agree on a shared sample stream") {
  ConductanceLawTable table(ConductanceLaw::two_point(1.0, 2.0, 0.5));
  MonteCarloOptions o = small_opts(9);
  o.samples = 2500;
  double gamma = mean_gamma(table, binary());
  auto samples = formula_samples(binary(), table, o);
  SpeedEstimate f = formula_estimate(samples, gamma);
  SpeedEstimate c = covariance_estimate(samples, gamma, srw_speed(binary()));
  CHECK(std::fabs(f.point - c.point) <= f.ci_halfwidth + c.ci_halfwidth + 1e-3);
}

TEST_CASE("formula sample invariants hold") {
  ConductanceLawTable table(ConductanceLaw::two_point(1.0, 2.0, 0.5));
  MonteCarloOptions o = small_opts(10);
  for (std::uint64_t i = 0; i < 50; ++i) {
    LazyTree tree(TreeMode::Augmented, binary(), table, derive_key(777, i));
    FormulaSample s = formula_sample(tree, o);
    CHECK(s.k == 2);
    CHECK(s.ratio_term.lo >= 0.0);
    CHECK(s.ratio_term.hi <= s.xi0 + 1e-12);
    CHECK(s.m_weight > 0.0);
    CHECK(s.c_total.hi >= s.c_t0_star.hi - 1e-12);
    CHECK(s.c_total.lo <= s.c_total.hi);
  }
}

TEST_CASE("slowdown verdict and hypothesis checks") {
  MonteCarloOptions o = small_opts(11);
  o.samples = 2500;

  ConductanceLawTable good(ConductanceLaw::two_point(0.5, 1.5, 0.5));
  SlowdownReport rep = slowdown_test(binary(), good, o);
  CHECK(rep.verdict == "SLOWDOWN");
  CHECK(rep.formula.point + rep.formula.ci_halfwidth < rep.v_srw);
  CHECK(rep.covariance - rep.covariance_ci > 0.0);

  CHECK(code_of([&] { slowdown_test(binary(), unit_table(), o); }) == Errc::DegenerateLaw);

  auto mixed = OffspringLaw::from_map({{2, 0.5}, {3, 0.5}});
  ConductanceLawTable unequal(ConductanceLaw::two_point(0.5, 1.5, 0.5));
  unequal.set_override(2, 3, ConductanceLaw::two_point(0.5, 1.5, 0.9));
  CHECK(code_of([&] { slowdown_test(mixed, unequal, o); }) == Errc::UnequalMeans);
}

TEST_CASE("ex1 rows carry the limit reference and sane estimates") {
  MonteCarloOptions o = small_opts(12);
  o.samples = 800;
  auto rows = ex1_curve({1e-4}, {10.0}, o);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].eta == doctest::Approx(1e-3));
  CHECK(rows[0].reference == doctest::Approx(1.0 / (3.0 * 1.001)));
  CHECK(std::fabs(rows[0].v_hat - 1.0 / 3.0) < 0.02);

  CHECK(code_of([&] { ex1_curve({0.1, 0.2}, {10.0}, o); }) == Errc::BadParameter);
  CHECK(code_of([&] { ex1_curve({1.5}, {10.0}, o); }) == Errc::BadParameter);
}

TEST_CASE("stationarity battery passes and controls vanish") {
  auto law = OffspringLaw::from_map({{1, 0.5}, {3, 0.5}});
  ConductanceLawTable table(ConductanceLaw::exponential(1.0));
  MonteCarloOptions o = small_opts(13);
  auto rows = stationarity_check(law, table, 20000, o);
  REQUIRE(rows.size() == 14);
  bool saw_control = false;
  for (const auto& r : rows) {
    CAPTURE(r.f + "/" + r.g + "/" + r.u);
    CHECK(r.pass);
    if (r.f == r.g) {
      saw_control = true;
      CHECK(r.mean_diff == 0.0);
    }
  }
  CHECK(saw_control);
}

TEST_CASE("estimates are deterministic across worker counts") {
  ConductanceLawTable table(ConductanceLaw::two_point(1.0, 2.0, 0.5));
  MonteCarloOptions one = small_opts(14);
  one.samples = 600;
  MonteCarloOptions four = one;
  four.workers = 4;
  auto a = formula_samples(binary(), table, one);
  auto b = formula_samples(binary(), table, four);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].xi0 == b[i].xi0);
    CHECK(a[i].ratio_term.midpoint() == b[i].ratio_term.midpoint());
  }
  SpeedEstimate ea = direct_speed(binary(), table, one);
  SpeedEstimate eb = direct_speed(binary(), table, four);
  CHECK(ea.point == eb.point);
}

TEST_SUITE_END();
