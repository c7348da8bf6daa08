#include <catch_amalgamated.hpp>

#include "helpers.hpp"
#include "oracles.hpp"
#include "panelcf/did.hpp"
#include "panelcf/factor_sim.hpp"
#include "panelcf/gsynth.hpp"
#include "panelcf/lasso_scm.hpp"
#include "panelcf/matrix_completion.hpp"
#include "panelcf/sdid.hpp"

#include <cmath>

using namespace panelcf;
using testutil::make_panel;

namespace {

// five units on a rank-2 factor structure; treated = 0.6 A + 0.4 C, then a
// -2 step from index t0 on
PanelDataset rank2_panel(int n_years = 12, int t0 = 8, double effect = -2.0) {
  std::vector<std::vector<double>> rows(5);
  for (int j = 0; j < n_years; ++j) {
    const double f1 = std::sin(0.7 * j) + 1.0, f2 = 0.25 * j;
    rows[1].push_back(2 * f1 + 0.5 * f2);
    rows[2].push_back(f1 - f2);
    rows[3].push_back(-0.5 * f1 + 2 * f2);
    rows[4].push_back(f1 + f2);
    rows[0].push_back(0.6 * rows[1][static_cast<std::size_t>(j)] +
                      0.4 * rows[3][static_cast<std::size_t>(j)] +
                      (j >= t0 ? effect : 0.0));
  }
  return make_panel({"T", "A", "B", "C", "D"}, 2000, rows);
}

} // namespace

TEST_CASE("simulator: zero factors and zero noise reproduce the common shocks") {
  FactorModelSpec spec;
  spec.n_factors = 0;
  spec.noise_sd = 0.0;
  spec.common_shocks = {1, 2, 3, 4, 5};
  spec.first_year = 2000;
  spec.treatment_year = 2003;
  auto s1 = simulate_factor_panel(spec, 3, 5, 11);
  auto s2 = simulate_factor_panel(spec, 3, 5, 11);
  CHECK(s1.treatment.treated_unit == "U000");
  CHECK(s1.treatment.donor_pool == std::vector<std::string>{"U001", "U002"});
  CHECK(s1.true_effect.start_year == 2003);
  for (const auto& u : s1.panel.units())
    for (int y = 2000; y <= 2004; ++y) {
      CHECK(s1.panel.value(u, y, "q") == static_cast<double>(y - 1999));
      CHECK(s1.panel.value(u, y, "q") == s2.panel.value(u, y, "q"));
    }
}

TEST_CASE("simulator: treatment effect lands on the treated unit only") {
  FactorModelSpec spec;
  spec.n_factors = 0;
  spec.noise_sd = 0.0;
  spec.first_year = 2000;
  spec.treatment_year = 2002;
  spec.treatment_effect = {-1.0, -2.0}; // shorter than the post window
  auto s = simulate_factor_panel(spec, 4, 6, 3);
  CHECK(s.panel.value("U000", 2002, "q") == -1.0);
  CHECK(s.panel.value("U000", 2003, "q") == -2.0);
  CHECK(s.panel.value("U000", 2004, "q") == 0.0); // padding beyond the vector
  CHECK(s.panel.value("U000", 2001, "q") == 0.0);
  for (int y = 2000; y <= 2005; ++y) CHECK(s.panel.value("U001", y, "q") == 0.0);
  REQUIRE(s.true_effect.values.size() == 4);
  CHECK(s.true_effect.values[1] == -2.0);
  CHECK(s.true_effect.values[3] == 0.0);
}

TEST_CASE("simulator: explicit factor paths enter multiplicatively") {
  FactorModelSpec spec;
  spec.n_factors = 1;
  spec.noise_sd = 0.0;
  spec.first_year = 2000;
  spec.treatment_year = 2002;
  Eigen::MatrixXd fac(4, 1), load(3, 1);
  fac << 1.0, 2.0, -1.0, 0.5;
  load << 0.0, 1.0, -2.0;
  spec.factors = fac;
  spec.loadings = load;
  auto s = simulate_factor_panel(spec, 3, 4, 1);
  for (int y = 0; y < 4; ++y) {
    CHECK(s.panel.value("U000", 2000 + y, "q") == 0.0);
    CHECK(s.panel.value("U001", 2000 + y, "q") == fac(y, 0));
    CHECK(s.panel.value("U002", 2000 + y, "q") == -2.0 * fac(y, 0));
  }
}

TEST_CASE("simulator: covariates feed the outcome through theta") {
  FactorModelSpec spec;
  spec.n_factors = 0;
  spec.noise_sd = 0.0;
  spec.covariate_coefficients = {2.0, -0.5};
  spec.first_year = 2000;
  spec.treatment_year = 2003;
  auto s = simulate_factor_panel(spec, 3, 5, 17);
  REQUIRE(s.panel.has_variable("z1"));
  REQUIRE(s.panel.has_variable("z2"));
  for (const auto& u : s.panel.units())
    for (int y = 2000; y <= 2004; ++y)
      CHECK(s.panel.value(u, y, "q") ==
            Catch::Approx(2.0 * s.panel.value(u, y, "z1") -
                          0.5 * s.panel.value(u, y, "z2"))
                .margin(1e-14));
}

TEST_CASE("simulator: noise has the requested moments") {
  FactorModelSpec spec;
  spec.n_factors = 0;
  spec.noise_sd = 1.0;
  spec.first_year = 2000;
  spec.treatment_year = 2050;
  auto s = simulate_factor_panel(spec, 100, 100, 99);
  const auto& m = s.panel.matrix("q");
  const double n = static_cast<double>(m.size());
  const double mean = m.mean();
  const double var = (m.array() - mean).square().sum() / (n - 1);
  CHECK(std::abs(mean) < 3.0 / std::sqrt(n));           // 3 standard errors
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("simulator: input validation") {
  FactorModelSpec spec;
  spec.first_year = 2000;
  spec.treatment_year = 2002;
  REQUIRE_THROWS_AS(simulate_factor_panel(spec, 1, 5, 1), DimensionMismatch);
  spec.common_shocks = {1, 2, 3};
  REQUIRE_THROWS_AS(simulate_factor_panel(spec, 3, 5, 1), DimensionMismatch);
  spec.common_shocks.clear();
  spec.treated_unit = 7;
  REQUIRE_THROWS_AS(simulate_factor_panel(spec, 3, 5, 1), DimensionMismatch);
  spec.treated_unit = 0;
  spec.treatment_year = 2011;
  REQUIRE_THROWS_AS(simulate_factor_panel(spec, 3, 5, 1), DimensionMismatch);
  spec.treatment_year = 2002;
  spec.n_factors = 2;
  spec.factors = Eigen::MatrixXd::Zero(5, 1); // wrong column count
  REQUIRE_THROWS_AS(simulate_factor_panel(spec, 3, 5, 1), DimensionMismatch);
  spec.factors.reset();
  spec.loadings = Eigen::MatrixXd::Zero(2, 2); // wrong unit count
  REQUIRE_THROWS_AS(simulate_factor_panel(spec, 3, 5, 1), DimensionMismatch);
}

TEST_CASE("gsynth: zero factors reduce to two-way fixed-effects imputation") {
  Rng rng(14);
  const int nu = 8, ny = 14, t0 = 9;
  std::vector<std::string> units;
  std::vector<std::vector<double>> rows(nu);
  for (int u = 0; u < nu; ++u) {
    units.push_back("U" + std::to_string(u));
    for (int j = 0; j < ny; ++j)
      rows[u].push_back(0.5 * u + 0.3 * j + rng.normal() +
                        (u == 0 && j >= t0 ? -1.7 : 0.0));
  }
  auto p = make_panel(units, 2000, rows);
  TreatmentSpec t{"U0", 2000 + t0, {}};
  for (int u = 1; u < nu; ++u) t.donor_pool.push_back("U" + std::to_string(u));

  GsynthOptions go;
  go.n_boot = 0;
  auto est = fit_gsynth(p, t, "q", {0}, go);
  CHECK(est.method == "fixed_effects");
  CHECK(est.nuisance.at("factors") == 0.0);

  Eigen::MatrixXd donors(nu - 1, ny);
  Eigen::VectorXd treated(ny);
  for (int j = 0; j < ny; ++j) {
    treated(j) = rows[0][static_cast<std::size_t>(j)];
    for (int u = 1; u < nu; ++u) donors(u - 1, j) = rows[u][static_cast<std::size_t>(j)];
  }
  CHECK(est.att == Catch::Approx(oracle::twfe_impute_att(donors, treated, t0)).margin(1e-10));
}

TEST_CASE("estimator agreement: noiseless additive panel, no factors") {
  // unit levels + year shocks + a clean -2.5 step: every estimator that nests
  // the additive model must land on the truth
  const int nu = 6, ny = 10, ty = 6;
  const double tau = -2.5;
  std::vector<std::string> units;
  std::vector<std::vector<double>> rows(nu);
  for (int u = 0; u < nu; ++u) {
    units.push_back("U" + std::to_string(u));
    for (int j = 0; j < ny; ++j) {
      double v = 0.4 * j + 1.7 * u + (j == 3 ? 0.9 : 0.0);
      if (u == 0 && j >= ty) v += tau;
      rows[u].push_back(v);
    }
  }
  auto p = make_panel(units, 2000, rows);
  TreatmentSpec t{"U0", 2000 + ty, {"U1", "U2", "U3", "U4", "U5"}};

  auto did = fit_twfe_did(p, t, "q");
  GsynthOptions go;
  go.n_boot = 0;
  auto gs = fit_gsynth(p, t, "q", {0}, go);
  auto sd = fit_sdid(p, t, "q");
  CHECK(did.effect == Catch::Approx(tau).margin(1e-9));
  CHECK(gs.att == Catch::Approx(tau).margin(1e-9));
  CHECK(sd.tau == Catch::Approx(tau).margin(1e-9));
  // noiseless placebo permutation: every pseudo-treated donor yields 0
  CHECK(sd.standard_error == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("gsynth: factor DGP recovery and selection") {
  FactorModelSpec spec;
  spec.n_factors = 2;
  spec.noise_sd = 0.5;
  spec.first_year = 1960;
  spec.treatment_year = 1990;
  spec.treatment_effect.assign(10, -1.0);
  auto sim = simulate_factor_panel(spec, 20, 40, 123);
  GsynthOptions go;
  go.n_boot = 200;
  go.seed = 5;
  auto est = fit_gsynth(sim.panel, sim.treatment, "q", {0, 1, 2, 3, 4}, go);
  CHECK(est.method == "ife");
  CHECK(est.nuisance.at("factors") == 2.0);
  CHECK(est.att == Catch::Approx(-1.0).margin(0.3));
  CHECK(est.standard_error > 0.0);
  CHECK(est.p_value > 0.0);
  CHECK(est.p_value <= 1.0);
  CHECK(est.ci95.first == est.att - 1.96 * est.standard_error);

  SECTION("bootstrap is thread-count invariant") {
    auto g1 = go;
    g1.threads = 1;
    auto g4 = go;
    g4.threads = 4;
    auto e1 = fit_gsynth(sim.panel, sim.treatment, "q", {0, 1, 2, 3, 4}, g1);
    auto e4 = fit_gsynth(sim.panel, sim.treatment, "q", {0, 1, 2, 3, 4}, g4);
    CHECK(e1.att == e4.att);
    CHECK(e1.standard_error == e4.standard_error);
    CHECK(e1.p_value == e4.p_value);
  }
}

TEST_CASE("gsynth: factor range validation") {
  auto p = rank2_panel();
  TreatmentSpec t{"T", 2008, {"A", "B", "C", "D"}};
  GsynthOptions go;
  go.n_boot = 0;
  REQUIRE_THROWS_AS(fit_gsynth(p, t, "q", {}, go), FactorRangeInvalid);
  // J = 4 donors, 8 pre years: F may reach min(4, 8) - 2 = 2
  REQUIRE_THROWS_AS(fit_gsynth(p, t, "q", {0, 3}, go), FactorRangeInvalid);
  REQUIRE_THROWS_AS(fit_gsynth(p, t, "q", {-1}, go), FactorRangeInvalid);
  auto ok = fit_gsynth(p, t, "q", {0, 1, 2}, go);
  CHECK(std::isfinite(ok.att));
}

TEST_CASE("matrix completion: rank-2 structure is recovered") {
  auto p = rank2_panel();
  TreatmentSpec t{"T", 2008, {"A", "B", "C", "D"}};
  MatrixCompletionOptions mo;
  mo.n_boot = 100;
  mo.seed = 9;
  auto near_zero = fit_matrix_completion(p, t, "q", 1e-6, mo);
  CHECK(near_zero.method == "matrix_completion");
  CHECK(near_zero.att == Catch::Approx(-2.0).margin(1e-3));
  CHECK(near_zero.nuisance.at("rank") == 2.0);
  // exactly zero shrinkage: the treated pre row lies in the donor row space,
  // so imputation is exact
  auto zero = fit_matrix_completion(p, t, "q", 0.0, mo);
  CHECK(zero.att == Catch::Approx(-2.0).margin(1e-6));
  // heavy shrinkage collapses the fit
  auto heavy = fit_matrix_completion(p, t, "q", 50.0, mo);
  CHECK(heavy.nuisance.at("rank") < 2.0);
  REQUIRE_THROWS_AS(fit_matrix_completion(p, t, "q", -0.1, mo), EmptyInput);
}

TEST_CASE("matrix completion: default shrinkage presets run") {
  auto p = rank2_panel();
  TreatmentSpec t{"T", 2008, {"A", "B", "C", "D"}};
  MatrixCompletionOptions mo;
  mo.n_boot = 50;
  mo.seed = 2;
  for (double lambda : {0.005, 0.05}) {
    auto e = fit_matrix_completion(p, t, "q", lambda, mo);
    CHECK(std::isfinite(e.att));
    CHECK(e.standard_error >= 0.0);
  }
}

TEST_CASE("matrix completion: no planted effect, no reported effect") {
  // at meaningful shrinkage the imputation is deliberately biased toward
  // zero (that is what the penalty does), so the clean zero-effect claims
  // live at lambda = 0 and near-zero
  auto p = rank2_panel(16, 8, 0.0);
  TreatmentSpec t{"T", 2008, {"A", "B", "C", "D"}};
  MatrixCompletionOptions mo;
  mo.n_boot = 200;
  mo.seed = 4;
  auto exact = fit_matrix_completion(p, t, "q", 0.0, mo);
  CHECK(exact.att == Catch::Approx(0.0).margin(1e-6));
  auto near = fit_matrix_completion(p, t, "q", 1e-6, mo);
  CHECK(near.att == Catch::Approx(0.0).margin(1e-3));

  SECTION("bootstrap is thread-count invariant") {
    auto m1 = mo;
    m1.threads = 1;
    auto m4 = mo;
    m4.threads = 4;
    auto e1 = fit_matrix_completion(p, t, "q", 0.05, m1);
    auto e4 = fit_matrix_completion(p, t, "q", 0.05, m4);
    CHECK(e1.att == e4.att);
    CHECK(e1.standard_error == e4.standard_error);
  }
}

TEST_CASE("lasso scm: huge penalty leaves only the intercept") {
  Rng rng(17);
  const int ny = 14, ty = 10;
  std::vector<std::vector<double>> rows(4);
  for (int j = 0; j < ny; ++j) {
    for (int u = 1; u < 4; ++u) rows[u].push_back(rng.normal() + 0.2 * j + u);
    rows[0].push_back(1.5 * rows[1][static_cast<std::size_t>(j)] -
                      0.7 * rows[2][static_cast<std::size_t>(j)] + 0.3 +
                      0.05 * rng.normal() + (j >= ty ? -3.0 : 0.0));
  }
  auto p = make_panel({"T", "A", "B", "C"}, 2000, rows);
  TreatmentSpec t{"T", 2000 + ty, {"A", "B", "C"}};

  auto big = fit_lasso_scm(p, t, "q", {1e9});
  CHECK(big.weights.w.cwiseAbs().maxCoeff() == 0.0);
  double pre_mean = 0;
  for (int j = 0; j < ty; ++j) pre_mean += rows[0][static_cast<std::size_t>(j)];
  pre_mean /= ty;
  CHECK(big.weights.intercept == Catch::Approx(pre_mean).margin(1e-10));
  // the counterfactual is the flat pre mean
  for (double v : big.counterfactual.values)
    CHECK(v == Catch::Approx(pre_mean).margin(1e-10));

  SECTION("no penalty reproduces the least-squares solution") {
    auto ols = fit_lasso_scm(p, t, "q", {0.0});
    Eigen::MatrixXd x(ty, 4);
    Eigen::VectorXd y(ty);
    for (int j = 0; j < ty; ++j) {
      x(j, 0) = 1;
      for (int u = 1; u < 4; ++u)
        x(j, u) = rows[static_cast<std::size_t>(u)][static_cast<std::size_t>(j)];
      y(j) = rows[0][static_cast<std::size_t>(j)];
    }
    const Eigen::VectorXd b = oracle::normal_equations(x, y);
    CHECK(ols.weights.intercept == Catch::Approx(b(0)).margin(1e-8));
    for (int u = 0; u < 3; ++u)
      CHECK(ols.weights.w(u) == Catch::Approx(b(u + 1)).margin(1e-8));
    CHECK(ols.weights.w(1) < 0.0); // signed weights are the point
  }
  SECTION("cross-validation picks from the grid, order-independently") {
    auto cv = fit_lasso_scm(p, t, "q", {0.0, 0.001, 0.01, 0.1, 1.0});
    CHECK(cv.diagnostics.at("lambda") == 0.01);
    CHECK(cv.diagnostics.at("nonzero_weights") == 2.0);
    CHECK(cv.diagnostics.at("cv_mse") > 0.0);
    auto cv2 = fit_lasso_scm(p, t, "q", {1.0, 0.01, 0.001, 0.1, 0.0});
    CHECK(cv2.diagnostics.at("lambda") == 0.01);
    CHECK(cv2.gaps.post_mean() == cv.gaps.post_mean());
  }
  SECTION("input validation") {
    REQUIRE_THROWS_AS(fit_lasso_scm(p, t, "q", {}), EmptyInput);
    REQUIRE_THROWS_AS(fit_lasso_scm(p, t, "q", {-0.5}), EmptyInput);
    TreatmentSpec early{"T", 2001, {"A", "B", "C"}};
    REQUIRE_THROWS_AS(fit_lasso_scm(p, early, "q", {0.1}), InsufficientPrePeriod);
  }
}

TEST_CASE("lasso scm: planted signed combination is recovered exactly") {
  Rng rng(29);
  const int ny = 12, ty = 8;
  std::vector<std::vector<double>> rows(4);
  for (int j = 0; j < ny; ++j) {
    for (int u = 1; u < 4; ++u) rows[u].push_back(rng.normal() + 0.5 * u * j / 10.0);
    rows[0].push_back(2.0 * rows[1][static_cast<std::size_t>(j)] -
                      0.5 * rows[2][static_cast<std::size_t>(j)] +
                      (j >= ty ? 1.25 : 0.0));
  }
  auto p = make_panel({"T", "A", "B", "C"}, 2000, rows);
  TreatmentSpec t{"T", 2000 + ty, {"A", "B", "C"}};
  auto fit = fit_lasso_scm(p, t, "q", {0.0});
  CHECK(fit.weights.w(0) == Catch::Approx(2.0).margin(1e-6));
  CHECK(fit.weights.w(1) == Catch::Approx(-0.5).margin(1e-6));
  CHECK(fit.weights.w(2) == Catch::Approx(0.0).margin(1e-6));
  CHECK(fit.weights.intercept == Catch::Approx(0.0).margin(1e-6));
  CHECK(fit.pre_rmse < 1e-8);
  CHECK(fit.gaps.post_mean() == Catch::Approx(1.25).margin(1e-6));
}

TEST_CASE("sdid: doubly weighted contrast matches an explicit weighted regression") {
  auto p = make_panel({"T", "A", "B", "C"}, 2000,
                      {{2.0, 2.5, 3.1, 3.4, 4.0, 1.0},
                       {1.9, 2.4, 3.0, 3.5, 4.1, 4.6},
                       {0.5, 1.1, 1.6, 2.0, 2.4, 2.9},
                       {3.0, 3.3, 3.9, 4.2, 4.8, 5.1}});
  TreatmentSpec t{"T", 2005, {"A", "B", "C"}};
  auto r = fit_sdid(p, t, "q");

  Eigen::MatrixXd y(4, 6);
  const std::vector<std::string> order = {"A", "B", "C", "T"};
  for (int u = 0; u < 4; ++u)
    for (int j = 0; j < 6; ++j)
      y(u, j) = p.value(order[static_cast<std::size_t>(u)], 2000 + j, "q");
  Eigen::VectorXd uw(4), tw(6);
  for (int u = 0; u < 3; ++u) uw(u) = r.unit_weights.at(order[static_cast<std::size_t>(u)]);
  uw(3) = 1.0;
  for (int j = 0; j < 5; ++j) tw(j) = r.time_weights.at(2000 + j);
  tw(5) = 1.0;
  const double tau = oracle::weighted_did_tau(y, 3, 5, uw, tw);
  CHECK(r.tau == Catch::Approx(tau).margin(1e-10));
}

TEST_CASE("sdid: weights live on the simplex and are summarized correctly") {
  Rng rng(3);
  const int nu = 6, ny = 9, ty = 6;
  std::vector<std::string> units;
  std::vector<std::vector<double>> rows(nu);
  for (int u = 0; u < nu; ++u) {
    units.push_back("U" + std::to_string(u));
    for (int j = 0; j < ny; ++j)
      rows[u].push_back(rng.normal() + 0.3 * j + (u == 0 && j >= ty ? -1.5 : 0.0));
  }
  auto p = make_panel(units, 2000, rows);
  TreatmentSpec t{"U0", 2000 + ty, {"U1", "U2", "U3", "U4", "U5"}};
  auto r = fit_sdid(p, t, "q");

  double sw = 0.0, sl = 0.0;
  long nz_u = 0, nz_t = 0;
  for (const auto& [k, v] : r.unit_weights) {
    CHECK(v >= -1e-9);
    sw += v;
    if (v > 1e-8) ++nz_u;
  }
  for (const auto& [k, v] : r.time_weights) {
    CHECK(v >= -1e-9);
    sl += v;
    if (v > 1e-8) ++nz_t;
  }
  CHECK(sw == Catch::Approx(1.0).margin(1e-6));
  CHECK(sl == Catch::Approx(1.0).margin(1e-6));
  CHECK(r.nonzero_unit_weights == nz_u);
  CHECK(r.nonzero_time_weights == nz_t);
  CHECK(r.n_placebo == 5);
  CHECK(r.standard_error > 0.0);
  CHECK(r.noise_scale > 0.0);
  CHECK(r.zeta_unit > 0.0);
  CHECK(r.ci95.first == r.tau - 1.96 * r.standard_error);
  CHECK(r.ci95.second == r.tau + 1.96 * r.standard_error);
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value <= 1.0);

  SECTION("adding a unit-level constant changes nothing") {
    auto rows2 = rows;
    for (int u = 0; u < nu; ++u)
      for (int j = 0; j < ny; ++j) rows2[u][j] += 7.0 * u - 11.0;
    auto p2 = make_panel(units, 2000, rows2);
    auto r2 = fit_sdid(p2, t, "q");
    CHECK(r2.tau == Catch::Approx(r.tau).margin(1e-9));
    CHECK(r2.standard_error == Catch::Approx(r.standard_error).margin(1e-9));
  }
}

TEST_CASE("sdid: validation errors") {
  auto p = rank2_panel();
  REQUIRE_THROWS_AS(fit_sdid(p, {"T", 2001, {"A", "B"}}, "q"), InsufficientPrePeriod);
  REQUIRE_THROWS_AS(fit_sdid(p, {"T", 2012, {"A", "B"}}, "q"), InvalidTreatment);
  REQUIRE_THROWS_AS(fit_sdid(p, {"T", 2008, {"A"}}, "q"), EmptyDonorPool);
}
