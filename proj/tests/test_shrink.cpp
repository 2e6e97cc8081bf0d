#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "spotvol/shrink.hpp"

using namespace spotvol;

namespace {

ShrinkageSpec spec_for(ShrinkageRule rule) {
    ShrinkageSpec spec;
    spec.rule = rule;
    return spec;
}

Matrix make_pd(int n, unsigned seed, double ridge) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix A(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) A(i, j) = normal(rng);
    }
    return Matrix(A * A.transpose() / n + ridge * Matrix::Identity(n, n));
}

}  // namespace

TEST_SUITE_BEGIN("shrink");

TEST_CASE("rule names round trip") {
    for (ShrinkageRule r : {ShrinkageRule::None, ShrinkageRule::Soft, ShrinkageRule::Hard,
                            ShrinkageRule::Scad, ShrinkageRule::AdaptiveLasso}) {
        CHECK(parse_rule(rule_name(r)) == r);
    }
    CHECK_THROWS_AS(parse_rule("ridge"), std::invalid_argument);
}

TEST_CASE("spec validation rejects out-of-range parameters") {
    ShrinkageSpec spec;
    spec.scad_a = 2.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = ShrinkageSpec{};
    spec.rule = ShrinkageRule::AdaptiveLasso;
    spec.alasso_eta = 0.5;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = ShrinkageSpec{};
    spec.c_rho = -0.01;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("soft thresholding moves every entry toward zero by rho") {
    ShrinkageSpec spec = spec_for(ShrinkageRule::Soft);
    CHECK(shrink_value(3.0, 1.0, spec) == doctest::Approx(2.0));
    CHECK(shrink_value(-3.0, 1.0, spec) == doctest::Approx(-2.0));
    CHECK(shrink_value(0.5, 1.0, spec) == 0.0);
    CHECK(shrink_value(-1.0, 1.0, spec) == 0.0);
}

TEST_CASE("hard thresholding keeps survivors untouched") {
    ShrinkageSpec spec = spec_for(ShrinkageRule::Hard);
    CHECK(shrink_value(3.0, 1.0, spec) == 3.0);
    CHECK(shrink_value(-3.0, 1.0, spec) == -3.0);
    CHECK(shrink_value(0.99, 1.0, spec) == 0.0);
    CHECK(shrink_value(1.0, 1.0, spec) == 0.0);
}

TEST_CASE("scad pieces join continuously and leave large entries alone") {
    ShrinkageSpec spec = spec_for(ShrinkageRule::Scad);
    const double a = spec.scad_a;
    const double rho = 0.8;
    // Inside the soft piece.
    CHECK(shrink_value(1.2, rho, spec) == doctest::Approx(1.2 - rho));
    // Middle piece at u = 3 * rho (between 2 * rho and a * rho when a = 3.7).
    const double u = 3.0 * rho;
    CHECK(shrink_value(u, rho, spec) == doctest::Approx(((a - 1.0) * u - a * rho) / (a - 2.0)));
    // Beyond a * rho the rule is the identity.
    CHECK(shrink_value(a * rho + 0.3, rho, spec) == a * rho + 0.3);
    CHECK(shrink_value(-(a * rho + 0.3), rho, spec) == -(a * rho + 0.3));
    // Knot continuity at 2 * rho and a * rho.
    for (double knot : {2.0 * rho, a * rho}) {
        const double eps = 1e-9;
        const double lo = shrink_value(knot - eps, rho, spec);
        const double hi = shrink_value(knot + eps, rho, spec);
        CHECK(std::abs(hi - lo) < 1e-7);
    }
}

TEST_CASE("adaptive lasso matches its closed form") {
    ShrinkageSpec spec = spec_for(ShrinkageRule::AdaptiveLasso);
    const double rho = 0.6;
    const double u = 1.5;
    const double expected = u * (1.0 - std::pow(rho / u, spec.alasso_eta));
    CHECK(shrink_value(u, rho, spec) == doctest::Approx(expected));
    CHECK(shrink_value(-u, rho, spec) == doctest::Approx(-expected));
    CHECK(shrink_value(0.59, rho, spec) == 0.0);
}

TEST_CASE("every rule satisfies the three shrinkage axioms on a dense sweep") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u_dist(-3.0, 3.0);
    std::uniform_real_distribution<double> rho_dist(0.0, 1.5);
    const ShrinkageRule rules[4] = {ShrinkageRule::Soft, ShrinkageRule::Hard, ShrinkageRule::Scad,
                                    ShrinkageRule::AdaptiveLasso};
    int checked = 0;
    for (int trial = 0; trial < 2500; ++trial) {
        const double u = u_dist(rng);
        const double rho = rho_dist(rng);
        for (ShrinkageRule rule : rules) {
            ShrinkageSpec spec = spec_for(rule);
            const double s = shrink_value(u, rho, spec);
            REQUIRE(std::abs(s) <= std::abs(u) + 1e-15);
            if (std::abs(u) <= rho) REQUIRE(s == 0.0);
            REQUIRE(std::abs(s - u) <= rho + 1e-12);
            ++checked;
        }
    }
    CHECK(checked == 10000);
}

TEST_CASE("matrix shrinkage with correlation scaling matches a worked example") {
    Matrix S(3, 3);
    S << 4.0, 0.6, 0.2, 0.6, 1.0, 0.45, 0.2, 0.45, 0.25;
    ShrinkageSpec spec = spec_for(ShrinkageRule::Hard);
    spec.c_rho = 0.5;
    // Thresholds: rho_12 = 1.0, rho_13 = 0.5, rho_23 = 0.25. Only entry (2,3)
    // exceeds its threshold.
    Matrix out = shrink_matrix(S, spec);
    Matrix expected(3, 3);
    expected << 4.0, 0.0, 0.0, 0.0, 1.0, 0.45, 0.0, 0.45, 0.25;
    CHECK((out - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix shrinkage leaves the diagonal alone and preserves symmetry") {
    Matrix S = make_pd(6, 5u, 0.05);
    ShrinkageSpec spec = spec_for(ShrinkageRule::Soft);
    spec.c_rho = 0.3;
    Matrix out = shrink_matrix(S, spec);
    CHECK((out.diagonal() - S.diagonal()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((out - out.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix shrinkage rejects bad inputs") {
    Matrix bad(2, 3);
    bad.setZero();
    ShrinkageSpec spec = spec_for(ShrinkageRule::Soft);
    spec.c_rho = 0.1;
    CHECK_THROWS_AS(shrink_matrix(bad, spec), ShapeMismatch);

    Matrix asym(2, 2);
    asym << 1.0, 0.2, 0.3, 1.0;
    CHECK_THROWS_AS(shrink_matrix(asym, spec), std::invalid_argument);

    Matrix negdiag(2, 2);
    negdiag << 1.0, 0.1, 0.1, -0.5;
    CHECK_THROWS_AS(shrink_matrix(negdiag, spec), NonPositiveDiagonal);
}

TEST_CASE("flat thresholding uses the raw cutoff") {
    Matrix S(2, 2);
    S << 4.0, 0.6, 0.6, 1.0;
    ShrinkageSpec spec = spec_for(ShrinkageRule::Hard);
    spec.correlation_scaled = false;
    spec.c_rho = 0.7;
    Matrix out = shrink_matrix(S, spec);
    CHECK(out(0, 1) == 0.0);
    spec.c_rho = 0.5;
    out = shrink_matrix(S, spec);
    CHECK(out(0, 1) == 0.6);
}

TEST_CASE("minimal constant search: already positive definite input stops at the grid start") {
    Matrix S = make_pd(5, 7u, 0.5);
    CpdResult res = min_cpd(S, spec_for(ShrinkageRule::Soft));
    CHECK(res.c_rho == 0.0);
    CHECK(res.at_grid_start);
    CHECK(!res.diagonal_fallback);
    CHECK(res.lambda_min > 1e-10);
    CHECK((res.shrunk - S).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("minimal constant search refines to the known threshold on a 2x2 case") {
    // Off-diagonal 1.05 with unit diagonal: soft shrinkage keeps the matrix
    // singular until c exceeds 0.05, so the certified pair must straddle it.
    Matrix S(2, 2);
    S << 1.0, 1.05, 1.05, 1.0;
    CpdResult res = min_cpd(S, spec_for(ShrinkageRule::Soft));
    CHECK(res.c_rho == doctest::Approx(0.051));
    CHECK(res.c_fail == doctest::Approx(0.050));
    CHECK(res.lambda_min > 1e-10);
    CHECK(res.lambda_min_fail <= 1e-10);
    CHECK(!res.diagonal_fallback);
    CHECK(res.shrunk(0, 1) == doctest::Approx(1.05 - 0.051));
}

TEST_CASE("minimal constant search falls back to the diagonal for the hard rule") {
    // Correlation above one cannot be repaired by hard thresholding inside the
    // unit grid: every surviving entry stays at 1.05.
    Matrix S(2, 2);
    S << 1.0, 1.05, 1.05, 1.0;
    CpdResult res = min_cpd(S, spec_for(ShrinkageRule::Hard));
    CHECK(res.diagonal_fallback);
    CHECK(res.c_rho == 1.0);
    Matrix expected = Matrix::Identity(2, 2);
    CHECK((res.shrunk - expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK(res.lambda_min == doctest::Approx(1.0));
}

TEST_CASE("minimal constant search certificate holds on random indefinite inputs") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 12;
        Matrix A(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) A(i, j) = normal(rng);
        }
        Matrix S = A * A.transpose() / n;
        // Degrade definiteness with a strong off-diagonal contamination.
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i != j) S(i, j) += 0.9 * std::sqrt(S(i, i) * S(j, j)) * ((i + j) % 2 ? 1 : -1);
            }
        }
        S = 0.5 * (S + S.transpose());
        CpdResult res = min_cpd(S, spec_for(ShrinkageRule::Soft));
        CHECK(res.lambda_min > 1e-10);
        if (!res.at_grid_start && !res.diagonal_fallback) {
            CHECK(res.c_fail < res.c_rho);
            CHECK(res.c_rho - res.c_fail <= 1e-3 + 1e-9);
            CHECK(res.lambda_min_fail <= 1e-10);
        }
    }
}

TEST_CASE("poet assembly adds the two layers exactly") {
    Matrix C = make_pd(4, 13u, 0.0);
    Matrix U = make_pd(4, 14u, 0.2);
    SpotEstimate est = poet_estimate(C, U);
    CHECK((est.sigma_hat_X - (C + U)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((est.sigma_tilde_C - C).cwiseAbs().maxCoeff() == 0.0);
    CHECK((est.sigma_hat_U - U).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("woodbury precision matches the dense inverse") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal;
    const int p = 30;
    const int k = 3;
    Matrix L(p, k);
    for (int i = 0; i < p; ++i) {
        for (int l = 0; l < k; ++l) L(i, l) = normal(rng);
    }
    Matrix U = make_pd(p, 77u, 0.4);
    Matrix P = precision_matrix(L, U);
    Matrix dense = (L * L.transpose() + U).inverse();
    CHECK((P - dense).cwiseAbs().maxCoeff() < 1e-8 * dense.cwiseAbs().maxCoeff());
    CHECK((P - P.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("woodbury precision closed form for a single unit loading") {
    const int p = 5;
    Matrix L = Matrix::Zero(p, 1);
    L(0, 0) = 1.0;
    Matrix P = precision_matrix(L, Matrix::Identity(p, p));
    Matrix expected = Matrix::Identity(p, p);
    expected(0, 0) = 0.5;
    CHECK((P - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("precision with no factors is the plain inverse") {
    Matrix U = make_pd(6, 301u, 0.3);
    Matrix P = precision_matrix(Matrix(6, 0), U);
    CHECK((P - Matrix(U.inverse())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("precision rejects ill-conditioned inner systems") {
    const int p = 4;
    Matrix L = Matrix::Zero(p, 2);
    L(0, 0) = 1e9;
    L(0, 1) = 1e-9;
    CHECK_THROWS_AS(precision_matrix(L, Matrix::Identity(p, p)), SingularInner);
}

TEST_CASE("precision requires a positive definite residual matrix") {
    Matrix U = Matrix::Zero(3, 3);
    U(0, 0) = 1.0;
    U(1, 1) = 1.0;  // third diagonal entry is zero
    CHECK_THROWS_AS(precision_matrix(Matrix::Zero(3, 1), U), std::invalid_argument);
}

TEST_SUITE_END();
