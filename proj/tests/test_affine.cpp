#include <gtest/gtest.h>

#include "linconn/affine.hpp"
#include "support.hpp"

using namespace linconn;
using testsupport::Rng;

namespace {

ConnectionModel affine_1d(const std::string& g) {
    return make_connection(BundleKind::Affine, {"x1"}, {"y1"}, {{g}});
}

ConnectionModel affine_2d() {
    return make_connection(BundleKind::Affine, {"x1", "x2"}, {"y1", "y2"},
                           {{"y1^2 + x2", "y1*y2"}, {"sin(x1)*y2^3", "y2*x1 - y1^2"}});
}

}  // namespace

TEST(Homogenize, Examples) {
    auto h = homogenize(affine_1d("y1^2"));
    EXPECT_EQ(h.extended.bundle.fiber, (std::vector<std::string>{"z0", "z1"}));
    EXPECT_TRUE(h.extended.gamma[0][0].is_zero());
    EXPECT_EQ(to_string(h.extended.gamma[1][0]), "z0*(z1/z0)^2");
    EXPECT_EQ(h.extended.excluded.back().text(), "z0=0");
    EXPECT_TRUE(h.extended.homogeneous);

    auto lin = homogenize(affine_1d("sin(x1) + x1^2*y1"));
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        double x = rng.uniform(-1, 1), z0 = rng.uniform(0.5, 2), z1 = rng.uniform(-1, 1);
        Env env;
        env.set("x1", x);
        env.set("z0", z0);
        env.set("z1", z1);
        EXPECT_NEAR(eval(lin.extended.gamma[1][0], env), std::sin(x) * z0 + x * x * z1, 1e-14);
    }

    auto zero = homogenize(affine_1d("0"));
    EXPECT_TRUE(zero.extended.gamma[1][0].is_zero());
    EXPECT_THROW(homogenize(testsupport::quadratic_model()), ModelError);
}

TEST(Homogenize, AvoidsNameClash) {
    auto m = make_connection(BundleKind::Affine, {"z1"}, {"y1"}, {{"y1^2"}});
    EXPECT_EQ(homogenize(m).extended.bundle.fiber, (std::vector<std::string>{"w0", "w1"}));
}

TEST(Homogenize, ScalingProperty) {
    auto h = homogenize(affine_2d()).extended;
    auto pts = sample_points(h, 50, {}, 11);
    for (double lambda : {-2.0, 0.5, 3.0})
        for (const auto& p : pts) {
            PointE q = p;
            for (auto& z : q.fiber) z *= lambda;
            Env e1 = make_env(h.bundle, p), e2 = make_env(h.bundle, q);
            for (std::size_t a = 0; a < h.k(); ++a)
                for (std::size_t i = 0; i < h.n(); ++i) {
                    double base = lambda * eval(h.gamma[a][i], e1);
                    EXPECT_LE(testsupport::relative_gap(eval(h.gamma[a][i], e2), base), 1e-9);
                }
        }
}

TEST(AffineLinearization, Examples) {
    auto q = affine_linearization(affine_1d("y1^2"));
    EXPECT_EQ(to_string(q.coeffs_0.at({0, 0})), "-y1^2");
    EXPECT_EQ(to_string(q.coeffs_lin.at({0, 0, 0})), "2*y1");

    auto a = affine_linearization(affine_1d("sin(x1) + x1^2*y1"));
    EXPECT_EQ(to_string(a.coeffs_0.at({0, 0})), "sin(x1)");
    EXPECT_EQ(to_string(a.coeffs_lin.at({0, 0, 0})), "x1^2");

    auto z = affine_linearization(affine_1d("0"));
    EXPECT_TRUE(z.coeffs_0.at({0, 0}).is_zero());
    EXPECT_TRUE(z.coeffs_lin.at({0, 0, 0}).is_zero());
}

TEST(AffineCovariantDerivative, CanonicalSectionGivesVerticalPart) {
    for (const auto& m : {affine_1d("y1^2"), affine_1d("x1*y1^3 + cos(y1)"), affine_2d()}) {
        auto vars = detail::all_coordinates(m.bundle);
        Rng rng(21);
        for (int t = 0; t < 4; ++t) {
            VectorFieldOnE U{{}, {}};
            for (std::size_t i = 0; i < m.n(); ++i) U.horizontal.push_back(testsupport::random_expr(rng, vars, 2));
            for (std::size_t a = 0; a < m.k(); ++a) U.vertical.push_back(testsupport::random_expr(rng, vars, 2));
            auto d = affine_covariant_derivative(m, U, affine_canonical_section(m));
            EXPECT_TRUE(d[0].is_zero());
            for (std::size_t a = 0; a < m.k(); ++a) EXPECT_TRUE(equal(simplify(d[a + 1]), simplify(U.vertical[a])))
                << to_string(d[a + 1]) << " vs " << to_string(U.vertical[a]);
        }
    }
}

TEST(AffineCovariantDerivative, E0AlongHorizontal) {
    auto m = affine_2d();
    auto lin = affine_linearization(m);
    std::vector<Expr> e0{Expr::constant(1), Expr(), Expr()};
    for (std::size_t i = 0; i < m.n(); ++i) {
        auto d = affine_covariant_derivative(m, horizontal_basis(m, i), e0);
        EXPECT_TRUE(d[0].is_zero());
        for (std::size_t a = 0; a < m.k(); ++a) EXPECT_TRUE(equal(d[a + 1], lin.coeffs_0.at({a, i})));
    }
}

TEST(AffineCovariantDerivative, ConstantWeightStaysVectorValued) {
    auto m = affine_2d();
    std::vector<Expr> sigma{Expr::constant(0), parse("x1*y2"), parse("sin(y1)")};
    auto d = affine_covariant_derivative(m, VectorFieldOnE{{parse("y1"), parse("x2")}, {parse("1"), parse("x1")}}, sigma);
    EXPECT_TRUE(d[0].is_zero());
    EXPECT_THROW(affine_covariant_derivative(m, horizontal_basis(m, 0), {Expr()}), ModelError);
}

TEST(AffineStructure, Checks) {
    auto m = affine_1d("y1^2");
    auto r = check_affine_structure(m, sample_points(m, 100, {}, 7), 1e-9);
    EXPECT_TRUE(r.passed) << r.max_residual;
    ASSERT_EQ(r.subreports.size(), 4u);
    EXPECT_LE(r.subreports[0].max_residual, 1e-12);
    EXPECT_TRUE(r.subreports[2].passed);

    auto c = affine_1d("y1^3");
    auto rc = check_affine_structure(c, sample_points(c, 100, {}, 7), 1e-9);
    EXPECT_TRUE(rc.passed);
    EXPECT_LE(rc.subreports[3].max_residual, 1e-9);
    EXPECT_EQ(rc.subreports[3].samples, 100u);

    auto big = affine_2d();
    EXPECT_TRUE(check_affine_structure(big, sample_points(big, 50, {}, 9), 1e-9).passed);
}
