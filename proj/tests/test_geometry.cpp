#include <gtest/gtest.h>

#include "linconn/geometry.hpp"
#include "support.hpp"

using namespace linconn;
using testsupport::Rng;

namespace {

std::vector<std::string> coords(const ConnectionModel& m) {
    auto v = m.bundle.base;
    v.insert(v.end(), m.bundle.fiber.begin(), m.bundle.fiber.end());
    return v;
}

ConnectionModel one_dim(const std::string& g) {
    return make_connection(BundleKind::Vector, {"x1"}, {"u1"}, {{g}});
}

double at(const Expr& e, const ConnectionModel& m, std::vector<double> base, std::vector<double> fiber) {
    return eval(e, make_env(m.bundle, PointE{std::move(base), std::move(fiber)}));
}

// A three-base model so that the cyclic Bianchi identity is not vacuous.
ConnectionModel three_base_model() {
    return make_connection(BundleKind::Vector, {"x1", "x2", "x3"}, {"u1", "u2"},
                           {{"u2^2 + x3*u1", "u1*u2*x1", "sin(x2)*u1^2"}, {"x2*u1", "u2^3 - x1", "x1*x3*u2*u1"}});
}

}  // namespace

TEST(HApply, Examples) {
    auto m = testsupport::quadratic_model();
    EXPECT_EQ(to_string(h_apply(m, parse("u1"), 0)), "-u1^2");
    EXPECT_EQ(to_string(h_apply(m, parse("x1"), 0)), "1");
    EXPECT_EQ(to_string(h_apply(m, parse("sin(x1)"), 0)), "cos(x1)");
}

TEST(LinearCoeffs, Examples) {
    EXPECT_EQ(to_string(linear_coeffs(testsupport::quadratic_model()).at({0, 0, 0})), "2*u1");
    EXPECT_EQ(to_string(linear_coeffs(testsupport::linear_model()).at({0, 0, 0})), "x1");
    auto flat = linear_coeffs(testsupport::flat_model());
    for (std::size_t i = 0; i < flat.size(); ++i) EXPECT_TRUE(flat.flat(i).is_zero());
}

TEST(CovariantDerivative, Examples) {
    auto m = testsupport::quadratic_model();
    auto d = covariant_derivative(m, horizontal_basis(m, 0), parse_section({"x1"}));
    // hand substitution: H_1(x1) + 2*u1*x1
    Rng rng(5);
    for (int k = 0; k < 20; ++k) {
        double x = rng.uniform(-2, 2), u = rng.uniform(-2, 2);
        EXPECT_NEAR(at(d[0], m, {x}, {u}), 1 + 2 * u * x, 1e-14);
    }
    auto m4 = testsupport::m4_model();
    for (std::size_t b = 0; b < 2; ++b) {
        auto dv = covariant_derivative(m4, vertical_basis(m4, b), parse_section({"x1*x2", "sin(x1)"}));
        EXPECT_TRUE(dv[0].is_zero());
        EXPECT_TRUE(dv[1].is_zero());
        auto di = covariant_derivative(m4, vertical_basis(m4, b), canonical_section(m4));
        for (std::size_t a = 0; a < 2; ++a) EXPECT_EQ(to_string(di[a]), a == b ? "1" : "0");
    }
}

TEST(Tension, Examples) {
    auto t = tension(testsupport::quadratic_model());
    EXPECT_EQ(to_string(t.at({0, 0})), "-u1^2");
    EXPECT_TRUE(tension(testsupport::linear_model()).at({0, 0}).is_zero());
    EXPECT_EQ(to_string(tension(one_dim("1")).at({0, 0})), "1");
}

TEST(Curvature, Examples) {
    EXPECT_TRUE(curvature_R(testsupport::quadratic_model()).at({0, 0, 0}).is_zero());
    auto m4 = testsupport::m4_model();
    auto R = curvature_R(m4);
    // Symbolic value against nested finite differences of Gamma with the
    // horizontal correction, at (0,0,1,1).
    auto gamma_at = [&](std::size_t a, std::size_t i, std::vector<double> x, std::vector<double> u) {
        return at(m4.gamma[a][i], m4, x, u);
    };
    auto h_fd = [&](std::size_t a, std::size_t i, std::size_t j, std::vector<double> x, std::vector<double> u) {
        double h = 1e-5;
        auto xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        double r = (gamma_at(a, i, xp, u) - gamma_at(a, i, xm, u)) / (2 * h);
        for (std::size_t b = 0; b < 2; ++b) {
            auto up = u, um = u;
            up[b] += h;
            um[b] -= h;
            r -= gamma_at(b, j, x, u) * (gamma_at(a, i, x, up) - gamma_at(a, i, x, um)) / (2 * h);
        }
        return r;
    };
    std::vector<double> x{0, 0}, u{1, 1};
    for (std::size_t a = 0; a < 2; ++a) {
        double fd = h_fd(a, 0, 1, x, u) - h_fd(a, 1, 0, x, u);
        EXPECT_NEAR(at(R.at({a, 0, 1}), m4, x, u), fd, 1e-6);
        EXPECT_NEAR(at(R.at({a, 0, 1}), m4, x, u), 1.0, 1e-15);  // both components equal 1 there
    }
    auto pts = sample_points(m4, 50, {}, 1);
    for (const auto& p : pts) {
        Env env = make_env(m4.bundle, p);
        for (std::size_t a = 0; a < 2; ++a)
            EXPECT_DOUBLE_EQ(eval(R.at({a, 0, 1}), env), -eval(R.at({a, 1, 0}), env));
    }
}

TEST(Theta, Examples) {
    EXPECT_EQ(to_string(theta(testsupport::quadratic_model()).at({0, 0, 0, 0})), "2");
    auto lin = theta(testsupport::linear_model());
    for (std::size_t i = 0; i < lin.size(); ++i) EXPECT_TRUE(lin.flat(i).is_zero());
    for (const auto& m : {testsupport::flat_model(), testsupport::linear_model(), testsupport::quadratic_model(),
                          testsupport::m4_model(), three_base_model()}) {
        auto r = check_theta_symmetry(m, sample_points(m, 100, {}, 2), 1e-12);
        EXPECT_TRUE(r.passed) << r.max_residual;
    }
}

TEST(Rie, TwoPathsAgree) {
    for (const auto& m : {testsupport::m4_model(), three_base_model()}) {
        auto r = check_rie_two_path(m, sample_points(m, 100, {}, 4), 1e-9);
        EXPECT_TRUE(r.passed) << r.max_residual;
    }
    auto flat = rie(testsupport::flat_model());
    for (std::size_t i = 0; i < flat.size(); ++i) EXPECT_TRUE(simplify(flat.flat(i)).is_zero());
}

TEST(Rie, LinearConnectionIsFiberIndependent) {
    auto m = make_connection(BundleKind::Vector, {"x1", "x2"}, {"u1", "u2"},
                             {{"x2*u1 + x1^2*u2", "sin(x1)*u2"}, {"x1*x2*u1", "u1 - x2*u2"}});
    auto ri = rie(m);
    Rng rng(9);
    for (int s = 0; s < 50; ++s) {
        std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        for (std::size_t f = 0; f < ri.size(); ++f) {
            double a = at(ri.flat(f), m, x, {rng.uniform(-2, 2), rng.uniform(-2, 2)});
            double b = at(ri.flat(f), m, x, {rng.uniform(-2, 2), rng.uniform(-2, 2)});
            EXPECT_NEAR(a, b, 1e-12);
        }
    }
}

TEST(Property, LeibnizAndTensoriality) {
    Rng rng(21);
    for (const auto& m : {testsupport::flat_model(), testsupport::linear_model(), testsupport::quadratic_model(),
                          testsupport::m4_model()}) {
        auto vars = coords(m);
        auto pts = sample_points(m, 25, {}, 5);
        for (int trial = 0; trial < 4; ++trial) {
            VectorFieldOnE U{{}, {}};
            for (std::size_t i = 0; i < m.n(); ++i) U.horizontal.push_back(testsupport::random_expr(rng, vars, 2));
            for (std::size_t a = 0; a < m.k(); ++a) U.vertical.push_back(testsupport::random_expr(rng, vars, 2));
            SectionModel sigma;
            for (std::size_t a = 0; a < m.k(); ++a) sigma.components.push_back(testsupport::random_expr(rng, vars, 3));
            Expr f = testsupport::random_expr(rng, vars, 3);

            SectionModel f_sigma;
            for (const auto& c : sigma.components) f_sigma.components.push_back(f * c);
            VectorFieldOnE fU = U;
            for (auto& c : fU.horizontal) c = f * c;
            for (auto& c : fU.vertical) c = f * c;

            auto lhs = covariant_derivative(m, U, f_sigma);
            auto d = covariant_derivative(m, U, sigma);
            auto dfU = covariant_derivative(m, fU, sigma);
            Expr uf = apply_field(m, U, f);
            for (const auto& p : pts) {
                Env env = make_env(m.bundle, p);
                try {
                    double fv = eval(f, env), ufv = eval(uf, env);
                    for (std::size_t a = 0; a < m.k(); ++a) {
                        double l = eval(lhs[a], env);
                        double r = ufv * eval(sigma.components[a], env) + fv * eval(d[a], env);
                        EXPECT_LE(testsupport::relative_gap(l, r), 1e-9);
                        EXPECT_LE(testsupport::relative_gap(eval(dfU[a], env), fv * eval(d[a], env)), 1e-9);
                    }
                } catch (const EvalError&) {
                }
            }
        }
    }
}

TEST(Checks, Homogeneous) {
    auto pts1 = sample_points(testsupport::quadratic_model(), 20, {}, 1);
    auto q = check_homogeneous(testsupport::quadratic_model(), pts1, 1e-10);
    EXPECT_FALSE(q.passed);
    EXPECT_EQ(q.label, "not homogeneous");
    auto l = check_homogeneous(testsupport::linear_model(), pts1, 1e-10);
    EXPECT_TRUE(l.passed);
    EXPECT_EQ(l.label, "linear");
    auto h = make_connection(BundleKind::Vector, {"x1"}, {"u1", "u2"}, {{"x1*u1^2/u2"}, {"u1"}});
    h.excluded.push_back({parse("u2"), parse("0")});
    auto ph = check_homogeneous(h, sample_points(h, 20, {}, 1), 1e-10);
    EXPECT_TRUE(ph.passed) << ph.max_residual;
    EXPECT_EQ(ph.label, "homogeneous");
}

TEST(Checks, Basic) {
    auto m = testsupport::quadratic_model();
    auto pts = sample_points(m, 20, {}, 1);
    EXPECT_TRUE(check_basic(m, parse_section({"x1^2"}), pts, 1e-12).passed);
    EXPECT_FALSE(check_basic(m, parse_section({"u1"}), pts, 1e-12).passed);
    EXPECT_TRUE(check_basic(m, parse_section({"x1 + 0*u1"}), pts, 1e-12).passed);
}

TEST(Checks, Bianchi) {
    for (const auto& m : {testsupport::flat_model(), testsupport::linear_model(), testsupport::quadratic_model(),
                          testsupport::m4_model(), three_base_model()}) {
        auto r = bianchi_check(m, sample_points(m, 60, {}, 6), 1e-8);
        EXPECT_TRUE(r.passed) << m.gamma[0][0].id() << " " << r.max_residual;
        ASSERT_EQ(r.subreports.size(), 3u);
    }
    auto flat = bianchi_check(testsupport::flat_model(), sample_points(testsupport::flat_model(), 5, {}, 6), 0.0);
    EXPECT_EQ(flat.max_residual, 0.0);
    // the cyclic identity is exercised with three base coordinates
    auto m3 = three_base_model();
    auto r3 = bianchi_check(m3, sample_points(m3, 20, {}, 6), 1e-8);
    EXPECT_TRUE(r3.subreports[0].notes.empty());
}

TEST(Checks, BianchiDetectsBrokenIdentity) {
    // Sanity: the cyclic expression is not identically zero when R is dropped.
    auto m = three_base_model();
    auto R = curvature_R(m);
    auto th = theta(m);
    auto pts = sample_points(m, 10, {}, 3);
    double biggest = 0;
    for (const auto& p : pts) {
        Env env = make_env(m.bundle, p);
        Expr s;
        std::size_t cyc[3][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
        for (auto& c : cyc)
            for (std::size_t c2 = 0; c2 < 2; ++c2) s = s + R.at({c2, c[1], c[2]}) * th.at({0, c[0], 0, c2});
        biggest = std::max(biggest, std::fabs(eval(s, env)));
    }
    EXPECT_GT(biggest, 1e-3);
}

TEST(Checks, TensionIdentities) {
    auto q = testsupport::quadratic_model();
    // identity (a) at u1=1: dt/du = -2, theta*u = 2
    auto t = tension(q);
    EXPECT_DOUBLE_EQ(at(diff(t.at({0, 0}), "u1"), q, {0.3}, {1.0}), -2.0);
    EXPECT_DOUBLE_EQ(at(theta(q).at({0, 0, 0, 0}), q, {0.3}, {1.0}) * 1.0, 2.0);
    for (const auto& m : {testsupport::quadratic_model(), testsupport::m4_model(), three_base_model(),
                          testsupport::linear_model()}) {
        auto r = tension_identities_check(m, sample_points(m, 60, {}, 8), 1e-8);
        EXPECT_TRUE(r.passed) << r.max_residual;
    }
    auto small = tension_identities_check(q, sample_points(q, 50, {}, 8), 1e-12);
    EXPECT_TRUE(small.passed);
}

TEST(IntegralSection, Examples) {
    auto flat = one_dim("0");
    EXPECT_TRUE(integral_section_residual(flat, parse_section({"3"})).at({0, 0}).is_zero());
    auto lin = testsupport::linear_model();
    auto r = integral_section_residual(lin, parse_section({"exp(-x1^2/2)"}));
    for (const auto& p : sample_points(lin, 20, {}, 1)) EXPECT_NEAR(eval(r.at({0, 0}), make_env(lin.bundle, p)), 0.0, 1e-15);
    EXPECT_EQ(to_string(integral_section_residual(testsupport::quadratic_model(), parse_section({"1"})).at({0, 0})), "1");
    EXPECT_THROW(integral_section_residual(lin, parse_section({"u1"})), ModelError);
}

TEST(PullbackCoeffs, Examples) {
    EXPECT_EQ(to_string(pullback_connection_coeffs(testsupport::quadratic_model(), parse_section({"x1"})).at({0, 0, 0})),
              "2*x1");
    EXPECT_EQ(to_string(pullback_connection_coeffs(testsupport::linear_model(), parse_section({"x1^5"})).at({0, 0, 0})),
              "x1");
    EXPECT_TRUE(pullback_connection_coeffs(one_dim("0"), parse_section({"x1"})).at({0, 0, 0}).is_zero());
}
