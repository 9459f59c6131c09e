#pragma once

// Linearization of a nonlinear connection on a vector bundle: horizontal
// derivatives, the linear coefficients Gamma^A_{iB}, the covariant derivative
// D, tension, the curvature blocks R, theta, Rie, and the sampled identity
// checks built on them.
//
// Frame convention: every component is taken in {H_i, V_A}, with
// H_i = d/dx^i - Gamma^A_i d/du^A and V_A = d/du^A.

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "linconn/expr.hpp"
#include "linconn/model.hpp"
#include "linconn/tensor.hpp"

namespace linconn {

/// U = U^i H_i + U^A V_A.
struct VectorFieldOnE {
    std::vector<Expr> horizontal;  // n
    std::vector<Expr> vertical;    // k
};

inline VectorFieldOnE horizontal_basis(const ConnectionModel& m, std::size_t i) {
    VectorFieldOnE U{std::vector<Expr>(m.n()), std::vector<Expr>(m.k())};
    U.horizontal.at(i) = Expr::constant(1.0);
    return U;
}

inline VectorFieldOnE vertical_basis(const ConnectionModel& m, std::size_t a) {
    VectorFieldOnE U{std::vector<Expr>(m.n()), std::vector<Expr>(m.k())};
    U.vertical.at(a) = Expr::constant(1.0);
    return U;
}

/// H_i(e) = de/dx^i - Gamma^A_i de/du^A.
inline Expr h_apply(const ConnectionModel& m, const Expr& e, std::size_t i) {
    Expr r = diff(e, m.x(i));
    for (std::size_t a = 0; a < m.k(); ++a) {
        if (m.gamma[a][i].is_zero()) continue;
        Expr de = diff(e, m.u(a));
        if (!de.is_zero()) r = r - m.gamma[a][i] * de;
    }
    return r;
}

/// U(f) for a vector field given in the {H_i, V_A} frame.
inline Expr apply_field(const ConnectionModel& m, const VectorFieldOnE& U, const Expr& f) {
    Expr r;
    for (std::size_t i = 0; i < m.n(); ++i)
        if (!U.horizontal[i].is_zero()) r = r + U.horizontal[i] * h_apply(m, f, i);
    for (std::size_t a = 0; a < m.k(); ++a)
        if (!U.vertical[a].is_zero()) r = r + U.vertical[a] * diff(f, m.u(a));
    return r;
}

/// Gamma^A_{iB} = dGamma^A_i/du^B, grid [A][i][B].
inline TensorField linear_coeffs(const ConnectionModel& m) {
    TensorField t("linear_coeffs", {Slot::FiberVector, Slot::BaseCovector, Slot::FiberCovector}, m.n(), m.k());
    for (std::size_t a = 0; a < m.k(); ++a)
        for (std::size_t i = 0; i < m.n(); ++i)
            for (std::size_t b = 0; b < m.k(); ++b) t.at({a, i, b}) = diff(m.gamma[a][i], m.u(b));
    return t;
}

/// D_U sigma^A = U^i [H_i(sigma^A) + Gamma^A_{iB} sigma^B] + U^B V_B(sigma^A).
inline std::vector<Expr> covariant_derivative(const ConnectionModel& m, const VectorFieldOnE& U, const SectionModel& sigma) {
    validate_section(m, sigma);
    TensorField lin = linear_coeffs(m);
    std::vector<Expr> out(m.k());
    for (std::size_t a = 0; a < m.k(); ++a) {
        Expr r;
        for (std::size_t i = 0; i < m.n(); ++i) {
            if (U.horizontal[i].is_zero()) continue;
            Expr term = h_apply(m, sigma.components[a], i);
            for (std::size_t b = 0; b < m.k(); ++b) term = term + lin.at({a, i, b}) * sigma.components[b];
            r = r + U.horizontal[i] * term;
        }
        for (std::size_t b = 0; b < m.k(); ++b)
            if (!U.vertical[b].is_zero()) r = r + U.vertical[b] * diff(sigma.components[a], m.u(b));
        out[a] = r;
    }
    return out;
}

/// The canonical section: sigma^A = u^A.
inline SectionModel canonical_section(const ConnectionModel& m) {
    SectionModel s;
    for (std::size_t a = 0; a < m.k(); ++a) s.components.push_back(Expr::variable(m.u(a)));
    return s;
}

/// t^A_i = Gamma^A_i - Gamma^A_{iB} u^B.
inline TensorField tension(const ConnectionModel& m) {
    TensorField lin = linear_coeffs(m);
    TensorField t("tension", {Slot::FiberVector, Slot::BaseCovector}, m.n(), m.k());
    for (std::size_t a = 0; a < m.k(); ++a)
        for (std::size_t i = 0; i < m.n(); ++i) {
            Expr r = m.gamma[a][i];
            for (std::size_t b = 0; b < m.k(); ++b) r = r - lin.at({a, i, b}) * Expr::variable(m.u(b));
            t.at({a, i}) = simplify(r);
        }
    return t;
}

/// R^A_{ij} = H_j(Gamma^A_i) - H_i(Gamma^A_j), grid [A][i][j].
inline TensorField curvature_R(const ConnectionModel& m) {
    TensorField t("curvature", {Slot::FiberVector, Slot::BaseCovector, Slot::BaseCovector}, m.n(), m.k());
    for (std::size_t a = 0; a < m.k(); ++a)
        for (std::size_t i = 0; i < m.n(); ++i)
            for (std::size_t j = i + 1; j < m.n(); ++j) {
                Expr r = h_apply(m, m.gamma[a][i], j) - h_apply(m, m.gamma[a][j], i);
                t.at({a, i, j}) = r;
                t.at({a, j, i}) = -r;
            }
    return t;
}

/// theta^C_{iAB} = d^2 Gamma^C_i / du^A du^B, grid [C][i][A][B].
inline TensorField theta(const ConnectionModel& m) {
    TensorField lin = linear_coeffs(m);
    TensorField t("theta", {Slot::FiberVector, Slot::BaseCovector, Slot::FiberCovector, Slot::FiberCovector}, m.n(), m.k());
    for (std::size_t c = 0; c < m.k(); ++c)
        for (std::size_t i = 0; i < m.n(); ++i)
            for (std::size_t a = 0; a < m.k(); ++a)
                for (std::size_t b = 0; b < m.k(); ++b) t.at({c, i, a, b}) = diff(lin.at({c, i, a}), m.u(b));
    return t;
}

/// Rie^B_{ijA} = -dR^B_{ij}/du^A, grid [B][i][j][A].
inline TensorField rie(const ConnectionModel& m) {
    TensorField R = curvature_R(m);
    TensorField t("rie", {Slot::FiberVector, Slot::BaseCovector, Slot::BaseCovector, Slot::FiberCovector}, m.n(), m.k());
    for (std::size_t b = 0; b < m.k(); ++b)
        for (std::size_t i = 0; i < m.n(); ++i)
            for (std::size_t j = 0; j < m.n(); ++j)
                for (std::size_t a = 0; a < m.k(); ++a) t.at({b, i, j, a}) = -diff(R.at({b, i, j}), m.u(a));
    return t;
}

/// Rie from the commutator of D:
/// H_i(Gamma^B_{jA}) - H_j(Gamma^B_{iA}) + Gamma^B_{iC} Gamma^C_{jA} - Gamma^B_{jC} Gamma^C_{iA}.
inline TensorField rie_commutator(const ConnectionModel& m) {
    TensorField lin = linear_coeffs(m);
    TensorField t("rie_commutator", {Slot::FiberVector, Slot::BaseCovector, Slot::BaseCovector, Slot::FiberCovector},
                  m.n(), m.k());
    for (std::size_t b = 0; b < m.k(); ++b)
        for (std::size_t i = 0; i < m.n(); ++i)
            for (std::size_t j = 0; j < m.n(); ++j)
                for (std::size_t a = 0; a < m.k(); ++a) {
                    Expr r = h_apply(m, lin.at({b, j, a}), i) - h_apply(m, lin.at({b, i, a}), j);
                    for (std::size_t c = 0; c < m.k(); ++c)
                        r = r + lin.at({b, i, c}) * lin.at({c, j, a}) - lin.at({b, j, c}) * lin.at({c, i, a});
                    t.at({b, i, j, a}) = r;
                }
    return t;
}

// ---------------------------------------------------------------------------
// Sampled checks

/// Passes iff |tension| <= tol on the samples. label: "linear" when theta
/// also vanishes, else "homogeneous" or "not homogeneous". Smoothness at the
/// zero section is not checked.
inline CheckReport check_homogeneous(const ConnectionModel& m, const std::vector<PointE>& samples, double tol) {
    TensorField t = tension(m);
    CheckReport r = sampled_zero_check("homogeneous", m.bundle, {&t}, samples, tol);
    if (r.passed) {
        TensorField th = theta(m);
        CheckReport lin = sampled_zero_check("theta", m.bundle, {&th}, samples, tol);
        r.label = lin.passed ? "linear" : "homogeneous";
    } else {
        r.label = "not homogeneous";
    }
    r.notes.push_back("smoothness at the zero section is not checked");
    return r;
}

/// Passes iff every d sigma^A / du^B vanishes on the samples.
inline CheckReport check_basic(const ConnectionModel& m, const SectionModel& sigma, const std::vector<PointE>& samples,
                               double tol) {
    validate_section(m, sigma);
    TensorField d("vertical_derivative", {Slot::FiberVector, Slot::FiberCovector}, m.n(), m.k());
    for (std::size_t a = 0; a < m.k(); ++a)
        for (std::size_t b = 0; b < m.k(); ++b) d.at({a, b}) = diff(sigma.components[a], m.u(b));
    return sampled_zero_check("basic", m.bundle, {&d}, samples, tol);
}

/// theta^C_{iAB} - theta^C_{iBA}.
inline CheckReport check_theta_symmetry(const ConnectionModel& m, const std::vector<PointE>& samples, double tol) {
    TensorField th = theta(m);
    TensorField asym("theta_asymmetry", th.signature(), m.n(), m.k());
    for (std::size_t f = 0; f < th.size(); ++f) {
        auto idx = th.index_of(f);
        asym.flat(f) = Expr::raw_binary(Expr::Kind::Sub, th.at(idx), th.at({idx[0], idx[1], idx[3], idx[2]}));
    }
    return sampled_zero_check("theta_symmetry", m.bundle, {&asym}, samples, tol);
}

/// Rie from -V_A(R) against the commutator formula.
inline CheckReport check_rie_two_path(const ConnectionModel& m, const std::vector<PointE>& samples, double tol) {
    TensorField a = rie(m), b = rie_commutator(m);
    TensorField gap("rie_gap", a.signature(), m.n(), m.k());
    for (std::size_t f = 0; f < a.size(); ++f) gap.flat(f) = Expr::raw_binary(Expr::Kind::Sub, a.flat(f), b.flat(f));
    return sampled_zero_check("rie_two_path", m.bundle, {&gap}, samples, tol);
}

/// D flat on the samples: theta and Rie both vanish.
inline CheckReport check_flat(const ConnectionModel& m, const std::vector<PointE>& samples, double tol) {
    TensorField th = theta(m), ri = rie(m);
    CheckReport r = sampled_zero_check("flat", m.bundle, {&th, &ri}, samples, tol);
    r.label = r.passed ? "flat on samples" : "not flat";
    return r;
}

namespace detail {

inline Expr sum_of(const std::vector<Expr>& terms) {
    Expr r;
    for (const auto& t : terms) r = r + t;
    return r;
}

}  // namespace detail

/// The three Bianchi identities of D with the auxiliary connection taken as
/// the coordinate-flat one on the base, for coordinate frames:
///   1. cyclic_{ijl} [ (D^H_i Rie)^B_{jlA} - R^C_{jl} theta^B_{iAC} ] = 0
///   2. d Rie^B_{ijA}/du^E = (D^H_i theta)^B_{jAE} - (D^H_j theta)^B_{iAE}
///   3. d theta^C_{iAB}/du^E = d theta^C_{iAE}/du^B
inline CheckReport bianchi_check(const ConnectionModel& m, const std::vector<PointE>& samples, double tol) {
    const std::size_t n = m.n(), k = m.k();
    TensorField lin = linear_coeffs(m);
    TensorField R = curvature_R(m);
    TensorField th = theta(m);
    TensorField ri = rie(m);

    // (D^H_i Rie)^B_{jlA}
    auto d_rie = [&](std::size_t i, std::size_t b, std::size_t j, std::size_t l, std::size_t a) {
        Expr r = h_apply(m, ri.at({b, j, l, a}), i);
        for (std::size_t c = 0; c < k; ++c)
            r = r + lin.at({b, i, c}) * ri.at({c, j, l, a}) - lin.at({c, i, a}) * ri.at({b, j, l, c});
        return r;
    };
    // (D^H_i theta)^C_{jAB}
    auto d_theta = [&](std::size_t i, std::size_t c, std::size_t j, std::size_t a, std::size_t b) {
        Expr r = h_apply(m, th.at({c, j, a, b}), i);
        for (std::size_t d = 0; d < k; ++d)
            r = r + lin.at({c, i, d}) * th.at({d, j, a, b}) - lin.at({d, i, a}) * th.at({c, j, d, b}) -
                lin.at({d, i, b}) * th.at({c, j, a, d});
        return r;
    };

    std::vector<CheckReport> subs;

    // Identity 1: distinct i<j<l only; repeated indices make it trivial.
    TensorField id1("bianchi_1", {Slot::FiberVector, Slot::BaseCovector, Slot::BaseCovector, Slot::BaseCovector,
                                  Slot::FiberCovector},
                    n, k);
    bool any_triple = false;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t l = j + 1; l < n; ++l)
                for (std::size_t b = 0; b < k; ++b)
                    for (std::size_t a = 0; a < k; ++a) {
                        any_triple = true;
                        std::size_t cyc[3][3] = {{i, j, l}, {j, l, i}, {l, i, j}};
                        Expr r;
                        for (auto& c3 : cyc) {
                            r = r + d_rie(c3[0], b, c3[1], c3[2], a);
                            for (std::size_t c = 0; c < k; ++c)
                                r = r - R.at({c, c3[1], c3[2]}) * th.at({b, c3[0], a, c});
                        }
                        id1.at({b, i, j, l, a}) = r;
                    }
    CheckReport r1 = sampled_zero_check("bianchi_1", m.bundle, {&id1}, samples, tol);
    if (!any_triple) r1.notes.push_back("vacuous: needs at least three base coordinates");
    subs.push_back(r1);

    TensorField id2("bianchi_2", {Slot::FiberVector, Slot::BaseCovector, Slot::BaseCovector, Slot::FiberCovector,
                                  Slot::FiberCovector},
                    n, k);
    for (std::size_t b = 0; b < k; ++b)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                for (std::size_t a = 0; a < k; ++a)
                    for (std::size_t e = 0; e < k; ++e)
                        id2.at({b, i, j, a, e}) =
                            diff(ri.at({b, i, j, a}), m.u(e)) - (d_theta(i, b, j, a, e) - d_theta(j, b, i, a, e));
    CheckReport r2 = sampled_zero_check("bianchi_2", m.bundle, {&id2}, samples, tol);
    if (n < 2) r2.notes.push_back("vacuous: needs at least two base coordinates");
    subs.push_back(r2);

    TensorField id3("bianchi_3", {Slot::FiberVector, Slot::BaseCovector, Slot::FiberCovector, Slot::FiberCovector,
                                  Slot::FiberCovector},
                    n, k);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t b = 0; b < k; ++b)
                    for (std::size_t e = 0; e < k; ++e)
                        id3.at({c, i, a, b, e}) = Expr::raw_binary(Expr::Kind::Sub, diff(th.at({c, i, a, b}), m.u(e)),
                                                                   diff(th.at({c, i, a, e}), m.u(b)));
    subs.push_back(sampled_zero_check("bianchi_3", m.bundle, {&id3}, samples, tol));

    return combine("bianchi", std::move(subs), tol);
}

/// The two tension identities, coordinate frames:
///   (a) d t^A_i/du^C + u^B theta^A_{iBC} = 0
///   (b) (D^H_i t)^A_j - (D^H_j t)^A_i + R^A_{ij} + Rie^A_{ijB} u^B = 0
/// with (D^H_i t)^A_j = H_i(t^A_j) + Gamma^A_{iB} t^B_j.
inline CheckReport tension_identities_check(const ConnectionModel& m, const std::vector<PointE>& samples, double tol) {
    const std::size_t n = m.n(), k = m.k();
    TensorField lin = linear_coeffs(m);
    TensorField t = tension(m);
    TensorField th = theta(m);
    TensorField R = curvature_R(m);
    TensorField ri = rie(m);

    TensorField ia("tension_a", {Slot::FiberVector, Slot::BaseCovector, Slot::FiberCovector}, n, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < k; ++c) {
                Expr r = diff(t.at({a, i}), m.u(c));
                for (std::size_t b = 0; b < k; ++b) r = r + Expr::variable(m.u(b)) * th.at({a, i, b, c});
                ia.at({a, i, c}) = r;
            }

    auto dh_t = [&](std::size_t i, std::size_t a, std::size_t j) {
        Expr r = h_apply(m, t.at({a, j}), i);
        for (std::size_t b = 0; b < k; ++b) r = r + lin.at({a, i, b}) * t.at({b, j});
        return r;
    };
    TensorField ib("tension_b", {Slot::FiberVector, Slot::BaseCovector, Slot::BaseCovector}, n, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                Expr r = dh_t(i, a, j) - dh_t(j, a, i) + R.at({a, i, j});
                for (std::size_t b = 0; b < k; ++b) r = r + ri.at({a, i, j, b}) * Expr::variable(m.u(b));
                ib.at({a, i, j}) = r;
            }

    std::vector<CheckReport> subs;
    subs.push_back(sampled_zero_check("tension_a", m.bundle, {&ia}, samples, tol));
    CheckReport rb = sampled_zero_check("tension_b", m.bundle, {&ib}, samples, tol);
    if (n < 2) rb.notes.push_back("vacuous: needs at least two base coordinates");
    subs.push_back(rb);
    return combine("tension_identities", std::move(subs), tol);
}

// ---------------------------------------------------------------------------
// Integral sections

namespace detail {

inline std::map<std::string, Expr> fiber_bindings(const ConnectionModel& m, const SectionModel& alpha) {
    SectionInfo info = validate_section(m, alpha);
    if (!info.basic) throw ModelError("section must depend on base coordinates only");
    std::map<std::string, Expr> b;
    for (std::size_t a = 0; a < m.k(); ++a) b[m.u(a)] = alpha.components[a];
    return b;
}

}  // namespace detail

/// d alpha^A/dx^i + Gamma^A_i(x, alpha(x)), grid [A][i]. Zero iff alpha is an
/// integral section.
inline TensorField integral_section_residual(const ConnectionModel& m, const SectionModel& alpha) {
    auto bind = detail::fiber_bindings(m, alpha);
    TensorField t("integral_section_residual", {Slot::FiberVector, Slot::BaseCovector}, m.n(), m.k());
    for (std::size_t a = 0; a < m.k(); ++a)
        for (std::size_t i = 0; i < m.n(); ++i)
            t.at({a, i}) = simplify(diff(alpha.components[a], m.x(i)) + substitute(m.gamma[a][i], bind));
    return t;
}

/// Gamma^A_{iB}(x, alpha(x)): the induced linear connection on the base.
inline TensorField pullback_connection_coeffs(const ConnectionModel& m, const SectionModel& alpha) {
    auto bind = detail::fiber_bindings(m, alpha);
    TensorField lin = linear_coeffs(m);
    TensorField t("pullback_coeffs", lin.signature(), m.n(), m.k());
    for (std::size_t f = 0; f < lin.size(); ++f) t.flat(f) = simplify(substitute(lin.flat(f), bind));
    return t;
}

}  // namespace linconn
