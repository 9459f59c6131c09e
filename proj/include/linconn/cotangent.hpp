#pragma once

// Connections on cotangent bundles, coordinates (x^i, p_i). gamma[j][i]
// holds Gamma_{ij}, so H_i = d/dx^i - Gamma_{ij} d/dp_j.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "linconn/geometry.hpp"

namespace linconn {

struct HamiltonianModel {
    BundleModel bundle;  // kind cotangent
    Expr H;
    std::vector<Expr> first_integrals;  // empty or n
    std::vector<Predicate> excluded;
    Box box;
};

/// alpha = alpha_i dx^i with components in base coordinates.
struct OneFormOnM {
    std::vector<Expr> components;
};

inline void validate_hamiltonian(const HamiltonianModel& h) {
    if (h.bundle.kind != BundleKind::Cotangent) throw ModelError("hamiltonian needs kind cotangent");
    validate_bundle(h.bundle);
    check_names(h.bundle, h.H, "H");
    if (!h.first_integrals.empty() && h.first_integrals.size() != h.bundle.n())
        throw ModelError("need exactly " + std::to_string(h.bundle.n()) + " first integrals");
    for (std::size_t k = 0; k < h.first_integrals.size(); ++k)
        check_names(h.bundle, h.first_integrals[k], "f" + std::to_string(k + 1));
}

namespace detail {

inline void require_cotangent(const ConnectionModel& m) {
    if (m.bundle.kind != BundleKind::Cotangent) throw ModelError("operation needs kind cotangent");
}

}  // namespace detail

/// sigma_ij = (Gamma_ij - Gamma_ji)/2.
inline TensorField torsion_form(const ConnectionModel& m) {
    detail::require_cotangent(m);
    TensorField s("torsion_form", {Slot::BaseCovector, Slot::BaseCovector}, m.n(), m.k());
    for (std::size_t i = 0; i < m.n(); ++i)
        for (std::size_t j = 0; j < m.n(); ++j)
            if (i != j) s.at({i, j}) = simplify((m.gamma[j][i] - m.gamma[i][j]) / 2.0);
    return s;
}

inline CheckReport check_symmetric(const ConnectionModel& m, const std::vector<PointE>& samples, double tol) {
    TensorField s = torsion_form(m);
    return sampled_zero_check("symmetric", m.bundle, {&s}, samples, tol);
}

namespace detail {

// Empty when the torsion form vanishes symbolically or on a few sampled points.
inline std::vector<std::string> symmetry_warnings(const ConnectionModel& m) {
    TensorField s = torsion_form(m);
    bool symbolic_zero = true;
    for (std::size_t f = 0; f < s.size(); ++f) symbolic_zero = symbolic_zero && s.flat(f).is_zero();
    if (symbolic_zero) return {};
    CheckReport r = check_symmetric(m, sample_points(m, 20, m.box, 7), 1e-9);
    if (r.passed) return {};
    return {"connection is not symmetric (torsion form up to " + std::to_string(r.max_residual) +
            "); the formula is evaluated anyway"};
}

}  // namespace detail

/// dH_i f = df/dx^i - Gamma_ij df/dp_j.
inline std::vector<Expr> dH(const ConnectionModel& m, const Expr& f) {
    detail::require_cotangent(m);
    std::vector<Expr> r;
    for (std::size_t i = 0; i < m.n(); ++i) r.push_back(h_apply(m, f, i));
    return r;
}

/// dV^i f = df/dp_i.
inline std::vector<Expr> dV(const ConnectionModel& m, const Expr& f) {
    detail::require_cotangent(m);
    std::vector<Expr> r;
    for (std::size_t i = 0; i < m.k(); ++i) r.push_back(diff(f, m.u(i)));
    return r;
}

struct HamiltonianField {
    VectorFieldOnE field;  // horizontal dV f, vertical -dH f
    std::vector<std::string> warnings;
};

inline HamiltonianField hamiltonian_field(const ConnectionModel& m, const Expr& f) {
    HamiltonianField r;
    r.field.horizontal = dV(m, f);
    for (const auto& e : dH(m, f)) r.field.vertical.push_back(-e);
    r.warnings = detail::symmetry_warnings(m);
    return r;
}

/// Components of U in the coordinate frame (d/dx^i, d/du^A):
/// (U^i, U^A - U^i Gamma^A_i).
inline std::vector<Expr> coordinate_components(const ConnectionModel& m, const VectorFieldOnE& U) {
    std::vector<Expr> c(U.horizontal.begin(), U.horizontal.end());
    for (std::size_t a = 0; a < m.k(); ++a) {
        Expr r = U.vertical[a];
        for (std::size_t i = 0; i < m.n(); ++i) r = r - U.horizontal[i] * m.gamma[a][i];
        c.push_back(r);
    }
    return c;
}

struct BracketResult {
    Expr value;
    std::vector<std::string> warnings;
};

/// {f,g} = <dH f, dV g> - <dH g, dV f>.
inline BracketResult poisson(const ConnectionModel& m, const Expr& f, const Expr& g) {
    auto hf = dH(m, f), hg = dH(m, g), vf = dV(m, f), vg = dV(m, g);
    BracketResult r;
    for (std::size_t i = 0; i < m.n(); ++i) r.value = r.value + hf[i] * vg[i] - hg[i] * vf[i];
    r.warnings = detail::symmetry_warnings(m);
    return r;
}

/// sum_i df/dx^i dg/dp_i - dg/dx^i df/dp_i; needs no connection.
inline Expr canonical_bracket(const BundleModel& b, const Expr& f, const Expr& g) {
    Expr r;
    for (std::size_t i = 0; i < b.n(); ++i)
        r = r + diff(f, b.base[i]) * diff(g, b.fiber[i]) - diff(g, b.base[i]) * diff(f, b.fiber[i]);
    return r;
}

/// Laplace expansion along the first row.
inline Expr determinant(const std::vector<std::vector<Expr>>& a) {
    const std::size_t n = a.size();
    if (n == 1) return a[0][0];
    Expr r;
    for (std::size_t c = 0; c < n; ++c) {
        if (a[0][c].is_zero()) continue;
        std::vector<std::vector<Expr>> minor;
        for (std::size_t i = 1; i < n; ++i) {
            std::vector<Expr> row;
            for (std::size_t j = 0; j < n; ++j)
                if (j != c) row.push_back(a[i][j]);
            minor.push_back(std::move(row));
        }
        Expr term = a[0][c] * determinant(minor);
        r = c % 2 == 0 ? r + term : r - term;
    }
    return r;
}

struct IntegrableConnection {
    ConnectionModel model;
    Expr det;                          // det[df_k/dp_j]; its zero set is excluded
    TensorField defining;              // [k][i] dH_i f_k, vanishes by construction
    std::vector<Expr> hamiltonian;     // dH_i H
    std::vector<std::string> bracket_names;
    std::vector<Expr> brackets;        // canonical {f_k,f_l}, {H,f_k}
};

/// Horizontal distribution spanned by the Hamiltonian fields of the first
/// integrals: Gamma_ij solves sum_j Gamma_ij df_k/dp_j = df_k/dx^i, by
/// Cramer's rule.
inline IntegrableConnection integrable_connection(const HamiltonianModel& h) {
    validate_hamiltonian(h);
    const std::size_t n = h.bundle.n();
    std::vector<Expr> f = h.first_integrals;
    if (f.empty()) {
        if (n != 1) throw ModelError("integrable connection needs " + std::to_string(n) + " first integrals");
        f.push_back(h.H);
    }
    std::vector<std::vector<Expr>> J(n, std::vector<Expr>(n)), b(n, std::vector<Expr>(n));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) {
            J[k][j] = simplify(diff(f[k], h.bundle.fiber[j]));
            b[k][j] = simplify(diff(f[k], h.bundle.base[j]));
        }

    IntegrableConnection r;
    r.det = simplify(determinant(J));
    if (r.det.is_zero()) throw ModelError("transversality fails: det[df_k/dp_j] is identically zero");

    ConnectionModel& m = r.model;
    m.bundle = h.bundle;
    m.excluded = h.excluded;
    m.box = h.box;
    m.gamma.assign(n, std::vector<Expr>(n));
    {
        ConnectionModel probe = m;
        for (auto& row : probe.gamma) row.assign(n, Expr());
        bool nonzero = false;
        for (const auto& p : sample_points(probe, 32, h.box, 7)) {
            try {
                nonzero = nonzero || std::fabs(eval(r.det, make_env(h.bundle, p))) > 1e-12;
            } catch (const EvalError&) {
            }
        }
        if (!nonzero) throw ModelError("transversality fails: det[df_k/dp_j] vanishes at every probe point");
    }
    m.excluded.push_back({r.det, Expr()});

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            auto Jc = J;
            for (std::size_t k = 0; k < n; ++k) Jc[k][j] = b[k][i];
            Expr num = simplify(determinant(Jc));
            m.gamma[j][i] = num.is_zero() ? Expr() : simplify(num / r.det);
        }
    validate_connection(m);

    r.defining = TensorField("defining_residual", {Slot::FiberCovector, Slot::BaseCovector}, n, n);
    for (std::size_t k = 0; k < n; ++k) {
        auto d = dH(m, f[k]);
        for (std::size_t i = 0; i < n; ++i) r.defining.at({k, i}) = simplify(d[i]);
    }
    for (const auto& e : dH(m, h.H)) r.hamiltonian.push_back(simplify(e));
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = k + 1; l < n; ++l) {
            r.bracket_names.push_back("{f" + std::to_string(k + 1) + ",f" + std::to_string(l + 1) + "}");
            r.brackets.push_back(simplify(canonical_bracket(h.bundle, f[k], f[l])));
        }
        r.bracket_names.push_back("{H,f" + std::to_string(k + 1) + "}");
        r.brackets.push_back(simplify(canonical_bracket(h.bundle, h.H, f[k])));
    }
    return r;
}

/// Sub-reports: defining (dH f_k), hamiltonian (dH H), involution (canonical
/// brackets), symmetric (torsion form).
inline CheckReport check_integrable(const IntegrableConnection& ic, const std::vector<PointE>& samples, double tol) {
    const ConnectionModel& m = ic.model;
    TensorField ham("hamiltonian_residual", {Slot::BaseCovector}, m.n(), m.k());
    for (std::size_t i = 0; i < m.n(); ++i) ham.at({i}) = ic.hamiltonian[i];

    ResidualTracker inv("involution", tol);
    for (const auto& p : samples) {
        Env env = make_env(m.bundle, p);
        for (std::size_t b = 0; b < ic.brackets.size(); ++b)
            inv.record(ic.bracket_names[b], std::fabs(eval_or_inf(ic.brackets[b], env, inv)), p);
    }
    inv.set_samples(samples.size());

    return combine("integrable",
                   {sampled_zero_check("defining", m.bundle, {&ic.defining}, samples, tol),
                    sampled_zero_check("hamiltonian", m.bundle, {&ham}, samples, tol), inv.finish(),
                    check_symmetric(m, samples, tol)},
                   tol);
}

/// Sub-reports: closed (d alpha = 0), level (H o alpha constant) and, with a
/// connection, integral_section (d alpha_j/dx^i + Gamma_ij(x, alpha) = 0).
/// Only the base part of each sample is used.
inline CheckReport hj_verify(const HamiltonianModel& h, const OneFormOnM& alpha, const std::vector<PointE>& samples,
                             double tol, const ConnectionModel* connection = nullptr) {
    validate_hamiltonian(h);
    const std::size_t n = h.bundle.n();
    if (alpha.components.size() != n) throw ModelError("one-form needs " + std::to_string(n) + " components");
    for (std::size_t i = 0; i < n; ++i) {
        check_names(h.bundle, alpha.components[i], "alpha" + std::to_string(i + 1));
        for (const auto& v : free_variables(alpha.components[i]))
            if (!h.bundle.is_base(v)) throw ModelError("one-form must depend on base coordinates only");
    }

    TensorField closed("closed", {Slot::BaseCovector, Slot::BaseCovector}, n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            closed.at({i, j}) = simplify(diff(alpha.components[i], h.bundle.base[j]) - diff(alpha.components[j], h.bundle.base[i]));

    std::map<std::string, Expr> bind;
    for (std::size_t i = 0; i < n; ++i) bind[h.bundle.fiber[i]] = alpha.components[i];
    Expr level_fn = substitute(h.H, bind);
    TensorField level("level", {Slot::BaseCovector}, n, n);
    for (std::size_t i = 0; i < n; ++i) level.at({i}) = simplify(diff(level_fn, h.bundle.base[i]));

    std::vector<PointE> base_only;
    for (const auto& p : samples) base_only.push_back({p.base, std::vector<double>(n, 0.0)});

    std::vector<CheckReport> subs{sampled_zero_check("closed", h.bundle, {&closed}, base_only, tol),
                                  sampled_zero_check("level", h.bundle, {&level}, base_only, tol)};
    if (connection) {
        TensorField res = integral_section_residual(*connection, SectionModel{alpha.components});
        subs.push_back(sampled_zero_check("integral_section", h.bundle, {&res}, base_only, tol));
    }
    return combine("hamilton_jacobi", std::move(subs), tol);
}

/// H = 1/2 g^ij p_i p_j for a symmetric grid g_inv in base coordinates.
inline HamiltonianModel geodesic_model(const std::vector<std::string>& base, const std::vector<std::string>& fiber,
                                       const std::vector<std::vector<Expr>>& g_inv) {
    HamiltonianModel h;
    h.bundle = BundleModel{BundleKind::Cotangent, base, fiber};
    validate_bundle(h.bundle);
    const std::size_t n = base.size();
    if (g_inv.size() != n) throw ModelError("metric needs " + std::to_string(n) + " rows");
    for (const auto& row : g_inv)
        if (row.size() != n) throw ModelError("metric needs " + std::to_string(n) + " columns");
    Expr q;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (const auto& v : free_variables(g_inv[i][j]))
                if (!h.bundle.is_base(v)) throw ModelError("metric entries must depend on base coordinates only");
        }
        for (std::size_t j = i + 1; j < n; ++j)
            if (!equal(simplify(g_inv[i][j]), simplify(g_inv[j][i])))
                throw ModelError("metric is not symmetric at [" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]");
        Expr pi = Expr::variable(fiber[i]);
        q = q + g_inv[i][i] * pow(pi, 2.0);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            q = q + 2.0 * g_inv[i][j] * (Expr::variable(fiber[i]) * Expr::variable(fiber[j]));
    h.H = q / 2.0;
    return h;
}

/// R_{l,ij} + R_{i,jl} + R_{j,li} over all index triples; holds for
/// symmetric connections.
inline CheckReport check_cyclic_curvature(const ConnectionModel& m, const std::vector<PointE>& samples, double tol) {
    detail::require_cotangent(m);
    TensorField R = curvature_R(m);
    const std::size_t n = m.n();
    TensorField c("cyclic", {Slot::BaseCovector, Slot::BaseCovector, Slot::BaseCovector}, n, n);
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                c.at({l, i, j}) = R.at({l, i, j}) + R.at({i, j, l}) + R.at({j, l, i});
    return sampled_zero_check("cyclic_curvature", m.bundle, {&c}, samples, tol);
}

}  // namespace linconn
