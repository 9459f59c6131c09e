#pragma once

// Connections on affine bundles: homogenization into the extended vector
// bundle (fiber coordinates z0, z1..zk), the direct linearization
// (Gamma^A_{i0}, Gamma^A_{iB}), and the affine covariant derivative on
// sections (sigma^0, sigma^A) of the extended bundle.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "linconn/geometry.hpp"

namespace linconn {

struct HomogenizedModel {
    ConnectionModel extended;  // vector bundle, fiber (z0, z1..zk), excluded z0=0
    ConnectionModel origin;
};

struct AffineLinearization {
    TensorField coeffs_0;    // [A][i]    Gamma^A_{i0} = Gamma^A_i - y^B Gamma^A_{iB}
    TensorField coeffs_lin;  // [A][i][B] Gamma^A_{iB}
};

namespace detail {

inline void require_affine(const ConnectionModel& m) {
    if (m.bundle.kind != BundleKind::Affine && m.bundle.kind != BundleKind::Jet)
        throw ModelError("affine operations need kind affine or jet");
}

// Fiber names for the extended bundle: "z" (or "w" for jets), avoiding clashes.
inline std::vector<std::string> extended_fiber_names(const ConnectionModel& m) {
    std::vector<std::string> prefixes = m.bundle.kind == BundleKind::Jet ? std::vector<std::string>{"w", "z", "zz"}
                                                                         : std::vector<std::string>{"z", "w", "zz"};
    for (const auto& pre : prefixes) {
        std::vector<std::string> names;
        bool clash = false;
        for (std::size_t a = 0; a <= m.k(); ++a) {
            names.push_back(pre + std::to_string(a));
            if (m.bundle.is_coordinate(names.back())) clash = true;
        }
        if (!clash) return names;
    }
    throw ModelError("cannot choose fiber names for the extended bundle");
}

}  // namespace detail

/// Gamma~^0_i = 0, Gamma~^A_i = z0 * Gamma^A_i(x, z/z0). The result is a
/// homogeneous vector-bundle connection, undefined on z0 = 0.
inline HomogenizedModel homogenize(const ConnectionModel& m) {
    detail::require_affine(m);
    auto names = detail::extended_fiber_names(m);
    Expr z0 = Expr::variable(names[0]);
    std::map<std::string, Expr> bind;
    for (std::size_t a = 0; a < m.k(); ++a)
        bind[m.u(a)] = Expr::raw_binary(Expr::Kind::Div, Expr::variable(names[a + 1]), z0);

    HomogenizedModel h;
    h.origin = m;
    ConnectionModel& e = h.extended;
    e.bundle = BundleModel{BundleKind::Vector, m.bundle.base, names};
    e.gamma.assign(m.k() + 1, std::vector<Expr>(m.n()));
    for (std::size_t a = 0; a < m.k(); ++a)
        for (std::size_t i = 0; i < m.n(); ++i) {
            const Expr& g = m.gamma[a][i];
            e.gamma[a + 1][i] = g.is_zero() ? Expr() : Expr::raw_binary(Expr::Kind::Mul, z0, substitute(g, bind));
        }
    for (const auto& p : m.excluded) e.excluded.push_back({substitute(p.lhs, bind), substitute(p.rhs, bind)});
    e.excluded.push_back({z0, Expr()});
    e.homogeneous = true;
    for (const auto& [name, iv] : m.box)
        if (m.bundle.is_base(name)) e.box[name] = iv;
    validate_connection(e);
    return h;
}

/// Computed directly on the affine model (no z0 denominators).
inline AffineLinearization affine_linearization(const ConnectionModel& m) {
    detail::require_affine(m);
    AffineLinearization r;
    r.coeffs_lin = linear_coeffs(m);
    TensorField t = tension(m);
    r.coeffs_0 = TensorField("affine_coeffs_0", t.signature(), m.n(), m.k());
    for (std::size_t f = 0; f < t.size(); ++f) r.coeffs_0.flat(f) = t.flat(f);
    return r;
}

/// D_U sigma for sigma = sigma^0 e_0 + sigma^A e_A:
///   e_0: U(sigma^0)
///   e_A: U^i [H_i(sigma^A) + Gamma^A_{i0} sigma^0 + Gamma^A_{iB} sigma^B] + U^C V_C(sigma^A)
inline std::vector<Expr> affine_covariant_derivative(const ConnectionModel& m, const VectorFieldOnE& U,
                                                     const std::vector<Expr>& sigma) {
    detail::require_affine(m);
    if (sigma.size() != m.k() + 1)
        throw ModelError("extended section needs " + std::to_string(m.k() + 1) + " components");
    for (const auto& c : sigma) check_names(m.bundle, c, "extended section");
    AffineLinearization lin = affine_linearization(m);
    std::vector<Expr> out(m.k() + 1);
    out[0] = apply_field(m, U, sigma[0]);
    for (std::size_t a = 0; a < m.k(); ++a) {
        Expr r;
        for (std::size_t i = 0; i < m.n(); ++i) {
            if (U.horizontal[i].is_zero()) continue;
            Expr term = h_apply(m, sigma[a + 1], i) + lin.coeffs_0.at({a, i}) * sigma[0];
            for (std::size_t b = 0; b < m.k(); ++b) term = term + lin.coeffs_lin.at({a, i, b}) * sigma[b + 1];
            r = r + U.horizontal[i] * term;
        }
        for (std::size_t c = 0; c < m.k(); ++c)
            if (!U.vertical[c].is_zero()) r = r + U.vertical[c] * diff(sigma[a + 1], m.u(c));
        out[a + 1] = r;
    }
    return out;
}

/// The canonical section (1, y^1..y^k).
inline std::vector<Expr> affine_canonical_section(const ConnectionModel& m) {
    std::vector<Expr> s{Expr::constant(1.0)};
    for (std::size_t a = 0; a < m.k(); ++a) s.push_back(Expr::variable(m.u(a)));
    return s;
}

namespace detail {

// c0 + sum c_v v + c_vw v w over a few random pairs; coefficients in [-1,1].
inline Expr random_quadratic(std::mt19937_64& rng, const std::vector<std::string>& vars) {
    auto coef = [&] { return std::round((static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0) * 8.0) / 8.0; };
    Expr r = Expr::constant(coef());
    for (const auto& v : vars) r = r + coef() * Expr::variable(v);
    for (int t = 0; t < 2; ++t) {
        const auto& a = vars[rng() % vars.size()];
        const auto& b = vars[rng() % vars.size()];
        r = r + coef() * (Expr::variable(a) * Expr::variable(b));
    }
    return r;
}

inline std::vector<std::string> all_coordinates(const BundleModel& b) {
    auto v = b.base;
    v.insert(v.end(), b.fiber.begin(), b.fiber.end());
    return v;
}

}  // namespace detail

/// Sampled structural checks for an affine model:
///   e0_parallel       e_0-component of D_U sigma equals U(sigma^0) (random U, sigma)
///   canonical_section D_U(1, y) - (0, U^A) vanishes (random U)
///   homogenized       the homogenization has zero tension
///   restriction       linear_coeffs of the homogenization at z0=1, z=y equals
///                     the direct affine linearization
inline CheckReport check_affine_structure(const ConnectionModel& m, const std::vector<PointE>& samples, double tol,
                                          std::uint64_t seed = 7) {
    detail::require_affine(m);
    const std::size_t n = m.n(), k = m.k();
    std::mt19937_64 rng(seed);
    auto vars = detail::all_coordinates(m.bundle);
    std::vector<CheckReport> subs;

    {
        ResidualTracker e0("e0_parallel", tol);
        ResidualTracker can("canonical_section", tol);
        for (int trial = 0; trial < 3; ++trial) {
            VectorFieldOnE U{{}, {}};
            for (std::size_t i = 0; i < n; ++i) U.horizontal.push_back(detail::random_quadratic(rng, vars));
            for (std::size_t a = 0; a < k; ++a) U.vertical.push_back(detail::random_quadratic(rng, vars));
            std::vector<Expr> sigma;
            for (std::size_t a = 0; a <= k; ++a) sigma.push_back(detail::random_quadratic(rng, vars));
            auto d = affine_covariant_derivative(m, U, sigma);
            Expr u_sigma0 = apply_field(m, U, sigma[0]);
            auto di = affine_covariant_derivative(m, U, affine_canonical_section(m));
            for (const auto& p : samples) {
                Env env = make_env(m.bundle, p);
                e0.record("e0", std::fabs(eval_or_inf(d[0], env, e0) - eval_or_inf(u_sigma0, env, e0)), p);
                can.record("e0", std::fabs(eval_or_inf(di[0], env, can)), p);
                for (std::size_t a = 0; a < k; ++a)
                    can.record("e" + std::to_string(a + 1),
                               std::fabs(eval_or_inf(di[a + 1], env, can) - eval_or_inf(U.vertical[a], env, can)), p);
            }
        }
        e0.set_samples(samples.size());
        can.set_samples(samples.size());
        subs.push_back(e0.finish());
        subs.push_back(can.finish());
    }

    HomogenizedModel h = homogenize(m);
    {
        std::vector<PointE> hs = sample_points(h.extended, samples.size(), {}, seed);
        CheckReport r = check_homogeneous(h.extended, hs, tol);
        r.name = "homogenized";
        subs.push_back(r);
    }
    {
        TensorField hl = linear_coeffs(h.extended);
        AffineLinearization al = affine_linearization(m);
        ResidualTracker tr("restriction", tol);
        for (const auto& p : samples) {
            Env env = make_env(m.bundle, p);
            Env henv;
            for (std::size_t i = 0; i < n; ++i) henv.set(m.x(i), p.base[i]);
            henv.set(h.extended.u(0), 1.0);
            for (std::size_t a = 0; a < k; ++a) henv.set(h.extended.u(a + 1), p.fiber[a]);
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t i = 0; i < n; ++i) {
                    tr.record("coeffs_0" + al.coeffs_0.label(al.coeffs_0.offset({a, i})),
                              std::fabs(eval_or_inf(hl.at({a + 1, i, 0}), henv, tr) - eval_or_inf(al.coeffs_0.at({a, i}), env, tr)), p);
                    for (std::size_t b = 0; b < k; ++b)
                        tr.record("coeffs_lin" + al.coeffs_lin.label(al.coeffs_lin.offset({a, i, b})),
                                  std::fabs(eval_or_inf(hl.at({a + 1, i, b + 1}), henv, tr) -
                                            eval_or_inf(al.coeffs_lin.at({a, i, b}), env, tr)),
                                  p);
                }
        }
        tr.set_samples(samples.size());
        subs.push_back(tr.finish());
    }
    return combine("affine_structure", std::move(subs), tol);
}

}  // namespace linconn
