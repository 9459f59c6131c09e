#pragma once

// Second-order equations x'' = f(t?, x, x'): the induced connection on the
// tangent (autonomous) or first-jet (time-dependent) bundle, the Jacobi
// endomorphism, and the linearizability and decoupling diagnostics.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "linconn/affine.hpp"
#include "linconn/geometry.hpp"

namespace linconn {

/// Positions x^i, velocities v^i, forces f^i. Time-dependent equations also
/// have the time coordinate `time`, which forces may reference.
struct SodeModel {
    bool autonomous = true;
    std::string time = "t";
    std::vector<std::string> position;
    std::vector<std::string> velocity;
    std::vector<Expr> forces;
    std::vector<Predicate> excluded;
    Box box;
    bool homogeneous = false;

    std::size_t n() const { return position.size(); }
};

inline BundleModel sode_bundle(const SodeModel& s) {
    BundleModel b;
    b.kind = s.autonomous ? BundleKind::Tangent : BundleKind::Jet;
    if (!s.autonomous) b.base.push_back(s.time);
    b.base.insert(b.base.end(), s.position.begin(), s.position.end());
    b.fiber = s.velocity;
    return b;
}

inline void validate_sode(const SodeModel& s) {
    if (s.n() < 1) throw ModelError("equation needs at least one position coordinate");
    if (s.velocity.size() != s.n() || s.forces.size() != s.n())
        throw ModelError("equation needs one velocity and one force per position");
    BundleModel b = sode_bundle(s);
    validate_bundle(b);
    for (std::size_t i = 0; i < s.n(); ++i) check_names(b, s.forces[i], "f" + std::to_string(i + 1));
}

inline SodeModel make_sode(std::vector<std::string> position, std::vector<std::string> velocity,
                           const std::vector<std::string>& forces, bool autonomous = true) {
    SodeModel s;
    s.autonomous = autonomous;
    s.position = std::move(position);
    s.velocity = std::move(velocity);
    for (const auto& f : forces) s.forces.push_back(parse(f));
    validate_sode(s);
    return s;
}

/// Gamma^i_j = -1/2 df^i/dv^j on the tangent bundle.
inline ConnectionModel sode_connection(const SodeModel& s) {
    if (!s.autonomous) throw ModelError("sode_connection needs an autonomous equation");
    validate_sode(s);
    ConnectionModel m;
    m.bundle = sode_bundle(s);
    m.gamma.assign(s.n(), std::vector<Expr>(s.n()));
    for (std::size_t i = 0; i < s.n(); ++i)
        for (std::size_t j = 0; j < s.n(); ++j) m.gamma[i][j] = -0.5 * diff(s.forces[i], s.velocity[j]);
    m.excluded = s.excluded;
    m.box = s.box;
    m.homogeneous = s.homogeneous;
    validate_connection(m);
    return m;
}

/// Gamma(g) = [dg/dt] + v^k dg/dx^k + f^k dg/dv^k.
inline Expr sode_field_apply(const SodeModel& s, const Expr& g) {
    Expr r;
    if (!s.autonomous) r = diff(g, s.time);
    for (std::size_t k = 0; k < s.n(); ++k) {
        r = r + Expr::variable(s.velocity[k]) * diff(g, s.position[k]);
        r = r + s.forces[k] * diff(g, s.velocity[k]);
    }
    return r;
}

namespace detail {

inline std::vector<std::vector<Expr>> sode_gamma(const SodeModel& s) {
    std::vector<std::vector<Expr>> g(s.n(), std::vector<Expr>(s.n()));
    for (std::size_t i = 0; i < s.n(); ++i)
        for (std::size_t j = 0; j < s.n(); ++j) g[i][j] = -0.5 * diff(s.forces[i], s.velocity[j]);
    return g;
}

}  // namespace detail

/// Phi^i_j = -df^i/dx^j - Gamma^i_k Gamma^k_j - Gamma(Gamma^i_j), grid [i][j].
inline TensorField jacobi_endomorphism(const SodeModel& s) {
    validate_sode(s);
    auto g = detail::sode_gamma(s);
    TensorField phi("jacobi", {Slot::FiberVector, Slot::BaseCovector}, s.n(), s.n());
    for (std::size_t i = 0; i < s.n(); ++i)
        for (std::size_t j = 0; j < s.n(); ++j) {
            Expr r = -diff(s.forces[i], s.position[j]);
            for (std::size_t k = 0; k < s.n(); ++k) r = r - g[i][k] * g[k][j];
            r = r - sode_field_apply(s, g[i][j]);
            phi.at({i, j}) = simplify(r);
        }
    return phi;
}

/// Jet-bundle connection of a time-dependent equation: base (t, x), fiber v,
/// column t holds Gamma^i_0 = 1/2 v^k df^i/dv^k - f^i, column x^j holds
/// Gamma^i_j = -1/2 df^i/dv^j.
inline ConnectionModel nonautonomous_connection(const SodeModel& s) {
    if (s.autonomous) throw ModelError("nonautonomous_connection needs a time-dependent equation");
    validate_sode(s);
    ConnectionModel m;
    m.bundle = sode_bundle(s);
    auto g = detail::sode_gamma(s);
    m.gamma.assign(s.n(), std::vector<Expr>(s.n() + 1));
    for (std::size_t i = 0; i < s.n(); ++i) {
        Expr g0;
        for (std::size_t k = 0; k < s.n(); ++k) g0 = g0 + 0.5 * (Expr::variable(s.velocity[k]) * diff(s.forces[i], s.velocity[k]));
        m.gamma[i][0] = g0 - s.forces[i];
        for (std::size_t j = 0; j < s.n(); ++j) m.gamma[i][j + 1] = g[i][j];
    }
    m.excluded = s.excluded;
    m.box = s.box;
    validate_connection(m);
    return m;
}

namespace detail {

// For f at most quadratic in the velocities, the exact polynomial
// w0^2 f|0 + w0 w^j df/dv^j|0 + 1/2 w^j w^k d2f/dv^j dv^k|0, free of w/w0.
inline std::optional<Expr> quadratic_extension(const SodeModel& s, const Expr& f, const std::vector<std::string>& w) {
    std::map<std::string, Expr> at_zero;
    for (const auto& v : s.velocity) at_zero[v] = Expr();
    auto zero = [&](const Expr& e) { return simplify(substitute(e, at_zero)); };
    Expr w0 = Expr::variable(w[0]);
    Expr r = pow(w0, 2.0) * zero(f);
    for (std::size_t j = 0; j < s.n(); ++j) {
        Expr dj = diff(f, s.velocity[j]);
        r = r + w0 * Expr::variable(w[j + 1]) * zero(dj);
        for (std::size_t k = 0; k < s.n(); ++k) {
            Expr djk = diff(dj, s.velocity[k]);
            for (std::size_t l = 0; l < s.n(); ++l)
                if (!simplify(diff(djk, s.velocity[l])).is_zero()) return std::nullopt;
            r = r + 0.5 * (Expr::variable(w[j + 1]) * Expr::variable(w[k + 1]) * zero(djk));
        }
    }
    return simplify(r);
}

}  // namespace detail

/// Autonomous equation on (t, x; w0, w): forces 0 for w0 and
/// w0^2 f^i(t, x, w/w0) for w^i. Undefined on w0 = 0 unless f is at most
/// quadratic in the velocities, in which case the forces are written as
/// polynomials in w.
inline SodeModel homogeneous_sode(const SodeModel& s) {
    if (s.autonomous) throw ModelError("homogeneous_sode needs a time-dependent equation");
    validate_sode(s);
    BundleModel b = sode_bundle(s);
    std::vector<std::string> w;
    for (const char* pre : {"w", "z", "ww"}) {
        w.clear();
        bool clash = false;
        for (std::size_t a = 0; a <= s.n(); ++a) {
            w.push_back(pre + std::to_string(a));
            if (b.is_coordinate(w.back())) clash = true;
        }
        if (!clash) break;
        if (std::string(pre) == "ww") throw ModelError("cannot choose velocity names for the extension");
    }
    Expr w0 = Expr::variable(w[0]);
    std::map<std::string, Expr> bind;
    for (std::size_t i = 0; i < s.n(); ++i)
        bind[s.velocity[i]] = Expr::raw_binary(Expr::Kind::Div, Expr::variable(w[i + 1]), w0);

    SodeModel h;
    h.autonomous = true;
    h.position = b.base;  // t, x^1..x^n
    h.velocity = w;
    h.forces.push_back(Expr());
    for (std::size_t i = 0; i < s.n(); ++i) {
        if (auto q = detail::quadratic_extension(s, s.forces[i], w)) {
            h.forces.push_back(*q);
        } else {
            h.forces.push_back(pow(w0, 2.0) * substitute(s.forces[i], bind));
        }
    }
    for (const auto& p : s.excluded) h.excluded.push_back({substitute(p.lhs, bind), substitute(p.rhs, bind)});
    h.excluded.push_back({w0, Expr()});
    h.box = s.box;
    h.box[w[0]] = Interval{0.5, 2.0};
    validate_sode(h);
    return h;
}

namespace detail {

// Covariant derivative of a (1,1) tensor T^i_j on the tangent bundle with D
// acting on both slots. Grid [i][j][k] holds (D_{H_k} T)^i_j, grid [i][j][k]
// of the second field holds (D_{V_k} T)^i_j = dT^i_j/dv^k.
inline std::pair<TensorField, TensorField> covariant_derivative_11(const ConnectionModel& m, const TensorField& T,
                                                                   const std::string& name) {
    const std::size_t n = m.n();
    TensorField lin = linear_coeffs(m);
    TensorField dh(name + "_horizontal_derivative", {Slot::FiberVector, Slot::BaseCovector, Slot::BaseCovector}, n, n);
    TensorField dv(name + "_vertical_derivative", {Slot::FiberVector, Slot::BaseCovector, Slot::FiberCovector}, n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                Expr r = h_apply(m, T.at({i, j}), k);
                for (std::size_t l = 0; l < n; ++l)
                    r = r + lin.at({i, k, l}) * T.at({l, j}) - lin.at({l, k, j}) * T.at({i, l});
                dh.at({i, j, k}) = r;
                dv.at({i, j, k}) = diff(T.at({i, j}), m.u(k));
            }
    return {dh, dv};
}

}  // namespace detail

inline const char* kLinearInAll = "linear-in-all-variables";
inline const char* kLinearConstantA = "linear-in-velocities-constant-A";
inline const char* kLinearInVelocities = "linear-in-velocities";
inline const char* kNotLinearizable = "none";

/// Sub-reports flat / tension_parallel / phi_parallel and the strongest label:
/// none, linear-in-velocities (flat), linear-in-velocities-constant-A (flat,
/// parallel tension), linear-in-all-variables (also parallel Phi). Passes iff
/// all three sub-checks pass. Labels are sampled certificates.
inline CheckReport linearizability_report(const SodeModel& s, const std::vector<PointE>& samples, double tol) {
    ConnectionModel m = sode_connection(s);
    CheckReport flat = check_flat(m, samples, tol);
    auto [th, tv] = detail::covariant_derivative_11(m, tension(m), "tension");
    CheckReport tpar = sampled_zero_check("tension_parallel", m.bundle, {&th, &tv}, samples, tol);
    auto [ph, pv] = detail::covariant_derivative_11(m, jacobi_endomorphism(s), "jacobi");
    CheckReport ppar = sampled_zero_check("phi_parallel", m.bundle, {&ph, &pv}, samples, tol);

    std::string label = kNotLinearizable;
    if (flat.passed) {
        label = kLinearInVelocities;
        if (tpar.passed) label = ppar.passed ? kLinearInAll : kLinearConstantA;
    }
    CheckReport r = combine("linearizability", {flat, tpar, ppar}, tol);
    r.label = label;
    r.notes.push_back("classification holds on the sampled points only");
    return r;
}

/// Candidate split of the indices into {i} (first) and {alpha} (rest).
/// Sub-reports for the blocks Gamma^i_alpha, Phi^i_alpha (submersive) and
/// Gamma^alpha_i, Phi^alpha_i (decoupled). Label: decoupled, submersive or
/// neither. Passes iff decoupled.
inline CheckReport decoupling_check(const SodeModel& s, const std::vector<std::size_t>& first,
                                    const std::vector<PointE>& samples, double tol) {
    const std::size_t n = s.n();
    std::set<std::size_t> I(first.begin(), first.end());
    if (I.size() != first.size()) throw ModelError("split repeats an index");
    for (auto i : I)
        if (i >= n) throw ModelError("split index " + std::to_string(i + 1) + " out of range");
    if (I.empty() || I.size() == n) throw ModelError("split needs indices on both sides");
    std::vector<std::size_t> A;
    for (std::size_t a = 0; a < n; ++a)
        if (!I.count(a)) A.push_back(a);

    ConnectionModel m = sode_connection(s);
    TensorField phi = jacobi_endomorphism(s);
    auto block = [&](const std::string& name, bool from_phi, const std::vector<std::size_t>& rows,
                     const std::vector<std::size_t>& cols) {
        TensorField t(name, {Slot::FiberVector, Slot::BaseCovector}, n, n);
        for (auto r : rows)
            for (auto c : cols) t.at({r, c}) = from_phi ? phi.at({r, c}) : m.gamma[r][c];
        return sampled_zero_check(name, m.bundle, {&t}, samples, tol);
    };
    std::vector<std::size_t> Iv(I.begin(), I.end());
    CheckReport g_ia = block("gamma_i_alpha", false, Iv, A);
    CheckReport p_ia = block("phi_i_alpha", true, Iv, A);
    CheckReport g_ai = block("gamma_alpha_i", false, A, Iv);
    CheckReport p_ai = block("phi_alpha_i", true, A, Iv);
    bool submersive = g_ia.passed && p_ia.passed;
    bool decoupled = submersive && g_ai.passed && p_ai.passed;
    CheckReport r = combine("decoupling", {g_ia, p_ia, g_ai, p_ai}, tol);
    r.label = decoupled ? "decoupled" : submersive ? "submersive" : "neither";
    r.notes.push_back("classification holds on the sampled points only");
    return r;
}

/// Sampled cross-check: the tangent connection of homogeneous_sode(s) equals
/// the homogenization of nonautonomous_connection(s).
inline CheckReport check_homogeneous_extension(const SodeModel& s, const std::vector<PointE>& samples, double tol) {
    ConnectionModel direct = sode_connection(homogeneous_sode(s));
    ConnectionModel via = homogenize(nonautonomous_connection(s)).extended;
    TensorField gap("extension_gap", {Slot::FiberVector, Slot::BaseCovector}, direct.n(), direct.k());
    for (std::size_t a = 0; a < direct.k(); ++a)
        for (std::size_t i = 0; i < direct.n(); ++i)
            gap.at({a, i}) = Expr::raw_binary(Expr::Kind::Sub, direct.gamma[a][i], via.gamma[a][i]);
    // samples are points of the jet bundle; evaluate at w0 = 1, w = v
    ResidualTracker tr("homogeneous_extension", tol);
    BundleModel jb = sode_bundle(s);
    for (const auto& p : samples) {
        Env env;
        for (std::size_t i = 0; i < jb.n(); ++i) env.set(direct.x(i), p.base.at(i));
        env.set(direct.u(0), 1.0);
        for (std::size_t a = 0; a < s.n(); ++a) env.set(direct.u(a + 1), p.fiber.at(a));
        for (std::size_t f = 0; f < gap.size(); ++f)
            tr.record(gap.name() + gap.label(f), std::fabs(eval_or_inf(gap.flat(f), env, tr)), p);
    }
    tr.set_samples(samples.size());
    return tr.finish();
}

}  // namespace linconn
