#pragma once

// Shared helpers for the test suites: seeded random expressions, central
// finite differences, the standard test models.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "linconn/expr.hpp"
#include "linconn/model.hpp"

namespace testsupport {

using linconn::Env;
using linconn::Expr;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(g_() >> 11) * 0x1.0p-53;
    }
    int integer(int lo, int hi) { return lo + static_cast<int>(g_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    std::mt19937_64& engine() { return g_; }

private:
    std::mt19937_64 g_;
};

/// Random expression over `vars` built from + - * / ^ (small integer powers)
/// and all six functions. May be undefined at some points; callers reject.
inline Expr random_expr(Rng& rng, const std::vector<std::string>& vars, int depth) {
    if (depth <= 0 || rng.integer(0, 4) == 0) {
        if (rng.integer(0, 2) == 0) return Expr::constant(static_cast<double>(rng.integer(-3, 3)) / 2.0 + 0.25);
        return Expr::variable(vars[static_cast<std::size_t>(rng.integer(0, static_cast<int>(vars.size()) - 1))]);
    }
    using K = Expr::Kind;
    switch (rng.integer(0, 10)) {
        case 0: return Expr::raw_binary(K::Add, random_expr(rng, vars, depth - 1), random_expr(rng, vars, depth - 1));
        case 1: return Expr::raw_binary(K::Sub, random_expr(rng, vars, depth - 1), random_expr(rng, vars, depth - 1));
        case 2:
        case 3: return Expr::raw_binary(K::Mul, random_expr(rng, vars, depth - 1), random_expr(rng, vars, depth - 1));
        case 4: return Expr::raw_binary(K::Div, random_expr(rng, vars, depth - 1), random_expr(rng, vars, depth - 1));
        case 5: return Expr::raw_binary(K::Pow, random_expr(rng, vars, depth - 1), Expr::constant(rng.integer(2, 3)));
        case 6: return Expr::raw_unary(K::Negate, random_expr(rng, vars, depth - 1));
        case 7: return Expr::raw_call(rng.integer(0, 1) ? linconn::Func::Sin : linconn::Func::Cos, random_expr(rng, vars, depth - 1));
        case 8: return Expr::raw_call(linconn::Func::Exp, random_expr(rng, vars, depth - 1) * 0.25);
        case 9: {
            // ln / sqrt of something kept positive
            Expr inner = Expr::raw_binary(K::Add, Expr::constant(1.5), Expr::raw_binary(K::Pow, random_expr(rng, vars, depth - 1), Expr::constant(2)));
            return Expr::raw_call(rng.integer(0, 1) ? linconn::Func::Ln : linconn::Func::Sqrt, inner);
        }
        default: return Expr::raw_call(linconn::Func::Tan, random_expr(rng, vars, depth - 1) * 0.3);
    }
}

/// Central difference of e in `var` at env, step h = 1e-6 * (1 + |x|).
inline double central_difference(const Expr& e, Env env, const std::string& var) {
    double x = env.at(var);
    double h = 1e-6 * (1.0 + std::fabs(x));
    env.set(var, x + h);
    double fp = linconn::eval(e, env);
    env.set(var, x - h);
    double fm = linconn::eval(e, env);
    return (fp - fm) / (2 * h);
}

inline double relative_gap(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

// The four standard vector-bundle models.
inline linconn::ConnectionModel flat_model() {
    return linconn::make_connection(linconn::BundleKind::Vector, {"x1", "x2"}, {"u1", "u2"},
                                    {{"0", "0"}, {"0", "0"}});
}
inline linconn::ConnectionModel linear_model() {
    return linconn::make_connection(linconn::BundleKind::Vector, {"x1"}, {"u1"}, {{"x1*u1"}});
}
inline linconn::ConnectionModel quadratic_model() {
    return linconn::make_connection(linconn::BundleKind::Vector, {"x1"}, {"u1"}, {{"u1^2"}});
}
inline linconn::ConnectionModel m4_model() {
    return linconn::make_connection(linconn::BundleKind::Vector, {"x1", "x2"}, {"u1", "u2"},
                                    {{"u2^2", "u1*u2"}, {"x2*u1", "0"}});
}

}  // namespace testsupport
