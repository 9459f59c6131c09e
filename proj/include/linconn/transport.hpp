#pragma once

// Fixed-step RK4 integration of horizontal flows, linearized parallel
// transport, the fiber-derivative oracle, holonomy loops and SODE flows.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "linconn/sode.hpp"

namespace linconn {

class TransportError : public std::runtime_error {
public:
    TransportError(const std::string& msg, double time)
        : std::runtime_error(msg + " at t=" + std::to_string(time)), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

struct TrajectorySample {
    double t = 0.0;
    PointE point;
    std::vector<double> transported;  // empty unless a vector is transported
};

struct TransportResult {
    PointE final_point;
    std::vector<double> final_vector;
    std::vector<TrajectorySample> trajectory;
    std::size_t steps = 0;
    double max_local_error = 0.0;  // step-doubling estimate
    bool truncated = false;        // left the declared box; trajectory stops there
    double end_time = 0.0;
};

/// Flow of a base vector field X (expressions in base coordinates).
struct FlowCurve {
    std::vector<Expr> X;
    PointE start;
    double span = 1.0;
    double step = 1e-3;
};

/// Base curve c(t) given explicitly, t in [0, span]; c(0) is the start.
struct ParametricCurve {
    std::vector<Expr> c;
    std::string parameter = "t";
    std::vector<double> fiber;
    double span = 1.0;
    double step = 1e-3;
};

/// Curve inside one fiber; transport along it is the identity.
struct VerticalCurve {
    PointE start;
};

using CurveSpec = std::variant<FlowCurve, ParametricCurve, VerticalCurve>;

namespace detail {

using State = std::vector<double>;
using Rhs = std::function<State(double, const State&)>;

inline State axpy(const State& y, double h, const State& k) {
    State r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] + h * k[i];
    return r;
}

inline State rk4_step(const Rhs& f, double t, const State& y, double h) {
    State k1 = f(t, y);
    State k2 = f(t + h / 2, axpy(y, h / 2, k1));
    State k3 = f(t + h / 2, axpy(y, h / 2, k2));
    State k4 = f(t + h, axpy(y, h, k3));
    State r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return r;
}

// Observer returns false to stop (truncation). Throws TransportError on
// evaluation failures and nonfinite states.
struct Integration {
    std::vector<std::pair<double, State>> path;
    std::size_t steps = 0;
    double max_local_error = 0.0;
    bool stopped = false;
};

inline Integration integrate(const Rhs& f, State y, double span, double step,
                             const std::function<bool(double, const State&)>& keep_going) {
    if (!(step > 0) || !std::isfinite(step)) throw std::invalid_argument("step must be positive");
    if (!std::isfinite(span) || span < 0) throw std::invalid_argument("time span must be finite and non-negative");
    const std::size_t N = span == 0 ? 0 : static_cast<std::size_t>(std::ceil(span / step - 1e-12));
    const double h = N ? span / static_cast<double>(N) : 0.0;
    Integration out;
    out.path.push_back({0.0, y});
    for (std::size_t s = 0; s < N; ++s) {
        double t = h * static_cast<double>(s);
        State y1, y2;
        try {
            y1 = rk4_step(f, t, y, h);
            y2 = rk4_step(f, t + h / 2, rk4_step(f, t, y, h / 2), h / 2);
        } catch (const EvalError& e) {
            throw TransportError(std::string("evaluation failed (") + e.what() + ")", t);
        }
        double err = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!std::isfinite(y1[i])) throw TransportError("state became nonfinite", t + h);
            err = std::max(err, std::fabs(y2[i] - y1[i]) / 15.0);
        }
        out.max_local_error = std::max(out.max_local_error, err);
        y = std::move(y1);
        ++out.steps;
        out.path.push_back({t + h, y});
        if (!keep_going(t + h, y)) {
            out.stopped = true;
            break;
        }
    }
    return out;
}

// Watches the excluded set and the declared box along a path in E.
class Guard {
public:
    explicit Guard(const ConnectionModel& m) : m_(m) {}

    void start(const Env& env) {
        last_.clear();
        for (const auto& p : m_.excluded) last_.push_back(value(p, env, 0.0));
        for (double v : last_)
            if (v == 0.0) throw TransportError("start point lies on the excluded set", 0.0);
    }

    void check(const Env& env, double t) {
        for (std::size_t i = 0; i < m_.excluded.size(); ++i) {
            double v = value(m_.excluded[i], env, t);
            if (v == 0.0 || (v > 0) != (last_[i] > 0))
                throw TransportError("path crosses the excluded set " + m_.excluded[i].text(), t);
            last_[i] = v;
        }
    }

    bool inside_box(const Env& env) const {
        for (const auto& [name, iv] : m_.box) {
            auto v = env.find(name);
            if (!v) continue;
            if (*v < iv.lo - 1e-9 || *v > iv.hi + 1e-9) return false;
        }
        return true;
    }

private:
    static double value(const Predicate& p, const Env& env, double t) {
        try {
            return eval(p.lhs, env) - eval(p.rhs, env);
        } catch (const EvalError& e) {
            throw TransportError(std::string("excluded-set test failed (") + e.what() + ")", t);
        }
    }

    const ConnectionModel& m_;
    std::vector<double> last_;
};

inline Env env_of(const ConnectionModel& m, const State& y) {
    Env env;
    for (std::size_t i = 0; i < m.n(); ++i) env.set(m.x(i), y[i]);
    for (std::size_t a = 0; a < m.k(); ++a) env.set(m.u(a), y[m.n() + a]);
    return env;
}

inline PointE point_of(const ConnectionModel& m, const State& y) {
    return PointE{State(y.begin(), y.begin() + static_cast<long>(m.n())),
                  State(y.begin() + static_cast<long>(m.n()), y.begin() + static_cast<long>(m.n() + m.k()))};
}

// Base velocity along the curve at (t, x).
using BaseVelocity = std::function<std::vector<double>(double, const Env&)>;

// State (x, u[, b]); u' = -Gamma^A_i x'^i, b' = -Gamma^A_iB x'^i b^B.
inline TransportResult run(const ConnectionModel& m, const BaseVelocity& velocity, const PointE& start,
                           const std::vector<double>* b0, double span, double step) {
    const std::size_t n = m.n(), k = m.k();
    if (start.base.size() != n || start.fiber.size() != k) throw ModelError("start point has the wrong dimension");
    if (b0 && b0->size() != k) throw ModelError("transported vector needs " + std::to_string(k) + " components");
    TensorField lin;
    if (b0) lin = linear_coeffs(m);

    Rhs f = [&](double t, const State& y) {
        Env env = env_of(m, y);
        std::vector<double> xd = velocity(t, env);
        State d(y.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) d[i] = xd[i];
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t i = 0; i < n; ++i) {
                if (xd[i] == 0.0) continue;
                if (!m.gamma[a][i].is_zero()) d[n + a] -= eval(m.gamma[a][i], env) * xd[i];
                if (b0)
                    for (std::size_t c = 0; c < k; ++c) {
                        const Expr& g = lin.at({a, i, c});
                        if (!g.is_zero()) d[n + k + a] -= eval(g, env) * xd[i] * y[n + k + c];
                    }
            }
        return d;
    };

    State y(start.base);
    y.insert(y.end(), start.fiber.begin(), start.fiber.end());
    if (b0) y.insert(y.end(), b0->begin(), b0->end());

    Guard guard(m);
    guard.start(env_of(m, y));
    auto run = integrate(f, y, span, step, [&](double t, const State& s) {
        Env env = env_of(m, s);
        guard.check(env, t);
        return guard.inside_box(env);
    });

    TransportResult r;
    for (const auto& [t, s] : run.path) {
        TrajectorySample ts{t, point_of(m, s), {}};
        if (b0) ts.transported.assign(s.begin() + static_cast<long>(n + k), s.end());
        r.trajectory.push_back(std::move(ts));
    }
    r.final_point = r.trajectory.back().point;
    r.final_vector = r.trajectory.back().transported;
    r.steps = run.steps;
    r.max_local_error = run.max_local_error;
    r.truncated = run.stopped;
    r.end_time = run.path.back().first;
    return r;
}

inline BaseVelocity field_velocity(const ConnectionModel& m, const std::vector<Expr>& X) {
    if (X.size() != m.n()) throw ModelError("base vector field needs " + std::to_string(m.n()) + " components");
    for (const auto& e : X)
        for (const auto& v : free_variables(e))
            if (!m.bundle.is_base(v)) throw ModelError("base vector field may only use base coordinates, found '" + v + "'");
    return [&m, X](double, const Env& env) {
        std::vector<double> v(m.n());
        for (std::size_t i = 0; i < m.n(); ++i) v[i] = eval(X[i], env);
        return v;
    };
}

}  // namespace detail

/// Integral curve of the horizontal lift of X from p0.
inline TransportResult horizontal_flow(const ConnectionModel& m, const std::vector<Expr>& X, const PointE& p0,
                                       double span, double step) {
    return detail::run(m, detail::field_velocity(m, X), p0, nullptr, span, step);
}

/// Transport of b0 by the linearized connection along the horizontal curve
/// (or trivially along a vertical one).
inline TransportResult parallel_transport(const ConnectionModel& m, const CurveSpec& curve,
                                          const std::vector<double>& b0) {
    if (const auto* fc = std::get_if<FlowCurve>(&curve))
        return detail::run(m, detail::field_velocity(m, fc->X), fc->start, &b0, fc->span, fc->step);
    if (const auto* pc = std::get_if<ParametricCurve>(&curve)) {
        if (pc->c.size() != m.n()) throw ModelError("curve needs " + std::to_string(m.n()) + " components");
        std::vector<Expr> dc;
        for (const auto& e : pc->c) {
            for (const auto& v : free_variables(e))
                if (v != pc->parameter) throw ModelError("curve may only use its parameter '" + pc->parameter + "'");
            dc.push_back(simplify(diff(e, pc->parameter)));
        }
        Env at0;
        at0.set(pc->parameter, 0.0);
        PointE start{{}, pc->fiber};
        for (const auto& e : pc->c) start.base.push_back(eval(e, at0));
        detail::BaseVelocity vel = [dc, name = pc->parameter](double t, const Env&) {
            Env e;
            e.set(name, t);
            std::vector<double> v;
            for (const auto& d : dc) v.push_back(eval(d, e));
            return v;
        };
        return detail::run(m, vel, start, &b0, pc->span, pc->step);
    }
    const auto& vc = std::get<VerticalCurve>(curve);
    if (b0.size() != m.k()) throw ModelError("transported vector needs " + std::to_string(m.k()) + " components");
    TransportResult r;
    r.final_point = vc.start;
    r.final_vector = b0;
    r.trajectory.push_back({0.0, vc.start, b0});
    return r;
}

/// (phi_T(p0 + eps b0) - phi_T(p0)).fiber / eps from two nonlinear flows, or
/// the central difference with p0 -/+ eps b0.
inline std::vector<double> transport_oracle(const ConnectionModel& m, const std::vector<Expr>& X, const PointE& p0,
                                            const std::vector<double>& b0, double span, double step, double eps = 1e-5,
                                            bool central = false) {
    if (b0.size() != m.k()) throw ModelError("transported vector needs " + std::to_string(m.k()) + " components");
    auto shifted = [&](double s) {
        PointE p = p0;
        for (std::size_t a = 0; a < m.k(); ++a) p.fiber[a] += s * b0[a];
        return horizontal_flow(m, X, p, span, step).final_point.fiber;
    };
    std::vector<double> hi = shifted(eps), lo = central ? shifted(-eps) : shifted(0.0);
    std::vector<double> r(m.k());
    for (std::size_t a = 0; a < m.k(); ++a) r[a] = (hi[a] - lo[a]) / (central ? 2 * eps : eps);
    return r;
}

/// Defect of the fiber point after the loop +eps e_i, +eps e_j, -eps e_i,
/// -eps e_j, divided by eps^2. Tends to R^A_ij(p0) as eps -> 0.
inline std::vector<double> holonomy_probe(const ConnectionModel& m, const PointE& p0, std::size_t i, std::size_t j,
                                          double eps, std::size_t steps_per_leg = 64) {
    if (m.n() < 2) throw ModelError("holonomy probe needs at least two base coordinates");
    if (i >= m.n() || j >= m.n() || i == j) throw ModelError("holonomy probe needs two distinct base directions");
    if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
    PointE p = p0;
    double h = eps / static_cast<double>(steps_per_leg);
    for (auto [dir, sign] : {std::pair{i, 1.0}, {j, 1.0}, {i, -1.0}, {j, -1.0}}) {
        std::vector<Expr> X(m.n());
        X[dir] = Expr::constant(sign);
        p = horizontal_flow(m, X, p, eps, h).final_point;
    }
    std::vector<double> d(m.k());
    for (std::size_t a = 0; a < m.k(); ++a) d[a] = (p.fiber[a] - p0.fiber[a]) / (eps * eps);
    return d;
}

struct SodeState {
    double t = 0.0;  // used by time-dependent equations
    std::vector<double> x;
    std::vector<double> v;
};

struct SodeTrajectory {
    std::vector<SodeState> states;
    std::size_t steps = 0;
    double max_local_error = 0.0;
};

/// x' = v, v' = f (t' = 1 for time-dependent equations).
inline SodeTrajectory sode_flow(const SodeModel& s, const SodeState& start, double span, double step) {
    validate_sode(s);
    const std::size_t n = s.n();
    if (start.x.size() != n || start.v.size() != n) throw ModelError("start state has the wrong dimension");
    detail::Rhs f = [&](double t, const detail::State& y) {
        Env env;
        if (!s.autonomous) env.set(s.time, start.t + t);
        for (std::size_t i = 0; i < n; ++i) {
            env.set(s.position[i], y[i]);
            env.set(s.velocity[i], y[n + i]);
        }
        detail::State d(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = y[n + i];
            d[n + i] = eval(s.forces[i], env);
        }
        return d;
    };
    detail::State y(start.x);
    y.insert(y.end(), start.v.begin(), start.v.end());
    auto run = detail::integrate(f, y, span, step, [](double, const detail::State&) { return true; });
    SodeTrajectory r;
    for (const auto& [t, st] : run.path)
        r.states.push_back({start.t + t, detail::State(st.begin(), st.begin() + static_cast<long>(n)),
                            detail::State(st.begin() + static_cast<long>(n), st.end())});
    r.steps = run.steps;
    r.max_local_error = run.max_local_error;
    return r;
}

}  // namespace linconn
