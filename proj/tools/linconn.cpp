// linconn: command-line front end for the connection library.
//
// Exit codes: 0 success, 1 a check failed (the report is still written),
// 2 usage, parse or validation error.

#include <cmath>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "linconn/linconn.hpp"

#ifndef LINCONN_VERSION
#define LINCONN_VERSION "dev"
#endif

using namespace linconn;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string model;
    bool json = false;
    std::size_t samples = 100;
    std::uint64_t seed = 7;
    std::optional<double> tol;
    std::string box;

    // tensor
    std::string name;
    std::string at;
    std::string section;
    std::string direction;
    std::string function;
    std::string function2;
    std::string var;

    // check
    std::vector<std::string> suites;
    std::string split;

    // transport
    std::string field;
    std::string curve;
    std::string param = "t";
    bool vertical = false;
    std::string from;
    double time = 1.0;
    double step = 1e-3;
    std::string vector;
    bool oracle = false;
    bool central = false;
    std::optional<double> eps;
    std::string loop;
    std::size_t every = 0;

    // sode
    std::string report = "linearizability";

    // hj
    std::string alpha;
};

// ---------------------------------------------------------------------------
// Argument parsing helpers

std::vector<std::string> split_top(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            out.push_back(detail::trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(detail::trim(cur));
    return out;
}

std::vector<Expr> parse_list(const std::string& s, const std::string& what) {
    if (detail::trim(s).empty()) throw UsageError(what + " is empty");
    std::vector<Expr> out;
    for (const auto& part : split_top(s, ',')) out.push_back(parse(part));
    return out;
}

double parse_value(const std::string& s) {
    try {
        return eval(parse(s), Env());
    } catch (const std::exception& e) {
        throw UsageError("not a number: '" + s + "'");
    }
}

std::vector<double> parse_numbers(const std::string& s) {
    std::vector<double> out;
    for (const auto& part : split_top(s, ',')) out.push_back(parse_value(part));
    return out;
}

// "name=value,..." against the coordinates of b; missing coordinates default
// to 0 (fiber 1 for homogeneous models) with a warning.
PointE parse_point(const BundleModel& b, const std::string& text, bool homogeneous, std::vector<std::string>& warnings) {
    std::map<std::string, double> given;
    if (!detail::trim(text).empty()) {
        for (const auto& part : split_top(text, ',')) {
            auto eq = part.find('=');
            if (eq == std::string::npos) throw UsageError("point entries must look like name=value, found '" + part + "'");
            std::string name = detail::trim(part.substr(0, eq));
            if (!b.is_coordinate(name)) throw UsageError("point names unknown coordinate '" + name + "'");
            if (given.count(name)) throw UsageError("point gives '" + name + "' twice");
            given[name] = parse_value(part.substr(eq + 1));
        }
    }
    PointE p;
    auto pick = [&](const std::string& name, double fallback) {
        auto it = given.find(name);
        if (it != given.end()) return it->second;
        std::ostringstream w;
        w << "coordinate " << name << " not given, using " << fallback;
        warnings.push_back(w.str());
        return fallback;
    };
    for (const auto& x : b.base) p.base.push_back(pick(x, 0.0));
    for (const auto& u : b.fiber) p.fiber.push_back(pick(u, homogeneous ? 1.0 : 0.0));
    return p;
}

Box parse_box(const BundleModel& b, const std::string& text, Box box) {
    if (detail::trim(text).empty()) return box;
    for (const auto& part : split_top(text, ',')) {
        auto eq = part.find('=');
        auto colon = part.find(':');
        if (eq == std::string::npos || colon == std::string::npos || colon < eq)
            throw UsageError("box entries must look like name=lo:hi, found '" + part + "'");
        std::string name = detail::trim(part.substr(0, eq));
        if (!b.is_coordinate(name)) throw UsageError("box names unknown coordinate '" + name + "'");
        Interval iv{parse_value(part.substr(eq + 1, colon - eq - 1)), parse_value(part.substr(colon + 1))};
        if (!(iv.lo < iv.hi)) throw UsageError("degenerate box interval for '" + name + "'");
        box[name] = iv;
    }
    return box;
}

// "H2" or "V1" (1-based) as a basis field.
VectorFieldOnE parse_direction(const ConnectionModel& m, const std::string& s) {
    if (s.size() < 2 || (s[0] != 'H' && s[0] != 'V')) throw UsageError("direction must be H<i> or V<A>, e.g. H1");
    std::size_t idx = 0;
    if (!detail::numbered_key(s, std::string(1, s[0]), idx)) throw UsageError("direction must be H<i> or V<A>, e.g. H1");
    std::size_t limit = s[0] == 'H' ? m.n() : m.k();
    if (idx > limit) throw UsageError("direction " + s + " out of range");
    return s[0] == 'H' ? horizontal_basis(m, idx - 1) : vertical_basis(m, idx - 1);
}

std::vector<std::size_t> parse_indices(const std::string& s, std::size_t limit, const std::string& what) {
    std::vector<std::size_t> out;
    for (const auto& part : split_top(s, ',')) {
        std::size_t idx = 0;
        if (!detail::numbered_key("i" + part, "i", idx) || idx > limit)
            throw UsageError(what + " index '" + part + "' must be between 1 and " + std::to_string(limit));
        out.push_back(idx - 1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Result helpers

TensorField vector_tensor(const std::string& name, const std::vector<Expr>& v, Slot slot) {
    TensorField t(name, {slot}, v.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) t.at({i}) = simplify(v[i]);
    return t;
}

TensorField scalar_tensor(const std::string& name, const Expr& e) {
    TensorField t(name, {}, 0, 0);
    t.flat(0) = simplify(e);
    return t;
}

TensorField gamma_tensor(const ConnectionModel& m, const std::string& name = "gamma") {
    TensorField t(name, {Slot::FiberVector, Slot::BaseCovector}, m.n(), m.k());
    for (std::size_t a = 0; a < m.k(); ++a)
        for (std::size_t i = 0; i < m.n(); ++i) t.at({a, i}) = m.gamma[a][i];
    return t;
}

Json vector_json(const std::vector<double>& v) {
    Json j = Json::array();
    for (double x : v) j.push_back(json_number(x));
    return j;
}

double relative_gap(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::fabs(a[i] - b[i]));
        den = std::max(den, std::fabs(b[i]));
    }
    return den > 0 ? num / den : num;
}

// ---------------------------------------------------------------------------
// Human-readable rendering of the same JSON results

std::string fmt(const Json& v) {
    if (v.is_null()) return "null";
    if (v.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", v.get<double>());
        return buf;
    }
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

void render(const Json& j, std::ostream& out, int depth = 0) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    if (j.contains("components")) {
        out << pad << j["name"].get<std::string>() << "\n";
        for (const auto& c : j["components"]) {
            std::string idx;
            for (const auto& i : c["index"]) idx += (idx.empty() ? "" : ",") + i.dump();
            out << pad << "  [" << idx << "] " << c["expression"].get<std::string>();
            if (c.contains("value")) out << "  = " << fmt(c["value"]);
            out << "\n";
        }
        return;
    }
    if (j.contains("passed") && j.contains("subreports")) {
        out << pad << (j["passed"].get<bool>() ? "PASS " : "FAIL ") << j["name"].get<std::string>()
            << "  max_residual=" << fmt(j["max_residual"]) << " tol=" << fmt(j["tolerance"])
            << " samples=" << j["samples"].dump();
        if (j.contains("label")) out << "  [" << j["label"].get<std::string>() << "]";
        out << "\n";
        for (const auto& n : j["notes"]) out << pad << "  note: " << n.get<std::string>() << "\n";
        for (const auto& s : j["subreports"]) render(s, out, depth + 1);
        return;
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.value().is_object() || (it.value().is_array() && !it.value().empty() && it.value()[0].is_object())) {
            out << pad << it.key() << ":\n";
            if (it.value().is_array())
                for (const auto& e : it.value()) render(e, out, depth + 1);
            else
                render(it.value(), out, depth + 1);
        } else if (it.value().is_array()) {
            std::string s;
            for (const auto& e : it.value()) s += (s.empty() ? "" : ", ") + fmt(e);
            out << pad << it.key() << ": " << s << "\n";
        } else {
            out << pad << it.key() << ": " << fmt(it.value()) << "\n";
        }
    }
}

// ---------------------------------------------------------------------------
// Verbs

struct Context {
    const Options& opt;
    LoadedModel lm;
    ReportDocument doc;

    const ConnectionModel& connection() const {
        if (!lm.connection)
            throw UsageError("this model has no connection (a Hamiltonian model needs first integrals f1..fn)");
        return *lm.connection;
    }
    const SodeModel& sode() const {
        if (!lm.sode) throw UsageError("this verb needs a model with an [sode] section");
        return *lm.sode;
    }
    const HamiltonianModel& hamiltonian() const {
        if (!lm.hamiltonian) throw UsageError("this verb needs a model with a [hamiltonian] section");
        return *lm.hamiltonian;
    }
    double tol(double fallback) const { return opt.tol.value_or(fallback); }
    void warn(const std::vector<std::string>& ws) { doc.warnings.insert(doc.warnings.end(), ws.begin(), ws.end()); }
    std::vector<PointE> samples() const {
        const ConnectionModel& m = connection();
        return sample_points(m, opt.samples, parse_box(m.bundle, opt.box, m.box), opt.seed);
    }
    void add_report(const CheckReport& r, const BundleModel& b, bool counts) {
        Json j = report_json(r, b);
        j["role"] = counts ? "required" : "informational";
        doc.results.push_back(j);
        if (counts && !r.passed) doc.passed = false;
    }
};

void verb_info(Context& cx) {
    const auto& d = cx.lm.doc;
    Json j;
    j["kind"] = kind_name(d.bundle.kind);
    j["base"] = d.bundle.base;
    j["fiber"] = d.bundle.fiber;
    const char* sources[] = {"connection", "sode", "hamiltonian"};
    j["source"] = sources[static_cast<int>(d.source)];
    Json ex = Json::array();
    for (const auto& p : d.excluded) ex.push_back(p.text());
    j["excluded"] = ex;
    Json box = Json::object();
    for (const auto& [name, iv] : d.box) box[name] = Json::array({json_number(iv.lo), json_number(iv.hi)});
    j["box"] = box;
    if (cx.lm.sode) {
        Json f = Json::array();
        for (const auto& e : cx.lm.sode->forces) f.push_back(to_string(e));
        j["forces"] = f;
        j["autonomous"] = cx.lm.sode->autonomous;
    }
    if (cx.lm.hamiltonian) {
        j["H"] = to_string(cx.lm.hamiltonian->H);
        Json f = Json::array();
        for (const auto& e : cx.lm.hamiltonian->first_integrals) f.push_back(to_string(e));
        j["first_integrals"] = f;
    }
    if (cx.lm.integrable) j["transversality_determinant"] = to_string(cx.lm.integrable->det);
    cx.doc.results.push_back(j);
    if (cx.lm.connection) cx.doc.results.push_back(tensor_json(gamma_tensor(*cx.lm.connection)));
}

void verb_tensor(Context& cx) {
    const Options& o = cx.opt;
    const std::string& n = o.name;
    const ConnectionModel* mp = cx.lm.connection ? &*cx.lm.connection : nullptr;
    std::vector<TensorField> out;
    BundleModel point_bundle;
    bool homogeneous = false;
    if (mp) {
        point_bundle = mp->bundle;
        homogeneous = mp->homogeneous;
    } else {
        point_bundle = cx.lm.doc.bundle;
    }
    auto need_function = [&](const std::string& f, const char* flag) {
        if (f.empty()) throw UsageError(std::string("tensor '") + n + "' needs " + flag);
        Expr e = parse(f);
        check_names(point_bundle, e, flag);
        return e;
    };
    auto need_section = [&](std::size_t count) {
        auto s = parse_list(o.section, "--section");
        if (s.size() != count) throw UsageError("--section needs " + std::to_string(count) + " components");
        return SectionModel{s};
    };

    if (n == "gamma") {
        out.push_back(gamma_tensor(cx.connection()));
    } else if (n == "linear_coeffs") {
        out.push_back(simplify(linear_coeffs(cx.connection())));
    } else if (n == "tension") {
        out.push_back(simplify(tension(cx.connection())));
    } else if (n == "curvature") {
        out.push_back(simplify(curvature_R(cx.connection())));
    } else if (n == "theta") {
        out.push_back(simplify(theta(cx.connection())));
    } else if (n == "rie") {
        out.push_back(simplify(rie(cx.connection())));
    } else if (n == "rie_commutator") {
        out.push_back(simplify(rie_commutator(cx.connection())));
    } else if (n == "canonical_section") {
        auto s = canonical_section(cx.connection());
        out.push_back(vector_tensor("canonical_section", s.components, Slot::FiberVector));
    } else if (n == "covariant_derivative") {
        const auto& m = cx.connection();
        if (o.direction.empty()) throw UsageError("covariant_derivative needs --direction");
        auto d = covariant_derivative(m, parse_direction(m, o.direction), need_section(m.k()));
        out.push_back(vector_tensor("covariant_derivative", d, Slot::FiberVector));
    } else if (n == "integral_section_residual") {
        const auto& m = cx.connection();
        out.push_back(integral_section_residual(m, need_section(m.k())));
    } else if (n == "pullback_coeffs") {
        const auto& m = cx.connection();
        out.push_back(pullback_connection_coeffs(m, need_section(m.k())));
    } else if (n == "derivative") {
        Expr f = need_function(o.function, "--function");
        if (o.var.empty() || !point_bundle.is_coordinate(o.var)) throw UsageError("derivative needs --var naming a coordinate");
        out.push_back(scalar_tensor("derivative", diff(f, o.var)));
    } else if (n == "horizontal_derivative") {
        const auto& m = cx.connection();
        Expr f = need_function(o.function, "--function");
        std::vector<Expr> h;
        for (std::size_t i = 0; i < m.n(); ++i) h.push_back(h_apply(m, f, i));
        out.push_back(vector_tensor("horizontal_derivative", h, Slot::BaseCovector));
    } else if (n == "apply_field") {
        const auto& m = cx.connection();
        if (o.direction.empty()) throw UsageError("apply_field needs --direction");
        out.push_back(scalar_tensor("apply_field", apply_field(m, parse_direction(m, o.direction), need_function(o.function, "--function"))));
    } else if (n == "homogenized" || n == "affine_coeffs_0" || n == "affine_coeffs_lin" ||
               n == "affine_covariant_derivative" || n == "affine_canonical_section") {
        const auto& m = cx.connection();
        if (n == "homogenized") {
            auto h = homogenize(m);
            out.push_back(gamma_tensor(h.extended, "homogenized_gamma"));
            point_bundle = h.extended.bundle;
            homogeneous = true;
        } else if (n == "affine_canonical_section") {
            out.push_back(vector_tensor("affine_canonical_section", affine_canonical_section(m), Slot::FiberVector));
        } else if (n == "affine_covariant_derivative") {
            if (o.direction.empty()) throw UsageError("affine_covariant_derivative needs --direction");
            auto d = affine_covariant_derivative(m, parse_direction(m, o.direction), need_section(m.k() + 1).components);
            out.push_back(vector_tensor("affine_covariant_derivative", d, Slot::FiberVector));
        } else {
            auto al = affine_linearization(m);
            out.push_back(simplify(n == "affine_coeffs_0" ? al.coeffs_0 : al.coeffs_lin));
        }
    } else if (n == "jacobi") {
        out.push_back(jacobi_endomorphism(cx.sode()));
    } else if (n == "sode_field_apply") {
        out.push_back(scalar_tensor("sode_field_apply", sode_field_apply(cx.sode(), need_function(o.function, "--function"))));
    } else if (n == "torsion_form") {
        out.push_back(torsion_form(cx.connection()));
    } else if (n == "dH" || n == "dV" || n == "hamiltonian_field") {
        const auto& m = cx.connection();
        Expr f = need_function(o.function, "--function");
        if (n == "dH") out.push_back(vector_tensor("dH", dH(m, f), Slot::BaseCovector));
        if (n == "dV") out.push_back(vector_tensor("dV", dV(m, f), Slot::BaseVector));
        if (n == "hamiltonian_field") {
            auto X = hamiltonian_field(m, f);
            cx.warn(X.warnings);
            out.push_back(vector_tensor("hamiltonian_field_horizontal", X.field.horizontal, Slot::BaseVector));
            out.push_back(vector_tensor("hamiltonian_field_vertical", X.field.vertical, Slot::FiberVector));
            auto c = coordinate_components(m, X.field);
            out.push_back(vector_tensor("hamiltonian_field_coordinates", c, Slot::BaseVector));
        }
    } else if (n == "poisson") {
        auto r = poisson(cx.connection(), need_function(o.function, "--function"), need_function(o.function2, "--function2"));
        cx.warn(r.warnings);
        out.push_back(scalar_tensor("poisson", r.value));
    } else if (n == "canonical_bracket") {
        out.push_back(scalar_tensor("canonical_bracket", canonical_bracket(point_bundle, need_function(o.function, "--function"),
                                                                           need_function(o.function2, "--function2"))));
    } else {
        throw UsageError("unknown tensor name '" + n + "'");
    }

    std::optional<Env> env;
    if (!o.at.empty()) {
        std::vector<std::string> w;
        env = make_env(point_bundle, parse_point(point_bundle, o.at, homogeneous, w));
        cx.warn(w);
    }
    for (const auto& t : out) cx.doc.results.push_back(tensor_json(t, env ? &*env : nullptr));
}

void verb_check(Context& cx) {
    const Options& o = cx.opt;
    const ConnectionModel& m = cx.connection();
    const double tol = cx.tol(1e-8);
    auto pts = cx.samples();
    const BundleKind kind = m.bundle.kind;
    bool affine = kind == BundleKind::Affine || kind == BundleKind::Jet;

    std::vector<std::string> suites = o.suites.empty() ? std::vector<std::string>{"all"} : o.suites;
    bool all = suites.size() == 1 && suites[0] == "all";
    if (all) {
        suites = {"theta", "rie", "bianchi", "tension_identities", "homogeneous", "flat"};
        if (affine) suites.push_back("affine");
        if (kind == BundleKind::Cotangent) {
            suites.push_back("symmetric");
            if (check_symmetric(m, pts, tol).passed) suites.push_back("cyclic");
        }
        if (cx.lm.integrable) suites.push_back("integrable");
        if (cx.lm.sode && cx.lm.sode->autonomous) suites.push_back("linearizability");
        if (cx.lm.sode && !cx.lm.sode->autonomous) suites.push_back("extension");
    }
    // identities must hold for every model; classifications only decide the
    // status when they were asked for by name
    auto counts = [&](bool identity) { return identity || !all; };

    for (const auto& s : suites) {
        if (s == "theta") {
            cx.add_report(check_theta_symmetry(m, pts, tol), m.bundle, counts(true));
        } else if (s == "rie") {
            cx.add_report(check_rie_two_path(m, pts, tol), m.bundle, counts(true));
        } else if (s == "bianchi") {
            cx.add_report(bianchi_check(m, pts, tol), m.bundle, counts(true));
        } else if (s == "tension_identities") {
            cx.add_report(tension_identities_check(m, pts, tol), m.bundle, counts(true));
        } else if (s == "homogeneous") {
            cx.add_report(check_homogeneous(m, pts, tol), m.bundle, counts(false));
        } else if (s == "flat") {
            cx.add_report(check_flat(m, pts, tol), m.bundle, counts(false));
        } else if (s == "basic") {
            auto sec = parse_list(o.section, "--section");
            cx.add_report(check_basic(m, SectionModel{sec}, pts, tol), m.bundle, counts(false));
        } else if (s == "affine") {
            cx.add_report(check_affine_structure(m, pts, tol, o.seed), m.bundle, counts(true));
        } else if (s == "symmetric") {
            cx.add_report(check_symmetric(m, pts, tol), m.bundle, counts(false));
        } else if (s == "cyclic") {
            cx.add_report(check_cyclic_curvature(m, pts, tol), m.bundle, counts(true));
        } else if (s == "integrable") {
            if (!cx.lm.integrable) throw UsageError("suite 'integrable' needs a Hamiltonian model with first integrals");
            cx.add_report(check_integrable(*cx.lm.integrable, pts, tol), m.bundle, counts(false));
        } else if (s == "linearizability") {
            cx.add_report(linearizability_report(cx.sode(), pts, tol), m.bundle, counts(false));
        } else if (s == "decoupling") {
            if (o.split.empty()) throw UsageError("suite 'decoupling' needs --split");
            cx.add_report(decoupling_check(cx.sode(), parse_indices(o.split, cx.sode().n(), "--split"), pts, tol), m.bundle,
                          counts(false));
        } else if (s == "extension") {
            cx.add_report(check_homogeneous_extension(cx.sode(), pts, tol), m.bundle, counts(true));
        } else {
            throw UsageError("unknown suite '" + s + "'");
        }
    }
}

void verb_bianchi(Context& cx) {
    const ConnectionModel& m = cx.connection();
    auto pts = cx.samples();
    cx.add_report(bianchi_check(m, pts, cx.tol(1e-8)), m.bundle, true);
    cx.add_report(tension_identities_check(m, pts, cx.tol(1e-8)), m.bundle, true);
}

Json transport_json(const TransportResult& r, const BundleModel& b, std::size_t every) {
    Json j;
    j["final_point"] = point_json(b, r.final_point);
    if (!r.final_vector.empty()) j["final_vector"] = vector_json(r.final_vector);
    j["steps"] = r.steps;
    j["max_local_error"] = json_number(r.max_local_error);
    j["truncated"] = r.truncated;
    j["end_time"] = json_number(r.end_time);
    if (every > 0) {
        Json traj = Json::array();
        for (std::size_t s = 0; s < r.trajectory.size(); ++s) {
            if (s % every != 0 && s + 1 != r.trajectory.size()) continue;
            Json e;
            e["t"] = json_number(r.trajectory[s].t);
            e["point"] = point_json(b, r.trajectory[s].point);
            if (!r.trajectory[s].transported.empty()) e["vector"] = vector_json(r.trajectory[s].transported);
            traj.push_back(e);
        }
        j["trajectory"] = traj;
    }
    return j;
}

void verb_transport(Context& cx) {
    const Options& o = cx.opt;
    const ConnectionModel& m = cx.connection();
    std::vector<std::string> w;
    PointE p0 = parse_point(m.bundle, o.from, m.homogeneous, w);
    cx.warn(w);

    if (!o.loop.empty()) {
        auto ij = parse_indices(o.loop, m.n(), "--loop");
        if (ij.size() != 2) throw UsageError("--loop needs two base indices, e.g. 1,2");
        const double eps = o.eps.value_or(1e-3);
        auto d = holonomy_probe(m, p0, ij[0], ij[1], eps);
        TensorField R = curvature_R(m);
        Env env = make_env(m.bundle, p0);
        std::vector<double> exact;
        for (std::size_t a = 0; a < m.k(); ++a) exact.push_back(eval(R.at({a, ij[0], ij[1]}), env));
        double gap = relative_gap(d, exact);
        Json j;
        j["operation"] = "holonomy";
        j["eps"] = json_number(eps);
        j["defect_over_eps2"] = vector_json(d);
        j["curvature"] = vector_json(exact);
        j["relative_gap"] = json_number(gap);
        double tol = cx.tol(1e-2);
        j["tolerance"] = json_number(tol);
        j["passed"] = gap <= tol;
        if (gap > tol) cx.doc.passed = false;
        cx.doc.results.push_back(j);
        return;
    }

    int modes = (!o.field.empty()) + (!o.curve.empty()) + (o.vertical ? 1 : 0);
    if (modes != 1) throw UsageError("transport needs exactly one of --field, --curve, --vertical (or --loop)");
    std::optional<std::vector<double>> b0;
    if (!o.vector.empty()) {
        b0 = parse_numbers(o.vector);
        if (b0->size() != m.k()) throw UsageError("--vector needs " + std::to_string(m.k()) + " components");
    }
    if (o.oracle && !b0) b0 = std::vector<double>(m.k(), 0.0), (*b0)[0] = 1.0;

    Json j;
    if (!o.field.empty()) {
        auto X = parse_list(o.field, "--field");
        if (!b0) {
            j["operation"] = "horizontal_flow";
            j["result"] = transport_json(horizontal_flow(m, X, p0, o.time, o.step), m.bundle, o.every);
        } else {
            j["operation"] = "parallel_transport";
            auto r = parallel_transport(m, FlowCurve{X, p0, o.time, o.step}, *b0);
            j["result"] = transport_json(r, m.bundle, o.every);
            if (o.oracle) {
                auto orc = transport_oracle(m, X, p0, *b0, o.time, o.step, o.eps.value_or(1e-5), o.central);
                double gap = relative_gap(r.final_vector, orc);
                double tol = cx.tol(o.central ? 1e-6 : 1e-4);
                j["oracle"] = vector_json(orc);
                j["oracle_kind"] = o.central ? "central" : "forward";
                j["relative_gap"] = json_number(gap);
                j["tolerance"] = json_number(tol);
                j["passed"] = gap <= tol;
                if (gap > tol) cx.doc.passed = false;
            }
        }
    } else if (!o.curve.empty()) {
        if (o.oracle) throw UsageError("--oracle needs a flow curve (--field)");
        if (!b0) b0 = std::vector<double>(m.k(), 0.0);
        j["operation"] = "parallel_transport";
        auto r = parallel_transport(m, ParametricCurve{parse_list(o.curve, "--curve"), o.param, p0.fiber, o.time, o.step}, *b0);
        j["result"] = transport_json(r, m.bundle, o.every);
    } else {
        if (!b0) throw UsageError("--vertical needs --vector");
        j["operation"] = "parallel_transport";
        j["result"] = transport_json(parallel_transport(m, VerticalCurve{p0}, *b0), m.bundle, o.every);
    }
    cx.doc.results.push_back(j);
}

void verb_sode(Context& cx) {
    const Options& o = cx.opt;
    const SodeModel& s = cx.sode();
    const std::string& r = o.report;
    if (r == "connection") {
        cx.doc.results.push_back(tensor_json(gamma_tensor(cx.connection(), s.autonomous ? "sode_connection" : "jet_connection")));
    } else if (r == "jacobi") {
        std::optional<Env> env;
        if (!o.at.empty()) {
            std::vector<std::string> w;
            env = make_env(cx.connection().bundle, parse_point(cx.connection().bundle, o.at, false, w));
            cx.warn(w);
        }
        cx.doc.results.push_back(tensor_json(jacobi_endomorphism(s), env ? &*env : nullptr));
    } else if (r == "linearizability") {
        cx.add_report(linearizability_report(s, cx.samples(), cx.tol(1e-8)), cx.connection().bundle, true);
    } else if (r == "decoupling") {
        if (o.split.empty()) throw UsageError("decoupling needs --split");
        cx.add_report(decoupling_check(s, parse_indices(o.split, s.n(), "--split"), cx.samples(), cx.tol(1e-8)),
                      cx.connection().bundle, true);
    } else if (r == "extension") {
        SodeModel h = homogeneous_sode(s);
        Json j;
        j["position"] = h.position;
        j["velocity"] = h.velocity;
        Json f = Json::array();
        for (const auto& e : h.forces) f.push_back(to_string(e));
        j["forces"] = f;
        cx.doc.results.push_back(j);
        cx.add_report(check_homogeneous_extension(s, cx.samples(), cx.tol(1e-9)), cx.connection().bundle, true);
    } else if (r == "flow") {
        BundleModel b = sode_bundle(s);
        std::vector<std::string> w;
        PointE p = parse_point(b, o.from, false, w);
        cx.warn(w);
        SodeState st;
        std::size_t off = 0;
        if (!s.autonomous) st.t = p.base[off++];
        st.x.assign(p.base.begin() + static_cast<long>(off), p.base.end());
        st.v = p.fiber;
        auto tr = sode_flow(s, st, o.time, o.step);
        Json j;
        j["operation"] = "sode_flow";
        const auto& last = tr.states.back();
        j["t"] = json_number(last.t);
        j["x"] = vector_json(last.x);
        j["v"] = vector_json(last.v);
        j["steps"] = tr.steps;
        j["max_local_error"] = json_number(tr.max_local_error);
        cx.doc.results.push_back(j);
    } else {
        throw UsageError("unknown sode report '" + r + "'");
    }
}

void verb_hj(Context& cx) {
    const Options& o = cx.opt;
    const HamiltonianModel& h = cx.hamiltonian();
    if (o.alpha.empty()) throw UsageError("hj needs --alpha");
    OneFormOnM alpha{parse_list(o.alpha, "--alpha")};
    ConnectionModel probe;
    probe.bundle = h.bundle;
    probe.gamma.assign(h.bundle.k(), std::vector<Expr>(h.bundle.n()));
    Box box = parse_box(h.bundle, o.box, h.box);
    auto pts = sample_points(probe, o.samples, box, o.seed);
    const ConnectionModel* conn = cx.lm.connection ? &*cx.lm.connection : nullptr;
    cx.add_report(hj_verify(h, alpha, pts, cx.tol(1e-8), conn), h.bundle, true);
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Nonlinear connections: tensors, checks, transport"};
    app.set_version_flag("--version", LINCONN_VERSION);
    app.require_subcommand(1);

    auto common = [&](CLI::App* s) {
        s->add_option("model", o.model, "model file")->required();
        s->add_flag("--json", o.json, "write the JSON report");
        s->add_option("--samples", o.samples, "number of sample points")->check(CLI::PositiveNumber);
        s->add_option("--seed", o.seed, "sampling seed");
        s->add_option("--tol", o.tol, "tolerance");
        s->add_option("--box", o.box, "sampling box, e.g. x1=-0.5:0.5,u1=1:2");
    };

    auto* info = app.add_subcommand("info", "summarize a model");
    common(info);

    auto* tensor = app.add_subcommand("tensor", "compute a tensor or derived expression");
    common(tensor);
    tensor->add_option("--name", o.name, "tensor name")->required();
    tensor->add_option("--at", o.at, "evaluation point, e.g. x1=0,u1=1");
    tensor->add_option("--section", o.section, "section components, comma separated");
    tensor->add_option("--direction", o.direction, "basis direction H<i> or V<A>");
    tensor->add_option("--function", o.function, "function on the total space");
    tensor->add_option("--function2", o.function2, "second function (brackets)");
    tensor->add_option("--var", o.var, "coordinate to differentiate by");

    auto* check = app.add_subcommand("check", "run sampled checks");
    common(check);
    check->add_option("--suite", o.suites, "suite names (default all)")->delimiter(',');
    check->add_option("--section", o.section, "section for the 'basic' suite");
    check->add_option("--split", o.split, "first index group for 'decoupling', e.g. 1");

    auto* transport = app.add_subcommand("transport", "integrate flows and parallel transport");
    common(transport);
    transport->add_option("--field", o.field, "base vector field components");
    transport->add_option("--curve", o.curve, "explicit base curve c(t)");
    transport->add_option("--param", o.param, "curve parameter name");
    transport->add_flag("--vertical", o.vertical, "vertical curve (transport is the identity)");
    transport->add_option("--from", o.from, "start point");
    transport->add_option("--time", o.time, "time span");
    transport->add_option("--step", o.step, "RK4 step")->check(CLI::PositiveNumber);
    transport->add_option("--vector", o.vector, "vector to transport");
    transport->add_flag("--oracle", o.oracle, "compare against the fiber-derivative oracle");
    transport->add_flag("--central", o.central, "central differences in the oracle");
    transport->add_option("--eps", o.eps, "oracle step (default 1e-5) or loop size (default 1e-3)")->check(CLI::PositiveNumber);
    transport->add_option("--loop", o.loop, "holonomy loop in base directions i,j");
    transport->add_option("--every", o.every, "include every N-th trajectory sample");

    auto* sode = app.add_subcommand("sode", "second-order equation reports");
    common(sode);
    sode->add_option("--report", o.report, "connection|jacobi|linearizability|decoupling|extension|flow");
    sode->add_option("--split", o.split, "first index group for decoupling");
    sode->add_option("--at", o.at, "evaluation point for jacobi");
    sode->add_option("--from", o.from, "start state for flow");
    sode->add_option("--time", o.time, "time span for flow");
    sode->add_option("--step", o.step, "RK4 step for flow")->check(CLI::PositiveNumber);

    auto* hj = app.add_subcommand("hj", "verify a Hamilton-Jacobi candidate");
    common(hj);
    hj->add_option("--alpha", o.alpha, "one-form components in base coordinates");

    auto* bianchi = app.add_subcommand("bianchi", "Bianchi and tension identities");
    common(bianchi);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    std::string verb = app.get_subcommands().front()->get_name();
    try {
        std::string text = read_file(o.model);
        Context cx{o, resolve_model(load_model(text)), {}};
        cx.doc.tool_version = LINCONN_VERSION;
        cx.doc.model_digest = fnv1a_hex(text);
        Json args = Json::array();
        for (int i = 1; i < argc; ++i) args.push_back(argv[i]);
        cx.doc.command = Json{{"verb", verb}, {"argv", args}};

        if (verb == "info") verb_info(cx);
        if (verb == "tensor") verb_tensor(cx);
        if (verb == "check") verb_check(cx);
        if (verb == "transport") verb_transport(cx);
        if (verb == "sode") verb_sode(cx);
        if (verb == "hj") verb_hj(cx);
        if (verb == "bianchi") verb_bianchi(cx);

        if (o.json) {
            out << emit_json(document_json(cx.doc));
        } else {
            for (const auto& w : cx.doc.warnings) err << "warning: " << w << "\n";
            for (const auto& r : cx.doc.results) render(r, out);
            out << "status: " << (cx.doc.passed ? "pass" : "fail") << "\n";
        }
        return cx.doc.passed ? 0 : 1;
    } catch (const ModelError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const TransportError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const EvalError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
    }
    return 2;
}

int main(int argc, char** argv) { return run(argc, argv, std::cout, std::cerr); }
