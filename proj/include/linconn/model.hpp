#pragma once

// Bundle charts, connection coefficient tables, sections, sample points, and
// the line-oriented model file format.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "linconn/expr.hpp"

namespace linconn {

/// Invalid model, section, or sampling request. line() is 1-based, 0 if not
/// tied to a model file line.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& message, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

enum class BundleKind { Vector, Affine, Tangent, Cotangent, Jet };

inline const char* kind_name(BundleKind k) {
    switch (k) {
        case BundleKind::Vector: return "vector";
        case BundleKind::Affine: return "affine";
        case BundleKind::Tangent: return "tangent";
        case BundleKind::Cotangent: return "cotangent";
        case BundleKind::Jet: return "jet";
    }
    return "?";
}

inline std::optional<BundleKind> kind_from_name(const std::string& s) {
    for (auto k : {BundleKind::Vector, BundleKind::Affine, BundleKind::Tangent, BundleKind::Cotangent, BundleKind::Jet})
        if (s == kind_name(k)) return k;
    return std::nullopt;
}

struct BundleModel {
    BundleKind kind = BundleKind::Vector;
    std::vector<std::string> base;   // n names
    std::vector<std::string> fiber;  // k names

    std::size_t n() const { return base.size(); }
    std::size_t k() const { return fiber.size(); }
    bool is_coordinate(const std::string& s) const {
        return std::find(base.begin(), base.end(), s) != base.end() ||
               std::find(fiber.begin(), fiber.end(), s) != fiber.end();
    }
    bool is_base(const std::string& s) const { return std::find(base.begin(), base.end(), s) != base.end(); }
};

inline void validate_bundle(const BundleModel& b) {
    if (b.n() < 1) throw ModelError("bundle needs at least one base coordinate");
    if (b.k() < 1) throw ModelError("bundle needs at least one fiber coordinate");
    std::set<std::string> seen;
    for (const auto* names : {&b.base, &b.fiber}) {
        for (const auto& s : *names) {
            if (!is_identifier(s)) throw ModelError("invalid coordinate name '" + s + "'");
            if (!seen.insert(s).second) throw ModelError("duplicate coordinate name '" + s + "'");
        }
    }
    switch (b.kind) {
        case BundleKind::Tangent:
        case BundleKind::Cotangent:
            if (b.k() != b.n())
                throw ModelError(std::string(kind_name(b.kind)) + " bundle needs as many fiber as base coordinates (base " +
                                 std::to_string(b.n()) + ", fiber " + std::to_string(b.k()) + ")");
            break;
        case BundleKind::Jet:
            if (b.base.front() != "t") throw ModelError("jet bundle base must begin with the time coordinate t");
            if (b.k() + 1 != b.n())
                throw ModelError("jet bundle needs one fewer fiber than base coordinates (base " + std::to_string(b.n()) +
                                 ", fiber " + std::to_string(b.k()) + ")");
            break;
        default: break;
    }
}

/// A point is excluded when |lhs - rhs| < exclusion_margin there.
struct Predicate {
    Expr lhs;
    Expr rhs;
    std::string text() const { return to_string(lhs) + "=" + to_string(rhs); }
};

inline constexpr double exclusion_margin = 0.1;

struct Interval {
    double lo = -1.0;
    double hi = 1.0;
};
using Box = std::map<std::string, Interval>;

/// Connection coefficients: gamma[A][i] is the coefficient of the fiber
/// direction A in the horizontal lift H_i. For cotangent bundles gamma[j][i]
/// holds Gamma_{ij}.
struct ConnectionModel {
    BundleModel bundle;
    std::vector<std::vector<Expr>> gamma;  // k x n
    std::vector<Predicate> excluded;
    bool homogeneous = false;  // sample fibers away from zero
    Box box;                   // per-coordinate overrides of the sampling box

    std::size_t n() const { return bundle.n(); }
    std::size_t k() const { return bundle.k(); }
    const std::string& x(std::size_t i) const { return bundle.base[i]; }
    const std::string& u(std::size_t a) const { return bundle.fiber[a]; }
};

inline void check_names(const BundleModel& b, const Expr& e, const std::string& where, std::size_t line = 0) {
    for (const auto& v : free_variables(e))
        if (!b.is_coordinate(v)) throw ModelError("unknown coordinate '" + v + "' in " + where, line);
}

inline void validate_connection(const ConnectionModel& m) {
    validate_bundle(m.bundle);
    if (m.gamma.size() != m.k()) throw ModelError("coefficient table needs " + std::to_string(m.k()) + " rows");
    for (std::size_t a = 0; a < m.k(); ++a) {
        if (m.gamma[a].size() != m.n()) throw ModelError("coefficient table needs " + std::to_string(m.n()) + " columns");
        for (std::size_t i = 0; i < m.n(); ++i)
            check_names(m.bundle, m.gamma[a][i], "Gamma[" + std::to_string(a + 1) + "," + std::to_string(i + 1) + "]");
    }
    for (const auto& p : m.excluded) {
        check_names(m.bundle, p.lhs, "exclude");
        check_names(m.bundle, p.rhs, "exclude");
    }
    for (const auto& [name, iv] : m.box) {
        if (!m.bundle.is_coordinate(name)) throw ModelError("sampling box names unknown coordinate '" + name + "'");
        if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
            throw ModelError("degenerate sampling interval for '" + name + "'");
    }
}

/// Convenience constructor from coefficient text, validated.
inline ConnectionModel make_connection(BundleKind kind, std::vector<std::string> base, std::vector<std::string> fiber,
                                       const std::vector<std::vector<std::string>>& gamma) {
    ConnectionModel m;
    m.bundle = BundleModel{kind, std::move(base), std::move(fiber)};
    for (const auto& row : gamma) {
        std::vector<Expr> r;
        for (const auto& s : row) r.push_back(parse(s));
        m.gamma.push_back(std::move(r));
    }
    validate_connection(m);
    return m;
}

/// Components of a section of the pullback bundle (or a base-only candidate).
struct SectionModel {
    std::vector<Expr> components;
};

struct SectionInfo {
    bool basic = false;  // no fiber coordinate appears
};

inline SectionInfo validate_section(const ConnectionModel& m, const SectionModel& s) {
    if (s.components.size() != m.k())
        throw ModelError("section has " + std::to_string(s.components.size()) + " components, bundle fiber has " +
                         std::to_string(m.k()));
    SectionInfo info{true};
    for (std::size_t a = 0; a < s.components.size(); ++a) {
        check_names(m.bundle, s.components[a], "section component " + std::to_string(a + 1));
        for (const auto& v : free_variables(s.components[a]))
            if (!m.bundle.is_base(v)) info.basic = false;
    }
    return info;
}

inline SectionModel parse_section(const std::vector<std::string>& texts) {
    SectionModel s;
    for (const auto& t : texts) s.components.push_back(parse(t));
    return s;
}

struct PointE {
    std::vector<double> base;
    std::vector<double> fiber;
};

inline Env make_env(const BundleModel& b, const PointE& p) {
    Env env;
    for (std::size_t i = 0; i < b.n(); ++i) env.set(b.base[i], p.base.at(i));
    for (std::size_t a = 0; a < b.k(); ++a) env.set(b.fiber[a], p.fiber.at(a));
    return env;
}

inline bool is_excluded(const ConnectionModel& m, const Env& env) {
    for (const auto& p : m.excluded) {
        try {
            if (std::fabs(eval(p.lhs, env) - eval(p.rhs, env)) < exclusion_margin) return true;
        } catch (const EvalError&) {
            return true;
        }
    }
    return false;
}

inline Interval sampling_interval(const ConnectionModel& m, const std::string& name, bool fiber, const Box& box) {
    if (auto it = box.find(name); it != box.end()) return it->second;
    if (auto it = m.box.find(name); it != m.box.end()) return it->second;
    if (fiber && m.homogeneous) return {0.5, 2.0};
    return {-1.0, 1.0};
}

/// Deterministic sample of `count` points in the box (defaults [-1,1], fiber
/// [0.5,2] for homogeneous models) avoiding the excluded set and, for
/// homogeneous models, |fiber| < 0.1.
inline std::vector<PointE> sample_points(const ConnectionModel& m, std::size_t count, const Box& box, std::uint64_t seed) {
    if (count < 1) throw ModelError("sample count must be at least 1");
    for (const auto& [name, iv] : box) {
        if (!m.bundle.is_coordinate(name)) throw ModelError("sampling box names unknown coordinate '" + name + "'");
        if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
            throw ModelError("degenerate sampling interval for '" + name + "'");
    }
    std::vector<Interval> base_iv, fiber_iv;
    for (const auto& x : m.bundle.base) base_iv.push_back(sampling_interval(m, x, false, box));
    for (const auto& u : m.bundle.fiber) fiber_iv.push_back(sampling_interval(m, u, true, box));

    std::mt19937_64 rng(seed);
    auto draw = [&](const Interval& iv) { return iv.lo + (iv.hi - iv.lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    std::vector<PointE> out;
    std::size_t attempts = 0;
    const std::size_t max_attempts = 1000 * count + 1000;
    while (out.size() < count) {
        if (++attempts > max_attempts) throw ModelError("sampling box lies (almost) entirely in the excluded set");
        PointE p;
        for (const auto& iv : base_iv) p.base.push_back(draw(iv));
        for (const auto& iv : fiber_iv) p.fiber.push_back(draw(iv));
        if (m.homogeneous &&
            std::any_of(p.fiber.begin(), p.fiber.end(), [](double v) { return std::fabs(v) < exclusion_margin; }))
            continue;
        if (is_excluded(m, make_env(m.bundle, p))) continue;
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model file

/// Raw contents of a model file. Exactly one of the connection, sode and
/// hamiltonian payloads is present.
struct ModelDocument {
    enum class Source { Connection, Sode, Hamiltonian };

    BundleModel bundle;
    std::vector<Predicate> excluded;
    bool homogeneous = false;
    Box box;
    Source source = Source::Connection;
    std::vector<std::vector<Expr>> gamma;  // Connection: k x n
    std::vector<Expr> forces;              // Sode: k forces
    std::optional<Expr> hamiltonian;       // Hamiltonian: H, or absent when metric is given
    std::vector<std::vector<Expr>> metric; // Hamiltonian: n x n inverse metric g^ij, or empty
    std::vector<Expr> integrals;           // Hamiltonian: n first integrals or empty
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        else if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline Expr parse_at(const std::string& text, std::size_t line, const std::string& key) {
    try {
        return parse(text);
    } catch (const ParseError& e) {
        throw ModelError("cannot parse " + key + ": " + e.what(), line);
    }
}

inline double parse_real(const std::string& text, std::size_t line) {
    try {
        return eval(parse(text), Env{});
    } catch (const std::exception&) {
        throw ModelError("expected a number, found '" + text + "'", line);
    }
}

// prefix[a,i] with 1-based integer indices
inline bool parse_index_key(const std::string& key, std::size_t& a, std::size_t& i, const std::string& prefix = "Gamma") {
    if (key.rfind(prefix + "[", 0) != 0 || key.back() != ']') return false;
    auto parts = split(key.substr(prefix.size() + 1, key.size() - prefix.size() - 2), ',');
    if (parts.size() != 2) return false;
    try {
        std::size_t pos = 0;
        long la = std::stol(parts[0], &pos);
        if (pos != parts[0].size()) return false;
        long li = std::stol(parts[1], &pos);
        if (pos != parts[1].size()) return false;
        if (la < 1 || li < 1) return false;
        a = static_cast<std::size_t>(la);
        i = static_cast<std::size_t>(li);
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

inline bool numbered_key(const std::string& key, const std::string& prefix, std::size_t& index) {
    if (key.size() <= prefix.size() || key.rfind(prefix, 0) != 0) return false;
    std::string rest = key.substr(prefix.size());
    if (!std::all_of(rest.begin(), rest.end(), [](char c) { return c >= '0' && c <= '9'; })) return false;
    index = std::stoul(rest);
    return index >= 1;
}

}  // namespace detail

/// Parse and validate a model file.
inline ModelDocument load_model(const std::string& text) {
    using detail::trim;
    ModelDocument doc;
    std::string section;
    std::set<std::string> sections_seen;
    std::set<std::string> keys_seen;
    std::optional<BundleKind> kind;
    bool have_base = false, have_fiber = false;

    struct Entry {
        std::size_t line;
        std::string key;
        std::string value;
    };
    std::vector<Entry> gamma_entries, sode_entries, ham_entries, exclude_entries, box_entries;

    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(detail::strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
            section = trim(line.substr(1, line.size() - 2));
            static const std::set<std::string> known{"bundle", "connection", "sode", "hamiltonian", "sampling"};
            if (!known.count(section)) throw ModelError("unknown section [" + section + "]", lineno);
            if (!sections_seen.insert(section).second) throw ModelError("duplicate section [" + section + "]", lineno);
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ModelError("expected 'key = value'", lineno);
        if (section.empty()) throw ModelError("entry outside of any section", lineno);
        std::string key = trim(line.substr(0, eq));
        std::string value = detail::unquote(trim(line.substr(eq + 1)));
        if (!keys_seen.insert(section + "/" + key).second) throw ModelError("duplicate key '" + key + "'", lineno);

        if (section == "bundle") {
            if (key == "kind") {
                kind = kind_from_name(value);
                if (!kind) throw ModelError("unknown bundle kind '" + value + "'", lineno);
            } else if (key == "base" || key == "fiber") {
                auto names = detail::split(value, ',');
                for (const auto& s : names)
                    if (!is_identifier(s)) throw ModelError("invalid coordinate name '" + s + "'", lineno);
                (key == "base" ? doc.bundle.base : doc.bundle.fiber) = names;
                (key == "base" ? have_base : have_fiber) = true;
            } else if (key == "exclude") {
                if (!trim(value).empty()) exclude_entries.push_back({lineno, key, value});
            } else if (key == "homogeneous") {
                if (value == "true") doc.homogeneous = true;
                else if (value == "false") doc.homogeneous = false;
                else throw ModelError("homogeneous must be true or false", lineno);
            } else {
                throw ModelError("unknown key '" + key + "' in [bundle]", lineno);
            }
        } else if (section == "connection") {
            gamma_entries.push_back({lineno, key, value});
        } else if (section == "sode") {
            sode_entries.push_back({lineno, key, value});
        } else if (section == "hamiltonian") {
            ham_entries.push_back({lineno, key, value});
        } else if (section == "sampling") {
            box_entries.push_back({lineno, key, value});
        }
    }

    if (!sections_seen.count("bundle")) throw ModelError("missing [bundle] section");
    if (!kind) throw ModelError("[bundle] needs kind");
    if (!have_base || !have_fiber) throw ModelError("[bundle] needs base and fiber");
    doc.bundle.kind = *kind;
    validate_bundle(doc.bundle);
    const std::size_t n = doc.bundle.n(), k = doc.bundle.k();

    int payloads = static_cast<int>(sections_seen.count("connection") + sections_seen.count("sode") +
                                    sections_seen.count("hamiltonian"));
    if (payloads == 0) throw ModelError("model needs one of [connection], [sode], [hamiltonian]");
    if (payloads > 1) throw ModelError("model may define only one of [connection], [sode], [hamiltonian]");

    for (const auto& e : exclude_entries) {
        for (const auto& part : detail::split(e.value, ';')) {
            if (part.empty()) continue;
            auto sides = detail::split(part, '=');
            if (sides.size() != 2) throw ModelError("exclude predicate must have the form lhs=rhs", e.line);
            Predicate p{detail::parse_at(sides[0], e.line, "exclude"), detail::parse_at(sides[1], e.line, "exclude")};
            check_names(doc.bundle, p.lhs, "exclude", e.line);
            check_names(doc.bundle, p.rhs, "exclude", e.line);
            doc.excluded.push_back(p);
        }
    }
    for (const auto& e : box_entries) {
        if (!doc.bundle.is_coordinate(e.key)) throw ModelError("sampling box names unknown coordinate '" + e.key + "'", e.line);
        auto parts = detail::split(e.value, ',');
        if (parts.size() != 2) throw ModelError("sampling interval must be 'lo, hi'", e.line);
        Interval iv{detail::parse_real(parts[0], e.line), detail::parse_real(parts[1], e.line)};
        if (!(iv.lo < iv.hi)) throw ModelError("degenerate sampling interval for '" + e.key + "'", e.line);
        doc.box[e.key] = iv;
    }

    if (sections_seen.count("connection")) {
        doc.source = ModelDocument::Source::Connection;
        doc.gamma.assign(k, std::vector<Expr>(n));
        for (const auto& e : gamma_entries) {
            std::size_t a = 0, i = 0;
            if (!detail::parse_index_key(e.key, a, i)) throw ModelError("expected Gamma[A,i], found '" + e.key + "'", e.line);
            if (a > k || i > n)
                throw ModelError("dimension mismatch: " + e.key + " outside " + std::to_string(k) + "x" + std::to_string(n),
                                 e.line);
            Expr g = detail::parse_at(e.value, e.line, e.key);
            check_names(doc.bundle, g, e.key, e.line);
            doc.gamma[a - 1][i - 1] = g;
        }
    } else if (sections_seen.count("sode")) {
        doc.source = ModelDocument::Source::Sode;
        if (doc.bundle.kind != BundleKind::Tangent && doc.bundle.kind != BundleKind::Jet)
            throw ModelError("[sode] needs kind tangent or jet");
        doc.forces.assign(k, Expr());
        std::vector<bool> given(k, false);
        for (const auto& e : sode_entries) {
            std::size_t idx = 0;
            if (!detail::numbered_key(e.key, "f", idx)) throw ModelError("expected f1..f" + std::to_string(k) + ", found '" + e.key + "'", e.line);
            if (idx > k) throw ModelError("dimension mismatch: " + e.key + " but only " + std::to_string(k) + " velocities", e.line);
            Expr f = detail::parse_at(e.value, e.line, e.key);
            check_names(doc.bundle, f, e.key, e.line);
            doc.forces[idx - 1] = f;
            given[idx - 1] = true;
        }
        for (std::size_t i = 0; i < k; ++i)
            if (!given[i]) throw ModelError("[sode] missing force f" + std::to_string(i + 1));
    } else {
        doc.source = ModelDocument::Source::Hamiltonian;
        if (doc.bundle.kind != BundleKind::Cotangent) throw ModelError("[hamiltonian] needs kind cotangent");
        std::vector<std::optional<Expr>> ints(n);
        std::vector<std::vector<std::optional<Expr>>> g(n, std::vector<std::optional<Expr>>(n));
        bool have_metric = false;
        for (const auto& e : ham_entries) {
            Expr v = detail::parse_at(e.value, e.line, e.key);
            check_names(doc.bundle, v, e.key, e.line);
            std::size_t idx = 0, gi = 0, gj = 0;
            if (e.key == "H") {
                doc.hamiltonian = v;
            } else if (detail::numbered_key(e.key, "f", idx)) {
                if (idx > n) throw ModelError("dimension mismatch: " + e.key + " but only " + std::to_string(n) + " degrees of freedom", e.line);
                ints[idx - 1] = v;
            } else if (detail::parse_index_key(e.key, gi, gj, "g")) {
                if (gi > n || gj > n) throw ModelError("dimension mismatch: " + e.key + " outside " + std::to_string(n) + "x" + std::to_string(n), e.line);
                for (const auto& name : free_variables(v))
                    if (!doc.bundle.is_base(name)) throw ModelError("metric entries may only use base coordinates", e.line);
                g[gi - 1][gj - 1] = v;
                have_metric = true;
            } else {
                throw ModelError("expected H, g[i,j] or f1..f" + std::to_string(n) + ", found '" + e.key + "'", e.line);
            }
        }
        if (have_metric) {
            if (doc.hamiltonian) throw ModelError("[hamiltonian] takes either H or g[i,j], not both");
            doc.metric.assign(n, std::vector<Expr>(n));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    if (!g[i][j]) g[i][j] = g[j][i];  // one triangle suffices
                    if (g[i][j]) doc.metric[i][j] = *g[i][j];
                }
        } else if (!doc.hamiltonian) {
            throw ModelError("[hamiltonian] needs H or g[i,j]");
        }
        std::size_t given = static_cast<std::size_t>(std::count_if(ints.begin(), ints.end(), [](const auto& o) { return o.has_value(); }));
        if (given == 0 && n == 1) {
            if (doc.hamiltonian) doc.integrals = {*doc.hamiltonian};
        } else if (given == n) {
            for (auto& o : ints) doc.integrals.push_back(*o);
        } else if (given != 0) {
            throw ModelError("[hamiltonian] needs all of f1..f" + std::to_string(n) + " or none");
        }
    }
    return doc;
}

/// Text that load_model reads back to an equivalent document.
inline std::string serialize_model(const ModelDocument& doc) {
    std::ostringstream out;
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
        return s;
    };
    out << "[bundle]\n";
    out << "kind = " << kind_name(doc.bundle.kind) << "\n";
    out << "base = " << join(doc.bundle.base) << "\n";
    out << "fiber = " << join(doc.bundle.fiber) << "\n";
    if (!doc.excluded.empty()) {
        std::string s;
        for (std::size_t i = 0; i < doc.excluded.size(); ++i) s += (i ? "; " : "") + doc.excluded[i].text();
        out << "exclude = \"" << s << "\"\n";
    }
    if (doc.homogeneous) out << "homogeneous = true\n";
    switch (doc.source) {
        case ModelDocument::Source::Connection:
            out << "\n[connection]\n";
            for (std::size_t a = 0; a < doc.gamma.size(); ++a)
                for (std::size_t i = 0; i < doc.gamma[a].size(); ++i)
                    out << "Gamma[" << a + 1 << "," << i + 1 << "] = " << to_string(doc.gamma[a][i]) << "\n";
            break;
        case ModelDocument::Source::Sode:
            out << "\n[sode]\n";
            for (std::size_t i = 0; i < doc.forces.size(); ++i) out << "f" << i + 1 << " = " << to_string(doc.forces[i]) << "\n";
            break;
        case ModelDocument::Source::Hamiltonian:
            out << "\n[hamiltonian]\n";
            if (doc.hamiltonian) out << "H = " << to_string(*doc.hamiltonian) << "\n";
            for (std::size_t i = 0; i < doc.metric.size(); ++i)
                for (std::size_t j = i; j < doc.metric.size(); ++j)
                    out << "g[" << i + 1 << "," << j + 1 << "] = " << to_string(doc.metric[i][j]) << "\n";
            for (std::size_t i = 0; i < doc.integrals.size(); ++i)
                out << "f" << i + 1 << " = " << to_string(doc.integrals[i]) << "\n";
            break;
    }
    if (!doc.box.empty()) {
        out << "\n[sampling]\n";
        for (const auto& [name, iv] : doc.box)
            out << name << " = " << detail::format_number(iv.lo) << ", " << detail::format_number(iv.hi) << "\n";
    }
    return out.str();
}

}  // namespace linconn
