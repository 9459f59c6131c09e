#pragma once

// Immutable symbolic expressions over named real coordinates: parsing,
// printing, exact differentiation, conservative simplification, substitution
// and checked numeric evaluation.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

namespace linconn {

class Expr;

/// Raised by parse() on malformed text. offset() is a byte offset into the input.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, const std::string& message)
        : std::runtime_error("syntax error at offset " + std::to_string(offset) + ": " + message),
          offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Raised by eval(). subexpression() is the printed form of the failing node
/// (or the variable name for UnboundVariable).
class EvalError : public std::runtime_error {
public:
    enum class Kind { UnboundVariable, DivisionByZero, Domain, NonFinite };

    EvalError(Kind kind, std::string subexpr, const std::string& message)
        : std::runtime_error(message), kind_(kind), subexpr_(std::move(subexpr)) {}
    Kind kind() const noexcept { return kind_; }
    const std::string& subexpression() const noexcept { return subexpr_; }

private:
    Kind kind_;
    std::string subexpr_;
};

enum class Func { Sin, Cos, Tan, Exp, Ln, Sqrt };

inline const char* func_name(Func f) {
    switch (f) {
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Tan: return "tan";
        case Func::Exp: return "exp";
        case Func::Ln: return "ln";
        case Func::Sqrt: return "sqrt";
    }
    return "?";
}

inline bool func_from_name(std::string_view name, Func& out) {
    static const std::pair<const char*, Func> table[] = {
        {"sin", Func::Sin}, {"cos", Func::Cos}, {"tan", Func::Tan},
        {"exp", Func::Exp}, {"ln", Func::Ln},   {"sqrt", Func::Sqrt}};
    for (const auto& [n, f] : table) {
        if (name == n) {
            out = f;
            return true;
        }
    }
    return false;
}

inline bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    auto digit = [](char c) { return c >= '0' && c <= '9'; };
    if (!alpha(s[0])) return false;
    for (char c : s)
        if (!alpha(c) && !digit(c)) return false;
    return true;
}

namespace detail {
struct Node;
}

class Expr {
public:
    enum class Kind { Constant, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

    /// The zero constant.
    Expr();

    static Expr constant(double value);
    static Expr variable(std::string name);

    // Raw constructors: build exactly the requested node, no rewriting.
    static Expr raw_unary(Kind kind, Expr arg);
    static Expr raw_binary(Kind kind, Expr lhs, Expr rhs);
    static Expr raw_call(Func f, Expr arg);

    Kind kind() const;
    double value() const;              // Constant only
    const std::string& name() const;   // Variable only
    Func func() const;                 // Call only
    const Expr& lhs() const;           // binary nodes; also the operand of Negate/Call
    const Expr& rhs() const;           // binary nodes
    const Expr& arg() const { return lhs(); }

    bool is_constant() const { return kind() == Kind::Constant; }
    bool is_constant(double v) const { return is_constant() && value() == v; }
    bool is_zero() const { return is_constant(0.0); }
    bool is_one() const { return is_constant(1.0); }

    const detail::Node* id() const { return node_.get(); }

private:
    friend struct detail::Node;
    explicit Expr(std::nullptr_t) {}  // empty child slot of a node
    explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const detail::Node> node_;
};

namespace detail {
struct Node {
    Expr::Kind kind = Expr::Kind::Constant;
    double value = 0.0;
    std::string name;
    Func func = Func::Sin;
    Expr a{nullptr}, b{nullptr};
};

inline const std::shared_ptr<const Node>& zero_node() {
    static const std::shared_ptr<const Node> z = std::make_shared<const Node>();
    return z;
}
}  // namespace detail

inline Expr::Expr() : node_(detail::zero_node()) {}

inline Expr Expr::constant(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("expression constants must be finite");
    auto n = std::make_shared<detail::Node>();
    n->kind = Kind::Constant;
    n->value = value == 0.0 ? 0.0 : value;  // drop negative zero
    return Expr(std::move(n));
}

inline Expr Expr::variable(std::string name) {
    if (!is_identifier(name)) throw std::invalid_argument("invalid variable name '" + name + "'");
    auto n = std::make_shared<detail::Node>();
    n->kind = Kind::Variable;
    n->name = std::move(name);
    return Expr(std::move(n));
}

inline Expr Expr::raw_unary(Kind kind, Expr arg) {
    if (kind != Kind::Negate) throw std::invalid_argument("raw_unary expects Negate");
    auto n = std::make_shared<detail::Node>();
    n->kind = kind;
    n->a = std::move(arg);
    return Expr(std::move(n));
}

inline Expr Expr::raw_binary(Kind kind, Expr lhs, Expr rhs) {
    switch (kind) {
        case Kind::Add: case Kind::Sub: case Kind::Mul: case Kind::Div: case Kind::Pow: break;
        default: throw std::invalid_argument("raw_binary expects a binary operator");
    }
    auto n = std::make_shared<detail::Node>();
    n->kind = kind;
    n->a = std::move(lhs);
    n->b = std::move(rhs);
    return Expr(std::move(n));
}

inline Expr Expr::raw_call(Func f, Expr arg) {
    auto n = std::make_shared<detail::Node>();
    n->kind = Kind::Call;
    n->func = f;
    n->a = std::move(arg);
    return Expr(std::move(n));
}

inline Expr::Kind Expr::kind() const { return node_->kind; }
inline double Expr::value() const { return node_->value; }
inline const std::string& Expr::name() const { return node_->name; }
inline Func Expr::func() const { return node_->func; }
inline const Expr& Expr::lhs() const { return node_->a; }
inline const Expr& Expr::rhs() const { return node_->b; }

/// Structural equality (same tree shape, same constants and names).
inline bool equal(const Expr& x, const Expr& y) {
    if (x.id() == y.id()) return true;
    if (x.kind() != y.kind()) return false;
    switch (x.kind()) {
        case Expr::Kind::Constant: return x.value() == y.value();
        case Expr::Kind::Variable: return x.name() == y.name();
        case Expr::Kind::Negate: return equal(x.arg(), y.arg());
        case Expr::Kind::Call: return x.func() == y.func() && equal(x.arg(), y.arg());
        default: return equal(x.lhs(), y.lhs()) && equal(x.rhs(), y.rhs());
    }
}

// ---------------------------------------------------------------------------
// Simplifying constructors. Rules: constant folding (only when the result is
// finite), 0/1 absorption, e^1, 0^n (n>0), double negation, constant
// coefficients pulled to the front of products, like terms a*e +- b*e merged,
// e*e -> e^2, e^p*e^q -> e^(p+q) for constant p, q, (a/b)*b -> a, e/e -> 1.

namespace detail {

inline bool fold_ok(double v) { return std::isfinite(v); }

inline Expr make_neg(const Expr& a);
inline Expr make_mul(const Expr& a, const Expr& b);
inline Expr make_pow(const Expr& a, const Expr& b);

// e = c * rest with c a constant (c = 1 when there is no leading constant).
inline std::pair<double, Expr> split_coefficient(const Expr& e) {
    if (e.kind() == Expr::Kind::Mul && e.lhs().is_constant()) return {e.lhs().value(), e.rhs()};
    if (e.kind() == Expr::Kind::Negate) {
        auto [c, rest] = split_coefficient(e.arg());
        return {-c, rest};
    }
    return {1.0, e};
}

// e = base ^ p with p a constant (p = 1 when e is not such a power).
inline std::pair<Expr, double> split_power(const Expr& e) {
    if (e.kind() == Expr::Kind::Pow && e.rhs().is_constant()) return {e.lhs(), e.rhs().value()};
    return {e, 1.0};
}

inline bool merge_like_terms(const Expr& a, const Expr& b, double sign, Expr& out) {
    if (a.is_constant() || b.is_constant()) return false;
    auto [ca, ra] = split_coefficient(a);
    auto [cb, rb] = split_coefficient(b);
    if (!equal(ra, rb) || !fold_ok(ca + sign * cb)) return false;
    out = make_mul(Expr::constant(ca + sign * cb), ra);
    return true;
}

struct SignedTerm {
    double coef;
    Expr rest;
    bool constant = false;
};

// Flatten nested sums, differences and negations into c * rest terms.
inline void collect_terms(const Expr& e, double sign, std::vector<SignedTerm>& out) {
    switch (e.kind()) {
        case Expr::Kind::Add:
            collect_terms(e.lhs(), sign, out);
            collect_terms(e.rhs(), sign, out);
            return;
        case Expr::Kind::Sub:
            collect_terms(e.lhs(), sign, out);
            collect_terms(e.rhs(), -sign, out);
            return;
        case Expr::Kind::Negate: collect_terms(e.arg(), -sign, out); return;
        case Expr::Kind::Constant: out.push_back({sign * e.value(), Expr(), true}); return;
        default: {
            auto [c, rest] = split_coefficient(e);
            out.push_back({sign * c, rest});
        }
    }
}

// Merge like terms across a + sign*b. Returns false (leaving out untouched)
// when nothing merges, so that unrelated sums keep their written shape.
inline bool merge_sum(const Expr& a, const Expr& b, double sign, Expr& out) {
    constexpr std::size_t kMaxTerms = 256;
    std::vector<SignedTerm> terms;
    collect_terms(a, 1.0, terms);
    collect_terms(b, sign, terms);
    if (terms.size() > kMaxTerms) return false;
    std::vector<SignedTerm> merged;
    bool changed = false;
    for (const auto& t : terms) {
        auto it = std::find_if(merged.begin(), merged.end(), [&](const SignedTerm& m) {
            return t.constant ? m.constant : !m.constant && equal(m.rest, t.rest);
        });
        if (it == merged.end()) {
            merged.push_back(t);
        } else {
            if (!fold_ok(it->coef + t.coef)) return false;
            it->coef += t.coef;
            changed = true;
        }
    }
    if (!changed) return false;
    Expr r;
    bool first = true;
    for (const auto& t : merged) {
        if (t.coef == 0.0) continue;
        Expr mag = t.constant ? Expr::constant(std::fabs(t.coef))
                                          : make_mul(Expr::constant(std::fabs(t.coef)), t.rest);
        if (first) {
            r = t.coef < 0 ? make_neg(mag) : mag;
            first = false;
        } else {
            r = Expr::raw_binary(t.coef < 0 ? Expr::Kind::Sub : Expr::Kind::Add, r, mag);
        }
    }
    out = r;
    return true;
}

inline Expr make_add(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant() && fold_ok(a.value() + b.value()))
        return Expr::constant(a.value() + b.value());
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (b.kind() == Expr::Kind::Negate) {
        if (equal(a, b.arg())) return Expr();
        return Expr::raw_binary(Expr::Kind::Sub, a, b.arg());
    }
    if (Expr merged; merge_like_terms(a, b, 1.0, merged)) return merged;
    if (Expr merged; merge_sum(a, b, 1.0, merged)) return merged;
    if (b.is_constant() && b.value() < 0) return Expr::raw_binary(Expr::Kind::Sub, a, Expr::constant(-b.value()));
    return Expr::raw_binary(Expr::Kind::Add, a, b);
}

inline Expr make_sub(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant() && fold_ok(a.value() - b.value()))
        return Expr::constant(a.value() - b.value());
    if (b.is_zero()) return a;
    if (a.is_zero()) return make_neg(b);
    if (equal(a, b)) return Expr();
    if (b.kind() == Expr::Kind::Negate) return make_add(a, b.arg());
    if (Expr merged; merge_like_terms(a, b, -1.0, merged)) return merged;
    if (Expr merged; merge_sum(a, b, -1.0, merged)) return merged;
    if (b.is_constant() && b.value() < 0) return Expr::raw_binary(Expr::Kind::Add, a, Expr::constant(-b.value()));
    return Expr::raw_binary(Expr::Kind::Sub, a, b);
}

inline Expr make_neg(const Expr& a) {
    if (a.is_constant()) return Expr::constant(-a.value());
    if (a.kind() == Expr::Kind::Negate) return a.arg();
    if (a.kind() == Expr::Kind::Sub) return Expr::raw_binary(Expr::Kind::Sub, a.rhs(), a.lhs());
    if (a.kind() == Expr::Kind::Mul && a.lhs().is_constant()) return make_mul(Expr::constant(-a.lhs().value()), a.rhs());
    return Expr::raw_unary(Expr::Kind::Negate, a);
}

inline Expr make_mul(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant() && fold_ok(a.value() * b.value()))
        return Expr::constant(a.value() * b.value());
    if (a.is_zero() || b.is_zero()) return Expr();
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    if (a.is_constant(-1.0)) return make_neg(b);
    if (b.is_constant(-1.0)) return make_neg(a);
    // keep constants on the left
    if (b.is_constant() && !a.is_constant()) return make_mul(b, a);
    if (a.kind() == Expr::Kind::Negate && b.kind() == Expr::Kind::Negate) return make_mul(a.arg(), b.arg());
    if (a.kind() == Expr::Kind::Negate) return make_neg(make_mul(a.arg(), b));
    if (b.kind() == Expr::Kind::Negate) return make_neg(make_mul(a, b.arg()));
    if (a.is_constant() && b.kind() == Expr::Kind::Mul && b.lhs().is_constant() &&
        fold_ok(a.value() * b.lhs().value()))
        return make_mul(Expr::constant(a.value() * b.lhs().value()), b.rhs());
    if (a.kind() == Expr::Kind::Div && equal(a.rhs(), b)) return a.lhs();
    if (b.kind() == Expr::Kind::Div && equal(b.rhs(), a)) return b.lhs();
    if (!a.is_constant()) {
        if (a.kind() == Expr::Kind::Mul && a.lhs().is_constant()) return make_mul(a.lhs(), make_mul(a.rhs(), b));
        if (b.kind() == Expr::Kind::Mul && b.lhs().is_constant()) return make_mul(b.lhs(), make_mul(a, b.rhs()));
        auto [ba, pa] = split_power(a);
        auto [bb, pb] = split_power(b);
        if (!ba.is_constant() && equal(ba, bb) && fold_ok(pa + pb)) return make_pow(ba, Expr::constant(pa + pb));
    }
    return Expr::raw_binary(Expr::Kind::Mul, a, b);
}

inline Expr make_div(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant() && !b.is_zero() && fold_ok(a.value() / b.value()))
        return Expr::constant(a.value() / b.value());
    if (a.is_zero() && !b.is_zero()) return Expr();
    if (b.is_one()) return a;
    if (b.is_constant(-1.0)) return make_neg(a);
    if (a.kind() == Expr::Kind::Negate) return make_neg(make_div(a.arg(), b));
    if (b.is_constant() && !b.is_zero() && a.kind() == Expr::Kind::Mul && a.lhs().is_constant() &&
        fold_ok(a.lhs().value() / b.value()))
        return make_mul(Expr::constant(a.lhs().value() / b.value()), a.rhs());
    if (!b.is_zero() && equal(a, b)) return Expr::constant(1.0);
    return Expr::raw_binary(Expr::Kind::Div, a, b);
}

inline Expr make_pow(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) {
        double base = a.value(), ex = b.value();
        bool valid = !(base < 0 && std::floor(ex) != ex) && !(base == 0 && ex < 0);
        double v = std::pow(base, ex);
        if (valid && fold_ok(v)) return Expr::constant(v);
    }
    if (b.is_zero()) return Expr::constant(1.0);
    if (b.is_one()) return a;
    if (a.is_zero() && b.is_constant() && b.value() > 0) return Expr();
    if (a.is_one()) return Expr::constant(1.0);
    return Expr::raw_binary(Expr::Kind::Pow, a, b);
}

inline bool eval_func(Func f, double x, double& out) {
    switch (f) {
        case Func::Sin: out = std::sin(x); return true;
        case Func::Cos: out = std::cos(x); return true;
        case Func::Tan: out = std::tan(x); return std::cos(x) != 0.0;
        case Func::Exp: out = std::exp(x); return true;
        case Func::Ln: if (x <= 0) return false; out = std::log(x); return true;
        case Func::Sqrt: if (x < 0) return false; out = std::sqrt(x); return true;
    }
    return false;
}

inline Expr make_call(Func f, const Expr& a) {
    if (a.is_constant()) {
        double v = 0;
        if (eval_func(f, a.value(), v) && fold_ok(v)) return Expr::constant(v);
    }
    return Expr::raw_call(f, a);
}

}  // namespace detail

inline Expr operator+(const Expr& a, const Expr& b) { return detail::make_add(a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return detail::make_sub(a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return detail::make_mul(a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return detail::make_div(a, b); }
inline Expr operator-(const Expr& a) { return detail::make_neg(a); }
inline Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
inline Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }
inline Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
inline Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
inline Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
inline Expr operator/(const Expr& a, double b) { return a / Expr::constant(b); }
inline Expr operator/(double a, const Expr& b) { return Expr::constant(a) / b; }
inline Expr pow(const Expr& a, const Expr& b) { return detail::make_pow(a, b); }
inline Expr pow(const Expr& a, double b) { return detail::make_pow(a, Expr::constant(b)); }
inline Expr sin(const Expr& a) { return detail::make_call(Func::Sin, a); }
inline Expr cos(const Expr& a) { return detail::make_call(Func::Cos, a); }
inline Expr tan(const Expr& a) { return detail::make_call(Func::Tan, a); }
inline Expr exp(const Expr& a) { return detail::make_call(Func::Exp, a); }
inline Expr ln(const Expr& a) { return detail::make_call(Func::Ln, a); }
inline Expr sqrt(const Expr& a) { return detail::make_call(Func::Sqrt, a); }

inline Expr operator""_c(long double v) { return Expr::constant(static_cast<double>(v)); }

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Precedence levels: 1 additive, 2 multiplicative, 3 unary minus, 4 power, 5 atom.
inline int precedence(const Expr& e) {
    switch (e.kind()) {
        case Expr::Kind::Add: case Expr::Kind::Sub: return 1;
        case Expr::Kind::Mul: case Expr::Kind::Div: return 2;
        case Expr::Kind::Negate: return 3;
        case Expr::Kind::Pow: return 4;
        case Expr::Kind::Constant: return e.value() < 0 ? 3 : 5;
        default: return 5;
    }
}

inline void print_into(const Expr& e, std::string& out);

inline void print_child(const Expr& e, int min_prec, std::string& out) {
    if (precedence(e) < min_prec) {
        out += '(';
        print_into(e, out);
        out += ')';
    } else {
        print_into(e, out);
    }
}

inline void print_into(const Expr& e, std::string& out) {
    switch (e.kind()) {
        case Expr::Kind::Constant: out += format_number(e.value()); return;
        case Expr::Kind::Variable: out += e.name(); return;
        case Expr::Kind::Negate:
            out += '-';
            print_child(e.arg(), 3, out);
            return;
        case Expr::Kind::Call:
            out += func_name(e.func());
            out += '(';
            print_into(e.arg(), out);
            out += ')';
            return;
        case Expr::Kind::Add:
            print_child(e.lhs(), 1, out);
            out += '+';
            print_child(e.rhs(), 1, out);
            return;
        case Expr::Kind::Sub:
            print_child(e.lhs(), 1, out);
            out += '-';
            print_child(e.rhs(), 2, out);
            return;
        case Expr::Kind::Mul:
            print_child(e.lhs(), 2, out);
            out += '*';
            print_child(e.rhs(), 3, out);
            return;
        case Expr::Kind::Div:
            print_child(e.lhs(), 2, out);
            out += '/';
            print_child(e.rhs(), 4, out);
            return;
        case Expr::Kind::Pow:
            print_child(e.lhs(), 5, out);
            out += '^';
            print_child(e.rhs(), 3, out);
            return;
    }
}

}  // namespace detail

/// Parseable text form; parse(to_string(e)) evaluates identically to e.
inline std::string to_string(const Expr& e) {
    std::string out;
    detail::print_into(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Parsing (recursive descent)
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | identifier | identifier '(' expr ')' | '(' expr ')'

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    Expr parse_all() {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError(pos_, "expected expression, found end of input");
        Expr e = parse_expr();
        skip_ws();
        if (pos_ < s_.size()) throw ParseError(pos_, std::string("expected operator or end of input, found '") + s_[pos_] + "'");
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr parse_expr() {
        Expr lhs = parse_term();
        for (;;) {
            if (accept('+')) lhs = Expr::raw_binary(Expr::Kind::Add, lhs, parse_term());
            else if (accept('-')) lhs = Expr::raw_binary(Expr::Kind::Sub, lhs, parse_term());
            else return lhs;
        }
    }

    Expr parse_term() {
        Expr lhs = parse_unary();
        for (;;) {
            if (accept('*')) lhs = Expr::raw_binary(Expr::Kind::Mul, lhs, parse_unary());
            else if (accept('/')) lhs = Expr::raw_binary(Expr::Kind::Div, lhs, parse_unary());
            else return lhs;
        }
    }

    Expr parse_unary() {
        if (accept('-')) {
            Expr a = parse_unary();
            return Expr::raw_unary(Expr::Kind::Negate, a);
        }
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (accept('^')) return Expr::raw_binary(Expr::Kind::Pow, base, parse_unary());
        return base;
    }

    Expr parse_primary() {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError(pos_, "expected number, identifier or '(', found end of input");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr inner = parse_expr();
            if (!accept(')')) throw ParseError(pos_, "expected ')'");
            return inner;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
            std::size_t start = pos_;
            while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
            std::string name(s_.substr(start, pos_ - start));
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == '(') {
                Func f;
                if (!func_from_name(name, f)) throw ParseError(start, "unknown function '" + name + "'");
                ++pos_;
                Expr a = parse_expr();
                if (!accept(')')) throw ParseError(pos_, "expected ')'");
                return Expr::raw_call(f, a);
            }
            return Expr::variable(name);
        }
        throw ParseError(pos_, std::string("expected number, identifier or '(', found '") + c + "'");
    }

    Expr parse_number() {
        std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') { ++pos_; ++n; }
            return n;
        };
        std::size_t nd = digits();
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            nd += digits();
        }
        if (nd == 0) throw ParseError(start, "malformed number");
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;  // not an exponent; leave 'e' for the caller
        }
        double v = 0;
        auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
        if (res.ec != std::errc() || !std::isfinite(v)) throw ParseError(start, "number out of range");
        return Expr::constant(v);
    }

    static bool is_ident_char(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || (c >= '0' && c <= '9');
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parse text into a literal tree (no rewriting).
inline Expr parse(std::string_view text) { return detail::Parser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Structural queries

inline void collect_variables(const Expr& e, std::set<std::string>& out) {
    switch (e.kind()) {
        case Expr::Kind::Constant: return;
        case Expr::Kind::Variable: out.insert(e.name()); return;
        case Expr::Kind::Negate: case Expr::Kind::Call: collect_variables(e.arg(), out); return;
        default:
            collect_variables(e.lhs(), out);
            collect_variables(e.rhs(), out);
    }
}

inline std::set<std::string> free_variables(const Expr& e) {
    std::set<std::string> out;
    collect_variables(e, out);
    return out;
}

inline bool depends_on(const Expr& e, const std::string& var) {
    switch (e.kind()) {
        case Expr::Kind::Constant: return false;
        case Expr::Kind::Variable: return e.name() == var;
        case Expr::Kind::Negate: case Expr::Kind::Call: return depends_on(e.arg(), var);
        default: return depends_on(e.lhs(), var) || depends_on(e.rhs(), var);
    }
}

inline std::size_t node_count(const Expr& e) {
    switch (e.kind()) {
        case Expr::Kind::Constant: case Expr::Kind::Variable: return 1;
        case Expr::Kind::Negate: case Expr::Kind::Call: return 1 + node_count(e.arg());
        default: return 1 + node_count(e.lhs()) + node_count(e.rhs());
    }
}

// ---------------------------------------------------------------------------
// simplify / substitute / diff

namespace detail {

inline Expr rebuild(const Expr& e, std::unordered_map<const Node*, Expr>& memo) {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    Expr r;
    switch (e.kind()) {
        case Expr::Kind::Constant: case Expr::Kind::Variable: r = e; break;
        case Expr::Kind::Negate: r = make_neg(rebuild(e.arg(), memo)); break;
        case Expr::Kind::Call: r = make_call(e.func(), rebuild(e.arg(), memo)); break;
        case Expr::Kind::Add: r = make_add(rebuild(e.lhs(), memo), rebuild(e.rhs(), memo)); break;
        case Expr::Kind::Sub: r = make_sub(rebuild(e.lhs(), memo), rebuild(e.rhs(), memo)); break;
        case Expr::Kind::Mul: r = make_mul(rebuild(e.lhs(), memo), rebuild(e.rhs(), memo)); break;
        case Expr::Kind::Div: r = make_div(rebuild(e.lhs(), memo), rebuild(e.rhs(), memo)); break;
        case Expr::Kind::Pow: r = make_pow(rebuild(e.lhs(), memo), rebuild(e.rhs(), memo)); break;
    }
    memo.emplace(e.id(), r);
    return r;
}

}  // namespace detail

/// Constant folding and identity rules, bottom-up. Evaluation-equivalent to
/// the input wherever the input is defined.
inline Expr simplify(const Expr& e) {
    std::unordered_map<const detail::Node*, Expr> memo;
    return detail::rebuild(e, memo);
}

/// Simultaneous substitution of variables; inserted trees are not revisited.
inline Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings) {
    if (bindings.empty()) return e;
    switch (e.kind()) {
        case Expr::Kind::Constant: return e;
        case Expr::Kind::Variable: {
            auto it = bindings.find(e.name());
            return it == bindings.end() ? e : it->second;
        }
        case Expr::Kind::Negate: return Expr::raw_unary(e.kind(), substitute(e.arg(), bindings));
        case Expr::Kind::Call: return Expr::raw_call(e.func(), substitute(e.arg(), bindings));
        default:
            return Expr::raw_binary(e.kind(), substitute(e.lhs(), bindings), substitute(e.rhs(), bindings));
    }
}

namespace detail {

class Differentiator {
public:
    explicit Differentiator(const std::string& var) : var_(var) {}

    Expr d(const Expr& e) {
        if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
        Expr r = compute(e);
        memo_.emplace(e.id(), r);
        return r;
    }

private:
    Expr compute(const Expr& e) {
        using K = Expr::Kind;
        switch (e.kind()) {
            case K::Constant: return Expr();
            case K::Variable: return e.name() == var_ ? Expr::constant(1.0) : Expr();
            case K::Negate: return -d(e.arg());
            case K::Add: return d(e.lhs()) + d(e.rhs());
            case K::Sub: return d(e.lhs()) - d(e.rhs());
            case K::Mul: {
                const Expr &f = e.lhs(), &g = e.rhs();
                return d(f) * g + f * d(g);
            }
            case K::Div: {
                const Expr &f = e.lhs(), &g = e.rhs();
                Expr df = d(f), dg = d(g);
                if (dg.is_zero()) return df / g;
                return (df * g - f * dg) / pow(g, 2.0);
            }
            case K::Pow: {
                const Expr &f = e.lhs(), &g = e.rhs();
                Expr df = d(f);
                if (!depends_on(g, var_)) {
                    if (df.is_zero()) return Expr();
                    // g * f^(g-1) * f'
                    return g * pow(f, g - 1.0) * df;
                }
                Expr dg = d(g);
                // f^g * (g' ln f + g f'/f)
                return pow(f, g) * (dg * ln(f) + g * df / f);
            }
            case K::Call: {
                const Expr& u = e.arg();
                Expr du = d(u);
                if (du.is_zero()) return Expr();
                switch (e.func()) {
                    case Func::Sin: return cos(u) * du;
                    case Func::Cos: return -(sin(u) * du);
                    case Func::Tan: return du / pow(cos(u), 2.0);
                    case Func::Exp: return exp(u) * du;
                    case Func::Ln: return du / u;
                    case Func::Sqrt: return du / (2.0 * sqrt(u));
                }
                return Expr();
            }
        }
        return Expr();
    }

    const std::string& var_;
    std::unordered_map<const Node*, Expr> memo_;
};

}  // namespace detail

/// Exact partial derivative with respect to `var`, lightly simplified.
inline Expr diff(const Expr& e, const std::string& var) {
    if (!is_identifier(var)) throw std::invalid_argument("invalid variable name '" + var + "'");
    detail::Differentiator d(var);
    return d.d(e);
}

// ---------------------------------------------------------------------------
// Evaluation

/// Variable bindings for eval().
class Env {
public:
    Env() = default;
    Env(std::initializer_list<std::pair<const std::string, double>> init) : values_(init) {}

    void set(const std::string& name, double value) { values_[name] = value; }
    bool contains(const std::string& name) const { return values_.count(name) != 0; }
    const double* find(const std::string& name) const {
        auto it = values_.find(name);
        return it == values_.end() ? nullptr : &it->second;
    }
    double at(const std::string& name) const {
        auto p = find(name);
        if (!p) throw EvalError(EvalError::Kind::UnboundVariable, name, "unbound variable '" + name + "'");
        return *p;
    }
    const std::unordered_map<std::string, double>& values() const { return values_; }

private:
    std::unordered_map<std::string, double> values_;
};

namespace detail {

inline double eval_node(const Expr& e, const Env& env) {
    using K = Expr::Kind;
    auto fail = [&](EvalError::Kind kind, const std::string& what) -> double {
        std::string s = to_string(e);
        throw EvalError(kind, s, what + " in '" + s + "'");
    };
    double r = 0;
    switch (e.kind()) {
        case K::Constant: return e.value();
        case K::Variable: return env.at(e.name());
        case K::Negate: return -eval_node(e.arg(), env);
        case K::Add: r = eval_node(e.lhs(), env) + eval_node(e.rhs(), env); break;
        case K::Sub: r = eval_node(e.lhs(), env) - eval_node(e.rhs(), env); break;
        case K::Mul: r = eval_node(e.lhs(), env) * eval_node(e.rhs(), env); break;
        case K::Div: {
            double num = eval_node(e.lhs(), env);
            double den = eval_node(e.rhs(), env);
            if (den == 0.0) return fail(EvalError::Kind::DivisionByZero, "division by zero");
            r = num / den;
            break;
        }
        case K::Pow: {
            double base = eval_node(e.lhs(), env);
            double ex = eval_node(e.rhs(), env);
            if (base == 0.0 && ex < 0) return fail(EvalError::Kind::DivisionByZero, "zero raised to a negative power");
            if (base < 0.0 && std::floor(ex) != ex)
                return fail(EvalError::Kind::Domain, "negative base with non-integer exponent");
            r = std::pow(base, ex);
            break;
        }
        case K::Call: {
            double x = eval_node(e.arg(), env);
            if (!eval_func(e.func(), x, r)) {
                const char* what = e.func() == Func::Ln ? "logarithm of a non-positive value"
                                   : e.func() == Func::Sqrt ? "square root of a negative value"
                                                             : "function domain violation";
                return fail(EvalError::Kind::Domain, what);
            }
            break;
        }
    }
    if (!std::isfinite(r)) return fail(EvalError::Kind::NonFinite, "non-finite result");
    return r;
}

}  // namespace detail

/// Numeric value of e under env. Throws EvalError on unbound variables and
/// domain violations instead of returning NaN/Inf.
inline double eval(const Expr& e, const Env& env) { return detail::eval_node(e, env); }

}  // namespace linconn
