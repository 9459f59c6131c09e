#pragma once

// Index-shaped tables of expressions and the sampled check report.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "linconn/expr.hpp"
#include "linconn/model.hpp"

namespace linconn {

enum class Slot { BaseVector, BaseCovector, FiberVector, FiberCovector };

inline const char* slot_name(Slot s) {
    switch (s) {
        case Slot::BaseVector: return "base-vector";
        case Slot::BaseCovector: return "base-covector";
        case Slot::FiberVector: return "fiber-vector";
        case Slot::FiberCovector: return "fiber-covector";
    }
    return "?";
}

inline bool is_base_slot(Slot s) { return s == Slot::BaseVector || s == Slot::BaseCovector; }

/// Row-major grid of expressions; extents follow the slot signature
/// (n for base slots, k for fiber slots).
class TensorField {
public:
    TensorField() = default;
    TensorField(std::string name, std::vector<Slot> signature, std::size_t n, std::size_t k)
        : name_(std::move(name)), signature_(std::move(signature)) {
        std::size_t total = 1;
        for (Slot s : signature_) {
            extents_.push_back(is_base_slot(s) ? n : k);
            total *= extents_.back();
        }
        data_.assign(total, Expr());
    }

    const std::string& name() const { return name_; }
    const std::vector<Slot>& signature() const { return signature_; }
    const std::vector<std::size_t>& extents() const { return extents_; }
    std::size_t rank() const { return signature_.size(); }
    std::size_t size() const { return data_.size(); }

    std::size_t offset(const std::vector<std::size_t>& idx) const {
        if (idx.size() != rank()) throw std::out_of_range("wrong number of indices for " + name_);
        std::size_t off = 0;
        for (std::size_t s = 0; s < rank(); ++s) {
            if (idx[s] >= extents_[s]) throw std::out_of_range("index out of range for " + name_);
            off = off * extents_[s] + idx[s];
        }
        return off;
    }
    std::vector<std::size_t> index_of(std::size_t flat) const {
        std::vector<std::size_t> idx(rank());
        for (std::size_t s = rank(); s-- > 0;) {
            idx[s] = flat % extents_[s];
            flat /= extents_[s];
        }
        return idx;
    }

    Expr& at(const std::vector<std::size_t>& idx) { return data_[offset(idx)]; }
    const Expr& at(const std::vector<std::size_t>& idx) const { return data_[offset(idx)]; }
    Expr& flat(std::size_t i) { return data_[i]; }
    const Expr& flat(std::size_t i) const { return data_[i]; }

    /// 1-based index label such as "[1,2,1]".
    std::string label(std::size_t flat_index) const {
        std::string s = "[";
        auto idx = index_of(flat_index);
        for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? "," : "") + std::to_string(idx[i] + 1);
        return s + "]";
    }

private:
    std::string name_;
    std::vector<Slot> signature_;
    std::vector<std::size_t> extents_;
    std::vector<Expr> data_;
};

inline TensorField simplify(const TensorField& t) {
    TensorField out = t;
    for (std::size_t i = 0; i < out.size(); ++i) out.flat(i) = simplify(t.flat(i));
    return out;
}

inline std::vector<double> evaluate(const TensorField& t, const Env& env) {
    std::vector<double> v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) v[i] = eval(t.flat(i), env);
    return v;
}

/// A component-wise maximum residual.
struct ResidualEntry {
    std::string component;
    double max_residual = 0.0;
};

/// Outcome of a sampled check. passed <=> max_residual <= tolerance and every
/// sub-report passed. `label` carries a classification where one applies.
struct CheckReport {
    std::string name;
    bool passed = true;
    double max_residual = 0.0;
    double tolerance = 0.0;
    std::size_t samples = 0;
    std::optional<PointE> worst_point;
    std::vector<ResidualEntry> details;
    std::vector<CheckReport> subreports;
    std::string label;
    std::vector<std::string> notes;
};

/// Accumulates residuals over samples into a CheckReport.
class ResidualTracker {
public:
    ResidualTracker(std::string name, double tol) {
        report_.name = std::move(name);
        report_.tolerance = tol;
    }

    void record(const std::string& component, double residual, const PointE& at) {
        if (std::isnan(residual)) residual = std::numeric_limits<double>::infinity();
        auto it = std::find_if(report_.details.begin(), report_.details.end(),
                               [&](const ResidualEntry& e) { return e.component == component; });
        if (it == report_.details.end()) {
            report_.details.push_back({component, residual});
        } else {
            it->max_residual = std::max(it->max_residual, residual);
        }
        if (!report_.worst_point || residual > report_.max_residual) {
            report_.max_residual = std::max(report_.max_residual, residual);
            report_.worst_point = at;
        }
    }
    void note(std::string s) {
        if (std::find(report_.notes.begin(), report_.notes.end(), s) == report_.notes.end())
            report_.notes.push_back(std::move(s));
    }
    void set_samples(std::size_t n) { report_.samples = n; }

    CheckReport finish() {
        report_.passed = report_.max_residual <= report_.tolerance;
        return report_;
    }

private:
    CheckReport report_;
};

/// eval, or +inf with a note on the tracker when evaluation fails.
inline double eval_or_inf(const Expr& e, const Env& env, ResidualTracker& tr) {
    try {
        return eval(e, env);
    } catch (const EvalError& err) {
        tr.note(std::string("evaluation failed: ") + err.what());
        return std::numeric_limits<double>::infinity();
    }
}

/// Combine sub-reports: passes iff all pass; max residual is the worst sub residual.
inline CheckReport combine(std::string name, std::vector<CheckReport> subs, double tol) {
    CheckReport r;
    r.name = std::move(name);
    r.tolerance = tol;
    r.passed = true;
    for (const auto& s : subs) {
        r.passed = r.passed && s.passed;
        r.samples = std::max(r.samples, s.samples);
        if (s.max_residual >= r.max_residual) {
            r.max_residual = s.max_residual;
            if (s.worst_point) r.worst_point = s.worst_point;
        }
    }
    r.subreports = std::move(subs);
    return r;
}

/// Evaluate each component of `fields` at every sample; record |value| (the
/// quantity is a residual that should vanish). Evaluation failures record +inf.
inline CheckReport sampled_zero_check(const std::string& name, const BundleModel& bundle,
                                      const std::vector<const TensorField*>& fields, const std::vector<PointE>& samples,
                                      double tol) {
    ResidualTracker tr(name, tol);
    for (const auto& p : samples) {
        Env env = make_env(bundle, p);
        for (const TensorField* f : fields) {
            for (std::size_t i = 0; i < f->size(); ++i) {
                tr.record(f->name() + f->label(i), std::fabs(eval_or_inf(f->flat(i), env, tr)), p);
            }
        }
    }
    tr.set_samples(samples.size());
    return tr.finish();
}

}  // namespace linconn
