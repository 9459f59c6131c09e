#pragma once

// JSON form of check reports, tensor tables and the CLI report document.
// Keys keep insertion order; doubles are written with 17 significant digits
// and non-finite values become null, so equal inputs give equal bytes.

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "linconn/tensor.hpp"

namespace linconn {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";

inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json point_json(const BundleModel& b, const PointE& p) {
    Json j = Json::object();
    for (std::size_t i = 0; i < b.n() && i < p.base.size(); ++i) j[b.base[i]] = json_number(p.base[i]);
    for (std::size_t a = 0; a < b.k() && a < p.fiber.size(); ++a) j[b.fiber[a]] = json_number(p.fiber[a]);
    return j;
}

inline Json report_json(const CheckReport& r, const BundleModel& b) {
    Json j;
    j["name"] = r.name;
    j["passed"] = r.passed;
    if (!r.label.empty()) j["label"] = r.label;
    j["max_residual"] = json_number(r.max_residual);
    j["tolerance"] = json_number(r.tolerance);
    j["samples"] = r.samples;
    j["worst_point"] = r.worst_point ? point_json(b, *r.worst_point) : Json(nullptr);
    Json details = Json::array();
    for (const auto& d : r.details) details.push_back(Json{{"component", d.component}, {"max_residual", json_number(d.max_residual)}});
    j["details"] = details;
    j["notes"] = r.notes;
    Json subs = Json::array();
    for (const auto& s : r.subreports) subs.push_back(report_json(s, b));
    j["subreports"] = subs;
    return j;
}

/// Grid as a flat array of {index, expression[, value]} with 1-based index
/// tuples; slots refer to the {H_i, V_A} frame.
inline Json tensor_json(const TensorField& t, const Env* env = nullptr) {
    Json j;
    j["name"] = t.name();
    Json sig = Json::array();
    for (Slot s : t.signature()) sig.push_back(slot_name(s));
    j["signature"] = sig;
    j["frame"] = "H_i, V_A";
    Json comps = Json::array();
    for (std::size_t f = 0; f < t.size(); ++f) {
        Json c;
        Json idx = Json::array();
        for (auto i : t.index_of(f)) idx.push_back(i + 1);
        c["index"] = idx;
        c["expression"] = to_string(t.flat(f));
        if (env) {
            try {
                c["value"] = json_number(eval(t.flat(f), *env));
            } catch (const EvalError& e) {
                c["value"] = nullptr;
                c["error"] = e.what();
            }
        }
        comps.push_back(c);
    }
    j["components"] = comps;
    return j;
}

struct ReportDocument {
    std::string tool_version;
    std::string model_digest;
    Json command = Json::object();
    Json results = Json::array();
    std::vector<std::string> warnings;
    bool passed = true;
};

inline Json document_json(const ReportDocument& d) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["tool_version"] = d.tool_version;
    j["model_digest"] = d.model_digest;
    j["command"] = d.command;
    j["results"] = d.results;
    j["warnings"] = d.warnings;
    j["status"] = d.passed ? "pass" : "fail";
    return j;
}

namespace detail {

inline void write_json(const Json& j, int indent, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += inner + Json(it.key()).dump() + ": ";
                write_json(it.value(), indent + 1, out);
            }
            out += "\n" + pad + "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                out += inner;
                write_json(j[i], indent + 1, out);
            }
            out += "\n" + pad + "]";
            return;
        }
        case Json::value_t::number_float: {
            double v = j.get<double>();
            if (!std::isfinite(v)) {
                out += "null";
                return;
            }
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out += buf;
            return;
        }
        default: out += j.dump(); return;
    }
}

}  // namespace detail

inline std::string emit_json(const Json& j) {
    std::string out;
    detail::write_json(j, 0, out);
    out += "\n";
    return out;
}

}  // namespace linconn
