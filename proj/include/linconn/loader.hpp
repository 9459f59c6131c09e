#pragma once

// Turns a parsed model file into the objects the operations work on.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "linconn/cotangent.hpp"
#include "linconn/sode.hpp"

namespace linconn {

struct LoadedModel {
    ModelDocument doc;
    std::optional<ConnectionModel> connection;  // absent for a Hamiltonian without first integrals
    std::optional<SodeModel> sode;
    std::optional<HamiltonianModel> hamiltonian;
    std::optional<IntegrableConnection> integrable;
};

inline LoadedModel resolve_model(const ModelDocument& doc) {
    LoadedModel lm;
    lm.doc = doc;
    switch (doc.source) {
        case ModelDocument::Source::Connection: {
            ConnectionModel m;
            m.bundle = doc.bundle;
            m.gamma = doc.gamma;
            m.excluded = doc.excluded;
            m.homogeneous = doc.homogeneous;
            m.box = doc.box;
            validate_connection(m);
            lm.connection = m;
            break;
        }
        case ModelDocument::Source::Sode: {
            SodeModel s;
            s.autonomous = doc.bundle.kind == BundleKind::Tangent;
            s.position = doc.bundle.base;
            if (!s.autonomous) {
                s.time = s.position.front();
                s.position.erase(s.position.begin());
            }
            s.velocity = doc.bundle.fiber;
            s.forces = doc.forces;
            s.excluded = doc.excluded;
            s.box = doc.box;
            s.homogeneous = doc.homogeneous;
            validate_sode(s);
            lm.connection = s.autonomous ? sode_connection(s) : nonautonomous_connection(s);
            lm.sode = s;
            break;
        }
        case ModelDocument::Source::Hamiltonian: {
            HamiltonianModel h;
            if (!doc.metric.empty()) {
                h = geodesic_model(doc.bundle.base, doc.bundle.fiber, doc.metric);
            } else {
                h.bundle = doc.bundle;
                h.H = *doc.hamiltonian;
            }
            h.first_integrals = doc.integrals;
            if (h.first_integrals.empty() && h.bundle.n() == 1) h.first_integrals = {h.H};
            h.excluded = doc.excluded;
            h.box = doc.box;
            validate_hamiltonian(h);
            if (!h.first_integrals.empty()) {
                lm.integrable = integrable_connection(h);
                lm.connection = lm.integrable->model;
            }
            lm.hamiltonian = h;
            break;
        }
    }
    return lm;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot read model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// 64-bit FNV-1a, hex.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return s;
}

}  // namespace linconn
