#pragma once

// JSON schemas shared by the CLI and the test suite.
//
//   matrix        {"rows": r, "cols": c, "data": [[re, im], ...]}   row-major
//   pure state    {"charges": [...], "sector_dims": [...], "amplitudes": [[re, im], ...]}
//   mixed state   {"charges": [...], "sector_dims": [...], "density": matrix}
//   block state   {"charges": [...], "sector_dims": [...], "blocks": [{"charge": n, "matrix": matrix}, ...]}
//   distribution  {"<charge>": prob, ...}
//   certificate   {"feasible": bool, "weights": {"<shift>": w}, "residual": r}

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "way/circuits.hpp"
#include "way/discrimination.hpp"
#include "way/models.hpp"
#include "way/resource.hpp"

namespace way::io {

using json = nlohmann::json;

/// Rounds to 12 significant digits so reports print identically everywhere.
inline double round12(double x) {
    if (!std::isfinite(x) || x == 0.0) return x == 0.0 ? 0.0 : x;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::stod(buf);
}

inline std::string fmt12(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x == 0.0 ? 0.0 : x);
    return buf;
}

inline json complex_to_json(cplx z, bool rounded) {
    return rounded ? json::array({round12(z.real()), round12(z.imag())}) : json::array({z.real(), z.imag()});
}

inline cplx complex_from_json(const json &j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2) throw Error("expected a complex number as [re, im]");
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline json matrix_to_json(const Matrix &m, bool rounded = true) {
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(complex_to_json(m(i, j), rounded));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from_json(const json &j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto &data = j.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
        throw Error("matrix: data length does not match rows*cols");
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(data.at(k++));
    return m;
}

inline json vector_to_json(const Vector &v, bool rounded = true) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i), rounded));
    return out;
}

inline Vector vector_from_json(const json &j) {
    if (!j.is_array()) throw Error("expected an array of amplitudes");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
    return v;
}

inline json space_to_json(const GradedSpace &s) { return {{"charges", s.charges()}, {"sector_dims", s.sector_dims()}}; }

inline GradedSpace space_from_json(const json &j) {
    return GradedSpace(j.at("charges").get<std::vector<int>>(), j.at("sector_dims").get<std::vector<int>>());
}

inline json state_to_json(const PureState &psi) {
    json j = space_to_json(psi.space);
    j["amplitudes"] = vector_to_json(psi.amplitudes);
    return j;
}

inline PureState state_from_json(const json &j) {
    return PureState(space_from_json(j), vector_from_json(j.at("amplitudes")), 1e-9);
}

/// Density matrix from either a pure-state or a mixed-state document.
inline std::pair<GradedSpace, Matrix> density_from_json(const json &j) {
    if (j.contains("amplitudes")) {
        auto psi = state_from_json(j);
        return {psi.space, psi.density()};
    }
    auto space = space_from_json(j);
    Matrix rho = matrix_from_json(j.at("density"));
    require_density(rho, static_cast<Eigen::Index>(space.total_dim()), "state document");
    return {std::move(space), std::move(rho)};
}

inline json block_state_to_json(const BlockState &s) {
    json j = space_to_json(s.space);
    json blocks = json::array();
    for (std::size_t i = 0; i < s.blocks.size(); ++i)
        blocks.push_back({{"charge", s.space.charges()[i]}, {"matrix", matrix_to_json(s.blocks[i])}});
    j["blocks"] = std::move(blocks);
    return j;
}

inline json distribution_to_json(const ChargeDistribution &d) {
    json j = json::object();
    for (const auto &[n, p] : d.probs()) j[std::to_string(n)] = round12(p);
    return j;
}

inline ChargeDistribution distribution_from_json(const json &j) {
    if (j.contains("amplitudes")) return charge_distribution(state_from_json(j));
    if (!j.is_object() || j.empty()) throw Error("distribution: expected a non-empty {charge: prob} object");
    std::map<int, double> probs;
    for (const auto &[key, val] : j.items()) {
        std::size_t used = 0;
        int n = 0;
        try {
            n = std::stoi(key, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used != key.size() || key.empty()) throw Error("distribution: charge keys must be integers, got '" + key + "'");
        probs[n] = val.get<double>();
    }
    return ChargeDistribution(std::move(probs));
}

inline json certificate_to_json(const ConversionCertificate &c) {
    json w = json::object();
    for (const auto &[k, v] : c.weights) w[std::to_string(k)] = round12(v);
    json j = {{"feasible", c.feasible}, {"residual", round12(c.residual)}};
    if (c.feasible) j["weights"] = std::move(w);
    return j;
}

inline json sector_povm_to_json(const SectorPovm &p) {
    json e = {{"plus", matrix_to_json(p.plus)}, {"minus", matrix_to_json(p.minus)}};
    if (p.fail) e["fail"] = matrix_to_json(*p.fail);
    return e;
}

inline json discrimination_to_json(const DiscriminationResult &r) {
    json sectors = json::array();
    for (const auto &s : r.per_sector)
        sectors.push_back({{"charge", s.charge},
                           {"weight", round12(s.weight)},
                           {"success", round12(s.success)},
                           {"fail", round12(s.fail)},
                           {"effects", sector_povm_to_json(s.povm)}});
    json j = {{"criterion", to_string(r.criterion)}, {"success_prob", round12(r.success_prob)}, {"per_sector", sectors}};
    if (r.criterion == Criterion::ud) j["fail_prob"] = round12(r.fail_prob);
    return j;
}

inline json model_report_to_json(const ModelReport &r) {
    json sectors = json::array();
    for (const auto &s : r.per_sector)
        sectors.push_back({{"charge", s.charge}, {"weight", round12(s.weight)}, {"success", round12(s.success)}});
    json j = {{"resource", r.resource},
              {"param", round12(r.param)},
              {"mean_N", round12(r.mean_n)},
              {"criterion", to_string(r.criterion)},
              {"success_numeric", round12(r.success_numeric)},
              {"per_sector", std::move(sectors)}};
    if (r.criterion == Criterion::ud) j["fail_numeric"] = round12(r.fail_numeric);
    if (r.success_closed_form) j["success_closed_form"] = round12(*r.success_closed_form);
    if (r.success_reference) j["success_reference"] = round12(*r.success_reference);
    return j;
}

/// Wires, initial states, pointer map and the full-precision unitary.
inline json model_manifest(const MeasurementModel &m) {
    json wires = json::array();
    for (std::size_t f = 0; f < m.product.num_factors(); ++f) {
        json w = space_to_json(m.product.factor(f));
        w["name"] = m.wire_names[f];
        wires.push_back(std::move(w));
    }
    json initial = json::array();
    for (const auto &v : m.initial_wires) initial.push_back(vector_to_json(v, false));
    return {{"kind", m.kind},
            {"wires", std::move(wires)},
            {"initial_wires", std::move(initial)},
            {"register_wires", m.register_factors},
            {"outcomes", m.outcomes},
            {"pointer", m.pointer},
            {"matrix", matrix_to_json(m.unitary.matrix, false)}};
}

inline MeasurementModel model_from_manifest(const json &j) {
    std::vector<GradedSpace> factors;
    std::vector<std::string> names;
    for (const auto &w : j.at("wires")) {
        factors.push_back(space_from_json(w));
        names.push_back(w.value("name", std::string("wire")));
    }
    if (factors.size() < 2) throw Error("manifest: a system wire and at least one apparatus wire are required");
    TensorProduct tp(factors);
    std::vector<Vector> initial;
    for (const auto &v : j.at("initial_wires")) initial.push_back(vector_from_json(v));
    if (initial.size() + 1 != factors.size()) throw Error("manifest: one initial state per apparatus wire required");
    for (std::size_t i = 0; i < initial.size(); ++i) {
        if (static_cast<std::size_t>(initial[i].size()) != factors[i + 1].total_dim())
            throw Error("manifest: initial state dimension mismatch on wire " + names[i + 1]);
        if (std::abs(initial[i].norm() - 1.0) > 1e-9) throw Error("manifest: initial state not normalized on wire " + names[i + 1]);
    }
    auto regs = j.at("register_wires").get<std::vector<std::size_t>>();
    std::size_t configs = 1;
    for (auto r : regs) {
        if (r == 0 || r >= factors.size()) throw Error("manifest: invalid register wire index");
        configs *= factors[r].total_dim();
    }
    auto pointer = j.at("pointer").get<std::vector<std::string>>();
    if (pointer.size() != configs) throw Error("manifest: pointer must label every register configuration");
    ConservingUnitary U(tp, matrix_from_json(j.at("matrix")));
    return MeasurementModel{j.at("kind").get<std::string>(),
                            tp,
                            std::move(names),
                            std::move(initial),
                            std::move(regs),
                            j.at("outcomes").get<std::vector<std::string>>(),
                            std::move(pointer),
                            std::move(U)};
}

}  // namespace way::io
