// way_cli: command-line front end for the way library.
//
//   way_cli twirl STATE.json
//   way_cli convert P.json Q.json
//   way_cli discriminate INPUT.json [--criterion ud|mle]
//   way_cli curves fig2|fig3 [--grid 1,2,4] [--format csv|json]
//   way_cli circuit --kind ud|mle|repeatable|number_readout|idle [--M 3] [--input plus|minus|zero|one|FILE]
//   way_cli ozawa SCENARIO.json
//
// Exit codes: 0 success, 1 negative verdict, 2 input error, 3 verification failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "way/way.hpp"

namespace {

using way::io::json;

enum Exit { kOk = 0, kNegative = 1, kInput = 2, kVerification = 3 };

struct VerificationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string out;
    std::string format = "json";
    double tail_mass = 1e-12;
};

double num(double x) { return way::io::round12(std::abs(x) < 1e-14 ? 0.0 : x); }

json read_json(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw way::Error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw way::Error(path + ": malformed JSON: " + e.what());
    }
}

void emit(const Options &opt, const std::string &text) {
    if (opt.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(opt.out, std::ios::binary);
    if (!f) throw way::Error("cannot write " + opt.out);
    f << text;
}

void emit(const Options &opt, const json &j) { emit(opt, j.dump(2) + "\n"); }

void require_json_format(const Options &opt, const char *command) {
    if (opt.format != "json") throw way::Error(std::string(command) + ": only --format json is supported");
}

/// Shortcuts {"uniform": M}, {"coherent": alpha}, {"opt_phase": M},
/// {"number": n, "max": m}; anything else is read as a state in the JSON schema.
way::PureState state_shortcut(const json &j, double tail_mass) {
    if (j.contains("uniform")) return way::uniform_state(j.at("uniform").get<int>());
    if (j.contains("coherent")) return way::coherent_state(j.at("coherent").get<double>(), tail_mass);
    if (j.contains("opt_phase")) return way::opt_phase_state(j.at("opt_phase").get<int>());
    if (j.contains("number")) return way::number_state(j.at("number").get<int>(), j.value("max", j.at("number").get<int>()));
    return way::io::state_from_json(j);
}

bool is_shortcut(const json &j) {
    return j.is_object() && (j.contains("uniform") || j.contains("coherent") || j.contains("opt_phase") || j.contains("number"));
}

std::pair<way::GradedSpace, way::Matrix> load_density(const json &j, double tail_mass) {
    if (is_shortcut(j)) {
        const auto psi = state_shortcut(j, tail_mass);
        return {psi.space, psi.density()};
    }
    return way::io::density_from_json(j);
}

way::ChargeDistribution load_distribution(const json &j, double tail_mass) {
    if (is_shortcut(j)) return way::charge_distribution(state_shortcut(j, tail_mass));
    return way::io::distribution_from_json(j);
}

way::Criterion parse_criterion(const std::string &s) {
    if (s == "ud" || s == "UD") return way::Criterion::ud;
    if (s == "mle" || s == "MLE") return way::Criterion::mle;
    throw way::Error("unknown criterion '" + s + "' (expected ud or mle)");
}

// ---------------------------------------------------------------- twirl

int cmd_twirl(const Options &opt, const std::string &path) {
    require_json_format(opt, "twirl");
    const auto [space, rho] = load_density(read_json(path), opt.tail_mass);
    const auto twirled = way::g_twirl(rho, space);
    std::map<int, double> probs;
    for (std::size_t i = 0; i < twirled.blocks.size(); ++i)
        probs[space.charges()[i]] = std::max(0.0, twirled.blocks[i].trace().real());
    const way::ChargeDistribution dist(probs);
    json j = way::io::block_state_to_json(twirled);
    j["distribution"] = way::io::distribution_to_json(dist);
    j["frameness_entropy"] = num(way::frameness_entropy(dist));
    j["variance"] = num(way::variance_measure(dist));
    emit(opt, j);
    return kOk;
}

// ---------------------------------------------------------------- convert

int cmd_convert(const Options &opt, const std::string &p_path, const std::string &q_path) {
    require_json_format(opt, "convert");
    const auto p = load_distribution(read_json(p_path), opt.tail_mass);
    const auto q = load_distribution(read_json(q_path), opt.tail_mass);
    const auto cert = way::deterministic_convertible(p, q);
    json j = way::io::certificate_to_json(cert);
    j["ordering"] = way::to_string(way::compare(p, q));
    emit(opt, j);
    return cert.feasible ? kOk : kNegative;
}

// ---------------------------------------------------------------- discriminate

way::Ensemble load_ensemble(const json &items, double tail_mass) {
    std::vector<way::EnsembleItem> out;
    for (const auto &it : items) {
        const auto [space, rho] = load_density(it.at("state"), tail_mass);
        out.push_back({it.at("prior").get<double>(), way::g_twirl(rho, space)});
    }
    return way::Ensemble(std::move(out));
}

/// Input forms: {"resource": STATE} for the e+/e- readout with that resource,
/// {"items": [{"prior": p, "state": STATE}, ...]}, or a WAY scenario
/// {"space": SPACE, "observable": MATRIX, "prior": [...], "resource"?: STATE}.
int cmd_discriminate(const Options &opt, const std::string &path, const std::string &criterion_flag) {
    require_json_format(opt, "discriminate");
    const json in = read_json(path);
    const auto criterion = parse_criterion(criterion_flag.empty() ? in.value("criterion", std::string("ud")) : criterion_flag);
    json report;
    int code = kOk;
    std::optional<way::Ensemble> ens;
    if (in.contains("observable")) {
        const auto space = way::io::space_from_json(in.at("space"));
        std::optional<way::PureState> resource;
        if (in.contains("resource")) resource = state_shortcut(in.at("resource"), opt.tail_mass);
        const way::WayScenario sc{space, way::Observable(space, way::io::matrix_from_json(in.at("observable"))),
                                  way::number_operator(space), in.at("prior").get<std::vector<double>>(), resource};
        const auto feas = way::way_feasibility(sc);
        report["verdict"] = way::to_string(feas.verdict);
        json ev = json::array();
        for (auto k : feas.eigen_indices) ev.push_back(num(feas.eigenvalues(static_cast<Eigen::Index>(k))));
        report["eigenvalues"] = ev;
        if (feas.verdict == way::Verdict::impossible) code = kNegative;
        if (feas.ensemble.size() == 2) ens = feas.ensemble;
    } else if (in.contains("resource")) {
        ens = way::twirled_pair(state_shortcut(in.at("resource"), opt.tail_mass));
    } else {
        ens = load_ensemble(in.at("items"), opt.tail_mass);
    }
    if (ens) {
        report["discrimination"] = way::io::discrimination_to_json(way::discriminate(*ens, criterion));
        report["perfect_possible"] = way::perfect_discrimination_possible(*ens);
    }
    emit(opt, report);
    return code;
}

// ---------------------------------------------------------------- curves

std::vector<double> parse_grid(const std::string &spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used != tok.size() || !(v > 0.0) || !std::isfinite(v)) throw way::Error("grid: '" + tok + "' is not a positive number");
        out.push_back(v);
    }
    if (out.empty()) throw way::Error("grid: empty");
    return out;
}

struct CurveRow {
    std::string resource;
    double param;
    double mean_n;
    std::string criterion;
    std::optional<double> numeric;
    std::optional<double> closed_form;
    std::optional<bool> ordering;
};

CurveRow row_of(const way::ModelReport &r) {
    return {r.resource, r.param, r.mean_n, way::to_string(r.criterion), r.success_numeric, r.success_closed_form, std::nullopt};
}

int cmd_curves(const Options &opt, const std::string &figure, const std::string &grid_spec) {
    if (opt.format != "csv" && opt.format != "json") throw way::Error("--format must be csv or json");
    std::vector<CurveRow> rows;
    if (figure == "fig2") {
        const auto grid = parse_grid(grid_spec.empty() ? "0.25,0.5,1,2,4,8,16" : grid_spec);
        for (double n : grid) {
            rows.push_back(row_of(way::coherent_model(std::sqrt(n), way::Criterion::ud, opt.tail_mass)));
            rows.push_back({"ozawa_reference", n, n, "reference", std::nullopt, way::ozawa_reference_curve(n), std::nullopt});
        }
    } else if (figure == "fig3") {
        const auto grid = parse_grid(grid_spec.empty() ? "1,2,4,8" : grid_spec);
        for (double n : grid) {
            const double twice = 2.0 * n;
            if (std::abs(twice - std::round(twice)) > 1e-12)
                throw way::Error("fig3: <N> = " + way::io::fmt12(n) + " is not a half-integer, so no uniform resource matches it");
            const int M = static_cast<int>(std::lround(twice));
            auto opt_row = row_of(way::opt_phase_model(M));
            auto coh_row = row_of(way::coherent_model(std::sqrt(n), way::Criterion::mle, opt.tail_mass));
            auto uni_row = row_of(way::uniform_model(M, way::Criterion::mle));
            const bool ordered = *opt_row.numeric > *coh_row.numeric && *coh_row.numeric > *uni_row.numeric;
            for (auto *r : {&opt_row, &coh_row, &uni_row}) {
                r->ordering = ordered;
                rows.push_back(*r);
            }
        }
    } else {
        throw way::Error("curves: unknown figure '" + figure + "' (expected fig2 or fig3)");
    }

    const bool with_flag = figure == "fig3";
    if (opt.format == "csv") {
        std::string text = "resource,param,mean_N,criterion,success_numeric,success_closed_form";
        if (with_flag) text += ",ordering_flag";
        text += "\n";
        for (const auto &r : rows) {
            text += r.resource + "," + way::io::fmt12(r.param) + "," + way::io::fmt12(r.mean_n) + "," + r.criterion + ",";
            text += (r.numeric ? way::io::fmt12(*r.numeric) : "") + ",";
            text += r.closed_form ? way::io::fmt12(*r.closed_form) : "";
            if (with_flag) text += std::string(",") + (r.ordering.value_or(false) ? "1" : "0");
            text += "\n";
        }
        emit(opt, text);
    } else {
        json arr = json::array();
        for (const auto &r : rows) {
            json o = {{"resource", r.resource}, {"param", num(r.param)}, {"mean_N", num(r.mean_n)}, {"criterion", r.criterion}};
            o["success_numeric"] = r.numeric ? json(num(*r.numeric)) : json(nullptr);
            o["success_closed_form"] = r.closed_form ? json(num(*r.closed_form)) : json(nullptr);
            if (with_flag) o["ordering_flag"] = r.ordering.value_or(false);
            arr.push_back(std::move(o));
        }
        emit(opt, json{{"figure", figure}, {"rows", std::move(arr)}});
    }
    return kOk;
}

// ---------------------------------------------------------------- circuit

way::MeasurementModel build_model(const std::string &kind, int M) {
    if (kind == "ud") return way::build_ud_unitary(M);
    if (kind == "mle") return way::build_mle_unitary(M);
    if (kind == "repeatable") return way::build_repeatable_variant(M);
    if (kind == "number_readout") return way::build_number_readout();
    if (kind == "idle") return way::build_idle_model();
    throw way::Error("unknown circuit kind '" + kind + "'");
}

way::Matrix load_system_input(const std::string &spec, const way::GradedSpace &space, double tail_mass) {
    if (spec == "plus") return way::e_plus() * way::e_plus().adjoint();
    if (spec == "minus") return way::e_minus() * way::e_minus().adjoint();
    if (spec == "zero") return way::number_state(0, 1).density();
    if (spec == "one") return way::number_state(1, 1).density();
    const auto [s, rho] = load_density(read_json(spec), tail_mass);
    if (!(s == space)) throw way::Error("input state does not live on the model's system space");
    return rho;
}

json verification_of(const way::MeasurementModel &m) {
    const double unitarity = m.unitary.unitarity_defect();
    const double conservation = way::verify_conservation(m.unitary);
    const double yanase = way::verify_yanase(m);
    if (unitarity > way::kNumTol || conservation > way::kNumTol || yanase > way::kNumTol)
        throw VerificationFailure("circuit '" + m.kind + "' failed verification");
    return {{"unitarity_defect", num(unitarity)}, {"conservation_norm", num(conservation)}, {"yanase_norm", num(yanase)}};
}

double outcome_probability(const way::MeasurementModel &m, const way::Matrix &rho, const std::string &label) {
    for (const auto &r : way::simulate_measurement(m, rho))
        if (r.label == label) return r.probability;
    return 0.0;
}

int cmd_circuit(const Options &opt, const std::string &kind, int M, const std::string &input,
                const std::string &manifest_in, const std::string &manifest_out) {
    require_json_format(opt, "circuit");
    const auto model = manifest_in.empty() ? build_model(kind, M) : way::io::model_from_manifest(read_json(manifest_in));
    json report = {{"kind", model.kind}, {"verification", verification_of(model)}};
    if (manifest_in.empty()) report["M"] = M;

    const way::Matrix rho = load_system_input(input, model.system_space(), opt.tail_mass);
    const bool qubit = model.system_space() == way::GradedSpace::qubit();
    json outcomes = json::array();
    for (const auto &r : way::simulate_measurement(model, rho)) {
        json o = {{"label", r.label}, {"probability", num(r.probability)}};
        if (qubit && r.probability > 1e-12) {
            o["fidelity_e_plus"] = num(way::fidelity_with_pure(r.post_state, way::e_plus()));
            o["fidelity_e_minus"] = num(way::fidelity_with_pure(r.post_state, way::e_minus()));
        }
        outcomes.push_back(std::move(o));
    }
    report["input"] = input;
    report["outcomes"] = std::move(outcomes);
    if (qubit) {
        const double success = 0.5 * outcome_probability(model, way::e_plus() * way::e_plus().adjoint(), "plus") +
                               0.5 * outcome_probability(model, way::e_minus() * way::e_minus().adjoint(), "minus");
        report["equal_prior_success"] = num(success);
    }
    if (!manifest_out.empty()) {
        std::ofstream f(manifest_out, std::ios::binary);
        if (!f) throw way::Error("cannot write " + manifest_out);
        f << way::io::model_manifest(model).dump(2) << "\n";
    }
    emit(opt, report);
    return kOk;
}

// ---------------------------------------------------------------- ozawa

/// {"kind": "ud", "M": 3, "system": STATE, "observable"?: {"l_plus": 1, "l_minus": -1} | MATRIX,
///  "pointer_values"?: {"plus": 1, "minus": -1, "fail": 0}}
int cmd_ozawa(const Options &opt, const std::string &path) {
    require_json_format(opt, "ozawa");
    const json in = read_json(path);
    const auto model = build_model(in.at("kind").get<std::string>(), in.value("M", 1));
    const json verification = verification_of(model);
    const auto [space, rho] = load_density(in.at("system"), opt.tail_mass);
    if (!(space == model.system_space())) throw way::Error("system state does not live on the model's system space");

    way::Observable L = way::pm_observable();
    double l_plus = 1.0, l_minus = -1.0;
    if (in.contains("observable")) {
        const json &o = in.at("observable");
        if (o.contains("data")) {
            L = way::Observable(space, way::io::matrix_from_json(o));
        } else {
            l_plus = o.value("l_plus", 1.0);
            l_minus = o.value("l_minus", -1.0);
            L = way::pm_observable(l_plus, l_minus);
        }
    }
    std::map<std::string, double> values{{"plus", l_plus}, {"minus", l_minus}, {"fail", 0.0}};
    if (in.contains("pointer_values")) values = in.at("pointer_values").get<std::map<std::string, double>>();

    const double noise = way::noise_of_model(model, L, values, rho);
    json report = {{"kind", model.kind}, {"verification", verification}, {"noise", num(noise)}};
    json pv = json::object();
    for (const auto &[k, v] : values) pv[k] = num(v);
    report["pointer_values"] = pv;
    try {
        const double bound = way::ozawa_bound(model, L, rho);
        report["bound"] = num(bound);
        report["margin"] = num(noise - bound);
        report["violation"] = noise < bound - 1e-10;
    } catch (const way::Error &) {
        report["bound"] = "bound undefined";
        report["violation"] = false;
    }
    emit(opt, report);
    if (report["violation"].get<bool>()) throw VerificationFailure("Ozawa inequality violated");
    return kOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"WAY-theorem measurement models under a U(1) conservation law"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--out", opt.out, "Write the report to this file instead of stdout");
    app.add_option("--format", opt.format, "Output format (csv|json)")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--tail-mass", opt.tail_mass, "Truncation tail mass for coherent states")->check(CLI::Range(1e-300, 0.5));

    std::string twirl_path;
    auto *twirl = app.add_subcommand("twirl", "G-twirl a state and report its asymmetry measures");
    twirl->add_option("state", twirl_path)->required();

    std::string p_path, q_path;
    auto *convert = app.add_subcommand("convert", "Decide deterministic convertibility of P into Q");
    convert->add_option("p", p_path)->required();
    convert->add_option("q", q_path)->required();

    std::string disc_path, criterion;
    auto *disc = app.add_subcommand("discriminate", "Optimal discrimination of twirled hypotheses");
    disc->add_option("input", disc_path)->required();
    disc->add_option("--criterion", criterion, "ud or mle (overrides the file)");

    std::string figure, grid;
    auto *curves = app.add_subcommand("curves", "Success-probability curves");
    curves->add_option("figure", figure, "fig2 or fig3")->required();
    curves->add_option("--grid", grid, "Comma-separated <N> values");

    std::string kind = "ud", input = "plus", manifest_in, manifest_out;
    int M = 1;
    auto *circuit = app.add_subcommand("circuit", "Build, verify and simulate a conserving measurement circuit");
    circuit->add_option("--kind", kind, "ud|mle|repeatable|number_readout|idle");
    circuit->add_option("--M", M, "Resource size (levels - 1)");
    circuit->add_option("--input", input, "plus|minus|zero|one or a state file");
    circuit->add_option("--manifest", manifest_in, "Load the model from a manifest instead of --kind");
    circuit->add_option("--manifest-out", manifest_out, "Write the model manifest here");

    std::string ozawa_path;
    auto *ozawa = app.add_subcommand("ozawa", "Compare simulated noise with the Ozawa bound");
    ozawa->add_option("scenario", ozawa_path)->required();

    // Options given after the subcommand are accepted too.
    for (auto *sub : {twirl, convert, disc, curves, circuit, ozawa}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kInput;
    }

    try {
        if (*twirl) return cmd_twirl(opt, twirl_path);
        if (*convert) return cmd_convert(opt, p_path, q_path);
        if (*disc) return cmd_discriminate(opt, disc_path, criterion);
        if (*curves) return cmd_curves(opt, figure, grid);
        if (*circuit) return cmd_circuit(opt, kind, M, input, manifest_in, manifest_out);
        if (*ozawa) return cmd_ozawa(opt, ozawa_path);
    } catch (const VerificationFailure &e) {
        std::cerr << "verification failure: " << e.what() << "\n";
        return kVerification;
    } catch (const way::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInput;
    } catch (const json::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInput;
    } catch (const std::logic_error &e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kVerification;
    }
    return kInput;
}
