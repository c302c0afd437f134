#include "cvhl/config.hpp"
#include "cvhl/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace cvhl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument(path + ": " + what);
}

void reject_unknown(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            fail(path + "." + it.key(), "unknown key");
}

double get_number(const json& obj, const std::string& path, const std::string& key) {
    const auto& v = obj.at(key);
    if (!v.is_number())
        fail(path + "." + key, "expected a number");
    return v.get<double>();
}

double get_number_or(const json& obj, const std::string& path, const std::string& key,
                     double fallback) {
    if (!obj.contains(key))
        return fallback;
    return get_number(obj, path, key);
}

std::string get_string(const json& obj, const std::string& path, const std::string& key) {
    const auto& v = obj.at(key);
    if (!v.is_string())
        fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

OPOParams parse_opo(const json& j, const std::string& path) {
    if (!j.is_object())
        fail(path, "expected an object");
    reject_unknown(j, path,
                   {"pump_ratio", "pump_power_mw", "threshold_power_mw", "sideband_ratio",
                    "seed_amplitude", "seed_phase_mode", "excess_noise"});
    OPOParams opo;
    const bool has_ratio = j.contains("pump_ratio");
    const bool has_powers = j.contains("pump_power_mw") || j.contains("threshold_power_mw");
    if (has_ratio && has_powers)
        fail(path, "give either pump_ratio or pump_power_mw/threshold_power_mw, not both");
    if (has_ratio) {
        opo.pump_ratio = get_number(j, path, "pump_ratio");
    } else if (has_powers) {
        if (!j.contains("pump_power_mw") || !j.contains("threshold_power_mw"))
            fail(path, "pump_power_mw and threshold_power_mw must be given together");
        const double p = get_number(j, path, "pump_power_mw");
        const double thr = get_number(j, path, "threshold_power_mw");
        if (!(thr > 0.0))
            fail(path + ".threshold_power_mw", "must be positive");
        if (p < 0.0)
            fail(path + ".pump_power_mw", "must be nonnegative");
        opo.pump_ratio = p / thr;
    } else {
        fail(path, "missing pump_ratio (or pump_power_mw + threshold_power_mw)");
    }
    if (!j.contains("sideband_ratio"))
        fail(path + ".sideband_ratio", "missing");
    opo.sideband_ratio = get_number(j, path, "sideband_ratio");
    if (j.contains("seed_amplitude")) {
        const auto& a = j["seed_amplitude"];
        if (a.is_number()) {
            opo.seed_amplitude = {a.get<double>(), 0.0};
        } else if (a.is_object()) {
            reject_unknown(a, path + ".seed_amplitude", {"re", "im"});
            opo.seed_amplitude = {get_number_or(a, path + ".seed_amplitude", "re", 0.0),
                                  get_number_or(a, path + ".seed_amplitude", "im", 0.0)};
        } else {
            fail(path + ".seed_amplitude", "expected a number or {re, im}");
        }
    }
    if (j.contains("seed_phase_mode")) {
        const std::string mode = get_string(j, path, "seed_phase_mode");
        if (mode == "none")
            opo.seed_phase_mode = SeedPhaseMode::None;
        else if (mode == "phase_squeezed")
            opo.seed_phase_mode = SeedPhaseMode::PhaseSqueezed;
        else if (mode == "amplitude_squeezed")
            opo.seed_phase_mode = SeedPhaseMode::AmplitudeSqueezed;
        else
            fail(path + ".seed_phase_mode",
                 "expected none | phase_squeezed | amplitude_squeezed");
    }
    opo.excess_noise = get_number_or(j, path, "excess_noise", 0.0);
    return opo;
}

EfficiencyBudget parse_budget(const json& j, const std::string& path) {
    if (!j.is_object())
        fail(path, "expected an object");
    reject_unknown(j, path, {"detector", "eta_dm", "eta_esc", "eta_d", "eta_el",
                             "clearance_db", "visibility", "eta_bs", "eta_f", "eta_w"});
    EfficiencyBudget b;
    if (!j.contains("detector"))
        fail(path + ".detector", "missing (shd | iha)");
    const std::string det = get_string(j, path, "detector");
    if (det == "shd")
        b.config = DetectorConfig::SHD;
    else if (det == "iha")
        b.config = DetectorConfig::IHA;
    else
        fail(path + ".detector", "expected shd | iha");
    b.eta_dm = get_number_or(j, path, "eta_dm", 1.0);
    b.eta_esc = get_number_or(j, path, "eta_esc", 1.0);
    b.eta_d = get_number_or(j, path, "eta_d", 1.0);
    b.visibility = get_number_or(j, path, "visibility", 1.0);
    b.eta_bs = get_number_or(j, path, "eta_bs", 1.0);
    b.eta_f = get_number_or(j, path, "eta_f", 1.0);
    b.eta_w = get_number_or(j, path, "eta_w", 1.0);
    if (j.contains("eta_el") && j.contains("clearance_db"))
        fail(path, "give either eta_el or clearance_db, not both");
    if (j.contains("clearance_db"))
        b.eta_el = electronic_efficiency_from_clearance(get_number(j, path, "clearance_db"));
    else
        b.eta_el = get_number_or(j, path, "eta_el", 1.0);
    if (b.config == DetectorConfig::SHD && (b.eta_f != 1.0 || b.eta_w != 1.0))
        fail(path, "eta_f/eta_w apply to the integrated detector only");
    return b;
}

PhaseScanModel parse_scan(const json& j, const std::string& path, double default_duration) {
    if (!j.is_object())
        fail(path, "expected an object");
    reject_unknown(j, path, {"kind", "theta0", "span", "duration", "exponent", "direction"});
    PhaseScanModel s;
    if (!j.contains("kind"))
        fail(path + ".kind", "missing (linear | power_law)");
    const std::string kind = get_string(j, path, "kind");
    if (kind == "linear")
        s.kind = ScanKind::Linear;
    else if (kind == "power_law")
        s.kind = ScanKind::PowerLaw;
    else
        fail(path + ".kind", "expected linear | power_law");
    if (!j.contains("span"))
        fail(path + ".span", "missing");
    s.span = get_number(j, path, "span");
    s.theta0 = get_number_or(j, path, "theta0", 0.0);
    s.duration = get_number_or(j, path, "duration", default_duration);
    s.exponent = get_number_or(j, path, "exponent", 2.0);
    if (j.contains("direction")) {
        const std::string dir = get_string(j, path, "direction");
        if (dir == "up")
            s.direction = ScanDirection::Up;
        else if (dir == "down")
            s.direction = ScanDirection::Down;
        else
            fail(path + ".direction", "expected up | down");
    }
    return s;
}

} // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": JSON parse error: " + e.what());
    }
    if (!j.is_object())
        throw std::invalid_argument(path + ": top level must be an object");
    reject_unknown(j, "config",
                   {"opo", "budget", "scan", "n_samples", "seed", "cutoff", "output"});
    ExperimentConfig cfg;
    for (const char* req : {"opo", "budget", "scan"})
        if (!j.contains(req))
            fail(std::string("config.") + req, "missing");

    if (j.contains("n_samples")) {
        const auto& v = j["n_samples"];
        if (!v.is_number_integer() || v.get<long long>() < 2)
            fail("config.n_samples", "expected an integer >= 2");
        if (v.get<long long>() > 50000000)
            fail("config.n_samples", "too large (max 5e7)");
        cfg.n_samples = v.get<int>();
    }
    if (j.contains("seed")) {
        const auto& v = j["seed"];
        if (!v.is_number_integer() || v.get<long long>() < 0)
            fail("config.seed", "expected a nonnegative integer");
        cfg.seed = v.get<std::uint64_t>();
    }
    if (j.contains("cutoff")) {
        const auto& v = j["cutoff"];
        if (!v.is_number_integer())
            fail("config.cutoff", "expected an integer");
        cfg.cutoff = v.get<int>();
        if (cfg.cutoff < 0 || cfg.cutoff > 40)
            fail("config.cutoff", "must lie in [0, 40]");
    }

    cfg.opo = parse_opo(j["opo"], "config.opo");
    cfg.budget = parse_budget(j["budget"], "config.budget");
    // default acquisition window: n_samples at the 10 kHz repetition rate
    cfg.scan = parse_scan(j["scan"], "config.scan", cfg.n_samples / 10000.0);

    if (j.contains("output")) {
        const auto& o = j["output"];
        if (!o.is_object())
            fail("config.output", "expected an object");
        reject_unknown(o, "config.output", {"trace", "rho", "report"});
        if (o.contains("trace"))
            cfg.output.trace = get_string(o, "config.output", "trace");
        if (o.contains("rho"))
            cfg.output.rho = get_string(o, "config.output", "rho");
        if (o.contains("report"))
            cfg.output.report = get_string(o, "config.output", "report");
    }
    validate_config(cfg);
    return cfg;
}

void validate_config(const ExperimentConfig& config) {
    auto wrap = [](const char* field, auto&& fn) {
        try {
            fn();
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(std::string("config.") + field + ": " + e.what());
        }
    };
    wrap("budget", [&] { (void)total_efficiency(config.budget); });
    wrap("opo", [&] { (void)noise_spectrum(config.opo, total_efficiency(config.budget)); });
    wrap("scan", [&] { validate_scan_model(config.scan); });
    if (config.n_samples < 2)
        throw std::invalid_argument("config.n_samples: must be >= 2");
    if (config.cutoff < 0 || config.cutoff > 40)
        throw std::invalid_argument("config.cutoff: must lie in [0, 40]");
}

bool same_opo(const OPOParams& a, const OPOParams& b) {
    return a.pump_ratio == b.pump_ratio && a.sideband_ratio == b.sideband_ratio &&
           a.seed_amplitude == b.seed_amplitude && a.seed_phase_mode == b.seed_phase_mode &&
           a.excess_noise == b.excess_noise;
}

} // namespace cvhl
