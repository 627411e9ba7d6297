// Experiment configuration: JSON schema with defaults, strict validation
// (unknown keys, duplicate keys, range checks) and a manifest echo.
#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "coherald/common.hpp"
#include "coherald/herald.hpp"
#include "coherald/modesolver.hpp"
#include "coherald/transport.hpp"

namespace coherald::harness {

struct BiphotonConfig {
    double sigma0_um = 1.0;
    double gamma0 = 1.5;
    int grid_points = 512;
    double grid_halfwidth_sigmas = 8.0;
    double epsilon_trunc = 1e-6;
};

struct WgaConfig {
    int layer_count = 101;
    double layer_thickness_um = 0.6;
    // Al(0.3)Ga(0.7)As / Al(0.6)Ga(0.4)As at 1550 nm, computed externally
    // from the material dispersion model; inputs here, never derived here.
    double n_high = 3.225;
    double n_low = 2.986;
    double background_index = 0.0;  // 0: same as n_low
    double grid_step_um = 0.05;
    double padding_um = 20.0;
};

struct DisorderConfig {
    double delta = 0.02;
    std::uint64_t master_seed = 1;
};

struct TswConfig {
    double n_core = 3.225;
    double n_clad = 2.986;
    std::vector<int> target_mode_counts{1, 3, 5, 10, 15};
    double grid_halfwidth_um = 48.0;
    int grid_points = 2048;
};

struct ImagingConfig {
    std::string z_policy = "optimize";  // optimize | fixed
    double fixed_z = 1.0;
    double scan_lo = 0.25;
    double scan_hi = 4.0;
    int scan_samples = 64;
};

struct RunConfig {
    double z_max_um = 500.0;
    int z_samples = 101;
    int realizations = 100;
    int workers = 0;  // 0: one per hardware thread
    std::string averaging = "ratio_then_average";  // | average_then_ratio
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats{"csv"};  // csv | json
};

struct ExperimentConfig {
    double wavelength_um = 1.55;
    BiphotonConfig biphoton;
    WgaConfig wga;
    DisorderConfig disorder;
    TswConfig tsw;
    ImagingConfig imaging;
    RunConfig run;
    OutputConfig output;

    biphoton::GaussianBiphotonSpec make_biphoton() const {
        return biphoton::make_spec(biphoton.sigma0_um, biphoton.gamma0);
    }

    modes::WgaSpec make_wga() const {
        return {wga.layer_count, wga.layer_thickness_um, wga.n_high,
                wga.n_low,       wavelength_um,          wga.grid_step_um,
                wga.padding_um,  wga.background_index};
    }

    modes::SlabSpec make_tsw_template() const {
        return {0.0, tsw.n_core, tsw.n_clad, wavelength_um};
    }

    herald::HeraldPipelineConfig make_pipeline() const {
        herald::HeraldPipelineConfig p;
        p.schmidt_points = biphoton.grid_points;
        p.schmidt_half_sigmas = biphoton.grid_halfwidth_sigmas;
        p.epsilon_trunc = biphoton.epsilon_trunc;
        p.tsw_half_width = tsw.grid_halfwidth_um;
        p.tsw_points = tsw.grid_points;
        p.imaging.optimize = imaging.z_policy == "optimize";
        p.imaging.fixed_z = imaging.fixed_z;
        p.imaging.scan_lo = imaging.scan_lo;
        p.imaging.scan_hi = imaging.scan_hi;
        p.imaging.scan_samples = imaging.scan_samples;
        return p;
    }

    transport::EnsembleSetup make_ensemble() const {
        transport::EnsembleSetup s;
        s.wga = make_wga();
        s.delta = disorder.delta;
        s.master_seed = disorder.master_seed;
        s.z_samples = transport::uniform_z_samples(run.z_max_um, run.z_samples);
        s.realizations = run.realizations;
        s.workers = run.workers;
        s.averaging = run.averaging == "average_then_ratio"
                          ? transport::Averaging::average_then_ratio
                          : transport::Averaging::ratio_then_average;
        return s;
    }

    double resolved_background_index() const {
        return wga.background_index > 0.0 ? wga.background_index : wga.n_low;
    }
};

namespace detail {

/// Allowed keys per config section; anything else is rejected by name.
inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> schema{
        {"", {"wavelength_um", "biphoton", "wga", "disorder", "tsw", "imaging", "run",
              "output"}},
        {"biphoton",
         {"sigma0_um", "gamma0", "grid_points", "grid_halfwidth_sigmas", "epsilon_trunc"}},
        {"wga", {"layer_count", "layer_thickness_um", "n_high", "n_low", "background_index",
                 "grid_step_um", "padding_um"}},
        {"disorder", {"delta", "master_seed"}},
        {"tsw",
         {"n_core", "n_clad", "target_mode_counts", "grid_halfwidth_um", "grid_points"}},
        {"imaging", {"z_policy", "fixed_z", "scan_lo", "scan_hi", "scan_samples"}},
        {"run", {"z_max_um", "z_samples", "realizations", "workers", "averaging"}},
        {"output", {"directory", "formats"}},
    };
    return schema;
}

inline void reject_unknown_keys(const nlohmann::json& node, const std::string& section) {
    const auto& schema = config_schema();
    if (!node.is_object()) {
        throw validation_error("config: section '" + (section.empty() ? "top level" : section) +
                               "' must be an object");
    }
    const auto& allowed = schema.at(section);
    for (const auto& [key, value] : node.items()) {
        const std::string path = section.empty() ? key : section + "." + key;
        if (!allowed.contains(key)) throw validation_error("config: unknown key '" + path + "'");
        if (section.empty() && schema.contains(key)) reject_unknown_keys(value, key);
    }
}

/// nlohmann's parser silently keeps the first of two duplicate keys; track
/// keys per object depth during the parse to reject the file instead.
inline nlohmann::json parse_strict(const std::string& text) {
    std::vector<std::set<std::string>> seen;
    auto cb = [&](int /*depth*/, nlohmann::json::parse_event_t event,
                  nlohmann::json& parsed) -> bool {
        using event_t = nlohmann::json::parse_event_t;
        if (event == event_t::object_start) {
            seen.emplace_back();
        } else if (event == event_t::object_end) {
            seen.pop_back();
        } else if (event == event_t::key) {
            const auto key = parsed.get<std::string>();
            if (!seen.back().insert(key).second)
                throw validation_error("config: duplicate key '" + key + "'");
        }
        return true;
    };
    return nlohmann::json::parse(text, cb);
}

template <typename T>
void take(const nlohmann::json& node, const char* key, T& into) {
    if (node.contains(key)) node.at(key).get_to(into);
}

inline void require_positive(double v, const std::string& key) {
    if (!(v > 0.0)) throw validation_error("config: " + key + " must be > 0");
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j, "");

    ExperimentConfig c;
    detail::take(j, "wavelength_um", c.wavelength_um);
    if (j.contains("biphoton")) {
        const auto& b = j.at("biphoton");
        if (!b.contains("sigma0_um"))
            throw validation_error("config: missing required key 'biphoton.sigma0_um'");
        if (!b.contains("gamma0"))
            throw validation_error("config: missing required key 'biphoton.gamma0'");
        detail::take(b, "sigma0_um", c.biphoton.sigma0_um);
        detail::take(b, "gamma0", c.biphoton.gamma0);
        detail::take(b, "grid_points", c.biphoton.grid_points);
        detail::take(b, "grid_halfwidth_sigmas", c.biphoton.grid_halfwidth_sigmas);
        detail::take(b, "epsilon_trunc", c.biphoton.epsilon_trunc);
    }
    if (j.contains("wga")) {
        const auto& w = j.at("wga");
        detail::take(w, "layer_count", c.wga.layer_count);
        detail::take(w, "layer_thickness_um", c.wga.layer_thickness_um);
        detail::take(w, "n_high", c.wga.n_high);
        detail::take(w, "n_low", c.wga.n_low);
        detail::take(w, "background_index", c.wga.background_index);
        detail::take(w, "grid_step_um", c.wga.grid_step_um);
        detail::take(w, "padding_um", c.wga.padding_um);
    }
    if (j.contains("disorder")) {
        const auto& d = j.at("disorder");
        detail::take(d, "delta", c.disorder.delta);
        detail::take(d, "master_seed", c.disorder.master_seed);
    }
    if (j.contains("tsw")) {
        const auto& t = j.at("tsw");
        detail::take(t, "n_core", c.tsw.n_core);
        detail::take(t, "n_clad", c.tsw.n_clad);
        detail::take(t, "target_mode_counts", c.tsw.target_mode_counts);
        detail::take(t, "grid_halfwidth_um", c.tsw.grid_halfwidth_um);
        detail::take(t, "grid_points", c.tsw.grid_points);
    }
    if (j.contains("imaging")) {
        const auto& i = j.at("imaging");
        detail::take(i, "z_policy", c.imaging.z_policy);
        detail::take(i, "fixed_z", c.imaging.fixed_z);
        detail::take(i, "scan_lo", c.imaging.scan_lo);
        detail::take(i, "scan_hi", c.imaging.scan_hi);
        detail::take(i, "scan_samples", c.imaging.scan_samples);
    }
    if (j.contains("run")) {
        const auto& r = j.at("run");
        detail::take(r, "z_max_um", c.run.z_max_um);
        detail::take(r, "z_samples", c.run.z_samples);
        detail::take(r, "realizations", c.run.realizations);
        detail::take(r, "workers", c.run.workers);
        detail::take(r, "averaging", c.run.averaging);
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        detail::take(o, "directory", c.output.directory);
        detail::take(o, "formats", c.output.formats);
    }

    detail::require_positive(c.wavelength_um, "wavelength_um");
    detail::require_positive(c.biphoton.sigma0_um, "biphoton.sigma0_um");
    if (!(c.biphoton.gamma0 >= 0.5))
        throw validation_error("config: biphoton.gamma0 must be >= 0.5");
    if (c.biphoton.grid_points < 16)
        throw validation_error("config: biphoton.grid_points must be >= 16");
    detail::require_positive(c.biphoton.grid_halfwidth_sigmas, "biphoton.grid_halfwidth_sigmas");
    if (!(c.biphoton.epsilon_trunc > 0.0 && c.biphoton.epsilon_trunc <= 0.01))
        throw validation_error("config: biphoton.epsilon_trunc must be in (0, 0.01]");
    if (c.wga.layer_count < 1 || c.wga.layer_count % 2 == 0)
        throw validation_error("config: wga.layer_count must be odd and positive");
    detail::require_positive(c.wga.layer_thickness_um, "wga.layer_thickness_um");
    if (!(c.wga.n_high > 1.0 && c.wga.n_low > 1.0))
        throw validation_error("config: wga indices must be > 1");
    if (c.wga.background_index != 0.0 && !(c.wga.background_index > 1.0))
        throw validation_error("config: wga.background_index must be > 1 (or 0 for n_low)");
    detail::require_positive(c.wga.grid_step_um, "wga.grid_step_um");
    if (!(c.wga.padding_um >= 0.0))
        throw validation_error("config: wga.padding_um must be >= 0");
    if (!(c.disorder.delta >= 0.0))
        throw validation_error("config: disorder.delta must be >= 0");
    if (!(c.tsw.n_core > c.tsw.n_clad && c.tsw.n_clad > 1.0))
        throw validation_error("config: need tsw.n_core > tsw.n_clad > 1");
    if (c.tsw.target_mode_counts.empty())
        throw validation_error("config: tsw.target_mode_counts must be non-empty");
    for (int m : c.tsw.target_mode_counts)
        if (m < 1) throw validation_error("config: tsw.target_mode_counts entries must be >= 1");
    detail::require_positive(c.tsw.grid_halfwidth_um, "tsw.grid_halfwidth_um");
    if (c.tsw.grid_points < 16)
        throw validation_error("config: tsw.grid_points must be >= 16");
    if (c.imaging.z_policy != "optimize" && c.imaging.z_policy != "fixed")
        throw validation_error("config: imaging.z_policy must be 'optimize' or 'fixed'");
    detail::require_positive(c.imaging.fixed_z, "imaging.fixed_z");
    if (!(c.imaging.scan_lo > 0.0 && c.imaging.scan_hi > c.imaging.scan_lo))
        throw validation_error("config: need 0 < imaging.scan_lo < imaging.scan_hi");
    if (c.imaging.scan_samples < 32)
        throw validation_error("config: imaging.scan_samples must be >= 32");
    if (!(c.run.z_max_um > 0.0))
        throw validation_error("config: run.z_max_um must be > 0");
    if (c.run.z_samples < 2)
        throw validation_error("config: run.z_samples must be >= 2");
    if (c.run.realizations < 1)
        throw validation_error("config: run.realizations must be >= 1");
    if (c.run.workers < 0)
        throw validation_error("config: run.workers must be >= 0");
    if (c.run.averaging != "ratio_then_average" && c.run.averaging != "average_then_ratio")
        throw validation_error(
            "config: run.averaging must be 'ratio_then_average' or 'average_then_ratio'");
    if (c.output.formats.empty())
        throw validation_error("config: output.formats must be non-empty");
    for (const auto& f : c.output.formats)
        if (f != "csv" && f != "json")
            throw validation_error("config: output.formats entries must be 'csv' or 'json'");
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("config: cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return config_from_json(detail::parse_strict(buffer.str()));
}

/// Effective configuration after defaults, as echoed into the manifest.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    return {
        {"wavelength_um", c.wavelength_um},
        {"biphoton",
         {{"sigma0_um", c.biphoton.sigma0_um},
          {"gamma0", c.biphoton.gamma0},
          {"grid_points", c.biphoton.grid_points},
          {"grid_halfwidth_sigmas", c.biphoton.grid_halfwidth_sigmas},
          {"epsilon_trunc", c.biphoton.epsilon_trunc}}},
        {"wga",
         {{"layer_count", c.wga.layer_count},
          {"layer_thickness_um", c.wga.layer_thickness_um},
          {"n_high", c.wga.n_high},
          {"n_low", c.wga.n_low},
          {"background_index", c.wga.background_index},
          {"grid_step_um", c.wga.grid_step_um},
          {"padding_um", c.wga.padding_um}}},
        {"disorder", {{"delta", c.disorder.delta}, {"master_seed", c.disorder.master_seed}}},
        {"tsw",
         {{"n_core", c.tsw.n_core},
          {"n_clad", c.tsw.n_clad},
          {"target_mode_counts", c.tsw.target_mode_counts},
          {"grid_halfwidth_um", c.tsw.grid_halfwidth_um},
          {"grid_points", c.tsw.grid_points}}},
        {"imaging",
         {{"z_policy", c.imaging.z_policy},
          {"fixed_z", c.imaging.fixed_z},
          {"scan_lo", c.imaging.scan_lo},
          {"scan_hi", c.imaging.scan_hi},
          {"scan_samples", c.imaging.scan_samples}}},
        {"run",
         {{"z_max_um", c.run.z_max_um},
          {"z_samples", c.run.z_samples},
          {"realizations", c.run.realizations},
          {"workers", c.run.workers},
          {"averaging", c.run.averaging}}},
        {"output", {{"directory", c.output.directory}, {"formats", c.output.formats}}},
    };
}

}  // namespace coherald::harness
