// Figure presets: named columnar tables computed from an ExperimentConfig,
// plus deterministic CSV/JSON emission with a reproducibility manifest.
#pragma once

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <variant>
#include <vector>

#include "coherald/common.hpp"
#include "coherald/config.hpp"
#include "coherald/herald.hpp"
#include "coherald/transport.hpp"

namespace coherald::harness {

using Cell = std::variant<long long, double, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::initializer_list<Cell> cells) {
        if (cells.size() != columns.size())
            throw std::invalid_argument("Table: row width does not match columns");
        rows.emplace_back(cells);
    }
};

struct ResultSet {
    nlohmann::json manifest;
    std::vector<Table> tables;
    std::vector<std::string> warnings;
};

namespace detail {

/// Shortest representation that round-trips the exact double.
inline std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_number(long long v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

inline std::string cell_text(const Cell& cell) {
    if (std::holds_alternative<long long>(cell))
        return format_number(std::get<long long>(cell));
    if (std::holds_alternative<double>(cell)) return format_number(std::get<double>(cell));
    return csv_escape(std::get<std::string>(cell));
}

inline nlohmann::json cell_json(const Cell& cell) {
    if (std::holds_alternative<long long>(cell)) return std::get<long long>(cell);
    if (std::holds_alternative<double>(cell)) return std::get<double>(cell);
    return std::get<std::string>(cell);
}

}  // namespace detail

inline std::string to_csv(const Table& table) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out += ',';
        out += detail::csv_escape(table.columns[c]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += detail::cell_text(row[c]);
        }
        out += '\n';
    }
    return out;
}

/// Write one file per table in each requested format plus manifest.json.
/// Creation is all-or-nothing: on any I/O failure every file this call
/// created is removed before the error propagates.
inline std::vector<std::filesystem::path> emit(const ResultSet& results,
                                               const std::string& directory,
                                               const std::vector<std::string>& formats = {
                                                   "csv"}) {
    namespace fs = std::filesystem;
    const fs::path dir(directory);
    std::vector<fs::path> written;
    auto write_file = [&](const fs::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        out << content;
        if (!out.good()) throw std::runtime_error("emit: cannot write " + path.string());
        written.push_back(path);
    };
    try {
        if (!dir.empty()) fs::create_directories(dir);
        for (const Table& table : results.tables) {
            for (const std::string& format : formats) {
                if (format == "csv") {
                    write_file(dir / (table.name + ".csv"), to_csv(table));
                } else if (format == "json") {
                    nlohmann::json rows = nlohmann::json::array();
                    for (const auto& row : table.rows) {
                        nlohmann::json r = nlohmann::json::array();
                        for (const Cell& cell : row) r.push_back(detail::cell_json(cell));
                        rows.push_back(std::move(r));
                    }
                    nlohmann::json j{{"name", table.name},
                                     {"columns", table.columns},
                                     {"rows", std::move(rows)}};
                    write_file(dir / (table.name + ".json"), j.dump(2) + "\n");
                } else {
                    throw std::invalid_argument("emit: unknown format '" + format + "'");
                }
            }
        }
        nlohmann::json manifest = results.manifest;
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        manifest["created_utc"] = stamp;  // the only timestamp in any output
        write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (...) {
        std::error_code ec;
        for (const fs::path& p : written) fs::remove(p, ec);
        throw;
    }
    return written;
}

namespace detail {

inline const std::vector<double>& preset_gammas(const std::string& preset) {
    static const std::vector<double> spectra{0.5, 1.5, 3.0};
    static const std::vector<double> coherence{0.5, 1.0, 3.0};
    return preset == "fig4" ? coherence : spectra;
}

struct LocalizationTarget {
    Table* table;
    std::string preset;
    double gamma0;
    int tsw_modes;
};

/// One ordered and one disordered ensemble appended to the target table.
inline void localization_rows(const ExperimentConfig& config,
                              const herald::HeraldPipeline& pipeline,
                              const LocalizationTarget& target,
                              std::vector<std::string>& warnings) {
    transport::EnsembleSetup setup = config.make_ensemble();
    for (const bool disordered : {false, true}) {
        if (!disordered) {
            setup.delta = 0.0;
            setup.realizations = 1;
        } else {
            setup.delta = config.disorder.delta;
            setup.realizations = config.run.realizations;
        }
        const auto result = transport::ensemble_run(pipeline.schmidt, pipeline.state, setup);
        for (int iz = 0; iz < result.z_samples.size(); ++iz) {
            target.table->add({target.preset, target.gamma0,
                               static_cast<long long>(target.tsw_modes), setup.delta,
                               result.z_samples[iz], result.mean_ratio[iz],
                               result.stderr_ratio[iz],
                               static_cast<long long>(result.realization_count)});
        }
        for (const auto& w : result.warnings) {
            warnings.push_back("gamma0 " + format_number(target.gamma0) + ", " +
                               format_number(static_cast<long long>(target.tsw_modes)) +
                               "-mode filter, delta " + format_number(setup.delta) + ": " + w);
        }
    }
}

}  // namespace detail

inline ResultSet run_preset(const std::string& preset, const ExperimentConfig& config) {
    ResultSet out;
    const auto tsw_family =
        modes::select_tsw_family(config.tsw.target_mode_counts, config.make_tsw_template());

    if (preset == "fig1") {
        Table spectrum{"schmidt_spectrum", {"preset", "gamma0", "mode_index", "eigenvalue"}, {}};
        Table profiles{"schmidt_modes", {"preset", "gamma0", "mode_index", "x_um", "amplitude"},
                       {}};
        for (double g0 : detail::preset_gammas(preset)) {
            const auto spec = biphoton::make_spec(config.biphoton.sigma0_um, g0);
            const auto grid = biphoton::default_grid(spec, config.biphoton.grid_points,
                                                     config.biphoton.grid_halfwidth_sigmas);
            const auto sd =
                biphoton::schmidt_decompose(spec, grid, config.biphoton.epsilon_trunc);
            const int shown = std::min(15, sd.retained());
            for (int j = 0; j < shown; ++j)
                spectrum.add({preset, g0, static_cast<long long>(j + 1), sd.eigenvalues[j]});
            if (g0 == 1.5) {
                for (int j : {1, 2, 5, 15}) {
                    if (j > sd.retained()) continue;
                    for (int i = 0; i < grid.n_points; ++i)
                        profiles.add({preset, g0, static_cast<long long>(j), grid.x(i),
                                      sd.modes_a(i, j - 1)});
                }
            }
        }
        out.tables = {std::move(spectrum), std::move(profiles)};
    } else if (preset == "fig3") {
        Table counts{"tsw_mode_count", {"preset", "core_width_um", "mode_count"}, {}};
        const double width_max =
            tsw_family.back().core_width * 1.1;
        for (double w = 0.1; w <= width_max; w += 0.05) {
            modes::SlabSpec s = config.make_tsw_template();
            s.core_width = w;
            counts.add({preset, w, static_cast<long long>(modes::slab_mode_count(s))});
        }
        Table scans{"overlap_scan", {"preset", "gamma0", "tsw_modes", "z", "overlap_factor"},
                    {}};
        Table optima{"z_optimum",
                     {"preset", "gamma0", "tsw_modes", "z_optimum", "f_optimum"},
                     {}};
        const auto pipeline_cfg = config.make_pipeline();
        for (double g0 : detail::preset_gammas(preset)) {
            const auto spec = biphoton::make_spec(config.biphoton.sigma0_um, g0);
            const auto grid = biphoton::default_grid(spec, config.biphoton.grid_points,
                                                     config.biphoton.grid_halfwidth_sigmas);
            const auto sd =
                biphoton::schmidt_decompose(spec, grid, config.biphoton.epsilon_trunc);
            const SpatialGrid tsw_grid =
                SpatialGrid::centered(pipeline_cfg.tsw_half_width, pipeline_cfg.tsw_points);
            for (std::size_t f = 0; f < tsw_family.size(); ++f) {
                const auto tsw_modes = modes::solve_slab_modes(tsw_family[f], tsw_grid);
                const int lead = std::min(sd.retained(), tsw_modes.count());
                const auto scan = herald::optimize_magnification(
                    grid, sd.modes_b.leftCols(lead), tsw_modes,
                    herald::log_spaced(config.imaging.scan_lo, config.imaging.scan_hi,
                                       config.imaging.scan_samples));
                const long long modes_supported = config.tsw.target_mode_counts[f];
                for (int i = 0; i < scan.z_values.size(); ++i)
                    scans.add({preset, g0, modes_supported, scan.z_values[i],
                               scan.f_values[i]});
                optima.add({preset, g0, modes_supported, scan.z_optimum, scan.f_optimum});
            }
        }
        out.tables = {std::move(counts), std::move(scans), std::move(optima)};
    } else if (preset == "fig4") {
        Table coherence{
            "heralded_coherence",
            {"preset", "gamma0", "tsw_modes", "z_magnification", "sigma_um", "gamma"},
            {}};
        for (double g0 : detail::preset_gammas(preset)) {
            const auto spec = biphoton::make_spec(config.biphoton.sigma0_um, g0);
            for (std::size_t f = 0; f < tsw_family.size(); ++f) {
                const auto p =
                    herald::run_herald_pipeline(spec, tsw_family[f], config.make_pipeline());
                const auto g1 = biphoton::assemble_g1(p.schmidt.eigenvalues, p.schmidt.modes_a,
                                                      p.schmidt.grid, p.state.filter_matrix);
                const auto cs = biphoton::coherence_summary(g1);
                coherence.add({preset, g0,
                               static_cast<long long>(config.tsw.target_mode_counts[f]),
                               p.z_used, cs.sigma, cs.gamma});
            }
        }
        out.tables = {std::move(coherence)};
    } else if (preset == "fig5") {
        Table local{"localization",
                    {"preset", "gamma0", "tsw_modes", "delta", "z_um", "mean_ratio", "stderr",
                     "realizations"},
                    {}};
        for (double g0 : detail::preset_gammas(preset)) {
            const auto spec = biphoton::make_spec(config.biphoton.sigma0_um, g0);
            for (std::size_t f = 0; f < tsw_family.size(); ++f) {
                const auto p =
                    herald::run_herald_pipeline(spec, tsw_family[f], config.make_pipeline());
                detail::localization_rows(
                    config, p,
                    {&local, preset, g0, config.tsw.target_mode_counts[f]}, out.warnings);
            }
        }
        out.tables = {std::move(local)};
    } else if (preset == "custom") {
        Table coherence{
            "heralded_coherence",
            {"preset", "gamma0", "tsw_modes", "z_magnification", "sigma_um", "gamma"},
            {}};
        Table local{"localization",
                    {"preset", "gamma0", "tsw_modes", "delta", "z_um", "mean_ratio", "stderr",
                     "realizations"},
                    {}};
        const auto spec = config.make_biphoton();
        for (std::size_t f = 0; f < tsw_family.size(); ++f) {
            const auto p =
                herald::run_herald_pipeline(spec, tsw_family[f], config.make_pipeline());
            const auto g1 = biphoton::assemble_g1(p.schmidt.eigenvalues, p.schmidt.modes_a,
                                                  p.schmidt.grid, p.state.filter_matrix);
            const auto cs = biphoton::coherence_summary(g1);
            coherence.add({preset, config.biphoton.gamma0,
                           static_cast<long long>(config.tsw.target_mode_counts[f]), p.z_used,
                           cs.sigma, cs.gamma});
            detail::localization_rows(
                config, p,
                {&local, preset, config.biphoton.gamma0, config.tsw.target_mode_counts[f]},
                out.warnings);
        }
        out.tables = {std::move(coherence), std::move(local)};
    } else {
        throw std::invalid_argument("run_preset: unknown preset '" + preset + "'");
    }

    out.manifest = {{"preset", preset},
                    {"code_version", COHERALD_VERSION},
                    {"master_seed", config.disorder.master_seed},
                    {"config", config_to_json(config)},
                    {"warnings", out.warnings}};
    nlohmann::json tables = nlohmann::json::array();
    for (const Table& t : out.tables)
        tables.push_back({{"name", t.name},
                          {"file", t.name + ".csv"},
                          {"columns", t.columns},
                          {"rows", t.rows.size()}});
    out.manifest["tables"] = std::move(tables);
    return out;
}

}  // namespace coherald::harness
