// JSON round-trips for the result types the harness caches or emits.
#pragma once

#include <json.hpp>

#include "coherald/biphoton.hpp"
#include "coherald/grid.hpp"
#include "coherald/modesolver.hpp"
#include "coherald/transport.hpp"

namespace coherald {

inline void to_json(nlohmann::json& j, const SpatialGrid& g) {
    j = {{"x_min", g.x_min}, {"dx", g.dx}, {"n_points", g.n_points}};
}

inline void from_json(const nlohmann::json& j, SpatialGrid& g) {
    g = SpatialGrid(j.at("x_min").get<double>(), j.at("dx").get<double>(),
                    j.at("n_points").get<int>());
}

namespace detail {

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd json_vector(const nlohmann::json& j) {
    const auto raw = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(raw.data(),
                                             static_cast<Eigen::Index>(raw.size()));
}

inline nlohmann::json columns_json(const Eigen::MatrixXd& m) {
    nlohmann::json cols = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) cols.push_back(vector_json(m.col(c)));
    return cols;
}

inline Eigen::MatrixXd json_columns(const nlohmann::json& j, Eigen::Index rows) {
    Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const Eigen::VectorXd col = json_vector(j.at(static_cast<std::size_t>(c)));
        if (col.size() != rows)
            throw validation_error("column length does not match grid size");
        m.col(c) = col;
    }
    return m;
}

}  // namespace detail
}  // namespace coherald

namespace coherald::modes {

inline void to_json(nlohmann::json& j, const IndexProfile& p) {
    j = {{"grid", p.grid},
         {"n_values", coherald::detail::vector_json(p.n_values)},
         {"wavelength", p.wavelength},
         {"cladding_index", p.cladding_index}};
}

inline void from_json(const nlohmann::json& j, IndexProfile& p) {
    j.at("grid").get_to(p.grid);
    p.n_values = coherald::detail::json_vector(j.at("n_values"));
    p.wavelength = j.at("wavelength").get<double>();
    p.k0 = 2.0 * std::numbers::pi / p.wavelength;
    p.cladding_index = j.at("cladding_index").get<double>();
    if (p.n_values.size() != p.grid.n_points)
        throw validation_error("IndexProfile: sample count does not match grid");
}

inline void to_json(nlohmann::json& j, const GuidedModeSet& s) {
    j = {{"grid", s.grid},
         {"propagation_constants", coherald::detail::vector_json(s.propagation_constants)},
         {"effective_indices", coherald::detail::vector_json(s.effective_indices)},
         {"profiles", coherald::detail::columns_json(s.profiles)}};
}

inline void from_json(const nlohmann::json& j, GuidedModeSet& s) {
    j.at("grid").get_to(s.grid);
    s.propagation_constants = coherald::detail::json_vector(j.at("propagation_constants"));
    s.effective_indices = coherald::detail::json_vector(j.at("effective_indices"));
    s.profiles = coherald::detail::json_columns(j.at("profiles"), s.grid.n_points);
    if (s.profiles.cols() != s.propagation_constants.size())
        throw validation_error("GuidedModeSet: profile count does not match constants");
}

}  // namespace coherald::modes

namespace coherald::biphoton {

inline void to_json(nlohmann::json& j, const SchmidtDecomposition& d) {
    j = {{"grid", d.grid},
         {"eigenvalues", coherald::detail::vector_json(d.eigenvalues)},
         {"modes_a", coherald::detail::columns_json(d.modes_a)},
         {"modes_b", coherald::detail::columns_json(d.modes_b)},
         {"truncation_residual", d.truncation_residual}};
}

inline void from_json(const nlohmann::json& j, SchmidtDecomposition& d) {
    j.at("grid").get_to(d.grid);
    d.eigenvalues = coherald::detail::json_vector(j.at("eigenvalues"));
    d.modes_a = coherald::detail::json_columns(j.at("modes_a"), d.grid.n_points);
    d.modes_b = coherald::detail::json_columns(j.at("modes_b"), d.grid.n_points);
    d.truncation_residual = j.at("truncation_residual").get<double>();
}

}  // namespace coherald::biphoton

namespace coherald::transport {

inline void to_json(nlohmann::json& j, const EnsembleResult& r) {
    j = {{"z_samples", coherald::detail::vector_json(r.z_samples)},
         {"mean_ratio", coherald::detail::vector_json(r.mean_ratio)},
         {"stderr", coherald::detail::vector_json(r.stderr_ratio)},
         {"realization_count", r.realization_count},
         {"master_seed", r.master_seed},
         {"mean_captured_fraction", r.mean_captured_fraction},
         {"warnings", r.warnings}};
}

inline void from_json(const nlohmann::json& j, EnsembleResult& r) {
    r.z_samples = coherald::detail::json_vector(j.at("z_samples"));
    r.mean_ratio = coherald::detail::json_vector(j.at("mean_ratio"));
    r.stderr_ratio = coherald::detail::json_vector(j.at("stderr"));
    r.realization_count = j.at("realization_count").get<int>();
    r.master_seed = j.at("master_seed").get<std::uint64_t>();
    r.mean_captured_fraction = j.at("mean_captured_fraction").get<double>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
}

}  // namespace coherald::transport
