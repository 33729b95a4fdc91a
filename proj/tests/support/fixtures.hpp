#pragma once

#include <filesystem>
#include <random>

#include "ofmpc/config.hpp"

namespace ofmpc::testing {

inline std::filesystem::path config_dir() { return OFMPC_CONFIG_DIR; }

inline RunConfig reference_config() { return load_config(config_dir() / "cstr_reference.json"); }

inline Matrix random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = normal(gen);
        }
    }
    return m;
}

inline Vector random_vector(std::mt19937_64& gen, Eigen::Index n) {
    return random_matrix(gen, n, 1).col(0);
}

inline Box unbounded(Eigen::Index n) {
    const double inf = std::numeric_limits<double>::infinity();
    return {Vector::Constant(n, -inf), Vector::Constant(n, inf)};
}

} // namespace ofmpc::testing
