#ifndef MSHEAR_CLI_PROBLEM_IO_HPP
#define MSHEAR_CLI_PROBLEM_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "mshear/steering.hpp"

namespace mshear::cli {

/// Any defect in a user-supplied file: parse errors, shapes, invariants.
class InputError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Problem input: boundary covariances, sharpness and solver knobs.
struct ProblemFile {
    double theta = 1.0;
    Eigen::MatrixXd sigma0;
    Eigen::MatrixXd sigma1;
    int steps = 1000;
    ShootingConfig shooting{};
    std::optional<std::uint64_t> seed;
};

/// Forward-simulation input: Sigma0 and the initial costate Lambda0.
struct SimulationFile {
    double theta = 1.0;
    Eigen::MatrixXd sigma0;
    Eigen::MatrixXd lambda0;
    int steps = 1000;
};

nlohmann::json load_json(const std::filesystem::path& path);

ProblemFile parse_problem(const nlohmann::json& j);
SimulationFile parse_simulation(const nlohmann::json& j);

/// Builds the validated instance; throws InputError naming the violated invariant.
ProblemInstanced make_instance(const ProblemFile& f);

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* key);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);

}  // namespace mshear::cli

#endif  // MSHEAR_CLI_PROBLEM_IO_HPP
