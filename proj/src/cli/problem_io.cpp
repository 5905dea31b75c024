#include "mshear/cli/problem_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace mshear::cli {

namespace {

using nlohmann::json;

double positive_number(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) throw InputError(std::string("missing numeric field '") + key + "'");
    const double v = j.at(key).get<double>();
    if (!(v > 0) || !std::isfinite(v)) throw InputError(std::string("field '") + key + "' must be positive and finite");
    return v;
}

int positive_int(const json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer() || j.at(key).get<long long>() < 1)
        throw InputError(std::string("field '") + key + "' must be a positive integer");
    return static_cast<int>(j.at(key).get<long long>());
}

// Square, finite, symmetric within 1e-9 (relative to the largest entry).
Eigen::MatrixXd symmetric_matrix(const json& j, const char* key) {
    Eigen::MatrixXd m = matrix_from_json(j, key);
    if (m.rows() != m.cols()) {
        std::ostringstream os;
        os << "'" << key << "' must be square, got " << m.rows() << "x" << m.cols();
        throw InputError(os.str());
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw InputError(std::string("'") + key + "' violates the symmetry invariant (|a_ij - a_ji| > 1e-9)");
    return 0.5 * (m + m.transpose());
}

void require_spd(const Eigen::MatrixXd& m, const char* key) {
    try {
        SpdMatrixd check(m);
    } catch (const ValidationError& e) {
        throw InputError(std::string("'") + key + "' violates the positive-definiteness invariant: " + e.what());
    }
}

}  // namespace

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open input file '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("parse error in '" + path.string() + "': " + e.what());
    }
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* key) {
    if (!j.contains(key)) throw InputError(std::string("missing matrix field '") + key + "'");
    const json& rows = j.at(key);
    if (!rows.is_array() || rows.empty()) throw InputError(std::string("'") + key + "' must be a non-empty array of rows");
    const auto r = static_cast<Eigen::Index>(rows.size());
    if (!rows.front().is_array() || rows.front().empty())
        throw InputError(std::string("'") + key + "' rows must be non-empty arrays");
    const auto c = static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const json& row = rows.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c)
            throw InputError(std::string("'") + key + "' has ragged rows");
        for (Eigen::Index k = 0; k < c; ++k) {
            const json& v = row.at(static_cast<std::size_t>(k));
            if (!v.is_number()) throw InputError(std::string("'") + key + "' has a non-numeric entry");
            m(i, k) = v.get<double>();
        }
    }
    if (!m.allFinite()) throw InputError(std::string("'") + key + "' has non-finite entries");
    return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

ProblemFile parse_problem(const json& j) {
    if (!j.is_object()) throw InputError("problem file must be a JSON object");
    ProblemFile f;
    f.theta = positive_number(j, "theta");
    f.sigma0 = symmetric_matrix(j, "sigma0");
    f.sigma1 = symmetric_matrix(j, "sigma1");
    if (f.sigma0.rows() != f.sigma1.rows()) throw InputError("'sigma0' and 'sigma1' dimensions differ");
    require_spd(f.sigma0, "sigma0");
    require_spd(f.sigma1, "sigma1");
    f.steps = positive_int(j, "steps", 1000);
    if (j.contains("shooting")) {
        const json& s = j.at("shooting");
        if (!s.is_object()) throw InputError("'shooting' must be an object");
        if (s.contains("residual_tol")) f.shooting.residual_tol = positive_number(s, "residual_tol");
        if (s.contains("fd_step")) f.shooting.fd_step = positive_number(s, "fd_step");
        if (s.contains("lm_damping_init")) f.shooting.lm_damping_init = positive_number(s, "lm_damping_init");
        f.shooting.max_outer_iter = positive_int(s, "max_outer_iter", f.shooting.max_outer_iter);
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer() || j.at("seed").get<long long>() < 0)
            throw InputError("'seed' must be a non-negative integer");
        f.seed = j.at("seed").get<std::uint64_t>();
    }
    return f;
}

SimulationFile parse_simulation(const json& j) {
    if (!j.is_object()) throw InputError("simulation file must be a JSON object");
    SimulationFile f;
    f.theta = positive_number(j, "theta");
    f.sigma0 = symmetric_matrix(j, "sigma0");
    f.lambda0 = symmetric_matrix(j, "lambda0");
    if (f.sigma0.rows() != f.lambda0.rows()) throw InputError("'sigma0' and 'lambda0' dimensions differ");
    require_spd(f.sigma0, "sigma0");
    f.steps = positive_int(j, "steps", 1000);
    return f;
}

ProblemInstanced make_instance(const ProblemFile& f) {
    try {
        return ProblemInstanced(SpdMatrixd(f.sigma0), SpdMatrixd(f.sigma1), CostParamsd(f.theta));
    } catch (const ValidationError& e) {
        throw InputError(e.what());
    }
}

}  // namespace mshear::cli
