#include "mshear/cli/trajectory_io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mshear/cli/problem_io.hpp"

namespace mshear::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json flat(const Eigen::MatrixXd& m) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index k = 0; k < m.cols(); ++k) arr.push_back(m(i, k));
    return arr;
}

Eigen::VectorXd numbers(const ordered_json& j, const char* key, std::size_t line) {
    if (!j.contains(key) || !j.at(key).is_array()) {
        std::ostringstream os;
        os << "trajectory line " << line << ": missing array field '" << key << "'";
        throw InputError(os.str());
    }
    const auto& arr = j.at(key);
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) {
            std::ostringstream os;
            os << "trajectory line " << line << ": non-numeric entry in '" << key << "'";
            throw InputError(os.str());
        }
        v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd square(const ordered_json& j, const char* key, Eigen::Index n, std::size_t line) {
    const Eigen::VectorXd v = numbers(j, key, line);
    if (v.size() != n * n) {
        std::ostringstream os;
        os << "trajectory line " << line << ": '" << key << "' has " << v.size() << " entries, expected " << n * n;
        throw InputError(os.str());
    }
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k) m(i, k) = v(i * n + k);
    return m;
}

double number(const ordered_json& j, const char* key, std::size_t line) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        std::ostringstream os;
        os << "trajectory line " << line << ": missing numeric field '" << key << "'";
        throw InputError(os.str());
    }
    return j.at(key).get<double>();
}

}  // namespace

std::vector<TrajectoryRecord> make_records(const Trajectoryd& traj, double theta) {
    std::vector<TrajectoryRecord> out;
    out.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        TrajectoryRecord r;
        r.t = traj.times[k];
        r.sigma = traj.states[k].sigma.matrix();
        r.a = traj.controls[k].matrix();
        r.m = traj.states[k].m.matrix();
        r.omega = traj.states[k].omega.matrix();
        r.eigs_a = traj.diagnostics[k].eig_a;
        r.det_sigma = traj.diagnostics[k].det_sigma;
        r.g_theta = traj.diagnostics[k].g_theta;
        r.theta = theta;
        out.push_back(std::move(r));
    }
    return out;
}

void write_records(std::ostream& os, const std::vector<TrajectoryRecord>& records) {
    for (const auto& r : records) {
        ordered_json j;
        j["t"] = r.t;
        j["sigma"] = flat(r.sigma);
        j["a"] = flat(r.a);
        j["m"] = flat(r.m);
        j["omega"] = flat(r.omega);
        j["eigs_a"] = flat(r.eigs_a);
        j["det_sigma"] = r.det_sigma;
        j["g_theta"] = r.g_theta;
        j["theta"] = r.theta;
        os << j.dump() << '\n';
    }
}

std::vector<TrajectoryRecord> read_records(std::istream& is) {
    std::vector<TrajectoryRecord> out;
    std::string text;
    std::size_t line = 0;
    Eigen::Index n = 0;
    while (std::getline(is, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            std::ostringstream os;
            os << "trajectory line " << line << ": " << e.what();
            throw InputError(os.str());
        }
        if (!j.is_object()) {
            std::ostringstream os;
            os << "trajectory line " << line << ": expected an object";
            throw InputError(os.str());
        }
        TrajectoryRecord r;
        r.eigs_a = numbers(j, "eigs_a", line);
        if (n == 0) n = r.eigs_a.size();
        if (n == 0 || r.eigs_a.size() != n) {
            std::ostringstream os;
            os << "trajectory line " << line << ": inconsistent dimension";
            throw InputError(os.str());
        }
        r.t = number(j, "t", line);
        r.sigma = square(j, "sigma", n, line);
        r.a = square(j, "a", n, line);
        r.m = square(j, "m", n, line);
        r.omega = square(j, "omega", n, line);
        r.det_sigma = number(j, "det_sigma", line);
        r.g_theta = number(j, "g_theta", line);
        r.theta = number(j, "theta", line);
        if (!(r.theta > 0)) {
            std::ostringstream os;
            os << "trajectory line " << line << ": theta must be positive";
            throw InputError(os.str());
        }
        if (!out.empty() && !(r.t > out.back().t)) {
            std::ostringstream os;
            os << "trajectory line " << line << ": times must be strictly increasing";
            throw InputError(os.str());
        }
        out.push_back(std::move(r));
    }
    if (out.size() < 2) throw InputError("trajectory must contain at least two records");
    if (out.front().t != 0.0 || out.back().t != 1.0) throw InputError("trajectory times must start at 0 and end at 1");
    return out;
}

namespace {

// Max over nodes of value(k), remembering the node.
template <typename F>
std::pair<double, std::size_t> worst_over(std::size_t count, F&& value) {
    double worst = 0;
    std::size_t node = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double v = value(k);
        if (!(v <= worst)) {  // NaN counts as worst
            worst = v;
            node = k;
        }
    }
    return {worst, node};
}

}  // namespace

VerificationReport verify_records(const std::vector<TrajectoryRecord>& records, const RecordTolerances& tol) {
    VerificationReport rep;
    const std::size_t count = records.size();
    auto add = [&](const char* name, std::pair<double, std::size_t> worst, double threshold) {
        rep.checks.push_back(Check{name, worst.first, threshold, worst.first <= threshold, false, worst.second});
    };

    std::vector<Eigen::VectorXd> eig_a(count), eig_m(count), lax(count);
    std::vector<double> det(count);
    for (std::size_t k = 0; k < count; ++k) {
        const auto& r = records[k];
        const auto sig = sym_eig(SymMatrixd(r.sigma));
        det[k] = sig.values.prod();
        eig_a[k] = sym_eig(SymMatrixd(r.a)).values;
        eig_m[k] = sym_eig(SymMatrixd(r.m)).values;
        lax[k] = charpoly_coefficients<double>(r.m + r.omega);
    }

    add("determinant_constancy", worst_over(count, [&](std::size_t k) { return std::abs(det[k] / det[0] - 1.0); }),
        tol.determinant);
    add("spectrum_drift_a",
        worst_over(count, [&](std::size_t k) { return (eig_a[k] - eig_a[0]).cwiseAbs().maxCoeff(); }), tol.drift);
    add("spectrum_drift_m",
        worst_over(count, [&](std::size_t k) { return (eig_m[k] - eig_m[0]).cwiseAbs().maxCoeff(); }), tol.drift);
    add("spectrum_drift_l", worst_over(count, [&](std::size_t k) { return (lax[k] - lax[0]).cwiseAbs().maxCoeff(); }),
        tol.drift);
    add("stationarity", worst_over(count, [&](std::size_t k) {
            const CostParamsd p(records[k].theta);
            const TracelessSymd a(records[k].a);
            return (records[k].m - momentum_from_control(a, p).matrix()).norm();
        }),
        tol.stationarity);
    add("record_consistency", worst_over(count, [&](std::size_t k) {
            const auto& r = records[k];
            const double g = spectral::soft_diameter<double>(eig_a[k], r.theta);
            return std::max({std::abs(r.det_sigma - det[k]) / std::abs(det[k]), (r.eigs_a - eig_a[k]).cwiseAbs().maxCoeff(),
                             std::abs(r.g_theta - g) / g, std::abs(r.theta - records[0].theta)});
        }),
        tol.consistency);
    return rep;
}

}  // namespace mshear::cli
