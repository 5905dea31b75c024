#ifndef MSHEAR_CLI_TRAJECTORY_IO_HPP
#define MSHEAR_CLI_TRAJECTORY_IO_HPP

#include <iosfwd>
#include <vector>

#include <optional>

#include "mshear/dynamics.hpp"
#include "mshear/steering.hpp"

namespace mshear::cli {

/// One grid node of a persisted trajectory. Matrices are stored row-major in
/// full; `theta` is carried on every line so the file verifies on its own.
struct TrajectoryRecord {
    double t = 0;
    Eigen::MatrixXd sigma;
    Eigen::MatrixXd a;
    Eigen::MatrixXd m;
    Eigen::MatrixXd omega;
    Eigen::VectorXd eigs_a;
    double det_sigma = 0;
    double g_theta = 0;
    double theta = 0;
};

std::vector<TrajectoryRecord> make_records(const Trajectoryd& traj, double theta);

/// Line-delimited JSON, one object per node, in grid order.
void write_records(std::ostream& os, const std::vector<TrajectoryRecord>& records);

/// Throws InputError on malformed lines, inconsistent shapes, or a time grid
/// that is not strictly increasing from 0 to 1.
std::vector<TrajectoryRecord> read_records(std::istream& is);

struct RecordTolerances {
    double determinant = 1e-8;
    double drift = 1e-8;
    double stationarity = 1e-9;
    double consistency = 1e-9;

    /// Every threshold replaced by one value.
    static RecordTolerances uniform(double tol) { return {tol, tol, tol, tol}; }
};

/// Checks that need nothing beyond the records: determinant constancy,
/// spectrum drift of A, M and M + Omega, stationarity of (A, M), and agreement
/// of the stored diagnostics with the stored matrices. Each check names the
/// node with the worst value.
VerificationReport verify_records(const std::vector<TrajectoryRecord>& records, const RecordTolerances& tol = {});

}  // namespace mshear::cli

#endif  // MSHEAR_CLI_TRAJECTORY_IO_HPP
