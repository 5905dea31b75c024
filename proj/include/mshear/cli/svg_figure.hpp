#ifndef MSHEAR_CLI_SVG_FIGURE_HPP
#define MSHEAR_CLI_SVG_FIGURE_HPP

#include <string>
#include <vector>

#include "mshear/cli/trajectory_io.hpp"

namespace mshear::cli {

// Two-panel SVG for planar (n = 2) trajectories: 1-sigma covariance ellipses
// at `frames` equispaced times on the left, eigenvalue traces of A_t on the
// right. Throws InputError for n != 2.
std::string render_figure(const std::vector<TrajectoryRecord>& records, int frames = 12);

}  // namespace mshear::cli

#endif  // MSHEAR_CLI_SVG_FIGURE_HPP
