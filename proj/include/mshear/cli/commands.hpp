#ifndef MSHEAR_CLI_COMMANDS_HPP
#define MSHEAR_CLI_COMMANDS_HPP

#include <iosfwd>
#include <optional>
#include <string>

namespace mshear::cli {

enum ExitCode : int {
    kSuccess = 0,
    kInvalidInput = 2,
    kNotConverged = 3,
    kVerificationFailed = 4,
    kIntegrationFailed = 5,
};

struct SolveOptions {
    std::string input;
    std::string output;
    std::optional<std::string> svg;
    std::optional<int> steps;
    std::optional<double> theta;
};

struct VerifyOptions {
    std::string trajectory;
    std::optional<double> tol;
};

struct FigureOptions {
    std::string trajectory;
    std::string svg;
    int frames = 12;
};

// Each command writes its structured summary to `out`, diagnostics to `err`,
// and returns one of the ExitCode values.
int cmd_solve(const SolveOptions& opts, std::ostream& out, std::ostream& err);
int cmd_baseline(const std::string& input, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::string& input, const std::string& output, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err);
int cmd_figure(const FigureOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace mshear::cli

#endif  // MSHEAR_CLI_COMMANDS_HPP
