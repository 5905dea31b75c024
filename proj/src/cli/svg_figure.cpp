#include "mshear/cli/svg_figure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mshear/cli/problem_io.hpp"
#include "mshear/symmat.hpp"

namespace mshear::cli {

namespace {

constexpr double kWidth = 960;
constexpr double kHeight = 490;
constexpr double kPanel = 380;  // square plot area per panel
constexpr double kTop = 50;
constexpr double kLeftX = 50;
constexpr double kRightX = 540;
constexpr int kEllipsePoints = 96;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

// Three-stop viridis-like ramp, s in [0, 1].
std::string ramp(double s) {
    static constexpr std::array<std::array<double, 3>, 3> stops{{{68, 1, 84}, {33, 145, 140}, {253, 231, 37}}};
    s = std::clamp(s, 0.0, 1.0);
    const double x = s * 2.0;
    const int i = std::min(1, static_cast<int>(x));
    const double f = x - i;
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                  static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                  static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                  static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
    return buf;
}

// Points of {x : x^T Sigma^{-1} x = 1}, i.e. V diag(sqrt(s)) applied to the unit circle.
std::vector<std::array<double, 2>> ellipse(const Eigen::MatrixXd& sigma) {
    const auto eig = sym_eig(SymMatrixd(sigma));
    Eigen::Matrix2d axes = eig.vectors * eig.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    std::vector<std::array<double, 2>> pts;
    pts.reserve(kEllipsePoints);
    for (int k = 0; k < kEllipsePoints; ++k) {
        const double a = 2.0 * M_PI * k / kEllipsePoints;
        const Eigen::Vector2d p = axes * Eigen::Vector2d(std::cos(a), std::sin(a));
        pts.push_back({p(0), p(1)});
    }
    return pts;
}

std::size_t node_at(const std::vector<TrajectoryRecord>& records, double t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < records.size(); ++k)
        if (std::abs(records[k].t - t) < std::abs(records[best].t - t)) best = k;
    return best;
}

}  // namespace

std::string render_figure(const std::vector<TrajectoryRecord>& records, int frames) {
    if (records.empty()) throw InputError("figure: empty trajectory");
    if (records.front().sigma.rows() != 2) throw InputError("figure: rendering requires a planar (n = 2) trajectory");
    if (frames < 2) throw InputError("figure: at least two frames are required");

    // Left panel scale: largest half-extent over every drawn ellipse.
    std::vector<std::size_t> nodes;
    for (int k = 0; k < frames; ++k) nodes.push_back(node_at(records, static_cast<double>(k) / (frames - 1)));
    double extent = 0;
    for (const auto& r : records) extent = std::max({extent, std::sqrt(r.sigma(0, 0)), std::sqrt(r.sigma(1, 1))});
    extent *= 1.1;
    const double cx = kLeftX + kPanel / 2;
    const double cy = kTop + kPanel / 2;
    const double scale = (kPanel / 2) / extent;

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<metadata>Left: covariance ellipses drawn as the 1-sigma level set {x : x^T Sigma_t^{-1} x = 1} at "
        << frames << " equispaced times; Sigma_0 solid black, Sigma_1 dashed black. "
        << "Right: eigenvalues of A_t versus t.</metadata>\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
        << "<g font-family=\"sans-serif\" font-size=\"13\">\n";

    // Left panel.
    svg << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(kTop - 18) << "\" text-anchor=\"middle\">Covariance transport</text>\n"
        << "<rect x=\"" << fmt(kLeftX) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(kPanel) << "\" height=\""
        << fmt(kPanel) << "\" fill=\"none\" stroke=\"#888888\"/>\n"
        << "<line x1=\"" << fmt(kLeftX) << "\" y1=\"" << fmt(cy) << "\" x2=\"" << fmt(kLeftX + kPanel) << "\" y2=\""
        << fmt(cy) << "\" stroke=\"#dddddd\"/>\n"
        << "<line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(cx) << "\" y2=\""
        << fmt(kTop + kPanel) << "\" stroke=\"#dddddd\"/>\n";
    auto polygon = [&](const Eigen::MatrixXd& sigma, const std::string& stroke, double width, const char* extra) {
        svg << "<polygon fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width) << "\"" << extra
            << " points=\"";
        bool first = true;
        for (const auto& p : ellipse(sigma)) {
            svg << (first ? "" : " ") << fmt(cx + scale * p[0]) << "," << fmt(cy - scale * p[1]);
            first = false;
        }
        svg << "\"/>\n";
    };
    for (int k = 0; k < frames; ++k)
        polygon(records[nodes[static_cast<std::size_t>(k)]].sigma, ramp(static_cast<double>(k) / (frames - 1)), 1.2, "");
    polygon(records.front().sigma, "#000000", 2.0, "");
    polygon(records.back().sigma, "#000000", 2.0, " stroke-dasharray=\"6,4\"");
    svg << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(kTop + kPanel + 22) << "\" text-anchor=\"middle\">x1</text>\n"
        << "<text x=\"" << fmt(kLeftX - 14) << "\" y=\"" << fmt(cy) << "\" text-anchor=\"middle\">x2</text>\n";

    // Right panel: eigenvalue traces.
    double lo = records.front().eigs_a.minCoeff();
    double hi = records.front().eigs_a.maxCoeff();
    for (const auto& r : records) {
        lo = std::min(lo, r.eigs_a.minCoeff());
        hi = std::max(hi, r.eigs_a.maxCoeff());
    }
    const double pad = std::max(0.1 * (hi - lo), 0.1);
    lo -= pad;
    hi += pad;
    auto px = [&](double t) { return kRightX + kPanel * t; };
    auto py = [&](double v) { return kTop + kPanel * (hi - v) / (hi - lo); };

    svg << "<text x=\"" << fmt(kRightX + kPanel / 2) << "\" y=\"" << fmt(kTop - 18)
        << "\" text-anchor=\"middle\">Eigenvalues of A_t</text>\n"
        << "<rect x=\"" << fmt(kRightX) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(kPanel) << "\" height=\""
        << fmt(kPanel) << "\" fill=\"none\" stroke=\"#888888\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double t = 0.25 * k;
        svg << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << fmt(kTop + kPanel) << "\" x2=\"" << fmt(px(t)) << "\" y2=\""
            << fmt(kTop + kPanel + 5) << "\" stroke=\"#000000\"/>\n"
            << "<text x=\"" << fmt(px(t)) << "\" y=\"" << fmt(kTop + kPanel + 18) << "\" text-anchor=\"middle\">"
            << fmt_tick(t) << "</text>\n";
        const double v = lo + (hi - lo) * k / 4.0;
        svg << "<line x1=\"" << fmt(kRightX - 5) << "\" y1=\"" << fmt(py(v)) << "\" x2=\"" << fmt(kRightX) << "\" y2=\""
            << fmt(py(v)) << "\" stroke=\"#000000\"/>\n"
            << "<text x=\"" << fmt(kRightX - 8) << "\" y=\"" << fmt(py(v) + 4) << "\" text-anchor=\"end\">"
            << fmt_tick(v) << "</text>\n";
    }
    const Eigen::Index n = records.front().eigs_a.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        svg << "<polyline fill=\"none\" stroke=\"" << ramp(n > 1 ? static_cast<double>(i) / (n - 1) : 0.0)
            << "\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < records.size(); ++k)
            svg << (k ? " " : "") << fmt(px(records[k].t)) << "," << fmt(py(records[k].eigs_a(i)));
        svg << "\"/>\n";
    }
    svg << "<text x=\"" << fmt(kRightX + kPanel / 2) << "\" y=\"" << fmt(kTop + kPanel + 38)
        << "\" text-anchor=\"middle\">t</text>\n"
        << "<text x=\"" << fmt(kRightX - 48) << "\" y=\"" << fmt(kTop + kPanel / 2) << "\" text-anchor=\"middle\" "
        << "transform=\"rotate(-90 " << fmt(kRightX - 48) << " " << fmt(kTop + kPanel / 2)
        << ")\">eigenvalues of A_t</text>\n";

    svg << "</g>\n</svg>\n";
    return svg.str();
}

}  // namespace mshear::cli
