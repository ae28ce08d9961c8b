#include "disorder_stop/boundary.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

namespace dstop {

namespace {

std::string bracket_message(double t, double lower, double upper, double f_lower, double f_upper) {
    std::ostringstream os;
    os << "no sign change of F at t_k = " << t << ": F(" << lower << ") = " << f_lower << ", F("
       << upper << ") = " << f_upper;
    return os.str();
}

struct Sample {
    double x;
    IntegralEstimate f;
};

}  // namespace

BracketError::BracketError(double t, double lower, double upper, double f_lower, double f_upper)
    : std::runtime_error(bracket_message(t, lower, upper, f_lower, f_upper)),
      t_(t),
      f_lower_(f_lower),
      f_upper_(f_upper) {}

double terminal_value(const GenericStopProblem& problem) { return problem.gain(problem.horizon); }

BoundarySolution solve_boundary(const GenericStopProblem& problem, const Eigen::ArrayXd& grid,
                                const MonteCarloConfig& mc, const SolverOptions& options) {
    problem.validate();
    const Eigen::Index n = grid.size() - 1;
    if (n < 1) throw std::invalid_argument("solve_boundary: grid needs at least one step");
    if (grid(0) != 0.0 || std::abs(grid(n) - problem.horizon) > 1e-12 * problem.horizon)
        throw std::invalid_argument("solve_boundary: grid must cover [0, T]");

    BoundarySolution sol;
    sol.boundary.grid = grid;
    sol.boundary.values = Eigen::ArrayXd::Zero(n + 1);
    sol.nodes.resize(static_cast<std::size_t>(n));
    Eigen::ArrayXd& a = sol.boundary.values;
    a(n) = terminal_value(problem);

    for (Eigen::Index k = n - 1; k >= 0; --k) {
        const auto ku = static_cast<std::size_t>(k);
        const PathBatch batch =
            make_path_batch(mc.seed, solver_stream(ku), mc.n_paths, tail_grid(grid, ku), mc.threads);
        const VolterraKernel kernel(problem, grid, ku, batch, mc.threads);
        NodeDiagnostics& diag = sol.nodes[ku];
        diag.t = grid(k);

        // the candidate is the boundary value at t_k itself
        auto F = [&](double x) {
            ++diag.evaluations;
            return Sample{x, kernel.evaluate(x, a, 0.5)};
        };

        Sample lo = F(std::max(problem.gain(grid(k)), a(k + 1)));
        if (lo.f.value <= 0.0) {
            a(k) = lo.x;
            diag.clamped = true;
            ++sol.clamp_count;
        } else {
            Sample hi = F(std::max(a(k + 1) + 1.0, 2.0 * lo.x));
            for (int d = 0; hi.f.value > 0.0; ++d) {
                if (d >= options.max_doublings)
                    throw BracketError(grid(k), lo.x, hi.x, lo.f.value, hi.f.value);
                hi = F(2.0 * hi.x);
            }

            // coarse scan; keep the largest sign change
            std::vector<Sample> scan{lo};
            for (int i = 1; i <= options.scan_points; ++i)
                scan.push_back(F(lo.x + (hi.x - lo.x) * i / (options.scan_points + 1)));
            scan.push_back(hi);
            int changes = 0;
            std::size_t last = 0;
            for (std::size_t i = 0; i + 1 < scan.size(); ++i) {
                if (scan[i].f.value > 0.0 && scan[i + 1].f.value <= 0.0) {
                    ++changes;
                    last = i;
                }
            }
            if (changes > 1) {
                diag.non_monotone = true;
                std::ostringstream os;
                os << "F is not monotone at t_k = " << grid(k) << " (" << changes
                   << " sign changes on the scan); taking the largest";
                sol.warnings.push_back(os.str());
            }
            lo = scan[last];
            hi = scan[last + 1];

            double root = 0.5 * (lo.x + hi.x);
            while (hi.x - lo.x > options.x_tolerance) {
                const Sample mid = F(0.5 * (lo.x + hi.x));
                root = mid.x;
                if (options.noise_floor_stop && std::abs(mid.f.value) < mid.f.std_error) break;
                if (mid.f.value > 0.0)
                    lo = mid;
                else
                    hi = mid;
                root = 0.5 * (lo.x + hi.x);
            }
            a(k) = root;
        }
        if (a(k) < options.zero_floor) a(k) = 0.0;
        // bracket starts at a(t_{k+1}); keep the clamp explicit against rounding
        a(k) = std::max(a(k), a(k + 1));

        const IntegralEstimate at_root = kernel.evaluate(a(k), a, 0.5);
        diag.level = a(k);
        diag.residual = at_root.value;
        diag.std_error = at_root.std_error;
    }
    return sol;
}

ResidualReport boundary_residuals(const GenericStopProblem& problem, const Boundary& boundary,
                                  const MonteCarloConfig& mc) {
    const Eigen::Index n = boundary.grid.size() - 1;
    ResidualReport report;
    report.residuals.reserve(static_cast<std::size_t>(std::max<Eigen::Index>(n, 0)));
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const PathBatch batch = make_path_batch(mc.seed, solver_stream(ku), mc.n_paths,
                                                tail_grid(boundary.grid, ku), mc.threads);
        const VolterraKernel kernel(problem, boundary.grid, ku, batch, mc.threads);
        const IntegralEstimate est = kernel.evaluate(boundary.values(k), boundary.values, 0.5);
        if (std::abs(est.value) <= 3.0 * est.std_error) ++report.within;
        report.residuals.push_back(est);
    }
    return report;
}

double max_boundary_difference(const Boundary& coarse, const Boundary& fine) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < coarse.grid.size(); ++k)
        worst = std::max(worst, std::abs(fine.at(coarse.grid(k)) - coarse.values(k)));
    return worst;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_boundary_csv(std::ostream& out, const Boundary& boundary) {
    out << "t,a\n";
    for (Eigen::Index k = 0; k < boundary.grid.size(); ++k)
        out << format_double(boundary.grid(k)) << ',' << format_double(boundary.values(k)) << '\n';
}

Boundary read_boundary_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CsvError("boundary CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,a") throw CsvError("boundary CSV must start with header 't,a'");

    std::vector<double> ts;
    std::vector<double> as;
    std::size_t row = 1;
    auto parse = [&](std::string_view field, const char* what) {
        double v = 0.0;
        const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
        if (res.ec != std::errc{} || res.ptr != field.data() + field.size() || !std::isfinite(v))
            throw CsvError("row " + std::to_string(row) + ": malformed " + what + " '" +
                           std::string(field) + "'");
        return v;
    };
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw CsvError("row " + std::to_string(row) + ": expected two columns");
        const std::string_view view(line);
        ts.push_back(parse(view.substr(0, comma), "t"));
        as.push_back(parse(view.substr(comma + 1), "a"));
        if (ts.size() > 1 && !(ts.back() > ts[ts.size() - 2]))
            throw CsvError("row " + std::to_string(row) + ": t must be strictly increasing");
    }
    if (ts.size() < 2) throw CsvError("boundary CSV needs at least two rows");
    Boundary b;
    b.grid = Eigen::Map<const Eigen::ArrayXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
    b.values = Eigen::Map<const Eigen::ArrayXd>(as.data(), static_cast<Eigen::Index>(as.size()));
    return b;
}

void save_boundary_csv(const std::string& path, const Boundary& boundary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_boundary_csv(out, boundary);
}

Boundary load_boundary_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError("cannot open '" + path + "'");
    return read_boundary_csv(in);
}

}  // namespace dstop
