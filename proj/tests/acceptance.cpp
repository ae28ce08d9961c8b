// Acceptance suite: one PASS/FAIL line per criterion, Figure-1 configuration
// (mu1 = 1, mu2 = -1, sigma = 1, T = 1, G(t) = t). Tolerances are fixed here.

#include "disorder_stop/boundary.hpp"
#include "disorder_stop/expectation.hpp"
#include "disorder_stop/model.hpp"
#include "disorder_stop/simulate.hpp"
#include "disorder_stop/validate.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace dstop;

namespace {

constexpr std::uint64_t kSeed = 42;
constexpr std::size_t kSolvePaths = 20000;     // solver default
constexpr std::size_t kCheckPaths = 200000;    // validation passes
constexpr std::size_t kEulerPaths = 1000;
constexpr double kSigmas = 3.0;
constexpr double kResidualFraction = 0.95;
constexpr double kEulerRatio = 2.0;

const DisorderModel kModel{1.0, -1.0, 1.0, 1.0};
const UniformPrior kPrior{0.0, 1.0, 1.0};

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << ": " << detail << std::endl;
    if (!pass) ++failures;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(5);
    os << v;
    return os.str();
}

void print_check(const CheckResult& c) {
    std::cout << "  " << (c.pass ? "ok  " : "bad ") << c.name << ": " << fmt(c.lhs) << " +- "
              << fmt(c.lhs_std_error) << " vs " << fmt(c.rhs) << " +- " << fmt(c.rhs_std_error) << "\n";
}

MonteCarloConfig mc(std::size_t n_paths) {
    MonteCarloConfig c;
    c.seed = kSeed;
    c.n_paths = n_paths;
    return c;
}

struct Solved {
    BoundarySolution linear;
    BoundarySolution geometric;
};

Solved solve_both(std::size_t steps) {
    const auto grid = uniform_grid(kModel.horizon(), steps);
    const auto t0 = std::chrono::steady_clock::now();
    Solved s{solve_boundary(make_linear_problem(kModel, kPrior), grid, mc(kSolvePaths)),
             solve_boundary(make_geometric_problem(kModel, kPrior), grid, mc(kSolvePaths))};
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "  solved both boundaries on " << steps << " steps in " << fmt(secs) << " s\n";
    return s;
}

bool terminal_values() {
    const double lin = terminal_value(make_linear_problem(kModel, kPrior));
    const double geo = terminal_value(make_geometric_problem(kModel, kPrior));
    report(1, lin == 0.5 && geo == 0.0, "a_linear(T) = " + fmt(lin) + ", a_geometric(T) = " + fmt(geo));
    return true;
}

void shape(const Solved& s) {
    bool pass = true;
    std::string detail;
    for (const auto* sol : {&s.linear, &s.geometric}) {
        const bool linear = sol == &s.linear;
        const auto problem = linear ? make_linear_problem(kModel, kPrior) : make_geometric_problem(kModel, kPrior);
        const Boundary& b = sol->boundary;
        const Eigen::Index n = b.values.size() - 1;
        bool monotone = true;
        bool above_gain = true;
        for (Eigen::Index k = 0; k < n; ++k) {
            monotone = monotone && b.values(k + 1) <= b.values(k);
            above_gain = above_gain && b.values(k) >= problem.gain(b.grid(k));
        }
        const bool end_ok = b.values(n) == (linear ? 0.5 : 0.0);
        pass = pass && monotone && above_gain && end_ok;
        detail += std::string(linear ? "linear" : "geometric") + " a(0) = " + fmt(b.values(0)) +
                  ", a(T) = " + fmt(b.values(n)) + (monotone ? "" : " NOT nonincreasing") +
                  (above_gain ? "" : " BELOW gain") + "; ";
    }
    report(2, pass, detail + "200 steps, " + std::to_string(kSolvePaths) + " paths");
}

void lemma(const Eigen::ArrayXd& grid) {
    const auto rules = default_lemma_rules(grid);
    bool pass = true;
    std::size_t total = 0;
    std::size_t ok = 0;
    std::string anchors;
    for (ProblemKind kind : {ProblemKind::linear, ProblemKind::geometric}) {
        const auto checks = lemma_identity_suite(kModel, kPrior, grid, rules, kind, mc(kCheckPaths));
        for (const auto& c : checks) {
            print_check(c);
            ++total;
            if (c.pass) ++ok;
            pass = pass && c.pass;
            if (kind != ProblemKind::linear) continue;
            const double target = c.name == "lemma.linear.tau=1" ? 0.0 : c.name == "lemma.linear.tau=0.5" ? 0.25 : -1.0;
            if (target < 0.0) continue;
            const bool hit = std::abs(c.lhs - target) <= kSigmas * c.lhs_std_error;
            std::cout << "  anchor " << c.name << ": " << fmt(c.lhs) << " vs " << fmt(target)
                      << (hit ? " ok" : " bad") << "\n";
            anchors += (hit ? "" : " anchor " + c.name + " missed;");
            pass = pass && hit;
        }
    }
    report(3, pass, std::to_string(ok) + "/" + std::to_string(total) + " identities within 3 se;" +
                        (anchors.empty() ? " anchors reproduced" : anchors));
}

void value_consistency(const Solved& s) {
    const CheckResult lin = value_consistency_check(kModel, kPrior, s.linear.boundary, ProblemKind::linear, mc(kCheckPaths));
    const CheckResult geo = value_consistency_check(kModel, kPrior, s.geometric.boundary, ProblemKind::geometric, mc(kCheckPaths));
    print_check(lin);
    print_check(geo);
    const bool lin_range = lin.lhs >= 0.0 && lin.lhs <= 0.5 + kSigmas * lin.lhs_std_error;
    const bool geo_range = geo.lhs >= 1.0 - kSigmas * geo.lhs_std_error;
    report(4, lin.pass && geo.pass && lin_range && geo_range,
           "V_linear = " + fmt(lin.lhs) + " vs policy " + fmt(lin.rhs) + (lin.pass ? "" : " (mismatch)") +
               (lin_range ? "" : " (out of range)") + "; V_geometric = " + fmt(geo.lhs) + " vs policy " +
               fmt(geo.rhs) + (geo.pass ? "" : " (mismatch)") + (geo_range ? "" : " (below 1)"));
}

void dominance(const Solved& s) {
    bool pass = true;
    std::string detail;
    for (const auto* sol : {&s.linear, &s.geometric}) {
        const ProblemKind kind = sol == &s.linear ? ProblemKind::linear : ProblemKind::geometric;
        const DominanceReport r = dominance_check(kModel, kPrior, sol->boundary, kind,
                                                  default_alternatives(sol->boundary), mc(kCheckPaths));
        for (const auto& c : r.checks) print_check(c);
        std::size_t beaten = 0;
        for (const auto& c : r.checks)
            if (!c.pass) ++beaten;
        pass = pass && r.pass();
        detail += std::string(to_string(kind)) + " solved payoff " + fmt(r.solved.payoff) + ", " +
                  std::to_string(beaten) + " alternative(s) significantly better; ";
    }
    report(5, pass, detail);
}

void dichotomy(const Solved& coarse, const Solved& fine) {
    const DichotomyReport c = dichotomy_check(kModel, kPrior, coarse.linear.boundary, coarse.geometric.boundary, mc(kCheckPaths));
    const DichotomyReport f = dichotomy_check(kModel, kPrior, fine.linear.boundary, fine.geometric.boundary, mc(kCheckPaths));
    const bool shrinking = f.fraction_geometric_at_horizon <= c.fraction_geometric_at_horizon;
    report(6, f.pass() && shrinking,
           "P(tau_g = T) = " + fmt(c.fraction_geometric_at_horizon) + " (200 steps) -> " +
               fmt(f.fraction_geometric_at_horizon) + " (400 steps), P(tau_l = T) = " +
               fmt(f.fraction_linear_at_horizon) + " (400 steps)");
}

// Euler-Maruyama for d psi = (rho + b psi) dt - mu psi dB.
Eigen::ArrayXd euler_path(const GenericStopProblem& p, double x0, const Eigen::ArrayXd& grid,
                          const Eigen::ArrayXd& db) {
    Eigen::ArrayXd out(grid.size());
    out(0) = x0;
    for (Eigen::Index k = 1; k < grid.size(); ++k) {
        const double x = out(k - 1);
        out(k) = x + (p.rho + p.b * x) * (grid(k) - grid(k - 1)) - p.mu * x * db(k - 1);
    }
    return out;
}

double euler_ratio() {
    const auto p = make_linear_problem(kModel, kPrior);
    constexpr Eigen::Index fine = 800;
    const PathBatch batch = make_path_batch(kSeed, kValueStream + 1, kEulerPaths, uniform_grid(1.0, fine));
    double sq[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < kEulerPaths; ++i) {
        const Eigen::ArrayXd db = batch.increments.col(static_cast<Eigen::Index>(i));
        for (int j = 0; j < 2; ++j) {
            const Eigen::Index steps = j == 0 ? 50 : 200;
            const Eigen::Index factor = fine / steps;
            Eigen::ArrayXd dbc(steps);
            for (Eigen::Index s = 0; s < steps; ++s) dbc(s) = db.segment(s * factor, factor).sum();
            const auto grid = uniform_grid(1.0, static_cast<std::size_t>(steps));
            const double d = psi_path_exact(p, p.psi0, grid, dbc).values(steps) - euler_path(p, p.psi0, grid, dbc)(steps);
            sq[j] += d * d;
        }
    }
    return std::sqrt(sq[0] / sq[1]);
}

void self_consistency(const Solved& s) {
    const ResidualReport lin = boundary_residuals(make_linear_problem(kModel, kPrior), s.linear.boundary, mc(kSolvePaths));
    const ResidualReport geo = boundary_residuals(make_geometric_problem(kModel, kPrior), s.geometric.boundary, mc(kSolvePaths));
    const double ratio = euler_ratio();
    const bool pass = lin.fraction_within() >= kResidualFraction && geo.fraction_within() >= kResidualFraction &&
                      ratio >= kEulerRatio;
    report(7, pass,
           "residuals within 3 se: linear " + fmt(lin.fraction_within()) + ", geometric " +
               fmt(geo.fraction_within()) + "; Euler RMS ratio 1/50 -> 1/200 = " + fmt(ratio) + " (need >= 2)");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "dstop_acceptance";
    std::filesystem::create_directories(dir);
    const auto grid = uniform_grid(kModel.horizon(), 50);
    const auto problem = make_geometric_problem(kModel, kPrior);
    std::string csv[2];
    std::string json[2];
    for (int run = 0; run < 2; ++run) {
        const auto path = dir / ("boundary" + std::to_string(run) + ".csv");
        const Boundary b = solve_boundary(problem, grid, mc(kSolvePaths)).boundary;
        save_boundary_csv(path.string(), b);
        csv[run] = slurp(path);
        std::vector<CheckResult> checks = lemma_identity_suite(kModel, kPrior, grid, default_lemma_rules(grid),
                                                               ProblemKind::geometric, mc(20000));
        checks.push_back(value_consistency_check(kModel, kPrior, b, ProblemKind::geometric, mc(20000)));
        const auto jpath = dir / ("report" + std::to_string(run) + ".json");
        std::ofstream(jpath, std::ios::binary) << report_json(checks);
        json[run] = slurp(jpath);
    }
    std::filesystem::remove_all(dir);
    report(8, csv[0] == csv[1] && json[0] == json[1] && !csv[0].empty(),
           std::string("boundary CSV ") + (csv[0] == csv[1] ? "identical" : "differs") + ", report JSON " +
               (json[0] == json[1] ? "identical" : "differs"));
}

}  // namespace

int main() {
    try {
        terminal_values();
        const Solved s200 = solve_both(200);
        shape(s200);
        lemma(s200.linear.boundary.grid);
        value_consistency(s200);
        dominance(s200);
        const Solved s400 = solve_both(400);
        dichotomy(s200, s400);
        self_consistency(s200);
        determinism();
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
        return 1;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
