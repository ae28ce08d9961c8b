#include "disorder_stop/boundary.hpp"
#include "disorder_stop/expectation.hpp"
#include "disorder_stop/model.hpp"
#include "disorder_stop/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

using namespace dstop;

namespace {

const DisorderModel kFig{1.0, -1.0, 1.0, 1.0};
const UniformPrior kUniform{0.0, 1.0, 1.0};

// Root at node k of the linear equation written in the original units,
// int E[(mu1 - (mu1 - mu2) psi) 1{psi < a}] = 0, by plain bisection.
double verbatim_linear_root(const DisorderModel& model, const GenericStopProblem& p,
                            const Boundary& b, std::size_t k, const MonteCarloConfig& mc) {
    const auto tail = tail_grid(b.grid, k);
    const Eigen::Index m = tail.size() - 1;
    const PathBatch batch = make_path_batch(mc.seed, solver_stream(k), mc.n_paths, tail, 1);
    const auto ki = static_cast<Eigen::Index>(k);
    auto G = [&](double x) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < batch.increments.cols(); ++i) {
            const auto psi = psi_path_exact(p, x, tail, batch.increments.col(i)).values;
            double acc = 0.0;
            for (Eigen::Index j = 0; j <= m; ++j) {
                const double left = j > 0 ? tail(j) - tail(j - 1) : 0.0;
                const double right = j < m ? tail(j + 1) - tail(j) : 0.0;
                const double ind = j == 0 ? 0.5 : (psi(j) < b.values(ki + j) ? 1.0 : 0.0);
                acc += 0.5 * (left + right) * (model.mu1() - (model.mu1() - model.mu2()) * psi(j)) * ind;
            }
            total += acc;
        }
        return total / static_cast<double>(batch.increments.cols());
    };
    // same bracket, scan and bisection as the solver, different integrand
    double lo = std::max(p.gain(b.grid(ki)), b.values(ki + 1));
    double g_lo = G(lo);
    if (g_lo <= 0.0) return lo;
    double hi = std::max(b.values(ki + 1) + 1.0, 2.0 * lo);
    while (G(hi) > 0.0) hi *= 2.0;
    std::vector<double> xs{lo};
    for (int i = 1; i <= 4; ++i) xs.push_back(lo + (hi - lo) * i / 5.0);
    xs.push_back(hi);
    std::vector<double> gs;
    for (double x : xs) gs.push_back(G(x));
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        if (gs[i] > 0.0 && gs[i + 1] <= 0.0) {
            lo = xs[i];
            hi = xs[i + 1];
        }
    }
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        (G(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("terminal values") {
    CHECK(terminal_value(make_linear_problem(kFig, kUniform)) == 0.5);
    CHECK(terminal_value(make_geometric_problem(kFig, kUniform)) == 0.0);
    CHECK(terminal_value(make_geometric_problem(kFig, UniformPrior(0.0, 0.5, 1.0))) ==
          doctest::Approx(0.5));
}

TEST_CASE("one-step grid agrees with a dense scan") {
    const auto grid = uniform_grid(1.0, 1);
    const MonteCarloConfig mc{7, 20000, 1};
    for (const auto& p : {make_linear_problem(kFig, kUniform), make_geometric_problem(kFig, kUniform),
                          make_geometric_problem(kFig, UniformPrior(0.0, 0.5, 1.0))}) {
        SolverOptions strict;
        strict.noise_floor_stop = false;
        const BoundarySolution exact = solve_boundary(p, grid, mc, strict);
        const BoundarySolution loose = solve_boundary(p, grid, mc);

        const PathBatch batch = make_path_batch(mc.seed, solver_stream(0), mc.n_paths, grid, 1);
        const VolterraKernel kernel(p, grid, 0, batch, 1);
        Eigen::ArrayXd a = exact.boundary.values;
        double x = std::max(p.gain(0.0), a(1));
        while (kernel.evaluate(x, a, 0.5).value > 0.0) x += 1e-4;
        const double scan_root = x;

        CHECK(std::abs(exact.boundary.values(0) - scan_root) <= 1e-4);
        const IntegralEstimate at_loose = kernel.evaluate(loose.boundary.values(0), a, 0.5);
        CHECK((std::abs(loose.boundary.values(0) - scan_root) <= 1e-4 ||
               std::abs(at_loose.value) < at_loose.std_error));
    }
    // geometric without atom: F_0(x) = (1 - x) / 4 exactly, so a(0) = 1
    const BoundarySolution geo = solve_boundary(make_geometric_problem(kFig, kUniform), grid, mc);
    CHECK(geo.boundary.values(0) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("solved boundaries satisfy their invariants") {
    const auto grid = uniform_grid(1.0, 20);
    const MonteCarloConfig mc{42, 4000, 0};
    const auto lin = make_linear_problem(kFig, kUniform);
    const auto geo = make_geometric_problem(kFig, kUniform);
    const auto atom = make_geometric_problem(kFig, UniformPrior(0.1, 0.5, 1.0));
    for (const auto* p : {&lin, &geo, &atom}) {
        const BoundarySolution sol = solve_boundary(*p, grid, mc);
        CHECK(sol.boundary.satisfies_invariants(*p));
        CHECK(sol.boundary.values(20) == terminal_value(*p));
        CHECK(sol.nodes.size() == 20);
        CHECK(sol.boundary.values(0) > sol.boundary.values(20));
        for (const auto& node : sol.nodes) CHECK(node.evaluations >= 1);
    }
    const BoundarySolution l = solve_boundary(lin, grid, mc);
    CHECK(l.boundary.values(0) > 0.5);
}

TEST_CASE("solver output is independent of the thread count") {
    const auto p = make_geometric_problem(kFig, kUniform);
    const auto grid = uniform_grid(1.0, 15);
    const BoundarySolution a = solve_boundary(p, grid, {3, 3000, 1});
    const BoundarySolution b = solve_boundary(p, grid, {3, 3000, 3});
    CHECK((a.boundary.values == b.boundary.values).all());
}

TEST_CASE("residuals are re-evaluated on the solver batches") {
    const auto p = make_linear_problem(kFig, kUniform);
    const auto grid = uniform_grid(1.0, 20);
    const MonteCarloConfig mc{5, 3000, 0};
    const BoundarySolution sol = solve_boundary(p, grid, mc);
    const ResidualReport rep = boundary_residuals(p, sol.boundary, mc);
    REQUIRE(rep.residuals.size() == 20);
    for (std::size_t k = 0; k < 20; ++k) CHECK(rep.residuals[k].value == sol.nodes[k].residual);
    CHECK(rep.fraction_within() >= 0.0);
    CHECK(rep.fraction_within() <= 1.0);
}

TEST_CASE("generic and original-unit equations give the same roots") {
    const auto p = make_linear_problem(kFig, kUniform);
    const auto grid = uniform_grid(1.0, 12);
    const MonteCarloConfig mc{11, 2000, 1};
    SolverOptions strict;
    strict.noise_floor_stop = false;
    const BoundarySolution sol = solve_boundary(p, grid, mc, strict);
    int compared = 0;
    for (std::size_t k = 0; k < 12; ++k) {
        const double root = verbatim_linear_root(kFig, p, sol.boundary, k, mc);
        CHECK_MESSAGE(std::abs(root - sol.boundary.values(static_cast<Eigen::Index>(k))) <= 1e-4,
                      "k = ", k);
        ++compared;
    }
    CHECK(compared == 12);
}

TEST_CASE("bracket failure names the node") {
    // one long step: from x = 2 f the path falls below f with high probability,
    // so F(2 f) > 0 and no doubling is allowed
    GenericStopProblem p = make_linear_problem(DisorderModel(1.0, -1.0, 1.0, 4.0), UniformPrior(0.0, 0.25, 4.0));
    p.gain = GainFunction::constant(100.0, 4.0);
    SolverOptions opts;
    opts.max_doublings = 0;
    try {
        solve_boundary(p, uniform_grid(4.0, 1), {1, 1000, 1}, opts);
        FAIL("expected BracketError");
    } catch (const BracketError& e) {
        CHECK(std::string(e.what()).find("t_k = ") != std::string::npos);
        CHECK(e.f_lower() > 0.0);
        CHECK(e.f_upper() > 0.0);
    }
    const BracketError e(0.25, 1.0, 2.0, 0.1, 0.05);
    CHECK(std::string(e.what()).find("t_k = 0.25") != std::string::npos);
}

TEST_CASE("stop times on a path") {
    const auto grid = uniform_grid(1.0, 4);
    Boundary b{grid, Eigen::ArrayXd(5)};
    b.values << 1.0, 0.9, 0.8, 0.7, 0.5;
    Eigen::ArrayXd psi(5);

    psi << 1.2, 0.0, 0.0, 0.0, 0.0;
    StopDecision d = stop_time_on_path(b, psi);
    CHECK(d.index == 0);
    CHECK_FALSE(d.at_horizon);

    psi << 0.1, 0.2, 0.3, 0.4, 0.45;
    d = stop_time_on_path(b, psi);
    CHECK(d.index == 4);
    CHECK(d.at_horizon);

    psi << 0.1, 0.2, 0.85, 0.1, 0.1;
    CHECK(stop_time_on_path(b, psi).index == 2);

    psi << 0.1, 0.2, 0.3, 0.4, 0.5;
    d = stop_time_on_path(b, psi);
    CHECK(d.index == 4);
    CHECK_FALSE(d.at_horizon);

    CHECK_THROWS(stop_time_on_path(b, Eigen::ArrayXd::Zero(3).eval()));
}

TEST_CASE("raising the boundary never stops earlier") {
    const auto p = make_linear_problem(kFig, kUniform);
    const auto grid = uniform_grid(1.0, 50);
    Boundary b{grid, 1.0 - 0.5 * grid};
    const PsiBatch paths = simulate_batch(p, 0.0, make_path_batch(2, 3, 2000, grid));
    for (double eps : {1e-3, 0.05, 0.3}) {
        Boundary raised = b;
        raised.values += eps;
        for (const auto& path : paths.paths) {
            const StopDecision lo = stop_time_on_path(b, path.values);
            const StopDecision hi = stop_time_on_path(raised, path.values);
            CHECK(hi.index >= lo.index);
        }
    }
}

TEST_CASE("grid refinement difference") {
    Boundary coarse{uniform_grid(1.0, 2), Eigen::ArrayXd(3)};
    coarse.values << 1.0, 0.8, 0.5;
    Boundary fine{uniform_grid(1.0, 4), Eigen::ArrayXd(5)};
    fine.values << 1.1, 0.9, 0.8, 0.6, 0.5;
    CHECK(max_boundary_difference(coarse, fine) == doctest::Approx(0.1));
}

TEST_CASE("CSV round trip is lossless") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    Boundary b{uniform_grid(1.0, 200), Eigen::ArrayXd(201)};
    for (Eigen::Index k = 0; k <= 200; ++k) b.values(k) = u(rng);
    b.values(3) = 1e-300;
    b.values(4) = 0.1 + 0.2;
    std::stringstream ss;
    write_boundary_csv(ss, b);
    CHECK(ss.str().rfind("t,a\n", 0) == 0);
    const Boundary back = read_boundary_csv(ss);
    CHECK((back.grid == b.grid).all());
    CHECK((back.values == b.values).all());
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("malformed CSV is rejected") {
    for (const char* text : {"", "time,a\n0,1\n1,0.5\n", "t,a\n0,1\n", "t,a\n0,1,2\n1,0.5\n",
                             "t,a\n0,x\n1,0.5\n", "t,a\n0,1\n0,0.5\n", "t,a\n0,nan\n1,0.5\n",
                             "t,a\n0,1\n1,0.5abc\n"}) {
        std::stringstream ss(text);
        CHECK_THROWS_AS(read_boundary_csv(ss), CsvError);
    }
    std::stringstream crlf("t,a\r\n0,1\r\n1,0.5\r\n");
    CHECK(read_boundary_csv(crlf).values(1) == 0.5);
    CHECK_THROWS_AS(load_boundary_csv("/nonexistent/boundary.csv"), CsvError);
}
