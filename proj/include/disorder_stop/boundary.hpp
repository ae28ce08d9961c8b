#pragma once

// Backward induction for the optimal stopping boundary: a(t_n) = f(T-), then
// for k = n-1, ..., 0 the level a(t_k) is the root in x of F_k(x) = 0 where
// F_k is the Monte Carlo Volterra integral against the already solved tail.

#include "disorder_stop/expectation.hpp"
#include "disorder_stop/model.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace dstop {

struct MonteCarloConfig {
    std::uint64_t seed = 42;
    std::size_t n_paths = 20000;
    unsigned threads = 0;
};

struct SolverOptions {
    double x_tolerance = 1e-4;
    int max_doublings = 60;
    int scan_points = 4;
    double zero_floor = 1e-8;
    /// Stop bisecting once |F| < 1 std error.
    bool noise_floor_stop = true;
};

/// RNG stream of the sub-batch used at grid node k. Value and validation
/// passes use streams above kSolverStreamLimit.
inline std::uint64_t solver_stream(std::size_t k) { return static_cast<std::uint64_t>(k) + 1; }
inline constexpr std::uint64_t kSolverStreamLimit = 1ULL << 40;

class BracketError : public std::runtime_error {
public:
    BracketError(double t, double lower, double upper, double f_lower, double f_upper);
    double t() const noexcept { return t_; }
    double f_lower() const noexcept { return f_lower_; }
    double f_upper() const noexcept { return f_upper_; }

private:
    double t_;
    double f_lower_;
    double f_upper_;
};

struct NodeDiagnostics {
    double t = 0.0;
    double level = 0.0;
    double residual = 0.0;   // F_k at the returned level
    double std_error = 0.0;
    int evaluations = 0;
    bool clamped = false;    // F_k <= 0 already at the lower bracket end
    bool non_monotone = false;
};

struct BoundarySolution {
    Boundary boundary;
    std::vector<NodeDiagnostics> nodes;  // index k = 0..n-1
    std::vector<std::string> warnings;
    std::size_t clamp_count = 0;
};

/// a(T) = f(T-).
double terminal_value(const GenericStopProblem& problem);

BoundarySolution solve_boundary(const GenericStopProblem& problem, const Eigen::ArrayXd& grid,
                                const MonteCarloConfig& mc, const SolverOptions& options = {});

struct StopDecision {
    std::size_t index = 0;
    bool at_horizon = false;  // no crossing on the grid; stopped at T
};

/// First grid index with psi >= a(t_k); index n with the flag set otherwise.
template <class PsiDerived, class LevelDerived>
StopDecision stop_time_on_path(const Eigen::ArrayBase<LevelDerived>& levels,
                               const Eigen::ArrayBase<PsiDerived>& psi) {
    const Eigen::Index n = levels.size() - 1;
    for (Eigen::Index k = 0; k <= n; ++k)
        if (psi.derived()(k) >= levels.derived()(k)) return {static_cast<std::size_t>(k), false};
    return {static_cast<std::size_t>(n), true};
}

inline StopDecision stop_time_on_path(const Boundary& boundary, const Eigen::ArrayXd& psi) {
    if (psi.size() != boundary.values.size())
        throw std::invalid_argument("stop_time_on_path: path and boundary grids differ");
    return stop_time_on_path(boundary.values, psi);
}

struct ResidualReport {
    std::vector<IntegralEstimate> residuals;  // F_k(a(t_k)), k = 0..n-1
    std::size_t within = 0;                   // |F_k| <= 3 se
    double fraction_within() const noexcept {
        return residuals.empty() ? 1.0
                                 : static_cast<double>(within) / static_cast<double>(residuals.size());
    }
};

/// Re-evaluates F_k(a(t_k)) on the solver's sub-batches (same seed and path
/// count reproduce the solver's random numbers).
ResidualReport boundary_residuals(const GenericStopProblem& problem, const Boundary& boundary,
                                  const MonteCarloConfig& mc);

/// Largest |a_fine(t) - a_coarse(t)| over the coarse nodes.
double max_boundary_difference(const Boundary& coarse, const Boundary& fine);

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Header `t,a`, one row per node, shortest round-trip decimal formatting.
void write_boundary_csv(std::ostream& out, const Boundary& boundary);
Boundary read_boundary_csv(std::istream& in);
void save_boundary_csv(const std::string& path, const Boundary& boundary);
Boundary load_boundary_csv(const std::string& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace dstop
