#pragma once

// Brute-force checks against the raw disorder model: draw theta, simulate X,
// rebuild psi from the observations, stop by a rule, and average the true
// payoff X_tau (linear) or exp(X_tau - sigma^2 tau / 2) (geometric).
//
// Every rule is a vector of psi-levels on the grid: stop at the first node
// where psi >= level, else at T. Fixed times and constant thresholds are
// special cases, so one simulation pass evaluates all rules on common
// random numbers.

#include "disorder_stop/boundary.hpp"
#include "disorder_stop/model.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace dstop {

struct StoppingRule {
    std::string name;
    Eigen::ArrayXd levels;
};

StoppingRule boundary_rule(const Boundary& boundary, std::string name = "solved");
/// Stops at the first grid node at or after t0.
StoppingRule fixed_time_rule(const Eigen::ArrayXd& grid, double t0);
StoppingRule constant_level_rule(const Eigen::ArrayXd& grid, double level);

struct RuleOutcome {
    std::string name;
    double payoff = 0.0;
    double std_error = 0.0;
    double fraction_at_horizon = 0.0;         // P(tau = T) on the grid
    std::vector<std::size_t> stop_histogram;  // counts per grid index
    std::size_t n_paths = 0;
};

/// RNG streams of the validation passes; disjoint from the solver streams.
inline constexpr std::uint64_t kRawStream = kSolverStreamLimit + 1;
inline constexpr std::uint64_t kPsiStream = kSolverStreamLimit + 2;
inline constexpr std::uint64_t kValueStream = kSolverStreamLimit + 3;

/// Raw-model payoffs of all rules on shared paths.
std::vector<RuleOutcome> simulate_raw_rules(const DisorderModel& model, const UniformPrior& prior,
                                            const Eigen::ArrayXd& grid,
                                            const std::vector<StoppingRule>& rules, ProblemKind kind,
                                            const MonteCarloConfig& mc,
                                            std::uint64_t stream = kRawStream);

/// Right-hand side of the change-of-measure identity for each rule:
/// d + c E int_0^tau e^{lambda s}(f(s) - psi_s) ds with psi under the
/// problem's reference dynamics.
std::vector<RuleOutcome> simulate_psi_rules(const GenericStopProblem& problem,
                                            const Eigen::ArrayXd& grid,
                                            const std::vector<StoppingRule>& rules,
                                            const MonteCarloConfig& mc,
                                            std::uint64_t stream = kPsiStream);

struct PolicyEstimate {
    double payoff = 0.0;
    double std_error = 0.0;
    double fraction_at_horizon = 0.0;
};

PolicyEstimate evaluate_policy(const DisorderModel& model, const UniformPrior& prior,
                               const Boundary& boundary, ProblemKind kind,
                               const MonteCarloConfig& mc);

/// Outcome of one named comparison, as written to the JSON report.
struct CheckResult {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double lhs_std_error = 0.0;
    double rhs_std_error = 0.0;
    bool pass = false;
};

inline double combined_std_error(double a, double b) { return std::sqrt(a * a + b * b); }

/// Raw-model E[payoff at tau] against its psi-integral representation.
CheckResult check_lemma_identity(const DisorderModel& model, const UniformPrior& prior,
                                 const Eigen::ArrayXd& grid, const StoppingRule& rule,
                                 ProblemKind kind,
                                 const MonteCarloConfig& mc);

/// All rules in one pass per side.
std::vector<CheckResult> lemma_identity_suite(const DisorderModel& model, const UniformPrior& prior,
                                              const Eigen::ArrayXd& grid,
                                              const std::vector<StoppingRule>& rules,
                                              ProblemKind kind, const MonteCarloConfig& mc);

/// tau = T, T/2, T/4 and psi-levels 0.5, 1, 2.
std::vector<StoppingRule> default_lemma_rules(const Eigen::ArrayXd& grid);

/// tau = 0, tau = T and constant thresholds at a(T), (a(0) + a(T)) / 2, a(0).
std::vector<StoppingRule> default_alternatives(const Boundary& boundary);

struct DominanceReport {
    RuleOutcome solved;
    std::vector<RuleOutcome> alternatives;
    std::vector<CheckResult> checks;  // solved >= alternative - 3 combined se
    bool pass() const;
};

DominanceReport dominance_check(const DisorderModel& model, const UniformPrior& prior,
                                const Boundary& boundary, ProblemKind kind,
                                const std::vector<StoppingRule>& alternatives,
                                const MonteCarloConfig& mc);

inline constexpr double kGeometricHorizonLimit = 0.02;
inline constexpr double kLinearHorizonFloor = 0.01;

struct DichotomyReport {
    double fraction_geometric_at_horizon = 0.0;
    double fraction_linear_at_horizon = 0.0;
    std::vector<std::size_t> geometric_histogram;
    std::vector<std::size_t> linear_histogram;
    std::size_t n_paths = 0;
    bool pass() const {
        return fraction_geometric_at_horizon < kGeometricHorizonLimit &&
               fraction_linear_at_horizon > kLinearHorizonFloor;
    }
};

/// Requires G(T-) = 1. Both boundaries are applied to the same raw paths
/// (psi is the same statistic for both problems).
DichotomyReport dichotomy_check(const DisorderModel& model, const UniformPrior& prior,
                                const Boundary& linear_boundary,
                                const Boundary& geometric_boundary, const MonteCarloConfig& mc);

/// value_integral mapped to the payoff scale against evaluate_policy.
CheckResult value_consistency_check(const DisorderModel& model, const UniformPrior& prior,
                                    const Boundary& boundary, ProblemKind kind,
                                    const MonteCarloConfig& mc);

/// JSON: {"checks": [{name, lhs, rhs, lhs_std_error, rhs_std_error, pass}], "all_passed": bool}.
std::string report_json(const std::vector<CheckResult>& checks);

}  // namespace dstop
