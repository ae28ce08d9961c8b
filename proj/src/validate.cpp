#include "disorder_stop/validate.hpp"

#include "disorder_stop/expectation.hpp"
#include "disorder_stop/parallel.hpp"
#include "disorder_stop/simulate.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dstop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BlockTally {
    std::vector<MeanAccumulator> payoff;
    std::vector<std::vector<std::size_t>> histogram;

    BlockTally(std::size_t rules, std::size_t nodes)
        : payoff(rules), histogram(rules, std::vector<std::size_t>(nodes, 0)) {}
};

void check_rules(const Eigen::ArrayXd& grid, const std::vector<StoppingRule>& rules) {
    for (const auto& r : rules)
        if (r.levels.size() != grid.size())
            throw std::invalid_argument("stopping rule '" + r.name + "' does not match the grid");
}

std::vector<RuleOutcome> collect(const std::vector<StoppingRule>& rules,
                                 const std::vector<BlockTally>& blocks, std::size_t nodes) {
    std::vector<RuleOutcome> out(rules.size());
    for (std::size_t r = 0; r < rules.size(); ++r) {
        MeanAccumulator total;
        out[r].name = rules[r].name;
        out[r].stop_histogram.assign(nodes, 0);
        for (const auto& b : blocks) {
            total.merge(b.payoff[r]);
            for (std::size_t k = 0; k < nodes; ++k) out[r].stop_histogram[k] += b.histogram[r][k];
        }
        out[r].payoff = total.mean();
        out[r].std_error = total.std_error();
        out[r].n_paths = total.count;
        out[r].fraction_at_horizon =
            total.count ? static_cast<double>(out[r].stop_histogram.back()) / static_cast<double>(total.count)
                        : 0.0;
    }
    return out;
}

CheckResult compare(std::string name, double lhs, double lhs_se, double rhs, double rhs_se) {
    CheckResult c{std::move(name), lhs, rhs, lhs_se, rhs_se, false};
    c.pass = std::abs(lhs - rhs) <= 3.0 * combined_std_error(lhs_se, rhs_se);
    return c;
}

}  // namespace

StoppingRule boundary_rule(const Boundary& boundary, std::string name) {
    return StoppingRule{std::move(name), boundary.values};
}

StoppingRule fixed_time_rule(const Eigen::ArrayXd& grid, double t0) {
    const double eps = 1e-12 * (1.0 + std::abs(grid(grid.size() - 1)));
    StoppingRule rule;
    std::ostringstream os;
    os << "tau=" << t0;
    rule.name = os.str();
    rule.levels = (grid < t0 - eps).select(Eigen::ArrayXd::Constant(grid.size(), kInf),
                                           Eigen::ArrayXd::Constant(grid.size(), -kInf));
    return rule;
}

StoppingRule constant_level_rule(const Eigen::ArrayXd& grid, double level) {
    std::ostringstream os;
    os << "psi>=" << level;
    return StoppingRule{os.str(), Eigen::ArrayXd::Constant(grid.size(), level)};
}

std::vector<RuleOutcome> simulate_raw_rules(const DisorderModel& model, const UniformPrior& prior,
                                            const Eigen::ArrayXd& grid,
                                            const std::vector<StoppingRule>& rules, ProblemKind kind,
                                            const MonteCarloConfig& mc, std::uint64_t stream) {
    check_rules(grid, rules);
    const auto nodes = static_cast<std::size_t>(grid.size());
    const double half_var = 0.5 * model.sigma() * model.sigma();
    std::vector<BlockTally> blocks(block_count(mc.n_paths), BlockTally(rules.size(), nodes));
    parallel_blocks(mc.n_paths, mc.threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
        BlockTally& tally = blocks[b];
        Eigen::ArrayXd inc(grid.size() - 1);
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = path_rng(mc.seed, stream, i);
            const double theta = sample_theta(prior, rng);
            draw_increments<double>(grid, rng, inc.data());
            const Eigen::ArrayXd x = simulate_disorder_path<double>(model, theta, grid, inc);
            const PsiPath<double> psi = psi_from_observation<double>(model, prior, grid, x);
            if (!psi.valid) throw std::overflow_error("raw-model psi overflowed");
            for (std::size_t r = 0; r < rules.size(); ++r) {
                const StopDecision d = stop_time_on_path(rules[r].levels, psi.values);
                const auto k = static_cast<Eigen::Index>(d.index);
                const double payoff = kind == ProblemKind::linear
                                          ? x(k)
                                          : std::exp(x(k) - half_var * grid(k));
                tally.payoff[r].add(payoff);
                ++tally.histogram[r][d.index];
            }
        }
    });
    return collect(rules, blocks, nodes);
}

std::vector<RuleOutcome> simulate_psi_rules(const GenericStopProblem& problem,
                                            const Eigen::ArrayXd& grid,
                                            const std::vector<StoppingRule>& rules,
                                            const MonteCarloConfig& mc, std::uint64_t stream) {
    check_rules(grid, rules);
    const Eigen::Index n = grid.size() - 1;
    const auto nodes = static_cast<std::size_t>(grid.size());
    Eigen::ArrayXd discount(n + 1);
    Eigen::ArrayXd gain(n + 1);
    for (Eigen::Index k = 0; k <= n; ++k) {
        discount(k) = std::exp(problem.lambda * grid(k));
        gain(k) = problem.gain(grid(k));
    }
    const Eigen::ArrayXd half_dt = 0.5 * (grid.tail(n) - grid.head(n));

    std::vector<BlockTally> blocks(block_count(mc.n_paths), BlockTally(rules.size(), nodes));
    parallel_blocks(mc.n_paths, mc.threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
        BlockTally& tally = blocks[b];
        Eigen::ArrayXd inc(n);
        Eigen::ArrayXd running(n + 1);
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = path_rng(mc.seed, stream, i);
            draw_increments<double>(grid, rng, inc.data());
            const PsiPath<double> psi = psi_path_exact<double>(problem, problem.psi0, grid, inc);
            if (!psi.valid) throw std::overflow_error("psi overflowed");
            const Eigen::ArrayXd h = discount * (gain - psi.values);
            running(0) = 0.0;
            for (Eigen::Index k = 1; k <= n; ++k)
                running(k) = running(k - 1) + half_dt(k - 1) * (h(k - 1) + h(k));
            for (std::size_t r = 0; r < rules.size(); ++r) {
                const StopDecision d = stop_time_on_path(rules[r].levels, psi.values);
                tally.payoff[r].add(
                    problem.to_original(running(static_cast<Eigen::Index>(d.index))));
                ++tally.histogram[r][d.index];
            }
        }
    });
    return collect(rules, blocks, nodes);
}

PolicyEstimate evaluate_policy(const DisorderModel& model, const UniformPrior& prior,
                               const Boundary& boundary, ProblemKind kind,
                               const MonteCarloConfig& mc) {
    const auto out = simulate_raw_rules(model, prior, boundary.grid, {boundary_rule(boundary)}, kind, mc);
    return PolicyEstimate{out[0].payoff, out[0].std_error, out[0].fraction_at_horizon};
}

std::vector<CheckResult> lemma_identity_suite(const DisorderModel& model, const UniformPrior& prior,
                                              const Eigen::ArrayXd& grid,
                                              const std::vector<StoppingRule>& rules,
                                              ProblemKind kind, const MonteCarloConfig& mc) {
    if (rules.empty()) return {};
    const auto problem = make_problem(kind, model, prior);
    const auto lhs = simulate_raw_rules(model, prior, grid, rules, kind, mc);
    const auto rhs = simulate_psi_rules(problem, grid, rules, mc);
    std::vector<CheckResult> out;
    for (std::size_t r = 0; r < rules.size(); ++r)
        out.push_back(compare("lemma." + std::string(to_string(kind)) + "." + rules[r].name,
                              lhs[r].payoff, lhs[r].std_error, rhs[r].payoff, rhs[r].std_error));
    return out;
}

CheckResult check_lemma_identity(const DisorderModel& model, const UniformPrior& prior,
                                 const Eigen::ArrayXd& grid, const StoppingRule& rule,
                                 ProblemKind kind, const MonteCarloConfig& mc) {
    return lemma_identity_suite(model, prior, grid, {rule}, kind, mc).front();
}

std::vector<StoppingRule> default_lemma_rules(const Eigen::ArrayXd& grid) {
    const double horizon = grid(grid.size() - 1);
    return {fixed_time_rule(grid, horizon),         fixed_time_rule(grid, 0.5 * horizon),
            fixed_time_rule(grid, 0.25 * horizon),  constant_level_rule(grid, 0.5),
            constant_level_rule(grid, 1.0),         constant_level_rule(grid, 2.0)};
}

std::vector<StoppingRule> default_alternatives(const Boundary& boundary) {
    const Eigen::ArrayXd& grid = boundary.grid;
    const double first = boundary.values(0);
    const double last = boundary.values(boundary.values.size() - 1);
    StoppingRule immediate{"tau=0", Eigen::ArrayXd::Constant(grid.size(), -kInf)};
    StoppingRule horizon{"tau=T", Eigen::ArrayXd::Constant(grid.size(), kInf)};
    return {immediate, horizon, constant_level_rule(grid, last),
            constant_level_rule(grid, 0.5 * (first + last)), constant_level_rule(grid, first)};
}

bool DominanceReport::pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

DominanceReport dominance_check(const DisorderModel& model, const UniformPrior& prior,
                                const Boundary& boundary, ProblemKind kind,
                                const std::vector<StoppingRule>& alternatives,
                                const MonteCarloConfig& mc) {
    std::vector<StoppingRule> rules{boundary_rule(boundary)};
    rules.insert(rules.end(), alternatives.begin(), alternatives.end());
    auto out = simulate_raw_rules(model, prior, boundary.grid, rules, kind, mc);
    DominanceReport report;
    report.solved = out[0];
    report.alternatives.assign(out.begin() + 1, out.end());
    for (const auto& alt : report.alternatives) {
        CheckResult c{"dominance." + std::string(to_string(kind)) + "." + alt.name,
                      report.solved.payoff, alt.payoff, report.solved.std_error, alt.std_error, false};
        c.pass = c.lhs >= c.rhs - 3.0 * combined_std_error(c.lhs_std_error, c.rhs_std_error);
        report.checks.push_back(c);
    }
    return report;
}

DichotomyReport dichotomy_check(const DisorderModel& model, const UniformPrior& prior,
                                const Boundary& linear_boundary,
                                const Boundary& geometric_boundary, const MonteCarloConfig& mc) {
    if (prior.atom_at_horizon() > 1e-12)
        throw std::invalid_argument("dichotomy_check: the prior must have no mass at T");
    if (linear_boundary.grid.size() != geometric_boundary.grid.size() ||
        !linear_boundary.grid.isApprox(geometric_boundary.grid))
        throw std::invalid_argument("dichotomy_check: boundaries must share a grid");
    const std::vector<StoppingRule> rules{boundary_rule(linear_boundary, "linear"),
                                          boundary_rule(geometric_boundary, "geometric")};
    // payoff kind is irrelevant here; only the stop times are used
    const auto out = simulate_raw_rules(model, prior, linear_boundary.grid, rules,
                                        ProblemKind::linear, mc);
    DichotomyReport report;
    report.fraction_linear_at_horizon = out[0].fraction_at_horizon;
    report.fraction_geometric_at_horizon = out[1].fraction_at_horizon;
    report.linear_histogram = out[0].stop_histogram;
    report.geometric_histogram = out[1].stop_histogram;
    report.n_paths = out[0].n_paths;
    return report;
}

CheckResult value_consistency_check(const DisorderModel& model, const UniformPrior& prior,
                                    const Boundary& boundary, ProblemKind kind,
                                    const MonteCarloConfig& mc) {
    const auto problem = make_problem(kind, model, prior);
    const IntegralEstimate v =
        value_estimate(problem, boundary, mc.seed, kValueStream, mc.n_paths, mc.threads);
    const PolicyEstimate p = evaluate_policy(model, prior, boundary, kind, mc);
    return compare("value." + std::string(to_string(kind)), problem.to_original(v.value),
                   problem.payoff_scale * v.std_error, p.payoff, p.std_error);
}

std::string report_json(const std::vector<CheckResult>& checks) {
    nlohmann::ordered_json j;
    j["checks"] = nlohmann::ordered_json::array();
    bool all = true;
    for (const auto& c : checks) {
        nlohmann::ordered_json e;
        e["name"] = c.name;
        e["lhs"] = c.lhs;
        e["rhs"] = c.rhs;
        e["lhs_std_error"] = c.lhs_std_error;
        e["rhs_std_error"] = c.rhs_std_error;
        e["pass"] = c.pass;
        j["checks"].push_back(std::move(e));
        all = all && c.pass;
    }
    j["all_passed"] = all;
    return j.dump(2);
}

}  // namespace dstop
