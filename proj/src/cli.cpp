#include "disorder_stop/cli.hpp"

#include "disorder_stop/boundary.hpp"
#include "disorder_stop/expectation.hpp"
#include "disorder_stop/model.hpp"
#include "disorder_stop/plot.hpp"
#include "disorder_stop/simulate.hpp"
#include "disorder_stop/validate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace dstop::cli {

namespace {

unsigned default_threads() {
    if (const char* env = std::getenv("DISORDER_STOP_THREADS")) {
        try {
            return static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
        }
    }
    return 0;
}

struct CommonOptions {
    std::string problem = "linear";
    std::string config;
    std::uint64_t seed = 42;
    unsigned threads = default_threads();
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--problem", o.problem, "linear or geometric")
        ->check(CLI::IsMember({"linear", "geometric"}));
    cmd->add_option("--config", o.config, "JSON file with mu1, mu2, sigma, T, g0, rho")->required();
    cmd->add_option("--seed", o.seed, "master RNG seed");
    cmd->add_option("--threads", o.threads, "worker threads (0 = auto)");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << text;
}

/// Boundary must live on [0, T] of the configured model.
void require_matching_grid(const Boundary& b, const DisorderModel& model) {
    const double T = model.horizon();
    if (b.grid(0) != 0.0 || std::abs(b.grid(b.grid.size() - 1) - T) > 1e-9 * std::max(1.0, T))
        throw CsvError("boundary grid does not span [0, T] of the config (T = " + format_double(T) +
                       ")");
}

void dump_paths(const std::string& path, const GenericStopProblem& problem,
                const Eigen::ArrayXd& grid, std::uint64_t seed, std::size_t count) {
    const PathBatch batch = make_path_batch(seed, kValueStream, count, grid, 1);
    const PsiBatch paths = simulate_batch(problem, problem.psi0, batch);
    std::ostringstream os;
    os << "path_id,t,psi\n";
    for (std::size_t i = 0; i < paths.paths.size(); ++i)
        for (Eigen::Index k = 0; k < grid.size(); ++k)
            os << i << ',' << format_double(grid(k)) << ',' << format_double(paths.paths[i].values(k))
               << '\n';
    write_text(path, os.str());
}

int cmd_solve(const CommonOptions& common, std::size_t steps, std::size_t paths,
              const std::string& out_path, const std::string& dump_path, std::size_t dump_count,
              std::ostream& out, std::ostream& err) {
    const ModelConfig cfg = load_model_config(common.config);
    const ProblemKind kind = parse_problem_kind(common.problem);
    const GenericStopProblem problem = make_problem(kind, cfg.model, cfg.prior);
    const Eigen::ArrayXd grid = uniform_grid(cfg.model.horizon(), steps);
    const MonteCarloConfig mc{common.seed, paths, common.threads};

    const BoundarySolution sol = solve_boundary(problem, grid, mc);
    for (const auto& w : sol.warnings) err << "warning: " << w << '\n';
    save_boundary_csv(out_path, sol.boundary);
    if (!dump_path.empty()) dump_paths(dump_path, problem, grid, common.seed, dump_count);

    out << "terminal level a(T) = " << format_double(sol.boundary.values(steps)) << '\n'
        << "a(0) = " << format_double(sol.boundary.values(0)) << '\n'
        << "clamped nodes = " << sol.clamp_count << '\n';
    return kOk;
}

int cmd_value(const CommonOptions& common, const std::string& boundary_path, std::size_t paths,
              std::ostream& out) {
    const ModelConfig cfg = load_model_config(common.config);
    const ProblemKind kind = parse_problem_kind(common.problem);
    const GenericStopProblem problem = make_problem(kind, cfg.model, cfg.prior);
    const Boundary boundary = load_boundary_csv(boundary_path);
    require_matching_grid(boundary, cfg.model);

    const IntegralEstimate v =
        value_estimate(problem, boundary, common.seed, kValueStream, paths, common.threads);
    nlohmann::ordered_json j;
    j["problem"] = to_string(kind);
    j["value"] = problem.to_original(v.value);
    j["std_error"] = problem.payoff_scale * v.std_error;
    j["generic_value"] = v.value;
    j["generic_std_error"] = v.std_error;
    j["n_paths"] = v.n_paths;
    out << j.dump(2) << '\n';
    return kOk;
}

std::set<std::string> parse_checks(const std::string& spec) {
    static const std::set<std::string> known{"lemma", "dominance", "dichotomy", "residual", "value"};
    std::set<std::string> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
        if (item.empty()) continue;
        if (item == "all") {
            out.insert(known.begin(), known.end());
        } else if (known.count(item)) {
            out.insert(item);
        } else {
            throw ConfigError("checks", "checks: unknown check '" + item + "'");
        }
    }
    return out;
}

int cmd_validate(const CommonOptions& common, const std::string& boundary_path,
                 const std::string& other_path, const std::string& checks_spec, std::size_t paths,
                 std::size_t solve_paths, const std::string& out_path, std::ostream& out,
                 std::ostream& err) {
    const std::set<std::string> checks = parse_checks(checks_spec);
    std::vector<CheckResult> results;
    if (!checks.empty()) {
        const ModelConfig cfg = load_model_config(common.config);
        const ProblemKind kind = parse_problem_kind(common.problem);
        const GenericStopProblem problem = make_problem(kind, cfg.model, cfg.prior);
        const Boundary boundary = load_boundary_csv(boundary_path);
        require_matching_grid(boundary, cfg.model);
        const MonteCarloConfig mc{common.seed, paths, common.threads};
        const MonteCarloConfig solve_mc{common.seed, solve_paths, common.threads};

        if (checks.count("lemma")) {
            auto lemma = lemma_identity_suite(cfg.model, cfg.prior, boundary.grid,
                                              default_lemma_rules(boundary.grid), kind, mc);
            results.insert(results.end(), lemma.begin(), lemma.end());
        }
        if (checks.count("dominance")) {
            auto dom = dominance_check(cfg.model, cfg.prior, boundary, kind,
                                       default_alternatives(boundary), mc);
            results.insert(results.end(), dom.checks.begin(), dom.checks.end());
        }
        if (checks.count("value")) {
            results.push_back(value_consistency_check(cfg.model, cfg.prior, boundary, kind, mc));
        }
        if (checks.count("residual")) {
            const ResidualReport rep = boundary_residuals(problem, boundary, solve_mc);
            results.push_back(CheckResult{"residual." + std::string(to_string(kind)),
                                          rep.fraction_within(), 0.95, 0.0, 0.0,
                                          rep.fraction_within() >= 0.95});
        }
        if (checks.count("dichotomy")) {
            const ProblemKind other_kind =
                kind == ProblemKind::linear ? ProblemKind::geometric : ProblemKind::linear;
            Boundary other;
            if (!other_path.empty()) {
                other = load_boundary_csv(other_path);
                require_matching_grid(other, cfg.model);
            } else {
                other = solve_boundary(make_problem(other_kind, cfg.model, cfg.prior),
                                       boundary.grid, solve_mc)
                            .boundary;
            }
            const Boundary& lin = kind == ProblemKind::linear ? boundary : other;
            const Boundary& geo = kind == ProblemKind::linear ? other : boundary;
            const DichotomyReport rep = dichotomy_check(cfg.model, cfg.prior, lin, geo, mc);
            results.push_back(CheckResult{"dichotomy.geometric_at_T",
                                          rep.fraction_geometric_at_horizon, kGeometricHorizonLimit,
                                          0.0, 0.0,
                                          rep.fraction_geometric_at_horizon < kGeometricHorizonLimit});
            results.push_back(CheckResult{"dichotomy.linear_at_T", rep.fraction_linear_at_horizon,
                                          kLinearHorizonFloor, 0.0, 0.0,
                                          rep.fraction_linear_at_horizon > kLinearHorizonFloor});
        }
    }
    const std::string report = report_json(results);
    if (out_path.empty())
        out << report << '\n';
    else
        write_text(out_path, report + "\n");

    bool all = true;
    for (const auto& r : results) {
        if (!r.pass) err << "check failed: " << r.name << '\n';
        all = all && r.pass;
    }
    return all ? kOk : kCheckFailed;
}

int cmd_plot(const std::vector<std::string>& inputs, const std::string& out_path) {
    std::vector<PlotSeries> series;
    for (const auto& path : inputs) {
        auto slash = path.find_last_of('/');
        series.push_back(PlotSeries{slash == std::string::npos ? path : path.substr(slash + 1),
                                    load_boundary_csv(path)});
    }
    write_text(out_path, render_boundary_svg(series));
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optimal selling boundaries for a Brownian motion with a disorder"};
    app.require_subcommand(1);

    CommonOptions solve_common;
    std::size_t steps = 200;
    std::size_t solve_paths = 20000;
    std::string solve_out;
    std::string dump_path;
    std::size_t dump_count = 10;
    auto* solve = app.add_subcommand("solve", "solve the stopping boundary by backward induction");
    add_common(solve, solve_common);
    solve->add_option("--grid-steps", steps, "number of time steps")->check(CLI::PositiveNumber);
    solve->add_option("--paths", solve_paths, "Monte Carlo paths per grid node")
        ->check(CLI::PositiveNumber);
    solve->add_option("--out", solve_out, "boundary CSV")->required();
    solve->add_option("--dump-paths", dump_path, "write sample psi paths as CSV (path_id,t,psi)");
    solve->add_option("--dump-count", dump_count, "number of paths to dump");

    CommonOptions value_common;
    std::string value_boundary;
    std::size_t value_paths = 200000;
    auto* value = app.add_subcommand("value", "estimate the optimal value from a boundary");
    add_common(value, value_common);
    value->add_option("--boundary", value_boundary, "boundary CSV")->required();
    value->add_option("--paths", value_paths, "Monte Carlo paths")->check(CLI::PositiveNumber);

    CommonOptions validate_common;
    std::string validate_boundary;
    std::string other_boundary;
    std::string checks = "all";
    std::size_t validate_paths = 200000;
    std::size_t validate_solve_paths = 20000;
    std::string report_path;
    auto* validate = app.add_subcommand("validate", "run the raw-model oracle checks");
    add_common(validate, validate_common);
    validate->add_option("--boundary", validate_boundary, "boundary CSV")->required();
    validate->add_option("--other-boundary", other_boundary,
                         "boundary of the other problem (dichotomy); solved if absent");
    validate->add_option("--checks", checks, "comma list of lemma,dominance,dichotomy,residual,value or all");
    validate->add_option("--paths", validate_paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
    validate->add_option("--solve-paths", validate_solve_paths,
                         "paths per node used when the boundary was solved")
        ->check(CLI::PositiveNumber);
    validate->add_option("--out", report_path, "JSON report (stdout if absent)");

    std::vector<std::string> plot_inputs;
    std::string plot_out;
    auto* plot = app.add_subcommand("plot", "render boundary CSVs as SVG");
    plot->add_option("--in", plot_inputs, "boundary CSV (repeatable)")->required();
    plot->add_option("--out", plot_out, "SVG file")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInvalidInput;
    }

    try {
        if (*solve)
            return cmd_solve(solve_common, steps, solve_paths, solve_out, dump_path, dump_count, out,
                             err);
        if (*value) return cmd_value(value_common, value_boundary, value_paths, out);
        if (*validate)
            return cmd_validate(validate_common, validate_boundary, other_boundary, checks,
                                validate_paths, validate_solve_paths, report_path, out, err);
        if (*plot) return cmd_plot(plot_inputs, plot_out);
    } catch (const BracketError& e) {
        err << "error: " << e.what() << '\n';
        return kBracketFailure;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    } catch (const CsvError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    }
    return kInvalidInput;
}

}  // namespace dstop::cli
