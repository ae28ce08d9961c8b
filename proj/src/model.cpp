#include "disorder_stop/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dstop {

namespace {

void require(bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(key, std::string(key) + ": " + what);
}

}  // namespace

DisorderModel::DisorderModel(double mu1, double mu2, double sigma, double horizon)
    : mu1_(mu1), mu2_(mu2), sigma_(sigma), horizon_(horizon) {
    require(std::isfinite(mu1) && mu1 > 0.0, "mu1", "must be > 0");
    require(std::isfinite(mu2) && mu2 < 0.0, "mu2", "must be < 0");
    require(std::isfinite(sigma) && sigma > 0.0, "sigma", "must be > 0");
    require(std::isfinite(horizon) && horizon > 0.0, "T", "must be > 0");
}

UniformPrior::UniformPrior(double g0, double rho, double horizon)
    : g0_(g0), rho_(rho), horizon_(horizon) {
    require(std::isfinite(horizon) && horizon > 0.0, "T", "must be > 0");
    require(std::isfinite(g0) && g0 >= 0.0 && g0 < 1.0, "g0", "must lie in [0, 1)");
    // Relative slack so that rho = (1 - g0) / T typed as a decimal is accepted.
    const double rho_max = (1.0 - g0) / horizon;
    require(std::isfinite(rho) && rho > 0.0 && rho <= rho_max * (1.0 + 1e-12), "rho",
            "must lie in (0, (1 - g0) / T]");
    rho_ = std::min(rho, rho_max);
}

double UniformPrior::atom_at_horizon() const noexcept {
    return std::max(0.0, 1.0 - g0_ - rho_ * horizon_);
}

double UniformPrior::cdf(double t) const noexcept {
    if (t < 0.0) return 0.0;
    if (t >= horizon_) return 1.0;
    return g0_ + rho_ * t;
}

double UniformPrior::cdf_left(double t) const noexcept {
    if (t <= 0.0) return t < 0.0 ? 0.0 : g0_;
    return g0_ + rho_ * std::min(t, horizon_);
}

double UniformPrior::mean() const noexcept {
    return 0.5 * rho_ * horizon_ * horizon_ + atom_at_horizon() * horizon_;
}

double UniformPrior::expected_excess(double t) const noexcept {
    const double s = std::clamp(t, 0.0, horizon_);
    return g0_ * s + 0.5 * rho_ * s * s;
}

GainFunction GainFunction::constant(double value, double horizon) {
    return affine(value, 0.0, horizon);
}

GainFunction GainFunction::affine(double intercept, double slope, double horizon) {
    GainFunction g;
    g.intercept_ = intercept;
    g.slope_ = slope;
    g.horizon_ = horizon;
    return g;
}

GainFunction GainFunction::custom(std::function<double(double)> fn, double horizon) {
    GainFunction g;
    g.horizon_ = horizon;
    g.custom_ = std::move(fn);
    return g;
}

double GainFunction::operator()(double t) const {
    const double s = std::min(t, horizon_);
    if (custom_) return custom_(s);
    return intercept_ + slope_ * s;
}

std::string_view to_string(ProblemKind kind) {
    return kind == ProblemKind::linear ? "linear" : "geometric";
}

ProblemKind parse_problem_kind(std::string_view name) {
    if (name == "linear") return ProblemKind::linear;
    if (name == "geometric") return ProblemKind::geometric;
    throw ConfigError("problem", "problem: expected 'linear' or 'geometric', got '" +
                                     std::string(name) + "'");
}

void GenericStopProblem::validate() const {
    require(std::isfinite(rho) && rho > 0.0, "rho", "must be > 0");
    require(std::isfinite(mu) && mu > 0.0, "mu", "must be > 0");
    require(std::isfinite(psi0) && psi0 >= 0.0, "psi0", "must be >= 0");
    require(payoff_scale > 0.0, "payoff_scale", "must be > 0");
    require(horizon > 0.0, "T", "must be > 0");
    constexpr int samples = 1000;
    double prev = gain(0.0);
    for (int i = 0; i < samples; ++i) {
        // right-open sample of [0, T)
        const double t = horizon * i / samples;
        const double v = gain(t);
        require(std::isfinite(v) && v > 0.0, "gain", "must be positive on [0, T)");
        require(v <= prev, "gain", "must be nonincreasing");
        prev = v;
    }
}

GenericStopProblem make_linear_problem(const DisorderModel& model, const UniformPrior& prior) {
    const double jump = model.mu1() - model.mu2();
    GenericStopProblem p;
    p.lambda = 0.0;
    p.b = 0.0;
    p.rho = prior.rho();
    p.mu = model.snr();
    p.gain = GainFunction::constant(model.mu1() / jump, model.horizon());
    p.psi0 = prior.g0();
    p.payoff_scale = jump;
    p.payoff_offset = 0.0;
    p.horizon = model.horizon();
    return p;
}

GenericStopProblem make_geometric_problem(const DisorderModel& model, const UniformPrior& prior) {
    const double down = std::abs(model.mu2());
    const double ratio = model.mu1() / down;
    GenericStopProblem p;
    p.lambda = model.mu1();
    p.b = -(model.mu1() - model.mu2());
    p.rho = prior.rho();
    p.mu = model.snr();
    // (mu1/|mu2|) (1 - G(t)) on [0, T)
    p.gain = GainFunction::affine(ratio * (1.0 - prior.g0()), -ratio * prior.rho(),
                                  model.horizon());
    p.psi0 = prior.g0();
    p.payoff_scale = down;
    p.payoff_offset = 1.0;
    p.horizon = model.horizon();
    return p;
}

GenericStopProblem make_problem(ProblemKind kind, const DisorderModel& model,
                                const UniformPrior& prior) {
    return kind == ProblemKind::linear ? make_linear_problem(model, prior)
                                       : make_geometric_problem(model, prior);
}

double psi_from_pi(double pi, double g_t) {
    if (!(pi >= 0.0 && pi < 1.0)) throw std::domain_error("psi_from_pi: pi must lie in [0, 1)");
    if (!(g_t >= 0.0 && g_t <= 1.0)) throw std::domain_error("psi_from_pi: G(t) must lie in [0, 1]");
    return pi * (1.0 - g_t) / (1.0 - pi);
}

double pi_from_psi(double psi, double g_t) {
    if (!(psi >= 0.0)) throw std::domain_error("pi_from_psi: psi must be >= 0");
    if (!(g_t >= 0.0 && g_t <= 1.0)) throw std::domain_error("pi_from_psi: G(t) must lie in [0, 1]");
    const double denom = psi + 1.0 - g_t;
    if (denom <= 0.0) throw std::domain_error("pi_from_psi: undefined for psi = 0 and G(t) = 1");
    return psi / denom;
}

Eigen::ArrayXd uniform_grid(double horizon, std::size_t steps) {
    if (steps == 0) throw std::invalid_argument("uniform_grid: need at least one step");
    Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(static_cast<Eigen::Index>(steps) + 1, 0.0, horizon);
    grid(grid.size() - 1) = horizon;
    return grid;
}

double Boundary::at(double t) const {
    if (grid.size() == 0) throw std::logic_error("Boundary::at on empty boundary");
    const auto* first = grid.data();
    const auto* last = first + grid.size();
    // index of the last node <= t
    const auto it = std::upper_bound(first, last, t);
    if (it == first) return values(0);
    return values(static_cast<Eigen::Index>(it - first) - 1);
}

bool Boundary::satisfies_invariants(const GenericStopProblem& problem, double tol) const {
    const Eigen::Index n = grid.size() - 1;
    if (n < 1 || values.size() != grid.size()) return false;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (values(k + 1) > values(k) + tol) return false;
        if (values(k) < problem.gain(grid(k)) - tol) return false;
    }
    return std::abs(values(n) - problem.gain(problem.horizon)) <= tol;
}

ModelConfig parse_model_config(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
    auto get = [&](const char* key) {
        if (!j.contains(key)) throw ConfigError(key, std::string("missing key '") + key + "'");
        const auto& v = j.at(key);
        if (!v.is_number()) throw ConfigError(key, std::string("key '") + key + "' must be a number");
        return v.get<double>();
    };
    const double mu1 = get("mu1");
    const double mu2 = get("mu2");
    const double sigma = get("sigma");
    const double horizon = get("T");
    const double g0 = get("g0");
    const double rho = get("rho");
    return ModelConfig{DisorderModel(mu1, mu2, sigma, horizon), UniformPrior(g0, rho, horizon)};
}

ModelConfig load_model_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model_config(ss.str());
}

}  // namespace dstop
