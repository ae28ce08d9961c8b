#pragma once

// Domain types for a Brownian motion whose drift switches from mu1 > 0 to
// mu2 < 0 at a random time theta with a (possibly atomic) uniform law on
// [0, T], and the generic optimal stopping problem both payoffs reduce to:
//
//   V = sup_{tau <= T} E int_0^tau e^{lambda s} (f(s) - psi_s) ds,
//   d psi = (rho + b psi) dt - mu psi dB.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dstop {

/// Raised for invalid parameters; key() names the offending config key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, const std::string& what)
        : std::invalid_argument(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Observed process X_t = mu1 t + (mu2 - mu1)(t - theta)^+ + sigma B_t.
class DisorderModel {
public:
    DisorderModel(double mu1, double mu2, double sigma, double horizon);

    double mu1() const noexcept { return mu1_; }
    double mu2() const noexcept { return mu2_; }
    double sigma() const noexcept { return sigma_; }
    double horizon() const noexcept { return horizon_; }
    /// Signal-to-noise ratio (mu1 - mu2) / sigma.
    double snr() const noexcept { return (mu1_ - mu2_) / sigma_; }

private:
    double mu1_;
    double mu2_;
    double sigma_;
    double horizon_;
};

/// Law of theta: mass g0 at 0, density rho on [0, T), the rest at T.
class UniformPrior {
public:
    UniformPrior(double g0, double rho, double horizon);

    double g0() const noexcept { return g0_; }
    double rho() const noexcept { return rho_; }
    double horizon() const noexcept { return horizon_; }
    double atom_at_horizon() const noexcept;

    /// G(t) = P(theta <= t).
    double cdf(double t) const noexcept;
    /// G(t-), continuous extension of the affine part; cdf_left(T) = 1 - atom.
    double cdf_left(double t) const noexcept;
    double mean() const noexcept;
    /// E (t - theta)^+ for t in [0, T].
    double expected_excess(double t) const noexcept;

private:
    double g0_;
    double rho_;
    double horizon_;
};

/// Nonincreasing gain f(t). Affine in closed form, or an arbitrary hook.
/// Arguments past the horizon evaluate to f(T-).
class GainFunction {
public:
    static GainFunction constant(double value, double horizon);
    static GainFunction affine(double intercept, double slope, double horizon);
    static GainFunction custom(std::function<double(double)> fn, double horizon);

    double operator()(double t) const;
    double horizon() const noexcept { return horizon_; }
    bool is_affine() const noexcept { return !custom_; }

private:
    GainFunction() = default;
    double intercept_ = 0.0;
    double slope_ = 0.0;
    double horizon_ = 0.0;
    std::function<double(double)> custom_;
};

enum class ProblemKind { linear, geometric };

std::string_view to_string(ProblemKind kind);
ProblemKind parse_problem_kind(std::string_view name);

struct GenericStopProblem {
    double lambda = 0.0;
    double b = 0.0;
    double rho = 0.0;
    double mu = 0.0;
    GainFunction gain = GainFunction::constant(1.0, 1.0);
    double psi0 = 0.0;
    double payoff_scale = 1.0;
    double payoff_offset = 0.0;
    double horizon = 1.0;

    /// Checks rho > 0, psi0 >= 0, payoff_scale > 0 and that the gain is
    /// positive and nonincreasing on a dense sample of [0, T).
    void validate() const;

    /// Maps a generic value back to the original payoff scale.
    double to_original(double generic_value) const noexcept {
        return payoff_offset + payoff_scale * generic_value;
    }
};

GenericStopProblem make_linear_problem(const DisorderModel& model, const UniformPrior& prior);
GenericStopProblem make_geometric_problem(const DisorderModel& model, const UniformPrior& prior);
GenericStopProblem make_problem(ProblemKind kind, const DisorderModel& model,
                                const UniformPrior& prior);

/// psi = pi (1 - G(t)) / (1 - pi).
double psi_from_pi(double pi, double g_t);
/// pi = psi / (psi + 1 - G(t)).
double pi_from_psi(double psi, double g_t);

/// Draws theta with one uniform variate: 0 w.p. g0, affine on [0, T), T
/// for the remaining mass.
template <class URBG>
double sample_theta(const UniformPrior& prior, URBG& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    if (u < prior.g0()) return 0.0;
    const double continuous = prior.rho() * prior.horizon();
    if (u < prior.g0() + continuous) return (u - prior.g0()) / prior.rho();
    return prior.horizon();
}

/// Uniform grid 0 = t_0 < ... < t_n = T.
Eigen::ArrayXd uniform_grid(double horizon, std::size_t steps);

/// Stopping boundary a(t_k) on a grid; piecewise constant from the left node.
struct Boundary {
    Eigen::ArrayXd grid;
    Eigen::ArrayXd values;

    std::size_t steps() const noexcept { return static_cast<std::size_t>(grid.size()) - 1; }
    double at(double t) const;
    /// Nonincreasing, a(t_k) >= f(t_k) for k < n and a(t_n) == f(T-).
    bool satisfies_invariants(const GenericStopProblem& problem, double tol = 0.0) const;
};

struct ModelConfig {
    DisorderModel model;
    UniformPrior prior;
};

/// Reads keys mu1, mu2, sigma, T, g0, rho from a JSON object.
ModelConfig parse_model_config(std::string_view json_text);
ModelConfig load_model_config(const std::string& path);

}  // namespace dstop
