#pragma once

// Path generation for the Shiryaev-Roberts statistic psi and for the raw
// observed process X.
//
// psi is simulated with the exact (variation-of-constants) solution of
// d psi = (rho + b psi) dt - mu psi dB:
//
//   Phi_t = exp((b - mu^2/2) t - mu B_t),
//   psi_t = Phi_t (x0 + rho int_0^t Phi_s^{-1} ds),
//
// with the inner integral taken by the trapezoid rule on the grid. Writing
// J_t = Phi_t int_0^t Phi_s^{-1} ds, both Phi and J follow one-step
// recursions in the ratio r_k = Phi_k / Phi_{k-1}, so no reciprocal of Phi
// is ever formed and psi = x0 Phi + rho J stays nonnegative.

#include "disorder_stop/model.hpp"
#include "disorder_stop/parallel.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace dstop {

template <class Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <class Scalar = double>
struct PsiPath {
    ArrayX<Scalar> times;
    ArrayX<Scalar> values;
    bool valid = true;
};

/// Brownian increments for n_paths paths on a grid, one column per path.
/// Fully determined by (seed, stream, n_paths, grid).
struct PathBatch {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    Eigen::ArrayXd grid;
    Eigen::ArrayXXd increments;  // steps x n_paths

    std::size_t n_paths() const noexcept { return static_cast<std::size_t>(increments.cols()); }
    std::size_t steps() const noexcept { return static_cast<std::size_t>(increments.rows()); }
};

/// Fills one column of standard-normal-scaled increments dB_k ~ N(0, dt_k).
template <class Scalar, class URBG>
void draw_increments(const ArrayX<Scalar>& grid, URBG& rng, Scalar* out) {
    std::normal_distribution<Scalar> normal;
    for (Eigen::Index k = 1; k < grid.size(); ++k)
        out[k - 1] = std::sqrt(grid(k) - grid(k - 1)) * normal(rng);
}

/// Column i uses the generator of path index first_path + i.
PathBatch make_path_batch(std::uint64_t seed, std::uint64_t stream, std::size_t n_paths,
                          const Eigen::ArrayXd& grid, unsigned threads = 0,
                          std::size_t first_path = 0);

namespace detail {

/// Phi_k and J_k from log-ratios log(Phi_k / Phi_{k-1}). Returns false on
/// overflow.
template <class Scalar>
bool exact_factors(const Scalar* dt, const Scalar* log_ratio, Eigen::Index steps, Scalar* phi,
                   Scalar* j) {
    phi[0] = Scalar(1);
    j[0] = Scalar(0);
    for (Eigen::Index k = 1; k <= steps; ++k) {
        const Scalar r = std::exp(log_ratio[k - 1]);
        phi[k] = phi[k - 1] * r;
        j[k] = r * j[k - 1] + Scalar(0.5) * dt[k - 1] * (r + Scalar(1));
    }
    return std::isfinite(phi[steps]) && std::isfinite(j[steps]);
}

template <class Scalar>
PsiPath<Scalar> assemble_psi(const ArrayX<Scalar>& grid, const ArrayX<Scalar>& log_ratio,
                             Scalar x0, Scalar rho) {
    const Eigen::Index steps = grid.size() - 1;
    ArrayX<Scalar> dt = grid.tail(steps) - grid.head(steps);
    ArrayX<Scalar> phi(grid.size());
    ArrayX<Scalar> j(grid.size());
    PsiPath<Scalar> path;
    path.times = grid;
    path.valid = exact_factors(dt.data(), log_ratio.data(), steps, phi.data(), j.data());
    path.values = x0 * phi + rho * j;
    return path;
}

}  // namespace detail

/// Exact-scheme psi path started at x0 and driven by one column of dB.
template <class Scalar, class IncDerived>
PsiPath<Scalar> psi_path_exact(const GenericStopProblem& problem, Scalar x0,
                               const ArrayX<Scalar>& grid,
                               const Eigen::ArrayBase<IncDerived>& increments) {
    const Eigen::Index steps = grid.size() - 1;
    const Scalar mu = Scalar(problem.mu);
    const Scalar drift = Scalar(problem.b) - mu * mu / Scalar(2);
    ArrayX<Scalar> log_ratio =
        drift * (grid.tail(steps) - grid.head(steps)) - mu * increments.derived().template cast<Scalar>();
    return detail::assemble_psi<Scalar>(grid, log_ratio, x0, Scalar(problem.rho));
}

struct PsiBatch {
    std::vector<PsiPath<double>> paths;
    std::size_t n_invalid = 0;
};

/// Every path of the batch started at x0; overflowed paths are kept but
/// flagged and counted.
PsiBatch simulate_batch(const GenericStopProblem& problem, double x0, const PathBatch& batch);

/// X on the grid for a fixed disorder time; the step containing theta is
/// split there so the drift switch is integrated exactly.
template <class Scalar, class IncDerived>
ArrayX<Scalar> simulate_disorder_path(const DisorderModel& model, Scalar theta,
                                      const ArrayX<Scalar>& grid,
                                      const Eigen::ArrayBase<IncDerived>& increments) {
    const Scalar mu1 = Scalar(model.mu1());
    const Scalar mu2 = Scalar(model.mu2());
    const Scalar sigma = Scalar(model.sigma());
    ArrayX<Scalar> x(grid.size());
    x(0) = Scalar(0);
    for (Eigen::Index k = 1; k < grid.size(); ++k) {
        const Scalar lo = grid(k - 1);
        const Scalar hi = grid(k);
        const Scalar before = std::clamp(theta, lo, hi) - lo;
        const Scalar after = hi - std::clamp(theta, lo, hi);
        x(k) = x(k - 1) + mu1 * before + mu2 * after + sigma * Scalar(increments.derived()(k - 1));
    }
    return x;
}

/// psi computed from an observed X through X~ = (X - mu1 t) / sigma.
template <class Scalar>
PsiPath<Scalar> psi_from_observation(const DisorderModel& model, const UniformPrior& prior,
                                     const ArrayX<Scalar>& grid, const ArrayX<Scalar>& observed) {
    const Eigen::Index steps = grid.size() - 1;
    const Scalar mu = Scalar(model.snr());
    const Scalar mu1 = Scalar(model.mu1());
    const Scalar sigma = Scalar(model.sigma());
    ArrayX<Scalar> dt = grid.tail(steps) - grid.head(steps);
    ArrayX<Scalar> dx = (observed.tail(steps) - observed.head(steps) - mu1 * dt) / sigma;
    ArrayX<Scalar> log_ratio = -mu * dx - mu * mu / Scalar(2) * dt;
    return detail::assemble_psi<Scalar>(grid, log_ratio, Scalar(prior.g0()), Scalar(prior.rho()));
}

}  // namespace dstop
