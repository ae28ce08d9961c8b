#pragma once

// Monte Carlo estimates of
//
//   F_k(x) = int_0^{T - t_k} E_x[ e^{lambda s} (f(t_k + s) - psi_s) 1{psi_s < a(t_k + s)} ] ds,
//
// the left-hand side of the boundary equation F_k(a(t_k)) = 0, and of the
// generic value V = F_0(psi0) evaluated against a solved boundary.
//
// Both integrals use the composite trapezoid rule with the indicator taken at
// grid nodes. At s = 0 the indicator compares the start level x with a(t_k);
// when they coincide it takes the value 1/2, the limit of
// P(psi_s < a(t_k + s)) as s -> 0+ for a path started on the boundary.

#include "disorder_stop/model.hpp"
#include "disorder_stop/simulate.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dstop {

struct IntegralEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::size_t n_dropped = 0;
};

/// Dropped (overflowed) paths above this fraction abort the estimate.
inline constexpr double kMaxDroppedFraction = 1e-4;

/// Per-path exact factors of psi on the tail grid [t_k, T], so that
/// psi_j = x Phi_j + rho J_j for any start level x. Built once per batch and
/// reused for every candidate x (common random numbers).
class VolterraKernel {
public:
    /// batch.grid must be the shifted tail grid t_{k+j} - t_k.
    VolterraKernel(const GenericStopProblem& problem, const Eigen::ArrayXd& grid, std::size_t k,
                   const PathBatch& batch, unsigned threads = 0);

    std::size_t start_index() const noexcept { return k_; }
    std::size_t n_paths() const noexcept { return static_cast<std::size_t>(phi_.cols()); }

    /// F_k(x) for the boundary values a(t_{k+1}), ..., a(t_n) taken from the
    /// full-grid array `boundary`; start_indicator weighs the s = 0 node.
    IntegralEstimate evaluate(double x, const Eigen::ArrayXd& boundary, double start_indicator) const;

private:
    std::size_t k_;
    unsigned threads_;
    Eigen::ArrayXd weight_;      // trapezoid weight times e^{lambda s_j}, j = 0..m
    Eigen::ArrayXd gain_;        // f(t_{k+j})
    Eigen::ArrayXXd phi_;        // (m) x paths, nodes j = 1..m
    Eigen::ArrayXXd carry_;      // rho J_j, same layout
    std::vector<unsigned char> valid_;
    std::size_t n_dropped_ = 0;
};

/// Indicator at s = 0 for start level x against boundary level a.
inline double start_indicator(double x, double a) noexcept {
    if (x < a) return 1.0;
    return x == a ? 0.5 : 0.0;
}

/// F_k(x) with the boundary tail a(t_k), ..., a(t_n) from `boundary`.
IntegralEstimate volterra_integral(const GenericStopProblem& problem, double x,
                                   const Boundary& boundary, std::size_t k, const PathBatch& batch,
                                   unsigned threads = 0);

/// Generic value int_0^T E_{psi0}[e^{lambda s}(f(s) - psi_s) 1{psi_s < a(s)}] ds.
/// Map to the original payoff with GenericStopProblem::to_original.
IntegralEstimate value_integral(const GenericStopProblem& problem, const Boundary& boundary,
                                const PathBatch& batch, unsigned threads = 0);

/// value_integral over n_paths paths drawn in chunks, so large path counts
/// never materialise one batch. Path i uses the generator (seed, stream, i).
IntegralEstimate value_estimate(const GenericStopProblem& problem, const Boundary& boundary,
                                std::uint64_t seed, std::uint64_t stream, std::size_t n_paths,
                                unsigned threads = 0, std::size_t chunk = 16384);

/// Pooled mean and standard error of independent estimates.
IntegralEstimate combine_estimates(const std::vector<IntegralEstimate>& parts);

/// Shifted tail grid t_{k+j} - t_k, j = 0..n-k.
Eigen::ArrayXd tail_grid(const Eigen::ArrayXd& grid, std::size_t k);

}  // namespace dstop
