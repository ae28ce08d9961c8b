#include "disorder_stop/expectation.hpp"

#include "disorder_stop/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dstop {

Eigen::ArrayXd tail_grid(const Eigen::ArrayXd& grid, std::size_t k) {
    const Eigen::Index start = static_cast<Eigen::Index>(k);
    if (start >= grid.size()) throw std::out_of_range("tail_grid: start index past the grid");
    return grid.tail(grid.size() - start) - grid(start);
}

VolterraKernel::VolterraKernel(const GenericStopProblem& problem, const Eigen::ArrayXd& grid,
                               std::size_t k, const PathBatch& batch, unsigned threads)
    : k_(k), threads_(threads) {
    const Eigen::Index start = static_cast<Eigen::Index>(k);
    const Eigen::Index m = grid.size() - 1 - start;
    if (m < 0) throw std::out_of_range("VolterraKernel: start index past the grid");
    if (batch.grid.size() != m + 1)
        throw std::invalid_argument("VolterraKernel: batch grid does not match the tail grid");
    const Eigen::ArrayXd shifted = tail_grid(grid, k);
    if (((batch.grid - shifted).abs() > 1e-12 * (1.0 + grid(grid.size() - 1))).any())
        throw std::invalid_argument("VolterraKernel: batch grid does not match the tail grid");

    weight_.resize(m + 1);
    gain_.resize(m + 1);
    for (Eigen::Index j = 0; j <= m; ++j) {
        const double left = j > 0 ? shifted(j) - shifted(j - 1) : 0.0;
        const double right = j < m ? shifted(j + 1) - shifted(j) : 0.0;
        weight_(j) = 0.5 * (left + right) * std::exp(problem.lambda * shifted(j));
        gain_(j) = problem.gain(grid(start + j));
    }

    const std::size_t n = batch.n_paths();
    phi_.resize(m, static_cast<Eigen::Index>(n));
    carry_.resize(m, static_cast<Eigen::Index>(n));
    valid_.assign(n, 1);
    if (m == 0) return;

    const Eigen::ArrayXd dt = shifted.tail(m) - shifted.head(m);
    const double drift = problem.b - 0.5 * problem.mu * problem.mu;
    parallel_blocks(n, threads_, [&](std::size_t, std::size_t begin, std::size_t end) {
        Eigen::ArrayXd log_ratio(m);
        Eigen::ArrayXd phi(m + 1);
        Eigen::ArrayXd j(m + 1);
        for (std::size_t i = begin; i < end; ++i) {
            const auto col = static_cast<Eigen::Index>(i);
            log_ratio = drift * dt - problem.mu * batch.increments.col(col);
            const bool ok = detail::exact_factors(dt.data(), log_ratio.data(), m, phi.data(), j.data());
            valid_[i] = ok ? 1 : 0;
            phi_.col(col) = phi.tail(m);
            carry_.col(col) = problem.rho * j.tail(m);
        }
    });
    for (auto v : valid_) n_dropped_ += v ? 0 : 1;
    if (n > 0 && static_cast<double>(n_dropped_) > kMaxDroppedFraction * static_cast<double>(n))
        throw std::overflow_error("psi simulation overflowed on " + std::to_string(n_dropped_) +
                                  " of " + std::to_string(n) + " paths");
}

IntegralEstimate VolterraKernel::evaluate(double x, const Eigen::ArrayXd& boundary,
                                          double start_indicator) const {
    const Eigen::Index m = gain_.size() - 1;
    const Eigen::Index start = static_cast<Eigen::Index>(k_);
    if (boundary.size() != start + m + 1)
        throw std::invalid_argument("VolterraKernel::evaluate: boundary size does not match grid");
    const double head = weight_(0) * (gain_(0) - x) * start_indicator;

    const std::size_t n = n_paths();
    IntegralEstimate est;
    est.n_dropped = n_dropped_;
    if (m == 0) {
        est.value = head;
        est.n_paths = n;
        return est;
    }

    // weight, gain and level of the tail nodes, contiguous for the inner loop
    const Eigen::ArrayXd w = weight_.tail(m);
    const Eigen::ArrayXd g = gain_.tail(m);
    const Eigen::ArrayXd level = boundary.segment(start + 1, m);

    std::vector<MeanAccumulator> partial(block_count(n));
    parallel_blocks(n, threads_, [&](std::size_t b, std::size_t begin, std::size_t end) {
        MeanAccumulator acc;
        for (std::size_t i = begin; i < end; ++i) {
            if (!valid_[i]) continue;
            const double* phi = phi_.col(static_cast<Eigen::Index>(i)).data();
            const double* carry = carry_.col(static_cast<Eigen::Index>(i)).data();
            double sum = 0.0;
            for (Eigen::Index j = 0; j < m; ++j) {
                const double psi = x * phi[j] + carry[j];
                sum += psi < level(j) ? w(j) * (g(j) - psi) : 0.0;
            }
            acc.add(head + sum);
        }
        partial[b] = acc;
    });
    MeanAccumulator total;
    for (const auto& p : partial) total.merge(p);
    est.value = total.mean();
    est.std_error = total.std_error();
    est.n_paths = total.count;
    return est;
}

IntegralEstimate volterra_integral(const GenericStopProblem& problem, double x,
                                   const Boundary& boundary, std::size_t k, const PathBatch& batch,
                                   unsigned threads) {
    if (!(x >= 0.0)) throw std::invalid_argument("volterra_integral: start level must be >= 0");
    if (boundary.grid.size() < 1 || boundary.values.size() != boundary.grid.size())
        throw std::invalid_argument("volterra_integral: malformed boundary");
    if (k + 1 >= static_cast<std::size_t>(boundary.grid.size()) && k < static_cast<std::size_t>(boundary.grid.size()))
        return IntegralEstimate{0.0, 0.0, batch.n_paths(), 0};
    VolterraKernel kernel(problem, boundary.grid, k, batch, threads);
    return kernel.evaluate(x, boundary.values,
                           start_indicator(x, boundary.values(static_cast<Eigen::Index>(k))));
}

IntegralEstimate value_integral(const GenericStopProblem& problem, const Boundary& boundary,
                                const PathBatch& batch, unsigned threads) {
    return volterra_integral(problem, problem.psi0, boundary, 0, batch, threads);
}

IntegralEstimate combine_estimates(const std::vector<IntegralEstimate>& parts) {
    MeanAccumulator total;
    std::size_t dropped = 0;
    for (const auto& p : parts) {
        const double n = static_cast<double>(p.n_paths);
        MeanAccumulator acc;
        acc.count = p.n_paths;
        acc.sum = p.value * n;
        acc.sum_sq = (n - 1.0) * p.std_error * p.std_error * n + n * p.value * p.value;
        total.merge(acc);
        dropped += p.n_dropped;
    }
    return IntegralEstimate{total.mean(), total.std_error(), total.count, dropped};
}

IntegralEstimate value_estimate(const GenericStopProblem& problem, const Boundary& boundary,
                                std::uint64_t seed, std::uint64_t stream, std::size_t n_paths,
                                unsigned threads, std::size_t chunk) {
    if (chunk == 0) throw std::invalid_argument("value_estimate: chunk must be positive");
    std::vector<IntegralEstimate> parts;
    for (std::size_t first = 0; first < n_paths; first += chunk) {
        const std::size_t count = std::min(chunk, n_paths - first);
        const PathBatch batch = make_path_batch(seed, stream, count, boundary.grid, threads, first);
        parts.push_back(value_integral(problem, boundary, batch, threads));
    }
    return combine_estimates(parts);
}

}  // namespace dstop
