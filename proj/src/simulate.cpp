#include "disorder_stop/simulate.hpp"

#include <stdexcept>

namespace dstop {

PathBatch make_path_batch(std::uint64_t seed, std::uint64_t stream, std::size_t n_paths,
                          const Eigen::ArrayXd& grid, unsigned threads,
                          std::size_t first_path) {
    if (grid.size() < 1) throw std::invalid_argument("make_path_batch: empty grid");
    for (Eigen::Index k = 1; k < grid.size(); ++k)
        if (!(grid(k) > grid(k - 1)))
            throw std::invalid_argument("make_path_batch: grid must be strictly increasing");

    PathBatch batch;
    batch.seed = seed;
    batch.stream = stream;
    batch.grid = grid;
    batch.increments.resize(grid.size() - 1, static_cast<Eigen::Index>(n_paths));
    parallel_blocks(n_paths, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = path_rng(seed, stream, first_path + i);
            draw_increments<double>(grid, rng, batch.increments.col(static_cast<Eigen::Index>(i)).data());
        }
    });
    return batch;
}

PsiBatch simulate_batch(const GenericStopProblem& problem, double x0, const PathBatch& batch) {
    PsiBatch out;
    out.paths.reserve(batch.n_paths());
    for (Eigen::Index i = 0; i < batch.increments.cols(); ++i) {
        out.paths.push_back(psi_path_exact<double>(problem, x0, batch.grid, batch.increments.col(i)));
        if (!out.paths.back().valid) ++out.n_invalid;
    }
    return out;
}

}  // namespace dstop
