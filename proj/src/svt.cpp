#include "synthint/svt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "synthint/error.hpp"

namespace synthint {

namespace {

// Cumulative energy is compared with a small relative slack so that
// energy(1.0) is reachable despite rounding in the partial sums.
constexpr double kEnergySlack = 1e-12;

}  // namespace

void SvtConfig::validate() const {
    if (min_rank < 1) throw Error(ErrorCode::InvalidArgument, "min_rank must be >= 1");
    if (const auto* f = std::get_if<FixedRank>(&rule)) {
        if (f->rank < 1) throw Error(ErrorCode::InvalidArgument, "fixed rank must be >= 1");
    } else {
        const double fraction = std::get<EnergyRank>(rule).fraction;
        if (!(fraction > 0.0 && fraction <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "energy fraction must lie in (0, 1]");
        }
    }
}

int select_rank(const Eigen::VectorXd& singular_values, const SvtConfig& config) {
    config.validate();
    const auto n = static_cast<int>(singular_values.size());
    for (int i = 0; i < n; ++i) {
        if (!(singular_values[i] >= 0.0) || !std::isfinite(singular_values[i]) ||
            (i > 0 && singular_values[i] > singular_values[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "singular values must be finite, nonnegative and descending");
        }
    }
    if (n == 0 || singular_values[0] == 0.0) throw Error(ErrorCode::AllZeroSpectrum, "spectrum is all zero");

    int rank = n;
    if (const auto* f = std::get_if<FixedRank>(&config.rule)) {
        rank = std::min(f->rank, n);
    } else {
        const double fraction = std::get<EnergyRank>(config.rule).fraction;
        const double total = singular_values.squaredNorm();
        double cumulative = 0.0;
        for (int i = 0; i < n; ++i) {
            cumulative += singular_values[i] * singular_values[i];
            if (cumulative >= (fraction - kEnergySlack) * total) {
                rank = i + 1;
                break;
            }
        }
    }
    return std::clamp(std::max(rank, config.min_rank), 1, n);
}

DenoisedBlock svt(const Eigen::MatrixXd& matrix, const SvtConfig& config) {
    config.validate();
    if (!matrix.allFinite()) throw Error(ErrorCode::NonFiniteInput, "svt input contains non-finite entries");

    DenoisedBlock block;
    if (matrix.size() == 0) {
        block.matrix = matrix;
        return block;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    block.singular_values = svd.singularValues();
    if (block.singular_values[0] == 0.0) {
        block.matrix = Eigen::MatrixXd::Zero(matrix.rows(), matrix.cols());
        return block;
    }
    const int r = select_rank(block.singular_values, config);
    block.rank_used = r;
    block.matrix = svd.matrixU().leftCols(r) * block.singular_values.head(r).asDiagonal() *
                   svd.matrixV().leftCols(r).transpose();
    return block;
}

}  // namespace synthint
