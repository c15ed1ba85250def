#pragma once

#include <variant>

#include <Eigen/Dense>

#include "synthint/error.hpp"

namespace synthint {

struct FixedRank {
    int rank = 1;
};

/// Keep the smallest number of components whose squared singular values
/// reach `fraction` of the total energy.
struct EnergyRank {
    double fraction = 0.90;
};

struct SvtConfig {
    std::variant<FixedRank, EnergyRank> rule = EnergyRank{};
    int min_rank = 1;

    static SvtConfig fixed(int k) { return SvtConfig{FixedRank{k}, 1}; }
    static SvtConfig energy(double fraction) { return SvtConfig{EnergyRank{fraction}, 1}; }
    void validate() const;
};

struct DenoisedBlock {
    Eigen::MatrixXd matrix;
    int rank_used = 0;
    /// Full spectrum of the input, descending.
    Eigen::VectorXd singular_values;
};

/// Rank chosen for a descending spectrum. Throws AllZeroSpectrum.
int select_rank(const Eigen::VectorXd& singular_values, const SvtConfig& config);

/// Best rank-r approximation (truncated SVD) with r from `config`.
/// An all-zero input comes back unchanged with rank 0.
DenoisedBlock svt(const Eigen::MatrixXd& matrix, const SvtConfig& config);

}  // namespace synthint
