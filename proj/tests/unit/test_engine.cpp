#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "../support/fixtures.hpp"
#include "synthint/engine.hpp"
#include "synthint/svt.hpp"

using namespace synthint;

namespace {

DenoisedBlock block(const Eigen::MatrixXd& m) {
    DenoisedBlock b;
    b.matrix = m;
    b.rank_used = static_cast<int>(std::min(m.rows(), m.cols()));
    return b;
}

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (double x : row) m(i, j++) = x;
        ++i;
    }
    return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) { return rows({v}).row(0).transpose(); }

Eigen::MatrixXd random_panel(std::mt19937_64& rng, int n, int t) {
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    Eigen::MatrixXd y(n, t);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = unif(rng);
    return y;
}

SiModel model_with(std::vector<double> w) {
    SiModel m;
    m.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i) m.donor_ids.push_back("donor" + std::to_string(i + 1));
    return m;
}

}  // namespace

TEST(FitWeights, ExactScalarMultiple) {
    const WeightFit f = fit_weights(vec({2, 4, 6}), block(rows({{1, 2, 3}})));
    EXPECT_NEAR(f.weights(0), 2.0, 1e-14);
    EXPECT_LT(f.pre_fit_rmse, 1e-14);
}

TEST(FitWeights, OrthonormalDonors) {
    const WeightFit f = fit_weights(vec({3, 5}), block(rows({{1, 0}, {0, 1}})));
    EXPECT_NEAR(f.weights(0), 3.0, 1e-14);
    EXPECT_NEAR(f.weights(1), 5.0, 1e-14);
}

TEST(FitWeights, DuplicateDonorsGiveMinimumNorm) {
    const WeightFit f = fit_weights(vec({2, 2}), block(rows({{1, 1}, {1, 1}})));
    EXPECT_NEAR(f.weights(0), 1.0, 1e-14);
    EXPECT_NEAR(f.weights(1), 1.0, 1e-14);
}

TEST(FitWeights, MatchesNormalEquationsOracle) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 50; ++i) {
        const Eigen::MatrixXd donors = random_panel(rng, 2 + i % 4, 8);
        const Eigen::VectorXd target = random_panel(rng, 1, 8).row(0).transpose();
        const WeightFit f = fit_weights(target, block(donors));
        EXPECT_LT((f.weights - oracle::normal_equations(donors, target)).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(FitWeights, TargetInRowSpaceFitsExactly) {
    std::mt19937_64 rng(22);
    for (int i = 0; i < 20; ++i) {
        const Eigen::MatrixXd donors = svt(random_panel(rng, 6, 10), SvtConfig::fixed(2)).matrix;
        const Eigen::VectorXd target = donors.transpose() * random_panel(rng, 6, 1).col(0);
        EXPECT_LT(fit_weights(target, block(donors)).pre_fit_rmse, 1e-8);
    }
}

TEST(FitWeights, Errors) {
    try {
        fit_weights(vec({1, 2}), block(Eigen::MatrixXd(0, 2)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyDonorGroup);
    }
    try {
        fit_weights(vec({1, 2, 3}), block(rows({{1, 2}})));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}

TEST(Predict, ConvexCombination) {
    const Eigen::VectorXd y = predict_counterfactual(vec({0.5, 0.5}), block(rows({{2, 4}, {4, 8}})));
    EXPECT_DOUBLE_EQ(y(0), 3.0);
    EXPECT_DOUBLE_EQ(y(1), 6.0);
}

TEST(Predict, UnitWeightReturnsDonorRow) {
    const Eigen::MatrixXd d = rows({{1.25, -3.5, 7}});
    EXPECT_EQ(predict_counterfactual(vec({1}), block(d)), d.row(0).transpose());
}

TEST(Predict, DimensionMismatch) {
    EXPECT_THROW(predict_counterfactual(vec({1, 2}), block(rows({{1, 2}}))), Error);
}

TEST(Predict, Linear) {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
        const DenoisedBlock d = block(random_panel(rng, 5, 7));
        const Eigen::VectorXd l = random_panel(rng, 5, 1).col(0), m = random_panel(rng, 5, 1).col(0);
        const double a = 3.0 * random_panel(rng, 1, 1)(0) - 2.0, b = 2.0 - random_panel(rng, 1, 1)(0);
        const Eigen::VectorXd lhs = predict_counterfactual(a * l + b * m, d);
        const Eigen::VectorXd rhs = a * predict_counterfactual(l, d) + b * predict_counterfactual(m, d);
        ASSERT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(TopDonors, AbsoluteValueOrder) {
    const auto top = top_donors(model_with({0.1, -0.5, 0.3}), 2);
    ASSERT_EQ(top.size(), 2u);
    EXPECT_EQ(top[0].donor_id, "donor2");
    EXPECT_DOUBLE_EQ(top[0].weight, -0.5);
    EXPECT_EQ(top[1].donor_id, "donor3");
}

TEST(TopDonors, TiesKeepInputOrder) {
    const auto top = top_donors(model_with({0.2, 0.2}), 4);
    ASSERT_EQ(top.size(), 2u);
    EXPECT_EQ(top[0].donor_id, "donor1");
    EXPECT_EQ(top[1].donor_id, "donor2");
}

TEST(RunSi, OneEntryPerUnitAndLabel) {
    std::mt19937_64 rng(31);
    const AlignedPanel p = fixture::aligned_from(random_panel(rng, 6, 8), 5);
    const CounterfactualSet cf = run_si(p, fixture::partition_from({0, 1, 0, 1, 0, 1}, 2));
    EXPECT_EQ(cf.entries.size(), 12u);
    EXPECT_TRUE(cf.failures.empty());
    for (const auto& e : cf.entries) {
        EXPECT_EQ(e.trajectory.size(), 3);
        EXPECT_EQ(std::count(e.model.donor_ids.begin(), e.model.donor_ids.end(), e.unit_id), 0);
    }
}

TEST(RunSi, SingletonGroupTargetingItself) {
    std::mt19937_64 rng(32);
    const AlignedPanel p = fixture::aligned_from(random_panel(rng, 4, 6), 4);
    const CounterfactualSet cf = run_si(p, fixture::partition_from({0, 0, 0, 1}, 2));
    EXPECT_EQ(cf.entries.size(), 7u);
    ASSERT_EQ(cf.failures.size(), 1u);
    EXPECT_EQ(cf.failures[0].unit_id, fixture::unit_name(3));
    EXPECT_EQ(cf.failures[0].label, "d1");
    EXPECT_EQ(cf.failures[0].code, ErrorCode::EmptyDonorGroup);
}

TEST(RunSi, AbortsWhenNothingSucceeds) {
    std::mt19937_64 rng(33);
    const AlignedPanel p = fixture::aligned_from(random_panel(rng, 1, 6), 4);
    try {
        run_si(p, fixture::partition_from({0}, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoSuccessfulPairs);
    }
}

TEST(RunSi, DonorWithIncompletePostIsDroppedButStillTargeted) {
    std::mt19937_64 rng(34);
    AlignedPanel p = fixture::aligned_from(random_panel(rng, 6, 8), 5);
    p.mask(0, 7) = false;
    p.matrix(0, 7) = std::numeric_limits<double>::quiet_NaN();
    const CounterfactualSet cf = run_si(p, fixture::partition_from({0, 0, 0, 1, 1, 1}, 2));
    EXPECT_EQ(cf.entries.size(), 12u);
    for (const auto& e : cf.entries) {
        EXPECT_TRUE(e.trajectory.allFinite());
        EXPECT_EQ(std::count(e.model.donor_ids.begin(), e.model.donor_ids.end(), fixture::unit_name(0)), 0);
    }
    EXPECT_TRUE(std::any_of(cf.warnings.begin(), cf.warnings.end(),
                            [](const std::string& w) { return w.find("incomplete post-period") != std::string::npos; }));
}

TEST(RunSi, WarnsOnSmallDonorGroups) {
    std::mt19937_64 rng(35);
    const AlignedPanel p = fixture::aligned_from(random_panel(rng, 6, 8), 5);
    const CounterfactualSet cf = run_si(p, fixture::partition_from({0, 0, 0, 1, 1, 1}, 2));
    EXPECT_EQ(std::count_if(cf.warnings.begin(), cf.warnings.end(),
                            [](const std::string& w) { return w.find("only 3 donors") != std::string::npos; }),
              2);
}

TEST(RunSi, ThreadCountDoesNotChangeResults) {
    const auto fm = oracle::FactorModel::generate(41, 18, 20, 12, 3, 3);
    const AlignedPanel p = fixture::aligned_from(fm.observed(), fm.t0);
    const auto part = fixture::partition_from(fm.assignment, fm.d);
    RunSiOptions serial, parallel;
    parallel.threads = 4;
    const CounterfactualSet a = run_si(p, part, serial), b = run_si(p, part, parallel);
    ASSERT_EQ(a.entries.size(), b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_EQ(a.entries[i].unit_id, b.entries[i].unit_id);
        EXPECT_EQ(a.entries[i].label, b.entries[i].label);
        EXPECT_EQ(a.entries[i].trajectory, b.entries[i].trajectory);
    }
}

TEST(RunSi, RecoversSmallFactorModel) {
    const auto fm = oracle::FactorModel::generate(42, 18, 30, 20, 3, 3);
    RunSiOptions opt;
    opt.svt = SvtConfig::fixed(3);
    const CounterfactualSet cf =
        run_si(fixture::aligned_from(fm.observed(), fm.t0), fixture::partition_from(fm.assignment, fm.d), opt);
    EXPECT_EQ(cf.entries.size(), 54u);
    EXPECT_LT(fixture::max_relative_error(cf, fm), 1e-6);
}

TEST(RunSi, ScaleEquivariant) {
    std::mt19937_64 rng(36);
    for (int i = 0; i < 20; ++i) {
        const Eigen::MatrixXd y = random_panel(rng, 9, 12);
        const double c = 0.5 + 4.0 * random_panel(rng, 1, 1)(0);
        const auto part = fixture::partition_from({0, 1, 2, 0, 1, 2, 0, 1, 2}, 3);
        const CounterfactualSet a = run_si(fixture::aligned_from(y, 8), part);
        const CounterfactualSet b = run_si(fixture::aligned_from(c * y, 8), part);
        for (std::size_t k = 0; k < a.entries.size(); ++k) {
            ASSERT_LT((a.entries[k].model.weights - b.entries[k].model.weights).cwiseAbs().maxCoeff(), 1e-8);
            ASSERT_LT((c * a.entries[k].trajectory - b.entries[k].trajectory).cwiseAbs().maxCoeff(), 1e-8);
        }
    }
}

TEST(RunSi, DonorPermutationInvariant) {
    std::mt19937_64 rng(37);
    const Eigen::MatrixXd y = random_panel(rng, 8, 10);
    const std::vector<int> assign{0, 1, 0, 1, 0, 1, 0, 1};
    const CounterfactualSet a = run_si(fixture::aligned_from(y, 7), fixture::partition_from(assign, 2));

    std::vector<int> perm{5, 2, 7, 0, 3, 6, 1, 4};
    AlignedPanel permuted = fixture::aligned_from(y, 7);
    auto part = fixture::partition_from(assign, 2);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        permuted.matrix.row(static_cast<Eigen::Index>(i)) = y.row(perm[i]);
        permuted.unit_ids[i] = fixture::unit_name(perm[i]);
    }
    for (auto& [label, ids] : part.groups) std::reverse(ids.begin(), ids.end());
    const CounterfactualSet b = run_si(permuted, part);

    for (const auto& e : a.entries) {
        const CounterfactualEntry* other = b.find(e.unit_id, e.label);
        ASSERT_NE(other, nullptr);
        EXPECT_LT((e.trajectory - other->trajectory).cwiseAbs().maxCoeff(), 1e-8);
        for (std::size_t k = 0; k < e.model.donor_ids.size(); ++k) {
            const auto it = std::find(other->model.donor_ids.begin(), other->model.donor_ids.end(), e.model.donor_ids[k]);
            ASSERT_NE(it, other->model.donor_ids.end());
            EXPECT_NEAR(e.model.weights(static_cast<Eigen::Index>(k)),
                        other->model.weights(it - other->model.donor_ids.begin()), 1e-8);
        }
    }
}

TEST(Validation, PerfectPrediction) {
    const Eigen::VectorXd y = vec({3, 5, 9});
    const auto m = validation_metrics(y, y, Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(3, true));
    EXPECT_EQ(m.rmse, 0.0);
    EXPECT_EQ(m.r2, 1.0);
    EXPECT_EQ(m.mape, 0.0);
}

TEST(Validation, OffByOneOnConstantTen) {
    const Eigen::VectorXd obs = Eigen::VectorXd::Constant(5, 10.0);
    const auto m = validation_metrics(obs.array() + 1.0, obs, Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(5, true));
    EXPECT_NEAR(m.rmse, 1.0, 1e-15);
    EXPECT_NEAR(m.mape, 0.1, 1e-15);
    EXPECT_EQ(m.observed_days, 5u);
}

TEST(Validation, SkipsMissingCellsAndNeedsOne) {
    Eigen::Array<bool, Eigen::Dynamic, 1> mask(3);
    mask << true, false, true;
    const auto m = validation_metrics(vec({1, 100, 3}), vec({2, 0, 2}), mask);
    EXPECT_NEAR(m.rmse, 1.0, 1e-15);
    EXPECT_EQ(m.observed_days, 2u);
    try {
        validation_metrics(vec({1}), vec({1}), Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(1, false));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoObservedPostData);
    }
}

TEST(Validation, OneRowPerUnitWithOwnPrediction) {
    std::mt19937_64 rng(38);
    const AlignedPanel p = fixture::aligned_from(random_panel(rng, 6, 8), 5);
    const CounterfactualSet cf = run_si(p, fixture::partition_from({0, 1, 0, 1, 0, 1}, 2));
    const ValidationReport report = self_validation(cf);
    ASSERT_EQ(report.rows.size(), 6u);
    for (const auto& row : report.rows) {
        const auto i = static_cast<Eigen::Index>(*cf.unit_index(row.unit_id));
        const Eigen::VectorXd err = cf.find(row.unit_id, row.label)->trajectory - cf.observed.row(i).transpose();
        EXPECT_NEAR(row.rmse, std::sqrt(err.squaredNorm() / 3.0), 1e-12);
    }
}
