#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "way/models.hpp"

using namespace way;

namespace {

Observable diag_observable(const GradedSpace &s, std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return Observable(s, Matrix(v.asDiagonal()));
}

WayScenario qubit_pm_scenario(std::optional<PureState> resource = std::nullopt) {
    const auto q = GradedSpace::qubit();
    return {q, pm_observable(), number_operator(q), {0.5, 0.5}, std::move(resource)};
}

/// Twirled-support overlap computed from dense matrices: sum_n Pi_n rho Pi_n.
bool brute_force_perfect(const std::vector<Matrix> &states, const GradedSpace &s) {
    std::vector<Matrix> twirled;
    for (const auto &rho : states) {
        Matrix t = Matrix::Zero(rho.rows(), rho.cols());
        for (int n : s.charges()) {
            const Matrix P = sector_projector(s, n).matrix;
            t += P * rho * P;
        }
        twirled.push_back(t);
    }
    for (std::size_t i = 0; i < twirled.size(); ++i)
        for (std::size_t j = i + 1; j < twirled.size(); ++j)
            if ((twirled[i] * twirled[j]).cwiseAbs().maxCoeff() > 1e-9) return false;
    return true;
}

}  // namespace

TEST(WayFeasibility, qubit_without_resource_is_impossible) {
    const auto rep = way_feasibility(qubit_pm_scenario());
    EXPECT_EQ(rep.verdict, Verdict::impossible);
    EXPECT_EQ(rep.ensemble.size(), 2u);
}

TEST(WayFeasibility, resource_makes_it_approximate) {
    EXPECT_EQ(way_feasibility(qubit_pm_scenario(uniform_state(3))).verdict, Verdict::approximate_only);
    EXPECT_EQ(way_feasibility(qubit_pm_scenario(coherent_state(1.0))).verdict, Verdict::approximate_only);
}

TEST(WayFeasibility, commuting_observable_is_perfect) {
    const auto q = GradedSpace::qubit();
    const WayScenario sc{q, diag_observable(q, {2.0, -1.0}), number_operator(q), {0.5, 0.5}, std::nullopt};
    EXPECT_EQ(way_feasibility(sc).verdict, Verdict::perfect);
}

TEST(WayFeasibility, prior_information_restores_perfection) {
    const auto s = GradedSpace::levels(2);
    const double h = std::numbers::sqrt2 / 2;
    Matrix vecs = Matrix::Zero(3, 3);
    vecs(0, 0) = 1.0;
    vecs(1, 1) = h;
    vecs(2, 1) = h;
    vecs(1, 2) = h;
    vecs(2, 2) = -h;
    const Matrix L = vecs * Vector{{0.0, 1.0, 2.0}}.asDiagonal() * vecs.adjoint();
    WayScenario sc{s, Observable(s, L), number_operator(s), {0.5, 0.5, 0.0}, std::nullopt};
    const auto rep = way_feasibility(sc);
    EXPECT_EQ(rep.verdict, Verdict::perfect);
    EXPECT_EQ(rep.eigen_indices, (std::vector<std::size_t>{0, 1}));

    std::vector<Matrix> survivors;
    for (auto k : rep.eigen_indices) survivors.push_back(vecs.col(static_cast<Eigen::Index>(k)) * vecs.col(static_cast<Eigen::Index>(k)).adjoint());
    EXPECT_TRUE(brute_force_perfect(survivors, s));

    sc.prior = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    EXPECT_EQ(way_feasibility(sc).verdict, Verdict::approximate_only);
}

TEST(WayFeasibility, rejects_bad_scenarios) {
    const auto q = GradedSpace::qubit();
    EXPECT_THROW(way_feasibility({q, diag_observable(q, {1.0, 1.0}), number_operator(q), {0.5, 0.5}, std::nullopt}), Error);
    EXPECT_THROW(way_feasibility({q, pm_observable(), diag_observable(q, {0.0, 2.0}), {0.5, 0.5}, std::nullopt}), Error);
    EXPECT_THROW(way_feasibility({q, pm_observable(), number_operator(q), {0.5, 0.6}, std::nullopt}), Error);
    EXPECT_THROW(way_feasibility({q, pm_observable(), number_operator(q), {1.0}, std::nullopt}), Error);
}

TEST(WayFeasibility, agrees_with_brute_force_on_random_instances) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> dim(2, 4), charge(0, 3), coin(0, 3);
    for (int t = 0; t < 60; ++t) {
        const int d = dim(rng);
        std::vector<int> cs;
        for (int i = 0; i < d; ++i) cs.push_back(charge(rng));
        std::sort(cs.begin(), cs.end());
        std::vector<int> charges, dims;
        for (int c : cs) {
            if (!charges.empty() && charges.back() == c) ++dims.back();
            else {
                charges.push_back(c);
                dims.push_back(1);
            }
        }
        const GradedSpace s(charges, dims);
        // Either a random Hermitian L or one that commutes with N.
        Matrix L = oracle::random_hermitian(rng, d);
        if (coin(rng) == 0) {
            Matrix blockwise = Matrix::Zero(d, d);
            for (int n : s.charges()) {
                const Matrix P = sector_projector(s, n).matrix;
                blockwise += P * L * P;
            }
            L = blockwise;
        }
        std::vector<double> prior(static_cast<std::size_t>(d));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double total = 0.0;
        for (auto &p : prior) {
            p = coin(rng) == 0 ? 0.0 : u(rng);
            total += p;
        }
        if (total == 0.0) prior[0] = total = 1.0;
        for (auto &p : prior) p /= total;

        const auto rep = way_feasibility({s, Observable(s, L), number_operator(s), prior, std::nullopt});
        Eigen::SelfAdjointEigenSolver<Matrix> es(L);
        std::vector<Matrix> states;
        for (int k = 0; k < d; ++k)
            if (prior[static_cast<std::size_t>(k)] > 0.0) states.push_back(es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint());
        const bool commutes = commutator(L, number_operator(s).matrix).cwiseAbs().maxCoeff() < 1e-12;
        const bool expected = commutes || brute_force_perfect(states, s);
        EXPECT_EQ(rep.verdict == Verdict::perfect, expected) << t;
        EXPECT_EQ(rep.verdict == Verdict::perfect, perfect_discrimination_possible(rep.ensemble)) << t;
    }
}

TEST(UniformModel, unambiguous_success) {
    for (int M : {1, 2, 10, 30}) {
        const auto r = uniform_model(M, Criterion::ud);
        EXPECT_NEAR(r.success_numeric, M / (M + 1.0), 1e-12);
        EXPECT_NEAR(r.fail_numeric, 1.0 / (M + 1.0), 1e-12);
        EXPECT_NEAR(*r.success_closed_form, M / (M + 1.0), 1e-15);
        EXPECT_NEAR(r.mean_n, M / 2.0, 1e-15);
    }
}

TEST(UniformModel, minimum_error_success) {
    // Perfect on the M two-dimensional sectors, a coin toss on the two edge sectors.
    for (int M : {1, 2, 10, 30}) {
        const auto r = uniform_model(M, Criterion::mle);
        EXPECT_NEAR(r.success_numeric, (2.0 * M + 1.0) / (2.0 * M + 2.0), 1e-12);
        const auto ens = twirled_pair(uniform_state(M));
        EXPECT_NEAR(r.success_numeric,
                    oracle::helstrom_trace_norm(ens.items()[0].state.dense(), ens.items()[1].state.dense(), 0.5, 0.5), 1e-12);
    }
}

TEST(UniformModel, success_increases_with_M) {
    double prev_ud = 0.0, prev_mle = 0.0;
    for (int M = 1; M <= 12; ++M) {
        const double ud = uniform_model(M, Criterion::ud).success_numeric;
        const double mle = uniform_model(M, Criterion::mle).success_numeric;
        EXPECT_GT(ud, prev_ud);
        EXPECT_GT(mle, prev_mle);
        prev_ud = ud;
        prev_mle = mle;
    }
    EXPECT_THROW(uniform_model(0, Criterion::ud), Error);
}

TEST(CoherentModel, unambiguous_matches_sector_sum) {
    for (double nbar : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
        const auto r = coherent_model(std::sqrt(nbar), Criterion::ud);
        EXPECT_NEAR(r.success_numeric, oracle::coherent_ud_sector_sum(nbar, 400), 1e-8) << nbar;
        EXPECT_NEAR(r.success_numeric, oracle::coherent_ud_floor_form(nbar), 1e-8) << nbar;
        EXPECT_NEAR(*r.success_closed_form, coherent_ud_closed_form(nbar), 1e-13);
        EXPECT_NEAR(r.mean_n, nbar, 1e-12);
    }
    EXPECT_NEAR(coherent_model(1.0, Criterion::ud).success_numeric, 1.0 - std::exp(-1.0), 1e-10);
}

TEST(CoherentModel, closed_form_values) {
    EXPECT_NEAR(coherent_ud_closed_form(1.0), 1.0 - std::exp(-1.0) / 2.0, 1e-15);
    EXPECT_NEAR(coherent_ud_closed_form(4.0), 1.0 - std::exp(-4.0) * 1024.0 / (24.0 * 5.0), 1e-14);
    EXPECT_NEAR(ozawa_reference_curve(1.0), 0.95, 1e-15);
}

TEST(CoherentModel, minimum_error_matches_closed_form) {
    for (double nbar : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
        const auto r = coherent_model(std::sqrt(nbar), Criterion::mle);
        EXPECT_NEAR(r.success_numeric, *r.success_closed_form, 1e-8) << nbar;
        double sum = 0.25 * std::exp(-nbar);  // sector 0: both states equal
        for (int n = 1; n < 400; ++n) {
            const double w = 0.5 * (std::exp(-nbar + n * std::log(nbar) - std::lgamma(n + 1.0)) +
                                    std::exp(-nbar + (n - 1) * std::log(nbar) - std::lgamma(static_cast<double>(n))));
            sum += w * (0.5 + std::sqrt(n * nbar) / (n + nbar));
        }
        EXPECT_NEAR(r.success_numeric, sum, 1e-8) << nbar;
    }
}

TEST(CoherentModel, success_increases_with_mean) {
    double prev_ud = 0.0, prev_mle = 0.0;
    for (double nbar : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
        const double ud = coherent_model(std::sqrt(nbar), Criterion::ud).success_numeric;
        const double mle = coherent_model(std::sqrt(nbar), Criterion::mle).success_numeric;
        EXPECT_GT(ud, prev_ud);
        EXPECT_GT(mle, prev_mle);
        prev_ud = ud;
        prev_mle = mle;
    }
    EXPECT_THROW(coherent_model(0.0, Criterion::ud), Error);
}

TEST(CoherentModel, stirling_limit) {
    const auto r = coherent_model(10.0, Criterion::ud);
    const double p = r.success_numeric;
    EXPECT_LE(std::abs(p - coherent_ud_stirling(100.0)) / (1.0 - p), 0.02);
    EXPECT_NEAR(*r.success_reference, coherent_ud_stirling(100.0), 0.0);
}

TEST(OptPhaseModel, examples) {
    EXPECT_NEAR(opt_phase_model(1).success_numeric, uniform_model(1, Criterion::mle).success_numeric, 1e-12);
    for (int M : {1, 2, 5, 20}) {
        const double c = std::cos(std::numbers::pi / (2.0 * (M + 2)));
        EXPECT_NEAR(opt_phase_model(M).success_numeric, c * c, 1e-10) << M;
    }
    const double miss = 1.0 - opt_phase_model(20).success_numeric;
    const double ref = std::numbers::pi * std::numbers::pi / (4.0 * 22.0 * 22.0);
    EXPECT_LE(std::abs(miss - ref) / ref, 0.10);
    EXPECT_THROW(opt_phase_model(0), Error);
}

TEST(OptPhaseModel, never_worse_than_uniform_at_equal_mean) {
    for (int M = 1; M <= 30; ++M)
        EXPECT_GE(opt_phase_model(M).success_numeric, uniform_model(M, Criterion::mle).success_numeric - 1e-12) << M;
}

TEST(OzawaBound, examples) {
    const auto q = GradedSpace::qubit();
    const Observable L = pm_observable(), N = number_operator(q);
    // Commuting observable.
    for (int M : {1, 3}) {
        const Observable NA = number_operator(GradedSpace::levels(M));
        const Matrix joint = kron(number_state(0, 1).density() * 0.5 + number_state(1, 1).density() * 0.5,
                                  uniform_state(M).density());
        EXPECT_NEAR(ozawa_bound(diag_observable(q, {1, -1}), N, NA, joint), 0.0, 1e-15);
    }
    // System (|0> + i|1>)/sqrt2: <[L, N_S]> = i, 4 Var N_S = 1, 4 Var N_A = M(M+2)/3.
    Vector y(2);
    y << std::numbers::sqrt2 / 2, cplx(0, std::numbers::sqrt2 / 2);
    for (int M = 1; M <= 6; ++M) {
        const Observable NA = number_operator(GradedSpace::levels(M));
        const TensorProduct tp({q, GradedSpace::levels(M)});
        const Matrix joint = tp.product(std::vector<Matrix>{y * y.adjoint(), uniform_state(M).density()});
        EXPECT_NEAR(ozawa_bound(L, N, NA, joint), 1.0 / (1.0 + M * (M + 2) / 3.0), 1e-12);
        EXPECT_NEAR(ozawa_bound(build_ud_unitary(M), L, y * y.adjoint()), 1.0 / (1.0 + M * (M + 2) / 3.0 + 0.0), 1e-12);
    }
    // Number-state apparatus: system-only expression.
    const Observable NA = number_operator(GradedSpace::levels(4));
    const TensorProduct tp({q, GradedSpace::levels(4)});
    const Matrix joint = tp.product(std::vector<Matrix>{y * y.adjoint(), number_state(2, 4).density()});
    EXPECT_NEAR(ozawa_bound(L, N, NA, joint), 1.0, 1e-12);
    // Both charges sharp: undefined.
    const Matrix sharp = tp.product(std::vector<Matrix>{number_state(0, 1).density(), number_state(2, 4).density()});
    EXPECT_THROW(ozawa_bound(L, N, NA, sharp), Error);
}

TEST(Noise, exact_readout_is_noiseless) {
    const auto m = build_number_readout();
    const auto q = GradedSpace::qubit();
    std::mt19937_64 rng(37);
    for (int t = 0; t < 10; ++t)
        EXPECT_NEAR(noise_of_model(m, diag_observable(q, {2.0, -1.0}), {{"plus", 2.0}, {"minus", -1.0}},
                                   oracle::random_density(rng, 2)),
                    0.0, 1e-12);
}

TEST(Noise, idle_model_has_full_variance) {
    const auto m = build_idle_model();
    const Matrix rho = number_state(0, 1).density();
    const Observable L = pm_observable();
    const double noise = noise_of_model(m, L, {{"plus", 1.0}, {"minus", -1.0}}, rho);
    EXPECT_NEAR(noise, variance(L, rho), 1e-12);
    EXPECT_NEAR(noise, 1.0, 1e-12);
}

TEST(Noise, circuits_respect_the_bound) {
    std::mt19937_64 rng(41);
    const Observable L = pm_observable();
    for (int M = 1; M <= 6; ++M) {
        for (const auto &m : {build_ud_unitary(M), build_mle_unitary(M), build_repeatable_variant(M)}) {
            for (int t = 0; t < 5; ++t) {
                const Matrix rho = oracle::random_density(rng, 2);
                const double eps2 = noise_of_model(m, L, {{"plus", 1.0}, {"minus", -1.0}}, rho);
                EXPECT_GE(eps2, ozawa_bound(m, L, rho) - 1e-10) << m.kind << " " << M;
            }
        }
    }
}
