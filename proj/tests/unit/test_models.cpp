#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "catsketch/models.hpp"
#include "support/instances.hpp"

using namespace catsketch;
using testing::Kind;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ModelSpec binary01() { return ModelSpec::binary_probit(0.0, 1.0); }

double fd(const ModelSpec& m, double y, double x, double h = 1e-5) {
    return (entry_log_lik(m, y, x + h) - entry_log_lik(m, y, x - h)) / (2.0 * h);
}

double fd_d1(const ModelSpec& m, double y, double x, double h = 1e-5) {
    return (entry_derivs(m, y, x + h).d1 - entry_derivs(m, y, x - h).d1) / (2.0 * h);
}

}  // namespace

TEST_CASE("forward_map follows the bin and censoring rules") {
    CHECK(forward_map(binary01(), 0.0) == -1.0);
    CHECK(forward_map(binary01(), 1e-12) == 1.0);
    CHECK(forward_map(ModelSpec(TobitI{-1.0, 1.0, 1.0}), 2.0) == 1.0);
    CHECK(forward_map(ModelSpec(TobitI{-1.0, 1.0, 1.0}), -3.0) == -1.0);
    CHECK(forward_map(ModelSpec(TobitI{-1.0, 1.0, 1.0}), 0.25) == 0.25);
    CHECK(forward_map(ModelSpec(TobitII{-1.0, 1.0, 0.0, 1.0}), 0.5) == 0.0);
    CHECK(forward_map(ModelSpec(TobitII{-1.0, 1.0, 0.0, 1.0}), 1.5) == 1.5);
    CHECK(forward_map(ModelSpec(LogitBinary{}), 0.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(forward_map(ModelSpec(LogitMulti{{1, 2, 3}}), 0.0), std::domain_error);
}

TEST_CASE("forward_map is monotone for Probit") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const ModelSpec m = testing::random_model(rng, Kind::Probit);
        double last = -kInf;
        for (double x = -8.0; x <= 8.0; x += 0.01) {
            const double y = forward_map(m, x);
            CHECK(y >= last);
            last = y;
        }
    }
}

TEST_CASE("entry_log_lik reference values") {
    CHECK(entry_log_lik(binary01(), 1.0, 0.0) == doctest::Approx(-0.693147).epsilon(1e-6));
    CHECK(entry_log_lik(binary01(), 1.0, 1.0) == doctest::Approx(std::log(0.841344746068543)).epsilon(1e-12));
    CHECK(entry_log_lik(ModelSpec(TobitI{-1.0, 1.0, 1.0}), 0.3, 0.3) == doctest::Approx(-0.918939).epsilon(1e-6));
    const ModelSpec multi(LogitMulti{{1, 2, 3}});
    const double zero[] = {0.0, 0.0};
    for (const double y : {1.0, 2.0, 3.0}) CHECK(score_log_lik(multi, y, zero) == doctest::Approx(std::log(1.0 / 3.0)));
    CHECK_THROWS_AS(entry_log_lik(binary01(), 0.5, 0.0), std::domain_error);
    CHECK_THROWS_AS(entry_log_lik(ModelSpec(LogitBinary{}), -1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(entry_log_lik(ModelSpec(TobitI{-1.0, 1.0, 1.0}), 2.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(entry_log_lik(ModelSpec(TobitII{-1.0, 1.0, 0.0, 1.0}), 0.5, 0.0), std::domain_error);
}

TEST_CASE("entry_derivs reference values") {
    CHECK(entry_derivs(binary01(), 1.0, 0.0).d1 == doctest::Approx(0.797885).epsilon(1e-6));
    const EntryDerivs l = entry_derivs(ModelSpec(LogitBinary{}), 1.0, 0.7);
    CHECK(l.d1 == doctest::Approx(1.0 / (1.0 + std::exp(0.7))));
    CHECK(l.d2 == doctest::Approx(-std::exp(0.7) / std::pow(1.0 + std::exp(0.7), 2)));
    // Deep tail: z_j = (0 - x) / 1 = 8.
    const double d1 = entry_derivs(binary01(), 1.0, -8.0).d1;
    double term = 1.0;
    double series = 1.0;
    for (int k = 1; k < 12; ++k) {
        term *= -(2.0 * k - 1.0) / 64.0;
        series += term;
    }
    CHECK(testing::rel_err(d1, 8.0 / series) < 1e-6);
}

TEST_CASE("first derivative matches central differences") {
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (const Kind kind : testing::kAllKinds) {
        for (int rep = 0; rep < 400; ++rep) {
            const ModelSpec m = testing::random_model(rng, kind);
            const double y = testing::random_label(rng, m);
            if (kind == Kind::LogitMulti) {
                const int k = m.score_count();
                const Vec s = testing::random_vec(rng, k, 2.0);
                const ScoreDerivs sd = score_derivs(m, y, {s.data(), static_cast<std::size_t>(k)});
                for (int j = 0; j < k; ++j) {
                    Vec a = s;
                    Vec b = s;
                    a[j] += 1e-5;
                    b[j] -= 1e-5;
                    const double num = (score_log_lik(m, y, {a.data(), static_cast<std::size_t>(k)}) -
                                        score_log_lik(m, y, {b.data(), static_cast<std::size_t>(k)})) /
                                       2e-5;
                    CHECK(testing::rel_err(sd.grad[j], num) <= 1e-5);
                }
                ++checked;
                continue;
            }
            const double x = testing::uniform(rng, -6.0, 6.0);
            const EntryDerivs ed = entry_derivs(m, y, x);
            INFO(testing::kind_name(kind) << " y=" << y << " x=" << x);
            CHECK(testing::rel_err(ed.d1, fd(m, y, x)) <= 1e-5);
            CHECK(testing::rel_err(ed.d2, fd_d1(m, y, x)) <= 1e-4);
            ++checked;
        }
    }
    CHECK(checked >= 1000);
}

TEST_CASE("all outputs finite far into the tails") {
    const ModelSpec m = ModelSpec(Probit{QuantizerSpec::from_interior({1, 2, 3}, std::vector<double>{-0.5, 0.5}, 0.1)});
    for (const double x : {-1e8, -300.0, -40.0, 40.0, 300.0, 1e8, 1e160}) {
        for (const double y : {1.0, 2.0, 3.0}) {
            const EntryDerivs e = entry_derivs(m, y, x);
            INFO("x=" << x << " y=" << y);
            CHECK(std::isfinite(e.loglik));
            CHECK(std::isfinite(e.d1));
            CHECK(std::isfinite(e.d2));
            CHECK(e.d2 <= 0.0);
        }
    }
}

TEST_CASE("probabilities over the alphabet sum to one") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 200; ++rep) {
        const double x = testing::uniform(rng, -6.0, 6.0);
        const ModelSpec p = testing::random_model(rng, Kind::Probit);
        double s = 0.0;
        for (const double y : p.quantizer()->levels) s += std::exp(entry_log_lik(p, y, x));
        CHECK(s == doctest::Approx(1.0).epsilon(1e-10));

        const ModelSpec l(LogitBinary{});
        CHECK(std::exp(entry_log_lik(l, 0.0, x)) + std::exp(entry_log_lik(l, 1.0, x)) ==
              doctest::Approx(1.0).epsilon(1e-10));

        const ModelSpec mm = testing::random_model(rng, Kind::LogitMulti);
        const Vec sc = testing::random_vec(rng, mm.score_count(), 2.0);
        double sm = 0.0;
        for (const double y : std::get<LogitMulti>(mm.variant()).levels) {
            sm += std::exp(score_log_lik(mm, y, {sc.data(), static_cast<std::size_t>(sc.size())}));
        }
        CHECK(sm == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("log-concavity in x for Probit, Tobit-II and Logit") {
    std::mt19937_64 rng(9);
    for (const Kind kind : {Kind::Probit, Kind::TobitII, Kind::Logit}) {
        for (int rep = 0; rep < 300; ++rep) {
            const ModelSpec m = testing::random_model(rng, kind);
            const double y = testing::random_label(rng, m);
            CHECK(entry_derivs(m, y, testing::uniform(rng, -6.0, 6.0)).d2 <= 1e-12);
        }
    }
    std::mt19937_64 r2(10);
    for (int rep = 0; rep < 100; ++rep) {
        const ModelSpec m = testing::random_model(r2, Kind::LogitMulti);
        const Vec sc = testing::random_vec(r2, m.score_count(), 2.0);
        const ScoreDerivs sd = score_derivs(m, testing::random_label(r2, m), {sc.data(), static_cast<std::size_t>(sc.size())});
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(sd.hess));
        CHECK(es.eigenvalues().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("Probit curvature stays within the Lemma 1 Hessian constant") {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 500; ++rep) {
        const ModelSpec m = testing::random_model(rng, Kind::Probit);
        const SmoothnessBounds b = probit_smoothness(*m.quantizer());
        const double y = testing::random_label(rng, m);
        const EntryDerivs e = entry_derivs(m, y, testing::uniform(rng, -6.0, 6.0));
        CHECK(std::abs(e.d2) <= b.delta2 + 1e-12);
    }
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(QuantizerSpec::from_interior({1, 2}, std::vector<double>{}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(QuantizerSpec::from_interior({1, 2, 3}, std::vector<double>{1.0, 0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(QuantizerSpec::from_interior({1, 2}, std::vector<double>{0.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(QuantizerSpec::from_interior({1, 1}, std::vector<double>{0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ModelSpec(TobitI{1.0, 1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(ModelSpec(TobitII{-1.0, 1.0, 1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(ModelSpec(LogitMulti{{1}}), std::invalid_argument);
    CHECK(ModelSpec(LogitMulti{{1, 2, 3, 4}}).score_count() == 3);
    CHECK(binary01().with_binary_threshold(0.3).quantizer()->thresholds[1] == 0.3);
    CHECK_THROWS_AS(ModelSpec(TobitI{}).with_binary_threshold(0.0), std::logic_error);
    for (const char* tag : {"probit", "tobit1", "tobit2", "logit", "logit_multi"}) CHECK(is_known_model_tag(tag));
    CHECK_FALSE(is_known_model_tag("svm"));
    CHECK(ModelSpec(TobitII{}).tag() == "tobit2");
}

TEST_CASE("stable_log_tail_diff reference values") {
    CHECK(stable_log_tail_diff(-kInf, kInf) == 0.0);
    CHECK(stable_log_tail_diff(0.0, kInf) == doctest::Approx(std::log(0.5)));
    CHECK_THROWS_AS(stable_log_tail_diff(0.0, 0.0), std::domain_error);
}

TEST_CASE("LogitMulti prediction picks the most probable class") {
    const ModelSpec m(LogitMulti{{10, 20, 30}});
    const double a[] = {-1.0, -2.0};
    const double b[] = {0.5, 2.0};
    CHECK(predict(m, a) == 10.0);
    CHECK(predict(m, b) == 30.0);
}
