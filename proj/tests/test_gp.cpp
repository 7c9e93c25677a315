#include <doctest.h>

#include <cmath>

#include "morphevo/gp.hpp"
#include "morphevo/rng.hpp"
#include "oracles.hpp"

using namespace morphevo;

namespace {

std::vector<std::vector<double>> random_points(Rng& rng, std::size_t n, std::size_t d)
{
    std::vector<std::vector<double>> pts(n, std::vector<double>(d));
    for (auto& p : pts)
        for (auto& v : p)
            v = uniform01(rng);
    return pts;
}

PointSet to_set(const std::vector<std::vector<double>>& pts)
{
    PointSet s;
    for (const auto& p : pts)
        s.push_back(p);
    return s;
}

} // namespace

TEST_CASE("matern 5/2 values")
{
    CHECK(matern52(0.0, 0.2) == 1.0);
    CHECK(matern52(50.0, 0.2) < 1e-100);
    const double closed = (1.0 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0));
    CHECK(std::abs(matern52(0.2, 0.2) - closed) < 1e-10);
    CHECK(std::abs(matern52(0.2, 0.2) - oracle::matern52(0.2, 0.2, 1.0)) < 1e-15);
    CHECK(closed == doctest::Approx(0.52399).epsilon(1e-5));
}

TEST_CASE("single observation")
{
    PointSet X;
    X.push_back(std::vector<double>{0.3, 0.7});
    const std::vector<double> y{3.0};
    const auto m = gp_fit(X, y);
    CHECK(m.y_std == std::vector<double>{0.0});
    const auto p = gp_posterior(m, X[0]);
    CHECK(p.mu == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("duplicate points fit through jitter")
{
    PointSet X;
    X.push_back(std::vector<double>{0.5, 0.5});
    X.push_back(std::vector<double>{0.5, 0.5});
    const std::vector<double> y{1.0, 1.0};
    const auto m = gp_fit(X, y);
    CHECK(m.jitter > 0.0);
    CHECK(m.jitter <= 1e-2);
    CHECK(gp_posterior(m, X[0]).mu == doctest::Approx(1.0));
}

TEST_CASE("rejects bad input")
{
    PointSet X;
    CHECK_THROWS(gp_fit(X, std::vector<double>{}));
    X.push_back(std::vector<double>{0.1});
    CHECK_THROWS(gp_fit(X, std::vector<double>{1.0, 2.0}));
    CHECK_THROWS(gp_fit(X, std::vector<double>{-INFINITY}));
}

TEST_CASE("interpolation and reversion to the prior")
{
    auto rng = make_rng({3});
    const auto pts = random_points(rng, 8, 3);
    std::vector<double> y;
    for (const auto& p : pts)
        y.push_back(p[0] - p[1] * p[2]);
    const auto m = gp_fit(to_set(pts), y);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto p = gp_posterior(m, pts[i]);
        CHECK(std::abs(p.mu - y[i]) < 1e-3);
        CHECK(p.sigma < 1e-3);
    }
    const auto far = gp_posterior(m, std::vector<double>{50.0, 50.0, 50.0});
    CHECK(std::abs(far.mu - m.y_mean) < 1e-3);
    CHECK(std::abs(far.sigma - m.y_scale) < 1e-3);
}

TEST_CASE("posterior matches a dense direct solve")
{
    auto rng = make_rng({4});
    for (std::size_t n : {10u, 25u}) {
        for (std::size_t d : {2u, 5u, 20u}) {
            const auto pts = random_points(rng, n, d);
            std::vector<double> y;
            for (const auto& p : pts)
                y.push_back(std::sin(6 * p[0]) + p[d - 1]);
            const auto probes = random_points(rng, 20, d);
            const auto m = gp_fit(to_set(pts), y);
            const auto ref = oracle::gp_predict(pts, y, probes, 0.2, 1.0, m.jitter);
            const auto got = gp_posterior_batch(m, to_set(probes));
            for (std::size_t i = 0; i < probes.size(); ++i) {
                CHECK(std::abs(got[i].mu - ref[i].mu) < 1e-8);
                CHECK(std::abs(got[i].sigma - ref[i].sigma) < 1e-8);
            }
        }
    }
}
