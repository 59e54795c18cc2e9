#include <doctest.h>

#include <cmath>
#include <vector>

#include "support/densities.hpp"
#include "support/quadrature.hpp"
#include "tvlink/dist.hpp"
#include "tvlink/errors.hpp"
#include "tvlink/rng.hpp"

using namespace tvlink;
using tvlink::testing::integrate;
using tvlink::testing::log_uniform_pdf;
using tvlink::testing::uniform_pdf;

namespace {

// Oracle forms of the three conditional expectations, straight from the
// defining integrals.
double oracle_e_queue(const std::function<double(double)>& pdf, double x_min, double x_max,
                      double b, double T) {
    if (b <= x_min)
        return 0.0;
    return T * integrate([&](double a) { return (b / a - 1.0) * pdf(a); }, x_min,
                         std::min(b, x_max));
}

double oracle_e_underutil(const std::function<double(double)>& pdf, double x_min, double x_max,
                          double b) {
    if (b >= x_max)
        return 0.0;
    return integrate([&](double a) { return (1.0 - b / a) * pdf(a); }, std::max(b, x_min),
                     x_max);
}

double oracle_e_lost(const std::function<double(double)>& pdf, double x_min, double x_max,
                     double b) {
    if (b >= x_max)
        return 0.0;
    return integrate([&](double a) { return (a - b) * pdf(a); }, std::max(b, x_min), x_max);
}

} // namespace

TEST_CASE("fit_from_samples counts multiplicities") {
    const std::vector<double> samples = {2.0, 0.5, 2.0};
    const RatioDist d = RatioDist::from_samples(samples);
    REQUIRE(d.atoms().size() == 2);
    CHECK(d.atoms()[0] == 0.5);
    CHECK(d.atoms()[1] == 2.0);
    CHECK(d.weights()[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(d.weights()[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    const std::vector<double> one = {1.0};
    const RatioDist p = RatioDist::from_samples(one);
    REQUIRE(p.atoms().size() == 1);
    CHECK(p.atoms()[0] == 1.0);
    CHECK(p.weights()[0] == 1.0);

    const std::vector<double> bad = {0.0, 1.0};
    CHECK_THROWS_AS(RatioDist::from_samples(bad), ParamError);
    CHECK_THROWS_AS(RatioDist::from_samples(std::vector<double>{}), ParamError);
}

TEST_CASE("e_queue_given_load matches the paper-figure uniform case") {
    const RatioDist d = RatioDist::uniform(0.27, 2.0);
    const double T = 0.1;
    // T * (ln(1/0.27) - 0.73) / 1.73
    const double expected = T * (std::log(1.0 / 0.27) - 0.73) / 1.73;
    CHECK(d.e_queue_given_load(1.0, T) == doctest::Approx(expected).epsilon(1e-12));
    const double oracle = oracle_e_queue(uniform_pdf(0.27, 2.0), 0.27, 2.0, 1.0, T);
    CHECK(std::abs(d.e_queue_given_load(1.0, T) - oracle) <= 1e-9);

    CHECK(RatioDist::point_mass(1.0).e_queue_given_load(1.0, 1.0) == 0.0);
    const RatioDist two = RatioDist::empirical({0.5, 2.0}, {0.5, 0.5});
    CHECK(two.e_queue_given_load(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(two.e_queue_given_load(-0.1, 1.0), ParamError);
}

TEST_CASE("e_underutil_given_load matches the paper-figure uniform case") {
    const RatioDist d = RatioDist::uniform(0.27, 2.0);
    const double expected = (1.0 - std::log(2.0)) / 1.73;
    CHECK(d.e_underutil_given_load(1.0) == doctest::Approx(expected).epsilon(1e-12));
    const double oracle = oracle_e_underutil(uniform_pdf(0.27, 2.0), 0.27, 2.0, 1.0);
    CHECK(std::abs(d.e_underutil_given_load(1.0) - oracle) <= 1e-9);

    CHECK(d.e_underutil_given_load(0.0) == 1.0);
    CHECK(RatioDist::empirical({0.5, 2.0}, {0.5, 0.5}).e_underutil_given_load(0.0) == 1.0);
    CHECK(RatioDist::point_mass(1.0).e_underutil_given_load(1.0) == 0.0);
}

TEST_CASE("e_lost_given_load basics") {
    const RatioDist two = RatioDist::empirical({0.5, 2.0}, {0.5, 0.5});
    CHECK(two.e_lost_given_load(1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(RatioDist::point_mass(1.0).e_lost_given_load(2.0) == 0.0);
    const RatioDist u = RatioDist::uniform(0.27, 2.0);
    CHECK(u.e_lost_given_load(0.0) == doctest::Approx(1.135).epsilon(1e-12));
}

TEST_CASE("closed forms agree with quadrature on random (dist, b) pairs") {
    Rng rng(20240817);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::function<double(double)> pdf;
        RatioDist d = RatioDist::point_mass(1.0);
        double x_min = 0, x_max = 0;
        if (trial % 2 == 0) {
            const double lo = 0.05 + 0.95 * rng.next_unit();
            const double hi = lo + 0.1 + 2.9 * rng.next_unit();
            d = RatioDist::uniform(lo, hi);
            pdf = uniform_pdf(lo, hi);
            x_min = lo;
            x_max = hi;
        } else {
            const double e_lo = -2.0 + 2.0 * rng.next_unit();
            const double e_hi = e_lo + 0.2 + 1.8 * rng.next_unit();
            d = RatioDist::log_uniform(e_lo, e_hi);
            pdf = log_uniform_pdf(e_lo, e_hi);
            x_min = std::exp(e_lo);
            x_max = std::exp(e_hi);
        }
        const double b = 1.2 * x_max * rng.next_unit();
        const double T = 0.05 + rng.next_unit();
        CHECK(std::abs(d.e_queue_given_load(b, T) - oracle_e_queue(pdf, x_min, x_max, b, T)) <=
              1e-9);
        CHECK(std::abs(d.e_underutil_given_load(b) - oracle_e_underutil(pdf, x_min, x_max, b)) <=
              1e-9);
        CHECK(std::abs(d.e_lost_given_load(b) - oracle_e_lost(pdf, x_min, x_max, b)) <= 1e-9);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("frontier_slope steps and sentinels") {
    const RatioDist two = RatioDist::empirical({0.5, 2.0}, {0.5, 0.5});
    CHECK(two.frontier_slope(1.0, 1.0) == doctest::Approx(-0.25).epsilon(1e-15));

    const RatioDist u = RatioDist::uniform(0.27, 2.0);
    CHECK(u.frontier_slope(0.27, 0.1) == -std::numeric_limits<double>::infinity());
    CHECK(u.frontier_slope(2.0, 0.1) == 0.0);

    // Interior slope matches the two independent integrals.
    const double b = 0.9, T = 0.1;
    const auto pdf = uniform_pdf(0.27, 2.0);
    const double num = integrate([&](double a) { return pdf(a) / a; }, b, 2.0);
    const double den = integrate([&](double a) { return pdf(a) / a; }, 0.27, b);
    CHECK(u.frontier_slope(b, T) == doctest::Approx(-num / (T * den)).epsilon(1e-9));
}

TEST_CASE("slope is increasing toward zero in b") {
    const RatioDist u = RatioDist::uniform(0.5, 1.8);
    double prev = -std::numeric_limits<double>::infinity();
    for (double b = 0.55; b < 1.8; b += 0.05) {
        const double s = u.frontier_slope(b, 0.1);
        CHECK(s < 0.0);
        CHECK(s >= prev);
        prev = s;
    }
}

TEST_CASE("sample: determinism, point masses, moments") {
    const RatioDist p = RatioDist::point_mass(1.0);
    Rng r1(5);
    for (int i = 0; i < 10; ++i)
        CHECK(p.sample(r1) == 1.0);

    const RatioDist single = RatioDist::empirical({0.5}, {1.0});
    Rng r2(5);
    for (int i = 0; i < 10; ++i)
        CHECK(single.sample(r2) == 0.5);

    const RatioDist u = RatioDist::uniform(0.27, 2.0);
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i)
        CHECK(u.sample(a) == u.sample(b));

    Rng r3(99);
    const int n = 1000000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        sum += u.sample(r3);
    const double sigma = (2.0 - 0.27) / std::sqrt(12.0 * n);
    CHECK(std::abs(sum / n - 1.135) < 4.0 * sigma);
}

TEST_CASE("empirical sampling respects weights") {
    const RatioDist d = RatioDist::empirical({0.5, 2.0}, {0.25, 0.75});
    Rng rng(31337);
    int low = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        low += d.sample(rng) == 0.5 ? 1 : 0;
    const double sigma = std::sqrt(0.25 * 0.75 * n);
    CHECK(std::abs(low - 0.25 * n) < 4.0 * sigma);
}

TEST_CASE("summary support bounds and mean_log") {
    const DistSummary u = RatioDist::uniform(0.27, 2.0).summary();
    CHECK(u.x_min == 0.27);
    CHECK(u.x_max == 2.0);

    const DistSummary lu = RatioDist::log_uniform(-1.0, 1.0).summary();
    CHECK(lu.x_min == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(lu.x_max == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
    CHECK(lu.mean_log == 0.0);

    const DistSummary e = RatioDist::empirical({0.5, 2.0}, {0.5, 0.5}).summary();
    CHECK(e.mean_log == doctest::Approx(0.0).epsilon(1e-15));

    // E[ln X] for the uniform family against quadrature.
    const double oracle = integrate(
        [pdf = uniform_pdf(0.27, 2.0)](double a) { return std::log(a) * pdf(a); }, 0.27, 2.0);
    CHECK(u.mean_log == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("conditional expectations are monotone and convex in b") {
    const std::vector<RatioDist> dists = {
        RatioDist::uniform(0.27, 2.0),
        RatioDist::log_uniform(-1.0, 1.0),
        RatioDist::empirical({0.4, 0.9, 1.3, 2.4}, {0.2, 0.3, 0.3, 0.2}),
    };
    for (const auto& d : dists) {
        const double T = 0.1;
        const double hi = d.summary().x_max * 1.3;
        const int n = 120;
        std::vector<double> eq(n), eu(n);
        for (int i = 0; i < n; ++i) {
            const double b = hi * i / (n - 1);
            eq[i] = d.e_queue_given_load(b, T);
            eu[i] = d.e_underutil_given_load(b);
        }
        for (int i = 1; i < n; ++i) {
            CHECK(eq[i] >= eq[i - 1] - 1e-15);
            CHECK(eu[i] <= eu[i - 1] + 1e-15);
        }
        for (int i = 2; i < n; ++i) {
            CHECK(eq[i] - 2.0 * eq[i - 1] + eq[i - 2] >= -1e-9);
            CHECK(eu[i] - 2.0 * eu[i - 1] + eu[i - 2] >= -1e-9);
        }
    }
}

TEST_CASE("tail identity on empirical distributions") {
    const RatioDist d = RatioDist::empirical({0.4, 0.9, 1.3, 2.4}, {0.2, 0.3, 0.3, 0.2});
    double mean_inv = 0.0;
    for (size_t i = 0; i < d.atoms().size(); ++i)
        mean_inv += d.weights()[i] / d.atoms()[i];
    const double T = 0.25;
    for (double b = 0.0; b <= 3.5; b += 0.1) {
        const double gap = d.e_queue_given_load(b, T) / T - (b * mean_inv - 1.0);
        CHECK(gap >= -1e-12);
        if (b >= d.summary().x_max)
            CHECK(std::abs(gap) <= 1e-12);
    }
}

TEST_CASE("an atom exactly at b is neutral") {
    const double b = 1.0;
    const RatioDist with_atom = RatioDist::empirical({0.5, 1.0, 2.0}, {0.4, 0.2, 0.4});
    // Hand-computed sums excluding the a == b atom.
    const double eq_manual = 1.0 * 0.4 * (b / 0.5 - 1.0);
    const double eu_manual = 0.4 * (1.0 - b / 2.0);
    CHECK(with_atom.e_queue_given_load(b, 1.0) == doctest::Approx(eq_manual).epsilon(1e-15));
    CHECK(with_atom.e_underutil_given_load(b) == doctest::Approx(eu_manual).epsilon(1e-15));
}

TEST_CASE("empirical JSON round trip and weight validation") {
    const RatioDist d = RatioDist::from_samples(std::vector<double>{2.0, 0.5, 2.0, 1.25});
    const RatioDist back = RatioDist::from_json_text(d.to_json_text());
    CHECK(back == d);

    CHECK_THROWS_AS(RatioDist::from_json_text("{\"atoms\": [[0.5, 0.4], [2.0, 0.4]]}"), IoError);
    CHECK_THROWS_AS(RatioDist::from_json_text("{\"atoms\": \"nope\"}"), IoError);
    CHECK_THROWS_AS(RatioDist::from_json_text("not json"), IoError);
}

TEST_CASE("construction rejects invalid empiricals") {
    CHECK_THROWS_AS(RatioDist::empirical({2.0, 0.5}, {0.5, 0.5}), ParamError);
    CHECK_THROWS_AS(RatioDist::empirical({-1.0, 0.5}, {0.5, 0.5}), ParamError);
    CHECK_THROWS_AS(RatioDist::empirical({0.5, 2.0}, {0.6, 0.6}), ParamError);
    CHECK_THROWS_AS(RatioDist::uniform(0.0, 1.0), ParamError);
    CHECK_THROWS_AS(RatioDist::log_uniform(1.0, 1.0), ParamError);
    CHECK_THROWS_AS(RatioDist::point_mass(0.0), ParamError);
}

TEST_CASE("discretized equal-probability atoms approximate the analytic law") {
    const RatioDist u = RatioDist::uniform(0.27, 2.0);
    const RatioDist d = u.discretized(512);
    REQUIRE(d.atoms().size() == 512);
    CHECK(d.e_queue_given_load(1.0, 0.1) ==
          doctest::Approx(u.e_queue_given_load(1.0, 0.1)).epsilon(1e-4));
    // Empirical dists pass through untouched.
    const RatioDist e = RatioDist::empirical({0.5, 2.0}, {0.5, 0.5});
    CHECK(e.discretized(512) == e);
}
