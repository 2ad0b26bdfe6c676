#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "selforg/observables.hpp"

using namespace selforg;
using std::numbers::pi;

namespace {

// q-Gaussian momenta via the Student-t quantile: (1 + t^2/nu)^(-(nu+1)/2) with
// nu = 2/(q-1) - 1 and p = t sqrt(2 m T / ((q-1) nu)).
std::vector<double> sample_qgaussian(std::size_t n, double q, double t, double m, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> out(n);
    if (q == 1.0) {
        boost::math::normal_distribution<double> g(0.0, std::sqrt(m * t));
        for (auto& p : out)
            p = quantile(g, u(rng));
        return out;
    }
    const double nu = 2.0 / (q - 1.0) - 1.0;
    boost::math::students_t_distribution<double> st(nu);
    const double scale = std::sqrt(2.0 * m * t / ((q - 1.0) * nu));
    for (auto& p : out)
        p = scale * quantile(st, u(rng));
    return out;
}

SpeciesState positions(std::vector<double> x)
{
    SpeciesState s;
    s.p.assign(x.size(), 0.0);
    s.x = std::move(x);
    return s;
}

}  // namespace

TEST_CASE("order parameter")
{
    std::vector<double> grid;
    for (int i = 0; i < 1000; ++i)
        grid.push_back(kTwoPi * i / 1000.0);
    CHECK(std::abs(order_parameter(positions(grid))) < 1e-12);
    CHECK(order_parameter(positions(std::vector<double>(10, pi / 2))) == doctest::Approx(1.0));
    CHECK(mean_sin(positions(std::vector<double>(10, 3 * pi / 2))) == doctest::Approx(-1.0));
    CHECK(order_parameter(positions(std::vector<double>(10, 3 * pi / 2))) == doctest::Approx(1.0));

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    std::vector<double> x(10000);
    for (auto& v : x)
        v = u(rng);
    const auto s = positions(x);
    // |mean| of N uniform sines has scale sqrt(1/(2N)) ~ 0.007
    CHECK(order_parameter(s) < 4 * std::sqrt(0.5 / 1e4));

    auto shifted = x;
    for (auto& v : shifted)
        v += kTwoPi;
    CHECK(order_parameter(positions(shifted)) == doctest::Approx(order_parameter(s)).epsilon(1e-9));
    auto permuted = x;
    std::shuffle(permuted.begin(), permuted.end(), rng);
    CHECK(order_parameter(positions(permuted)) == doctest::Approx(order_parameter(s)).epsilon(1e-12));
    CHECK(bunching(positions(grid)) == doctest::Approx(0.5));
}

TEST_CASE("kinetic temperature")
{
    SpeciesState s;
    s.x.assign(4, 0.0);
    s.p.assign(4, 0.0);
    CHECK(kinetic_temperature(s, 0.5) == 0.0);
    s.p = {1.0, -1.0, 1.0, -1.0};
    CHECK(kinetic_temperature(s, 0.5) == doctest::Approx(2.0));

    const double t = 3.0;
    const double m = 2.0;
    s.p = sample_qgaussian(20000, 1.0, t, m, 9);
    s.x.assign(s.p.size(), 0.0);
    // <p^2>/m has relative standard error sqrt(2/N)
    const double measured = kinetic_temperature(s, m);
    CHECK(std::abs(measured - t) < 2 * t * std::sqrt(2.0 / 20000));
    for (auto& p : s.p)
        p = -p;
    CHECK(kinetic_temperature(s, m) == measured);
}

TEST_CASE("photon number")
{
    SimState st;
    CHECK(photon_number(st) == 0.0);
    st.alpha = {3.0, 4.0};
    CHECK(photon_number(st) == 25.0);
}

TEST_CASE("histogram bookkeeping")
{
    const std::vector<double> v{-1.5, -0.2, 0.1, 0.1, 0.9, 3.0};
    const auto h = Histogram::from_samples(v, -1.0, 1.0, 4);
    CHECK(h.total() == 6.0);
    CHECK(h.captured() == 4.0);
    CHECK(h.counts() == std::vector<double>{0, 1, 2, 1});
    CHECK(h.nonzero_bins() == 3);
    CHECK(h.center(0) == doctest::Approx(-0.75));
    CHECK(h.edge(4) == doctest::Approx(1.0));
    double area = 0.0;
    for (double d : h.density())
        area += d * h.width();
    CHECK(area == doctest::Approx(4.0 / 6.0));
    area = 0.0;
    for (double d : h.normalized_density())
        area += d * h.width();
    CHECK(area == doctest::Approx(1.0));

    const auto mh = momentum_histogram(v, 0.5, 2.0);
    CHECK(mh.bins() == 64);
    CHECK(mh.hi() == doctest::Approx(5.0));
    CHECK(mh.lo() == doctest::Approx(-5.0));
}

TEST_CASE("q-Gaussian density is normalised with the expected second moment")
{
    for (double q : {1.0, 1.01, 1.4, 1.6, 2.0}) {
        const double t = 2.0;
        const double m = 0.5;
        double z = 0.0;
        double m2 = 0.0;
        const double l = 4000.0;
        const int n = 400000;
        for (int i = 0; i < n; ++i) {
            const double p = -l + 2 * l * (i + 0.5) / n;
            const double f = qgaussian_density(p, q, t, m);
            z += f;
            m2 += f * p * p;
        }
        z *= 2 * l / n;
        m2 *= 2 * l / n;
        CHECK(z == doctest::Approx(1.0).epsilon(q < 1.9 ? 1e-6 : 1e-3));
        if (q < 1.5)
            CHECK(m2 / m == doctest::Approx(qgaussian_kinetic_temperature(q, t)).epsilon(1e-4));
    }
    CHECK(qgaussian_kinetic_temperature(1.4, 1000.0) == doctest::Approx(2500.0));
    CHECK(qgaussian_density(0.7, 1.0 + 1e-11, 1.0, 0.5) == doctest::Approx(qgaussian_density(0.7, 1.0, 1.0, 0.5)));
    CHECK_THROWS_AS(qgaussian_density(0.0, 0.9, 1.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(qgaussian_density(0.0, 3.0, 1.0, 0.5), std::domain_error);
}

TEST_CASE("q-Gaussian fit recovers a Gaussian")
{
    const double m = 0.5;
    const double t = 100.0;
    auto h = Histogram(-5 * std::sqrt(m * t), 5 * std::sqrt(m * t), 64);
    // exact expected counts
    boost::math::normal_distribution<double> g(0.0, std::sqrt(m * t));
    for (std::size_t b = 0; b < h.bins(); ++b)
        h.add(h.center(b), 1e6 * (cdf(g, h.edge(b + 1)) - cdf(g, h.edge(b))));
    const auto fit = fit_qgaussian(h, m);
    CHECK(fit.converged);
    CHECK(std::abs(fit.q - 1.0) <= 0.02);
    CHECK(fit.temperature == doctest::Approx(t).epsilon(0.01));

    const auto samples = sample_qgaussian(100000, 1.0, t, m, 2);
    const auto fs = fit_qgaussian(momentum_histogram(samples, m, t), m);
    CHECK(std::abs(fs.q - 1.0) <= 0.02);
}

TEST_CASE("q-Gaussian fit recovers q = 1.4 from inverse-CDF samples")
{
    const double m = 0.5;
    const double t = 1000.0;
    const auto samples = sample_qgaussian(75000, 1.4, t, m, 3);
    const auto hist = momentum_histogram(samples, m, qgaussian_kinetic_temperature(1.4, t));
    const auto fit = fit_qgaussian(hist, m);
    CHECK(fit.converged);
    CHECK(fit.q == doctest::Approx(1.4).epsilon(0.05 / 1.4));
    CHECK(fit.temperature == doctest::Approx(t).epsilon(0.05));
    CHECK(fit.q_halfwidth > 0.0);
    CHECK(std::abs(fit.q - 1.4) < 3 * fit.q_halfwidth);
}

TEST_CASE("fit round trip stays inside the combined confidence interval")
{
    const double m = 20.0;
    const double t = 50.0;
    const auto first = fit_qgaussian(momentum_histogram(sample_qgaussian(50000, 1.2, t, m, 4), m, 80.0), m);
    const auto again =
        fit_qgaussian(momentum_histogram(sample_qgaussian(50000, first.q, first.temperature, m, 5), m, 80.0), m);
    CHECK(std::abs(again.q - first.q) <= std::hypot(first.q_halfwidth, again.q_halfwidth));
    CHECK(std::abs(again.temperature - first.temperature)
          <= std::hypot(first.temperature_halfwidth, again.temperature_halfwidth));
}

TEST_CASE("fit refuses sparse histograms")
{
    const std::vector<double> few{0.0, 1.0, 2.0};
    CHECK_THROWS_AS(fit_qgaussian(Histogram::from_samples(few, -3, 3, 64), 0.5), std::invalid_argument);
}

TEST_CASE("KS distance between histograms")
{
    const auto a = sample_qgaussian(10000, 1.0, 1.0, 0.5, 10);
    const auto b = sample_qgaussian(10000, 1.0, 1.0, 0.5, 11);
    const auto ha = Histogram::from_samples(a, -4, 4, 64);
    const auto hb = Histogram::from_samples(b, -4, 4, 64);
    CHECK(ks_distance(ha, ha) == 0.0);
    // 1% critical value 1.63 sqrt(2/N)
    CHECK(ks_distance(ha, hb) < 1.63 * std::sqrt(2.0 / 10000));

    const auto left = Histogram::from_samples(std::vector<double>{-3.0, -2.0}, -4, 0, 16);
    const auto right = Histogram::from_samples(std::vector<double>{1.0, 2.0}, 0, 4, 16);
    CHECK(ks_distance(left, right) == doctest::Approx(1.0));
    CHECK(ks_distance(left, right) == ks_distance(right, left));
}
