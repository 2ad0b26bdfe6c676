#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "selforg/dynamics.hpp"
#include "selforg/trig.hpp"

using namespace selforg;
using std::numbers::pi;

namespace {

SpeciesParams species(std::size_t n, double pump, double shift, double temperature, double mass = kReferenceMass)
{
    SpeciesParams s;
    s.count = n;
    s.pump = pump;
    s.light_shift = shift;
    s.temperature = temperature;
    s.mass = mass;
    return s;
}

SimConfig two_species()
{
    SimConfig c;
    c.species = {species(60, 3.0, -0.01, 20.0), species(40, 4.0, -0.02, 30.0, 2.0)};
    c.cavity = {10.0, -12.0};
    c.dt = 2e-3;
    c.duration = 1.0;
    c.stride = 50;
    c.seed = 11;
    return c;
}

}  // namespace

TEST_CASE("fast phase trigonometry agrees with libm")
{
    double worst = 0.0;
    for (int i = 0; i < 200000; ++i) {
        const double x = kTwoPi * (i + 0.37) / 200000.0;
        double s;
        double c;
        sincos_phase(x, s, c);
        worst = std::max({worst, std::abs(s - std::sin(x)), std::abs(c - std::cos(x))});
    }
    CHECK(worst < 5e-16);
}

TEST_CASE("realisation seeds are deterministic and distinct")
{
    CHECK(realisation_seed(1, 0) == realisation_seed(1, 0));
    CHECK(realisation_seed(1, 0) != realisation_seed(1, 1));
    CHECK(realisation_seed(1, 0) != realisation_seed(2, 0));
}

TEST_CASE("initial momenta have variance m k_B T")
{
    SimConfig c;
    c.species = {species(100000, 0.0, 0.0, 1.0)};
    const auto st = sample_initial(c, 3);
    double sum2 = 0.0;
    for (double p : st.species[0].p)
        sum2 += p * p;
    CHECK(sum2 / 1e5 == doctest::Approx(0.5).epsilon(0.02));
    CHECK(st.alpha == Complex{0.0, 0.0});
    CHECK(st.t == 0.0);
}

TEST_CASE("density perturbation shifts <sin kx> to eps/2")
{
    SimConfig c;
    c.species = {species(100000, 0.0, 0.0, 1.0)};
    c.initial.perturbation = 0.1;
    const auto st = sample_initial(c, 5);
    double s = 0.0;
    for (double x : st.species[0].x) {
        CHECK(x >= 0.0);
        CHECK(x < kTwoPi);
        s += std::sin(x);
    }
    // standard error sqrt(<sin^2>/N) ~ 0.0022
    CHECK(std::abs(s / 1e5 - 0.05) < 4 * std::sqrt(0.5 / 1e5));

    c.initial.perturbation = 1.0;
    CHECK_THROWS_AS(sample_initial(c, 5), std::invalid_argument);
}

TEST_CASE("runs are reproducible from the seed")
{
    const auto c = two_species();
    const auto a = run(c, 99);
    const auto b = run(c, 99);
    const auto d = run(c, 100);
    REQUIRE(a.columns.size() == b.columns.size());
    for (std::size_t k = 0; k < a.columns.size(); ++k)
        CHECK(a.columns[k].values == b.columns[k].values);
    CHECK(a.column("photons").values != d.column("photons").values);
}

TEST_CASE("recording starts at t = 0 and follows the stride")
{
    auto c = two_species();
    const auto ts = run(c, 1);
    REQUIRE(ts.times.size() == c.steps() / c.stride + 1);
    CHECK(ts.times.front() == 0.0);
    CHECK(ts.times.back() == doctest::Approx(c.duration));
    CHECK(ts.times[1] == c.stride * c.dt);

    c.duration = 0.0;
    const auto z = run(c, 1);
    CHECK(z.times.size() == 1);
    CHECK(z.column("photons").values.front() == 0.0);
}

TEST_CASE("empty driven field follows the exact exponential")
{
    SimConfig c;
    c.cavity = {2.0, -5.0};
    c.dt = 0.01;
    c.noise = false;
    SimState st;
    st.alpha = {1.0, 0.5};
    Trajectory traj(c, st, 1);
    for (int i = 0; i < 300; ++i)
        traj.step();
    const Complex exact = Complex{1.0, 0.5} * std::exp(Complex{-2.0, -5.0} * 3.0);
    CHECK(std::abs(traj.state().alpha - exact) < 1e-13);
    CHECK(traj.state().t == doctest::Approx(3.0));
}

TEST_CASE("pinned particles drive the field to its exact steady state")
{
    // particles at the antinode feel no force (cos kx = 0), so the sums are constant
    SimConfig c;
    c.species = {species(10, 0.7, -0.05, 1.0)};
    c.cavity = {3.0, -4.0};
    c.dt = 0.01;
    c.noise = false;
    SimState st;
    st.species = {{std::vector<double>(10, pi / 2), std::vector<double>(10, 0.0)}};
    Trajectory traj(c, st, 1);
    for (int i = 0; i < 500; ++i)
        traj.step();
    const Complex lambda{-3.0, -4.0 + 0.05 * 10};
    const Complex source{0.0, -0.7 * 10};
    const Complex steady = -source / lambda;
    const Complex exact = steady * (1.0 - std::exp(lambda * 5.0));
    CHECK(std::abs(traj.state().alpha - exact) < 1e-10 * std::abs(steady));
}

TEST_CASE("the splitting is second order")
{
    auto c = two_species();
    c.noise = false;
    c.duration = 0.5;
    const auto initial = sample_initial(c, 21);
    auto endpoint = [&](double dt) {
        auto cc = c;
        cc.dt = dt;
        Trajectory traj(cc, initial, 1);
        for (std::size_t i = 0; i < cc.steps(); ++i)
            traj.step();
        return traj.state();
    };
    const auto a = endpoint(4e-3);
    const auto b = endpoint(2e-3);
    const auto r = endpoint(2.5e-4);
    auto err = [&](const SimState& s) {
        double e = std::abs(s.alpha - r.alpha);
        for (std::size_t k = 0; k < s.species.size(); ++k)
            for (std::size_t j = 0; j < s.species[k].p.size(); ++j)
                e = std::max(e, std::abs(s.species[k].p[j] - r.species[k].p[j]));
        return e;
    };
    const double ratio = err(a) / err(b);
    CHECK(ratio > 3.3);
    CHECK(ratio < 4.7);
}

TEST_CASE("frozen field conserves each particle's energy")
{
    SimConfig c;
    c.species = {species(50, 2.0, -0.1, 40.0)};
    c.cavity = {1.0, -1.0};
    c.dt = 1e-3;
    c.freeze_field = true;
    c.noise = false;
    auto st = sample_initial(c, 4);
    st.alpha = {-5.0, 1.0};
    Trajectory traj(c, st, 1);
    std::vector<double> e0;
    for (std::size_t j = 0; j < 50; ++j)
        e0.push_back(hamiltonian(st.species[0].x[j], st.species[0].p[j], st.alpha, c.species[0]));
    for (int i = 0; i < 20000; ++i)
        traj.step();
    const auto& s = traj.state();
    CHECK(s.alpha == st.alpha);
    double worst = 0.0;
    for (std::size_t j = 0; j < 50; ++j) {
        const double e = hamiltonian(s.species[0].x[j], s.species[0].p[j], s.alpha, c.species[0]);
        worst = std::max(worst, std::abs(e - e0[j]) / (std::abs(e0[j]) + 20.0));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("mirror-symmetric states keep zero total momentum")
{
    // (x, p) -> (pi - x, -p) flips the force, so paired particles cancel
    SimConfig c;
    c.species = {species(40, 2.0, -0.05, 10.0)};
    c.cavity = {5.0, -5.0};
    c.dt = 1e-3;
    c.noise = false;
    auto half = sample_initial(c, 8);
    SimState st;
    st.species.resize(1);
    for (std::size_t j = 0; j < 20; ++j) {
        st.species[0].x.push_back(half.species[0].x[j]);
        st.species[0].p.push_back(half.species[0].p[j]);
        st.species[0].x.push_back(wrap_phase(pi - half.species[0].x[j]));
        st.species[0].p.push_back(-half.species[0].p[j]);
    }
    st.alpha = {-3.0, 0.5};
    Trajectory traj(c, st, 1);
    for (int i = 0; i < 2000; ++i)
        traj.step();
    double total = 0.0;
    double scale = 0.0;
    for (double p : traj.state().species[0].p) {
        total += p;
        scale += std::abs(p);
    }
    CHECK(std::abs(total) < 1e-9 * scale);
}

TEST_CASE("divergence is reported with time and seed")
{
    SimConfig c;
    c.species = {species(2, 1.0, 0.0, 1.0)};
    c.cavity = {1.0, -1.0};
    SimState st;
    st.species = {{{1.0, 2.0}, {0.0, 2e6}}};
    Trajectory traj(c, st, 42);
    CHECK_THROWS_AS(traj.step(), DivergenceError);

    SimState bad;
    bad.species = {{{1.0, 2.0}, {0.0, 0.0}}};
    Trajectory t2(c, bad, 43);
    t2.set_alpha({std::numeric_limits<double>::quiet_NaN(), 0.0});
    try {
        t2.step();
        FAIL("expected DivergenceError");
    }
    catch (const DivergenceError& e) {
        CHECK(e.seed() == 43);
        CHECK(e.time() == doctest::Approx(c.dt));
    }
}

TEST_CASE("ensemble of one is the single run of the first realisation seed")
{
    const auto c = two_species();
    const auto stats = ensemble_run(c, 1, 5);
    const auto ts = run(c, realisation_seed(5, 0));
    CHECK(stats.column("photons").mean == ts.column("photons").values);
    CHECK(stats.column("T_kin_2").mean == ts.column("T_kin_2").values);
    CHECK(stats.column("photons").stderr_ == std::vector<double>(ts.times.size(), 0.0));
}

TEST_CASE("ensemble statistics do not depend on the thread count")
{
    const auto c = two_species();
    EnsembleOptions one;
    EnsembleOptions three;
    three.threads = 3;
    const auto a = ensemble_run(c, 5, 9, one);
    const auto b = ensemble_run(c, 5, 9, three);
    for (std::size_t k = 0; k < a.columns.size(); ++k) {
        CHECK(a.columns[k].mean == b.columns[k].mean);
        CHECK(a.columns[k].stderr_ == b.columns[k].stderr_);
    }
    CHECK(a.final_momenta == b.final_momenta);
    CHECK(a.histograms[0].counts() == b.histograms[0].counts());
    CHECK(a.final_alpha == b.final_alpha);
}

TEST_CASE("ensemble rethrows realisation failures")
{
    SimConfig c;
    c.species = {species(5, 1e5, 0.0, 1.0)};
    c.cavity = {0.1, -0.1};
    c.dt = 1.0;
    c.duration = 50.0;
    CHECK_THROWS_AS(ensemble_run(c, 2, 1), DivergenceError);
}

TEST_CASE("empty-cavity vacuum noise: photon number relaxes as an OU process")
{
    // Independent Euler-Maruyama integration of d alpha = (-kappa + i Delta) alpha dt - sqrt(kappa) dW
    const double kappa = 1.0;
    const double detuning = -0.7;
    const double t_end = 1.0;
    const int n_traj = 4000;
    const Complex a0{1.5, 0.0};

    std::mt19937_64 rng(77);
    std::normal_distribution<double> g(0.0, 1.0);
    const double h = 1e-3;
    double em = 0.0;
    for (int r = 0; r < n_traj; ++r) {
        Complex a = a0;
        for (int i = 0; i < static_cast<int>(t_end / h); ++i) {
            const Complex dw{g(rng) * std::sqrt(h / 2), g(rng) * std::sqrt(h / 2)};
            a += Complex{-kappa, detuning} * a * h - std::sqrt(kappa) * dw;
        }
        em += std::norm(a);
    }
    em /= n_traj;

    SimConfig c;
    c.cavity = {kappa, detuning};
    c.dt = 0.05;
    c.duration = t_end;
    c.stride = 20;
    SimState st;
    st.alpha = a0;
    double exact_sum = 0.0;
    for (int r = 0; r < n_traj; ++r) {
        Trajectory traj(c, st, realisation_seed(3, r));
        for (std::size_t i = 0; i < c.steps(); ++i)
            traj.step();
        exact_sum += std::norm(traj.state().alpha);
    }
    const double ou = exact_sum / n_traj;
    const double theory = 0.5 + (std::norm(a0) - 0.5) * std::exp(-2 * kappa * t_end);
    // standard error of |alpha|^2 is about 0.5/sqrt(n) for these amplitudes
    const double se = 1.0 / std::sqrt(static_cast<double>(n_traj));
    CHECK(std::abs(ou - theory) < 4 * se);
    CHECK(std::abs(em - theory) < 4 * se + 2e-3);
    CHECK(std::abs(ou - em) < 6 * se);
}
