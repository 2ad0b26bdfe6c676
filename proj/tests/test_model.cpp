#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "selforg/model.hpp"

using namespace selforg;
using std::numbers::pi;

namespace {

SpeciesParams species(double pump, double shift, double mass = kReferenceMass)
{
    SpeciesParams s;
    s.pump = pump;
    s.light_shift = shift;
    s.mass = mass;
    return s;
}

}  // namespace

TEST_CASE("recoil frequency of the reference species is the unit")
{
    CHECK(species(0, 0).recoil() == doctest::Approx(1.0));
    CHECK(species(0, 0, 5.0).recoil() == doctest::Approx(0.1));
}

TEST_CASE("potential at the antinode")
{
    // 2 eta Re(alpha) at kx = pi/2, light-shift term vanishes for alpha real and U0 = 0
    CHECK(potential(pi / 2, {1.0, 0.0}, species(1.0, 0.0)) == doctest::Approx(2.0));
    CHECK(potential(pi / 2, {0.0, 1.0}, species(1.0, -1.0)) == doctest::Approx(-1.0));
    CHECK(potential(0.0, {3.0, 4.0}, species(2.0, -1.0)) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("force at a node is set by the pump term alone")
{
    CHECK(force(0.0, {1.5, 0.0}, species(2.0, -0.3)) == doctest::Approx(-6.0));
    CHECK(force(pi / 2, {1.5, 0.2}, species(2.0, -0.3)) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("force is minus the gradient of the potential")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const auto s = species(std::abs(u(rng)), -std::abs(u(rng)));
        const Complex alpha{u(rng), u(rng)};
        const double x = std::abs(u(rng)) * 2.0;
        const double h = 1e-5;
        const double fd = -(potential(x + h, alpha, s) - potential(x - h, alpha, s)) / (2 * h);
        CHECK(force(x, alpha, s) == doctest::Approx(fd).epsilon(1e-7).scale(1.0));
    }
}

TEST_CASE("hamiltonian adds kinetic energy p^2 / 2m")
{
    const auto s = species(1.0, 0.0);
    CHECK(hamiltonian(pi / 2, 3.0, {1.0, 0.0}, s) == doctest::Approx(9.0 + 2.0));
    CHECK(hamiltonian(0.0, 2.0, {0.0, 0.0}, species(0, 0, 2.0)) == doctest::Approx(1.0));
}

TEST_CASE("wrap_phase maps onto [0, 2 pi)")
{
    CHECK(wrap_phase(kTwoPi) == 0.0);
    CHECK(wrap_phase(-0.1) == doctest::Approx(kTwoPi - 0.1));
    CHECK(wrap_phase(7.0) == doctest::Approx(7.0 - kTwoPi));
    CHECK(wrap_phase(-1e-18) < kTwoPi);
    for (double x : {-100.0, -1e-300, 0.0, 3.0, 1e5}) {
        const double w = wrap_phase(x);
        CHECK(w >= 0.0);
        CHECK(w < kTwoPi);
        CHECK(std::sin(w) == doctest::Approx(std::sin(x)).scale(1.0).epsilon(1e-9));
    }
}

TEST_CASE("validation lists every violation")
{
    SimConfig c;
    c.species = {species(-1.0, 0.0)};
    c.species[0].count = 0;
    c.cavity.kappa = 0.0;
    c.dt = 0.0;
    c.stride = 0;
    c.initial.perturbation = 1.5;
    const auto v = validate(c);
    auto has = [&](const std::string& needle) {
        for (const auto& e : v)
            if (e.find(needle) != std::string::npos)
                return true;
        return false;
    };
    CHECK(has("count"));
    CHECK(has("pump"));
    CHECK(has("kappa"));
    CHECK(has("dt"));
    CHECK(has("stride"));
    CHECK(has("perturbation"));
    CHECK_THROWS_AS(require_valid(c), std::invalid_argument);

    SimConfig ok;
    ok.species = {species(1.0, -0.1)};
    CHECK(validate(ok).empty());
}

TEST_CASE("total energy counts the field as -Delta_c |alpha|^2")
{
    SimConfig c;
    c.species = {species(1.0, 0.0)};
    c.cavity.detuning = -2.0;
    SimState st;
    st.species = {{{pi / 2}, {1.0}}};
    st.alpha = {1.0, 1.0};
    // p^2/2m = 1, potential 2, field +4
    CHECK(total_energy(st, c) == doctest::Approx(7.0));
}
