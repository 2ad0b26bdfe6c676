#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "selforg/config.hpp"
#include "selforg/kinetics.hpp"

using namespace selforg;

namespace {

const char* const kMinimal = R"(
[experiment]
kind = simulate
[cavity]
kappa = 10
detuning = -5
[simulation]
dt = 1e-3
duration = 1
seed = 7
[species]
count = 100
pump = 0.5
temperature = 2
)";

bool mentions(const ConfigError& e, const std::string& needle)
{
    return std::ranges::any_of(e.violations(), [&](const std::string& v) { return v.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("minimal config resolves defaults")
{
    const auto c = parse_config(kMinimal);
    CHECK(c.kind == ExperimentKind::Simulate);
    CHECK(c.realisations == 1);
    CHECK(c.histogram_bins == 64);
    REQUIRE(c.sim.species.size() == 1);
    CHECK(c.sim.species[0].mass == 0.5);
    CHECK(c.sim.species[0].name == "species1");
    CHECK(c.sim.stride == 100);
    CHECK(c.sim.seed == 7);
    CHECK(c.sim.noise);
    CHECK(c.sim.steps() == 1000);
}

TEST_CASE("fig4 preset resolves to the stated primitive parameters")
{
    const auto c = load_config(std::string(SELFORG_SOURCE_DIR) + "/presets/fig4.cfg");
    REQUIRE(c.sim.species.size() == 2);
    CHECK(c.sim.species[0].count == 300);
    CHECK(c.sim.species[1].count == 200);
    CHECK(std::sqrt(300.0) * c.sim.species[0].pump == doctest::Approx(600.0));
    CHECK(std::sqrt(200.0) * c.sim.species[1].pump == doctest::Approx(600.0));
    CHECK(c.sim.species[1].mass == doctest::Approx(10 * c.sim.species[0].mass));
    CHECK(c.sim.cavity.kappa == 100.0);
    CHECK(effective_detuning(c.sim.cavity, c.sim.species) == doctest::Approx(-100.0));
    CHECK(c.sim.species[0].temperature == doctest::Approx(50.0));
}

TEST_CASE("every preset parses and validates")
{
    for (const char* name : {"fig2", "fig3", "fig4", "fig5a", "fig5b"}) {
        CAPTURE(name);
        CHECK_NOTHROW(load_config(std::string(SELFORG_SOURCE_DIR) + "/presets/" + name + ".cfg"));
    }
}

TEST_CASE("collective forms and effective detuning")
{
    const auto c = parse_config(R"(
[cavity]
kappa = 100
effective_detuning = -2.5
[simulation]
seed = 1
[species]
count = 300
collective_pump = 800
collective_light_shift = -0.1
[species]
count = 200
mass_ratio = 40
collective_pump = 800
collective_light_shift = -0.1
)");
    CHECK(c.sim.species[0].light_shift == doctest::Approx(-0.1 / 300));
    CHECK(c.sim.cavity.detuning == doctest::Approx(-2.6));
    const double delta = effective_detuning(c.sim.cavity, c.sim.species);
    CHECK(delta == doctest::Approx(-2.5));
    CHECK(c.sim.species[1].temperature == doctest::Approx(temperature_star(100.0, -2.5)));
    CHECK(c.sim.species[1].mass == doctest::Approx(20.0));
    CHECK(c.sim.dt > 0.0);
}

TEST_CASE("an out-of-range perturbation is named in the error")
{
    std::string text = kMinimal;
    text.replace(text.find("seed = 7"), 8, "seed = 7\nperturbation = 1.5");
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    }
    catch (const ConfigError& e) {
        CHECK(mentions(e, "perturbation"));
    }
}

TEST_CASE("all violations are reported together")
{
    std::string text = kMinimal;
    text.replace(text.find("kappa = 10"), 10, "kappa = -1");
    text.replace(text.find("count = 100"), 11, "count = 0");
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    }
    catch (const ConfigError& e) {
        CHECK(mentions(e, "kappa"));
        CHECK(mentions(e, "count"));
        CHECK(e.violations().size() >= 2);
    }
}

TEST_CASE("parse errors carry line and column")
{
    auto expect_parse_error = [](const std::string& text, std::size_t line, std::size_t column, const std::string& word) {
        try {
            parse_config(text);
            FAIL("expected ParseError");
        }
        catch (const ParseError& e) {
            CHECK(e.line() == line);
            CHECK(e.column() == column);
            CHECK(std::string(e.what()).find(word) != std::string::npos);
        }
    };
    expect_parse_error("[cavity]\n  kapa = 1\n", 2, 3, "kapa");
    expect_parse_error("[cavitty]\n", 1, 2, "cavitty");
    expect_parse_error("kappa = 1\n", 1, 1, "section");
    expect_parse_error("[cavity]\nkappa = 1\nkappa = 2\n", 3, 1, "duplicate");
    expect_parse_error("[cavity]\nkappa\n", 2, 1, "key = value");
    expect_parse_error("[cavity]\nkappa = ten\n", 2, 9, "kappa");
    expect_parse_error("[experiment]\nkind = dance\n", 2, 8, "dance");
    expect_parse_error("[simulation]\nnoise = maybe\n", 2, 9, "noise");
}

TEST_CASE("comments and blank lines are ignored")
{
    std::string text = "# header\n\n";
    text += kMinimal;
    text.replace(text.find("pump = 0.5"), 10, "pump = 0.5   # per atom");
    CHECK(parse_config(text).sim.species[0].pump == 0.5);
}

TEST_CASE("canonical text round trips")
{
    for (const char* name : {"fig2", "fig3", "fig4", "fig5a", "fig5b"}) {
        CAPTURE(name);
        const auto c = load_config(std::string(SELFORG_SOURCE_DIR) + "/presets/" + name + ".cfg");
        const auto echo = to_text(c);
        const auto again = parse_config(echo);
        CHECK(again == c);
        CHECK(to_text(again) == echo);
    }
    auto c = parse_config(kMinimal);
    c.kind = ExperimentKind::Sweep;
    c.sweep = SweepAxis{"species.1.pump", 0.1, 1.0, 5, true};
    CHECK(parse_config(to_text(c)) == c);
}

TEST_CASE("sweep axis and parameter paths")
{
    auto c = parse_config(kMinimal);
    const SweepAxis axis{"cavity.kappa", 1.0, 3.0, 5, false};
    CHECK(axis.value(0) == 1.0);
    CHECK(axis.value(2) == doctest::Approx(2.0));
    CHECK(axis.value(4) == 3.0);

    CHECK(is_parameter_path(c, "cavity.detuning"));
    CHECK(is_parameter_path(c, "species.1.temperature"));
    CHECK_FALSE(is_parameter_path(c, "species.2.temperature"));
    CHECK_FALSE(is_parameter_path(c, "species.0.pump"));
    CHECK_FALSE(is_parameter_path(c, "cavity.colour"));

    apply_parameter(c, "cavity.kappa", 42.0);
    CHECK(c.sim.cavity.kappa == 42.0);
    apply_parameter(c, "species.1.mass_ratio", 3.0);
    CHECK(c.sim.species[0].mass == 1.5);
    apply_parameter(c, "species.1.count", 250.0);
    CHECK(c.sim.species[0].count == 250);
    apply_parameter(c, "simulation.duration", 2.0);
    CHECK(c.sim.duration == 2.0);
    CHECK_THROWS_AS(apply_parameter(c, "species.9.pump", 1.0), std::invalid_argument);

    std::string text = kMinimal;
    text += "[sweep]\nparameter = cavity.colour\nfrom = 0\nto = 1\ncount = 3\n";
    CHECK_THROWS_AS(parse_config(text), ConfigError);
}

TEST_CASE("numbers print in shortest round-trip form")
{
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-100.0) == "-100");
    CHECK(format_number(1e-5) == "1e-05");
    for (double v : {1.0 / 3.0, 2.0 / std::sqrt(300.0), 1e300, -5e-300}) {
        const auto s = format_number(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("kind names")
{
    for (auto k : {ExperimentKind::Simulate, ExperimentKind::Ensemble, ExperimentKind::Threshold,
                   ExperimentKind::Equilibrium, ExperimentKind::HeatFlow, ExperimentKind::Sweep})
        CHECK(parse_kind(to_string(k)) == k);
    CHECK_FALSE(parse_kind("dance"));
}
