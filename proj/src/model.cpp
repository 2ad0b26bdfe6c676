#include "selforg/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace selforg {

double SpeciesParams::thermal_velocity() const
{
    return std::sqrt(2.0 * temperature / mass);
}

std::size_t SimConfig::steps() const
{
    if (duration <= 0.0)
        return 0;
    return static_cast<std::size_t>(std::llround(duration / dt));
}

std::vector<std::string> validate(const SpeciesParams& s)
{
    std::vector<std::string> errors;
    const std::string tag = s.name.empty() ? "species" : "species '" + s.name + "'";
    if (s.count < 1)
        errors.push_back(tag + ": count must be >= 1");
    if (!(s.mass > 0.0) || !std::isfinite(s.mass))
        errors.push_back(tag + ": mass must be > 0");
    if (!(s.temperature > 0.0) || !std::isfinite(s.temperature))
        errors.push_back(tag + ": temperature must be > 0");
    if (!(s.pump >= 0.0) || !std::isfinite(s.pump))
        errors.push_back(tag + ": pump must be >= 0");
    if (!std::isfinite(s.light_shift))
        errors.push_back(tag + ": light_shift must be finite");
    return errors;
}

std::vector<std::string> validate(const CavityParams& c)
{
    std::vector<std::string> errors;
    if (!(c.kappa > 0.0) || !std::isfinite(c.kappa))
        errors.push_back("cavity: kappa must be > 0");
    if (!std::isfinite(c.detuning))
        errors.push_back("cavity: detuning must be finite");
    return errors;
}

std::vector<std::string> validate(const SimConfig& c)
{
    std::vector<std::string> errors;
    for (const auto& s : c.species) {
        auto e = validate(s);
        errors.insert(errors.end(), e.begin(), e.end());
    }
    auto e = validate(c.cavity);
    errors.insert(errors.end(), e.begin(), e.end());
    if (!(c.dt > 0.0) || !std::isfinite(c.dt))
        errors.push_back("simulation: dt must be > 0");
    if (!(c.duration >= 0.0) || !std::isfinite(c.duration))
        errors.push_back("simulation: duration must be >= 0");
    if (c.stride < 1)
        errors.push_back("simulation: stride must be >= 1");
    if (!(c.initial.perturbation >= 0.0 && c.initial.perturbation < 1.0))
        errors.push_back("simulation: perturbation must lie in [0, 1)");
    return errors;
}

void require_valid(const SimConfig& c)
{
    auto errors = validate(c);
    if (errors.empty())
        return;
    std::ostringstream msg;
    msg << "invalid configuration:";
    for (const auto& e : errors)
        msg << "\n  " << e;
    throw std::invalid_argument(msg.str());
}

double potential(double kx, Complex alpha, const SpeciesParams& s)
{
    const double sn = std::sin(kx);
    return 2.0 * s.pump * alpha.real() * sn + s.light_shift * std::norm(alpha) * sn * sn;
}

double force(double kx, Complex alpha, const SpeciesParams& s)
{
    return -2.0 * s.pump * alpha.real() * std::cos(kx) - s.light_shift * std::norm(alpha) * std::sin(2.0 * kx);
}

double hamiltonian(double kx, double p, Complex alpha, const SpeciesParams& s)
{
    return p * p / (2.0 * s.mass) + potential(kx, alpha, s);
}

double wrap_phase(double kx)
{
    double w = kx - kTwoPi * std::floor(kx / kTwoPi);
    // floor can leave w == 2 pi after rounding for tiny negative inputs
    if (w >= kTwoPi)
        w = 0.0;
    return w;
}

double total_energy(const SimState& state, const SimConfig& config)
{
    double e = -config.cavity.detuning * std::norm(state.alpha);
    for (std::size_t s = 0; s < config.species.size(); ++s) {
        const auto& sp = config.species[s];
        const auto& st = state.species[s];
        for (std::size_t j = 0; j < st.x.size(); ++j)
            e += hamiltonian(st.x[j], st.p[j], state.alpha, sp);
    }
    return e;
}

}  // namespace selforg
