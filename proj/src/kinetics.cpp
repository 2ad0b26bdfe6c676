#include "selforg/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace selforg {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kPi = std::numbers::pi;

double threshold_sum(std::span<const SpeciesParams> species, std::vector<double>* terms = nullptr)
{
    double sum = 0.0;
    for (const auto& s : species) {
        const double term = static_cast<double>(s.count) * s.pump * s.pump / s.temperature;
        if (terms)
            terms->push_back(term);
        sum += term;
    }
    return sum;
}

}  // namespace

double effective_detuning(const CavityParams& cavity, std::span<const SpeciesParams> species)
{
    double delta = cavity.detuning;
    for (const auto& s : species)
        delta -= 0.5 * static_cast<double>(s.count) * s.light_shift;
    return delta;
}

StabilityReport stability_margin(const CavityParams& cavity, std::span<const SpeciesParams> species)
{
    StabilityReport r;
    r.delta = effective_detuning(cavity, species);
    std::vector<double> terms;
    const double sum = threshold_sum(species, &terms);
    const double kappa = cavity.kappa;
    r.threshold_lhs = sum * (std::abs(r.delta) / (kappa * kappa + r.delta * r.delta));
    for (double t : terms)
        r.shares.push_back(sum > 0.0 ? t / sum : 0.0);
    r.in_regime = r.delta < 0.0;
    r.unstable = r.in_regime && r.threshold_lhs > 1.0;
    if (r.unstable)
        r.growth_rate = growth_rate_full(cavity, species);
    return r;
}

double critical_pump_scale(const CavityParams& cavity, std::span<const SpeciesParams> species)
{
    const auto r = stability_margin(cavity, species);
    if (!r.in_regime)
        throw std::domain_error("critical_pump_scale: effective detuning must be negative");
    if (!(r.threshold_lhs > 0.0))
        throw std::domain_error("critical_pump_scale: undefined when all pumps vanish");
    return 1.0 / std::sqrt(r.threshold_lhs);
}

std::optional<double> growth_rate_hot(const CavityParams& cavity, std::span<const SpeciesParams> species)
{
    const double delta = effective_detuning(cavity, species);
    if (!(delta < 0.0))
        return std::nullopt;
    const double radicand = std::abs(delta) * threshold_sum(species) - delta * delta;
    if (!(radicand > 0.0))
        return std::nullopt;
    const double gamma = -cavity.kappa + std::sqrt(radicand);
    if (!(gamma > 0.0))
        return std::nullopt;
    return gamma;
}

double maxwellian_response(double a, std::size_t species_index)
{
    if (a == 0.0)
        return 1.0;
    const double a2 = a * a;
    auto integrand = [a2](double u) {
        const double u2 = u * u;
        return u2 * std::exp(-u2) / (a2 + u2);
    };
    // exp-sinh nodes cluster at the origin, resolving the turnover at u ~ |a| for small |a|
    thread_local boost::math::quadrature::exp_sinh<double> rule;
    double abs_error = 0.0;
    const double half = rule.integrate(integrand, 1e-12, &abs_error);
    const double error = abs_error / half;
    if (!(error <= 1e-9)) {
        std::ostringstream msg;
        msg << "maxwellian_response: relative quadrature error " << error << " for species " << species_index;
        throw QuadratureError(msg.str(), species_index);
    }
    return 2.0 * half / std::sqrt(kPi);
}

double growth_balance(double gamma, const CavityParams& cavity, std::span<const SpeciesParams> species)
{
    const double delta = effective_detuning(cavity, species);
    double rhs = 0.0;
    for (std::size_t i = 0; i < species.size(); ++i) {
        const auto& s = species[i];
        const double weight = static_cast<double>(s.count) * s.pump * s.pump * std::abs(delta) / s.temperature;
        rhs += weight * maxwellian_response(gamma / s.thermal_velocity(), i);
    }
    const double g = gamma + cavity.kappa;
    return g * g + delta * delta - rhs;
}

std::optional<double> growth_rate_full(const CavityParams& cavity, std::span<const SpeciesParams> species)
{
    const auto hot = growth_rate_hot(cavity, species);
    if (!hot)
        return std::nullopt;
    auto f = [&](double gamma) { return growth_balance(gamma, cavity, species); };
    const double lo = 0.0;
    const double hi = *hot + cavity.kappa;
    if (!(f(lo) < 0.0))
        return std::nullopt;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-10 * std::max(std::abs(a), std::abs(b)); };
    std::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::bisect(f, lo, hi, tol, max_iter);
    const double gamma = 0.5 * (a + b);
    if (!(gamma > 0.0))
        return std::nullopt;
    return gamma;
}

// ---------------------------------------------------------------------------

double temperature_star(double kappa, double delta)
{
    return (kappa * kappa + delta * delta) / (4.0 * std::abs(delta));
}

EquilibriumPrediction qgaussian_equilibrium(const CavityParams& cavity, std::span<const SpeciesParams> species)
{
    EquilibriumPrediction eq;
    eq.branch = Branch::Homogeneous;
    eq.delta = effective_detuning(cavity, species);
    if (!(eq.delta < 0.0))
        throw std::domain_error("qgaussian_equilibrium: effective detuning must be negative");
    eq.temperature_star = temperature_star(cavity.kappa, eq.delta);
    for (const auto& s : species) {
        SpeciesEquilibrium se;
        se.q = 1.0 + s.recoil() / std::abs(eq.delta);
        se.exists = 2.0 * eq.delta < -s.recoil();
        se.kinetic_temperature = se.exists ? 2.0 * eq.temperature_star / (5.0 - 3.0 * se.q)
                                           : std::numeric_limits<double>::infinity();
        if (se.q >= 5.0 / 3.0)
            se.kinetic_temperature = std::numeric_limits<double>::infinity();
        se.energy = 0.5 * se.kinetic_temperature;
        eq.species.push_back(se);
    }
    // stability of the joint state with every species at T_*
    std::vector<SpeciesParams> at_star(species.begin(), species.end());
    for (auto& s : at_star)
        s.temperature = eq.temperature_star;
    eq.stable = !stability_margin(cavity, at_star).unstable;
    return eq;
}

// ---------------------------------------------------------------------------

double trap_frequency(Complex alpha, const SpeciesParams& s)
{
    return std::sqrt(4.0 * s.pump * s.recoil() * std::abs(alpha.real()));
}

Complex steady_state_field(const CavityParams& cavity, std::span<const SpeciesParams> species,
                           std::span<const double> mean_sin, std::span<const double> bunching)
{
    double delta_eff = cavity.detuning;
    double source = 0.0;
    for (std::size_t i = 0; i < species.size(); ++i) {
        const auto n = static_cast<double>(species[i].count);
        delta_eff -= n * species[i].light_shift * bunching[i];
        source += n * species[i].pump * mean_sin[i];
    }
    return Complex{0.0, -source} / Complex{cavity.kappa, -delta_eff};
}

namespace {

struct BoltzmannAverages
{
    double mean_sin = 0.0;
    double bunching = 0.5;
};

// Trapezoid rule over one period; spectrally accurate for periodic integrands.
BoltzmannAverages boltzmann_averages(const SpeciesParams& s, Complex alpha, double temperature, std::size_t grid)
{
    const double a = 2.0 * s.pump * alpha.real();
    const double b = s.light_shift * std::norm(alpha);
    std::vector<double> phi(grid);
    double phi_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid; ++i) {
        const double sn = std::sin(kTwoPi * static_cast<double>(i) / static_cast<double>(grid));
        phi[i] = a * sn + b * sn * sn;
        phi_min = std::min(phi_min, phi[i]);
    }
    double z = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < grid; ++i) {
        const double sn = std::sin(kTwoPi * static_cast<double>(i) / static_cast<double>(grid));
        const double w = std::exp(-(phi[i] - phi_min) / temperature);
        z += w;
        s1 += w * sn;
        s2 += w * sn * sn;
    }
    return {s1 / z, s2 / z};
}

}  // namespace

EquilibriumPrediction organised_equilibrium(const CavityParams& cavity, std::span<const SpeciesParams> species,
                                            const OrganisedOptions& options)
{
    EquilibriumPrediction eq;
    eq.branch = Branch::Organised;
    const std::size_t n_species = species.size();
    std::vector<double> msin(n_species, 1.0);
    std::vector<double> bunch(n_species, 1.0);

    // perfect order as the starting point (Re alpha < 0 branch)
    Complex alpha = steady_state_field(cavity, species, msin, bunch);
    const double alpha_scale = std::abs(alpha);
    if (!(alpha_scale > 0.0)) {
        eq.collapsed = true;
        eq.converged = false;
        return eq;
    }

    auto delta_of = [&](const std::vector<double>& bn) {
        double d = cavity.detuning;
        for (std::size_t i = 0; i < n_species; ++i)
            d -= static_cast<double>(species[i].count) * species[i].light_shift * bn[i];
        return d;
    };

    std::vector<double> temps(n_species, 0.0);
    double delta = delta_of(bunch);
    auto update_temperatures = [&](Complex a, double d) {
        const double t_star = temperature_star(cavity.kappa, d);
        for (std::size_t i = 0; i < n_species; ++i) {
            const double w0 = trap_frequency(a, species[i]);
            temps[i] = t_star + w0 * w0 / std::abs(d);
        }
    };

    eq.converged = false;
    for (eq.iterations = 1; eq.iterations <= options.max_iterations; ++eq.iterations) {
        if (!(delta < 0.0))
            break;
        update_temperatures(alpha, delta);
        for (std::size_t i = 0; i < n_species; ++i) {
            const auto avg = boltzmann_averages(species[i], alpha, temps[i], options.grid);
            msin[i] = avg.mean_sin;
            bunch[i] = avg.bunching;
        }
        const Complex target = steady_state_field(cavity, species, msin, bunch);
        delta = delta_of(bunch);
        const double change = std::abs(target - alpha);
        eq.residual = change;
        alpha = (1.0 - options.damping) * alpha + options.damping * target;
        if (std::abs(alpha) < 1e-9 * alpha_scale) {
            eq.collapsed = true;
            break;
        }
        if (change < options.tol * std::max(1.0, std::abs(alpha))) {
            eq.converged = true;
            break;
        }
    }
    eq.iterations = std::min(eq.iterations, options.max_iterations);

    // report a state that satisfies both relations at the returned alpha
    eq.alpha = alpha;
    eq.delta = delta;
    if (delta < 0.0) {
        update_temperatures(alpha, delta);
        eq.temperature_star = temperature_star(cavity.kappa, delta);
    }
    else {
        eq.converged = false;
    }
    for (std::size_t i = 0; i < n_species; ++i) {
        SpeciesEquilibrium se;
        se.kinetic_temperature = temps[i];
        se.trap_frequency = trap_frequency(alpha, species[i]);
        se.mean_sin = msin[i];
        se.order_parameter = std::abs(msin[i]);
        se.bunching = bunch[i];
        se.uncertainty = se.trap_frequency > 0.0 ? temps[i] / se.trap_frequency
                                                 : std::numeric_limits<double>::infinity();
        se.energy = temps[i];
        eq.species.push_back(se);
    }
    return eq;
}

// ---------------------------------------------------------------------------

ActionValue action(double energy, Complex alpha, const SpeciesParams& s)
{
    const double depth = 2.0 * s.pump * std::abs(alpha.real());
    const double m = s.mass;
    if (energy < -depth)
        throw std::domain_error("action: energy below the potential minimum");
    if (depth == 0.0)
        return {std::sqrt(2.0 * m * energy), false};

    // H + A cos y = 2A (k2 - sin^2(y/2)), y measured from the well bottom
    const double k2 = (energy + depth) / (2.0 * depth);
    const double prefactor = std::sqrt(m * depth) / kPi;
    if (k2 < 1.0) {
        // libration; sin(y/2) = k sin(phi) removes the turning-point square roots
        auto f = [k2](double phi) {
            const double c = std::cos(phi);
            const double sn = std::sin(phi);
            return k2 * c * c / std::sqrt(1.0 - k2 * sn * sn);
        };
        const double integral = gauss_kronrod<double, 31>::integrate(f, 0.0, 0.5 * kPi, 25, 1e-13);
        return {8.0 * prefactor * integral, true};
    }
    auto f = [k2](double u) {
        const double sn = std::sin(u);
        return std::sqrt(k2 - sn * sn);
    };
    const double integral = gauss_kronrod<double, 31>::integrate(f, 0.0, 0.5 * kPi, 25, 1e-13);
    return {4.0 * prefactor * integral, false};
}

ActionValue action_at(double kx, double p, Complex alpha, const SpeciesParams& s)
{
    const double depth = 2.0 * s.pump * std::abs(alpha.real());
    const double energy = p * p / (2.0 * s.mass) + 2.0 * s.pump * alpha.real() * std::sin(kx);
    // rounding can push the well bottom a hair below -A
    return action(std::max(energy, -depth), alpha, s);
}

MomentumDistribution maxwellian(double mass, double temperature)
{
    const double var = mass * temperature;
    return {[var](double p) { return std::exp(-0.5 * p * p / var) / std::sqrt(2.0 * kPi * var); }, std::sqrt(var)};
}

AdiabaticState::AdiabaticState(MomentumDistribution f0, Complex alpha_final, SpeciesParams species)
    : f0_(std::move(f0)), alpha_(alpha_final), species_(std::move(species))
{
}

double AdiabaticState::density(double kx, double p) const
{
    return f0_.density(action_at(kx, p, alpha_, species_).mapped());
}

double AdiabaticState::marginal(double p, std::size_t x_points) const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < x_points; ++i)
        sum += density(kTwoPi * (static_cast<double>(i) + 0.5) / static_cast<double>(x_points), p);
    return sum / static_cast<double>(x_points);
}

std::vector<double> AdiabaticState::marginal(std::span<const double> p_grid, std::size_t x_points) const
{
    std::vector<double> out;
    out.reserve(p_grid.size());
    for (double p : p_grid)
        out.push_back(marginal(p, x_points));
    return out;
}

std::vector<double> AdiabaticState::binned_marginal(double lo, double hi, std::size_t bins, std::size_t sub,
                                                    std::size_t x_points) const
{
    std::vector<double> out(bins, 0.0);
    const double w = (hi - lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        double sum = 0.0;
        for (std::size_t k = 0; k < sub; ++k)
            sum += marginal(lo + w * (static_cast<double>(b) + (static_cast<double>(k) + 0.5) / static_cast<double>(sub)),
                            x_points);
        out[b] = sum / static_cast<double>(sub);
    }
    return out;
}

double AdiabaticState::momentum_extent() const
{
    const double depth = 2.0 * species_.pump * std::abs(alpha_.real());
    return std::sqrt(4.0 * species_.mass * depth) + 10.0 * f0_.scale;
}

double AdiabaticState::mean_sin(std::size_t x_points, std::size_t p_points) const
{
    const double extent = momentum_extent();
    const double dp = 2.0 * extent / static_cast<double>(p_points);
    double norm = 0.0;
    double s1 = 0.0;
    for (std::size_t i = 0; i < x_points; ++i) {
        const double x = kTwoPi * (static_cast<double>(i) + 0.5) / static_cast<double>(x_points);
        const double sn = std::sin(x);
        for (std::size_t j = 0; j < p_points; ++j) {
            const double p = -extent + dp * (static_cast<double>(j) + 0.5);
            const double f = density(x, p);
            norm += f;
            s1 += f * sn;
        }
    }
    return norm > 0.0 ? s1 / norm : 0.0;
}

AdiabaticState adiabatic_map(MomentumDistribution f0, Complex alpha_final, const SpeciesParams& s)
{
    for (double u : {0.1, 0.5, 1.0, 2.0, 3.0}) {
        const double p = u * f0.scale;
        const double a = f0.density(p);
        const double b = f0.density(-p);
        if (std::abs(a - b) > 1e-12 * std::max(std::abs(a), std::abs(b)))
            throw std::invalid_argument("adiabatic_map: initial momentum distribution must be even in p");
    }
    return AdiabaticState(std::move(f0), alpha_final, s);
}

// ---------------------------------------------------------------------------

FrictionDiffusion friction_diffusion_uniform(double p, double kappa, double delta, const SpeciesParams& s)
{
    const double omega = p / s.mass;
    const double eta2 = s.pump * s.pump;
    const double k2d2 = kappa * kappa + delta * delta;
    double sum_a = 0.0;
    double sum_b = 0.0;
    for (int n : {-1, 1}) {
        const Complex arg{kappa, static_cast<double>(n) * omega};
        const double d2 = std::norm(arg * arg + delta * delta);
        const double g2 = 0.25;
        sum_a += g2 / d2;
        sum_b += g2 / d2 * (k2d2 + omega * omega);
    }
    return {-4.0 * delta * eta2 * kappa * omega * sum_a, eta2 * kappa * sum_b};
}

HeatFlow heat_flow(const CavityParams& cavity, const SpeciesParams& s1, const SpeciesParams& s2)
{
    HeatFlow hf;
    const SpeciesParams pair[] = {s1, s2};
    hf.delta = effective_detuning(cavity, pair);
    const double kappa = cavity.kappa;
    const double d2 = hf.delta * hf.delta;
    const double t1 = s1.temperature;
    const double t2 = s2.temperature;
    const double denom = kappa * kappa + d2;
    hf.q_2to1 = static_cast<double>(s1.count) * s2.pump * s2.pump * s1.pump * s1.pump
                * (4.0 * std::sqrt(kPi) * d2 / (denom * denom)) * std::sqrt(1.0 / t1) * (1.0 - t2 / t1)
                * std::pow(1.0 + s1.mass * t2 / (s2.mass * t1), -1.5);
    hf.q_1to2 = -(static_cast<double>(s2.count) * s2.mass) / (static_cast<double>(s1.count) * s1.mass) * hf.q_2to1;

    if (2.0 * t1 / kappa > 0.1 * kappa)
        hf.warnings.emplace_back("species 1 is not cold: 2 k_B T_1 / kappa is not << kappa / omega_rec");
    if (!(hf.delta < 0.0))
        hf.warnings.emplace_back("effective detuning is not negative");
    else if (stability_margin(cavity, pair).threshold_lhs > 0.5)
        hf.warnings.emplace_back("ensembles are close to the selforganisation threshold");
    return hf;
}

}  // namespace selforg
