#pragma once

// Analytic kinetic theory of the multispecies cavity system: effective
// detuning, Vlasov threshold and growth rates, homogeneous (q-Gaussian) and
// organised (Maxwell-Boltzmann) equilibria, single-particle actions and the
// adiabatic map, uniform-limit friction/diffusion and the inter-species heat
// flow.

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "selforg/model.hpp"

namespace selforg {

/// Adaptive quadrature failed to reach its tolerance.
class QuadratureError : public std::runtime_error
{
public:
    QuadratureError(const std::string& what, std::size_t species)
        : std::runtime_error(what), species_(species)
    {
    }
    std::size_t species() const { return species_; }

private:
    std::size_t species_;
};

/// delta = Delta_c - 1/2 sum_s N_s U0_s.
double effective_detuning(const CavityParams& cavity, std::span<const SpeciesParams> species);

struct StabilityReport
{
    double delta = 0.0;
    /// [sum_s N_s eta_s^2 / k_B T_s] |delta| / (kappa^2 + delta^2).
    double threshold_lhs = 0.0;
    /// false for delta >= 0, where no threshold analytics apply.
    bool in_regime = false;
    bool unstable = false;
    std::optional<double> growth_rate;
    std::vector<double> shares;  ///< per-species fraction of the threshold sum
};

/// Threshold for Maxwellian homogeneous states. When unstable the growth rate
/// is filled in from growth_rate_full.
StabilityReport stability_margin(const CavityParams& cavity, std::span<const SpeciesParams> species);

/// Common scale factor on all pumps that puts the system exactly at threshold.
/// Throws std::domain_error for delta >= 0 or when every pump vanishes.
double critical_pump_scale(const CavityParams& cavity, std::span<const SpeciesParams> species);

/// Hot-regime growth rate -kappa + sqrt(sum |delta| N eta^2 / k_B T - delta^2);
/// nullopt when stable.
std::optional<double> growth_rate_hot(const CavityParams& cavity, std::span<const SpeciesParams> species);

/// R(a) = integral of u^2 G(u) / (a^2 + u^2) over the real line, G the unit
/// Maxwellian exp(-u^2)/sqrt(pi). Computed by exp-sinh quadrature on the half-line.
double maxwellian_response(double a, std::size_t species_index = 0);

/// (gamma + kappa)^2 + delta^2 - sum_s [N eta^2 |delta| / k_B T] R(gamma / k v_s).
double growth_balance(double gamma, const CavityParams& cavity, std::span<const SpeciesParams> species);

/// Positive root of growth_balance by bisection on (0, gamma_hot + kappa];
/// nullopt when no positive root exists.
std::optional<double> growth_rate_full(const CavityParams& cavity, std::span<const SpeciesParams> species);

enum class Branch { Homogeneous, Organised };

struct SpeciesEquilibrium
{
    double q = 1.0;
    double kinetic_temperature = 0.0;  ///< <p^2>/m
    double trap_frequency = 0.0;       ///< omega_0
    double mean_sin = 0.0;             ///< signed <sin kx>
    double order_parameter = 0.0;      ///< |<sin kx>|
    double bunching = 0.5;             ///< <sin^2 kx>
    double uncertainty = 0.0;          ///< Delta x Delta p = k_B T_kin / omega_0 (hbar units)
    double energy = 0.0;               ///< E = Delta x Delta p omega_0
    bool exists = true;                ///< homogeneous existence, 2 delta < -omega_R
};

struct EquilibriumPrediction
{
    Branch branch = Branch::Homogeneous;
    double delta = 0.0;
    double temperature_star = 0.0;  ///< k_B T_* = (kappa^2 + delta^2) / (4 |delta|)
    Complex alpha{0.0, 0.0};
    std::vector<SpeciesEquilibrium> species;
    bool stable = true;      ///< homogeneous branch: below threshold at T_*
    bool converged = true;   ///< organised branch
    bool collapsed = false;  ///< organised iteration fell back to alpha = 0
    double residual = 0.0;
    int iterations = 0;
};

/// k_B T_* = (kappa^2 + delta^2) / (4 |delta|).
double temperature_star(double kappa, double delta);

/// Homogeneous q-Gaussian equilibrium, q_s = 1 + omega_R,s / |delta|.
/// Throws std::domain_error for delta >= 0.
EquilibriumPrediction qgaussian_equilibrium(const CavityParams& cavity, std::span<const SpeciesParams> species);

struct OrganisedOptions
{
    double tol = 1e-10;
    int max_iterations = 10000;
    double damping = 0.5;
    std::size_t grid = 4096;  ///< trapezoid points per period
};

/// Self-consistent organised equilibrium: Maxwell-Boltzmann weights at
/// k_B T_kin,s = k_B T_* + omega0_s^2 / |delta| and the steady-state field
/// alpha = -i sum N eta <sin kx> / (kappa - i delta_eff). Reports the Re(alpha) <= 0 branch.
EquilibriumPrediction organised_equilibrium(const CavityParams& cavity, std::span<const SpeciesParams> species,
                                            const OrganisedOptions& options = {});

/// Steady-state field for given Boltzmann averages; used to check solver residuals.
Complex steady_state_field(const CavityParams& cavity, std::span<const SpeciesParams> species,
                           std::span<const double> mean_sin, std::span<const double> bunching);

/// Trap frequency omega_0 with omega_0^2 = 4 eta omega_R |Re alpha|.
double trap_frequency(Complex alpha, const SpeciesParams& s);

struct ActionValue
{
    double action = 0.0;
    bool trapped = false;
    /// Adiabatic label: I/2 on trapped orbits, I on open ones (k = 1).
    double mapped() const { return trapped ? 0.5 * action : action; }
};

/// Action of the orbit with energy H in the weak-coupling potential
/// 2 eta Re(alpha) sin kx: the closed-loop integral (1/2pi) oint p dx for trapped
/// orbits (H < A) and the mean |p| over one period for open ones (H > A), with
/// A = 2 eta |Re alpha|. Throws std::domain_error for H < -A.
ActionValue action(double energy, Complex alpha, const SpeciesParams& s);
ActionValue action_at(double kx, double p, Complex alpha, const SpeciesParams& s);

/// Even momentum density with a characteristic width (used to size grids).
struct MomentumDistribution
{
    std::function<double(double)> density;
    double scale = 1.0;
};

MomentumDistribution maxwellian(double mass, double temperature);

/// Selforganised state f(x, p) = f0(J(x, p)) reached by adiabatic action
/// conservation from a homogeneous initial distribution.
class AdiabaticState
{
public:
    AdiabaticState(MomentumDistribution f0, Complex alpha_final, SpeciesParams species);

    double density(double kx, double p) const;
    /// (1/2pi) integral over one period of density(x, p).
    double marginal(double p, std::size_t x_points = 512) const;
    std::vector<double> marginal(std::span<const double> p_grid, std::size_t x_points = 512) const;
    /// Bin-averaged marginal for each bin of [lo, hi) split into `bins`.
    std::vector<double> binned_marginal(double lo, double hi, std::size_t bins, std::size_t sub = 4,
                                        std::size_t x_points = 512) const;
    /// Signed <sin kx> of the mapped state.
    double mean_sin(std::size_t x_points = 256, std::size_t p_points = 1024) const;
    /// Momentum range carrying essentially all of the mapped density.
    double momentum_extent() const;

private:
    MomentumDistribution f0_;
    Complex alpha_;
    SpeciesParams species_;
};

/// Throws std::invalid_argument if f0 has an odd component.
AdiabaticState adiabatic_map(MomentumDistribution f0, Complex alpha_final, const SpeciesParams& s);

struct FrictionDiffusion
{
    double drift = 0.0;      ///< A_s; the action moves as dI/dt = -A_s
    double diffusion = 0.0;  ///< B_s
};

/// Uniform-limit coefficients on free orbits (I = p, omega = p/m, n = +-1,
/// |g|^2 = 1/4) with the bare-cavity dispersion D(s) = (s + kappa)^2 + delta^2.
FrictionDiffusion friction_diffusion_uniform(double p, double kappa, double delta, const SpeciesParams& s);

struct HeatFlow
{
    double delta = 0.0;
    double q_2to1 = 0.0;
    double q_1to2 = 0.0;
    std::vector<std::string> warnings;
};

/// Inter-species heat flow per particle between two homogeneous ensembles at
/// their `temperature` fields; warns when the cold-reservoir or stability
/// preconditions fail.
HeatFlow heat_flow(const CavityParams& cavity, const SpeciesParams& s1, const SpeciesParams& s2);

}  // namespace selforg
