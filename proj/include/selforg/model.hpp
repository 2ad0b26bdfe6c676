#pragma once

// Domain types and single-particle potential for polarisable particles in a
// transversely pumped single-mode cavity.
//
// Natural units throughout: hbar = 1, mode wavenumber k = 1 and the recoil
// frequency of the reference species hbar k^2 / (2 m_ref) = 1, so m_ref = 1/2.
// Times are in 1/omega_rec, rates in omega_rec, momenta in hbar k, positions
// are stored as the phase kx in [0, 2 pi) and energies in hbar omega_rec.

#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace selforg {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Mass of the unit-defining reference species.
inline constexpr double kReferenceMass = 0.5;

struct SpeciesParams
{
    std::string name;
    std::size_t count = 1;         ///< N_s
    double mass = kReferenceMass;  ///< m_s
    double pump = 0.0;             ///< eta_s
    double light_shift = 0.0;      ///< U0_s, usually <= 0
    double temperature = 1.0;      ///< initial k_B T_s

    /// omega_R,s = hbar k^2 / (2 m_s).
    double recoil() const { return 0.5 / mass; }
    /// v_s with k_B T_s = m_s v_s^2 / 2.
    double thermal_velocity() const;

    bool operator==(const SpeciesParams&) const = default;
};

struct CavityParams
{
    double kappa = 1.0;     ///< field decay rate, > 0
    double detuning = 0.0;  ///< Delta_c = omega_p - omega_c

    bool operator==(const CavityParams&) const = default;
};

struct InitialCondition
{
    /// Amplitude of the (1 + eps sin kx) density modulation, in [0, 1).
    double perturbation = 0.0;

    bool operator==(const InitialCondition&) const = default;
};

struct SimConfig
{
    std::vector<SpeciesParams> species;
    CavityParams cavity;
    double dt = 1e-3;
    double duration = 0.0;
    std::size_t stride = 1;
    bool noise = true;
    /// Holds alpha fixed (test harness for the particle sub-integrator).
    bool freeze_field = false;
    std::uint64_t seed = 0;
    InitialCondition initial;

    std::size_t steps() const;

    bool operator==(const SimConfig&) const = default;
};

struct SpeciesState
{
    std::vector<double> x;  ///< phases kx in [0, 2 pi)
    std::vector<double> p;
};

struct SimState
{
    std::vector<SpeciesState> species;
    Complex alpha{0.0, 0.0};
    double t = 0.0;
};

/// Returns every violated invariant; empty when the value is valid.
std::vector<std::string> validate(const SpeciesParams& s);
std::vector<std::string> validate(const CavityParams& c);
std::vector<std::string> validate(const SimConfig& c);
/// Throws std::invalid_argument listing all violations.
void require_valid(const SimConfig& c);

/// Phi_s = eta (alpha + alpha*) sin kx + U0 |alpha|^2 sin^2 kx.
double potential(double kx, Complex alpha, const SpeciesParams& s);

/// -dPhi_s/dx.
double force(double kx, Complex alpha, const SpeciesParams& s);

/// p^2 / (2 m_s) + Phi_s.
double hamiltonian(double kx, double p, Complex alpha, const SpeciesParams& s);

/// Wraps a phase into [0, 2 pi).
double wrap_phase(double kx);

/// Total energy of the closed (kappa = 0) system, sum_j H_j - Delta_c |alpha|^2.
double total_energy(const SimState& state, const SimConfig& config);

}  // namespace selforg
