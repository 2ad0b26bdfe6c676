#pragma once

// Stochastic particle/field integrator and ensemble driver.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "selforg/model.hpp"
#include "selforg/observables.hpp"

namespace selforg {

/// Integration blow-up: non-finite values or the runaway guard tripped.
class DivergenceError : public std::runtime_error
{
public:
    DivergenceError(const std::string& what, double time, std::uint64_t seed = 0)
        : std::runtime_error(what), time_(time), seed_(seed)
    {
    }

    double time() const { return time_; }
    std::uint64_t seed() const { return seed_; }

private:
    double time_;
    std::uint64_t seed_;
};

class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Stable counter-based seed split (splitmix64 of base + golden-ratio stride).
std::uint64_t realisation_seed(std::uint64_t base_seed, std::size_t index);

/// Uniform positions (optionally modulated as 1 + eps sin kx), Maxwellian
/// momenta of variance m k_B T, empty field, t = 0.
SimState sample_initial(const SimConfig& config, std::uint64_t seed);

/// Suggested timestep: kappa dt <= 0.1, omega0_max dt <= 0.05 with omega0_max
/// the trap frequency at perfect order, and a 4-sigma thermal particle moving
/// at most 0.1 rad per step.
double suggest_dt(const SimConfig& config);

/// |alpha|^2 ceiling used by the divergence guard.
double photon_guard(const SimConfig& config);
inline constexpr double kMomentumGuard = 1e6;

/// One trajectory: owns the state, its noise stream and the cached phase
/// trigonometry, so every step costs a single sincos per particle.
class Trajectory
{
public:
    Trajectory(const SimConfig& config, std::uint64_t seed);
    Trajectory(const SimConfig& config, SimState initial, std::uint64_t seed);

    /// Advances by config.dt with the symmetric splitting
    /// field(dt/2) . kick(dt/2) . drift(dt) . kick(dt/2) . field(dt/2).
    /// Throws DivergenceError.
    void step();

    const SimState& state() const { return state_; }
    const SimConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }
    /// Overrides the field amplitude (positions are untouched, so the cache stays valid).
    void set_alpha(Complex alpha) { state_.alpha = alpha; }

private:
    void refresh_trig();
    void field_update(double h);
    void advance_particles(double h);
    void check_guard() const;

    SimConfig config_;
    SimState state_;
    Rng rng_;
    std::uint64_t seed_;
    double guard_;
    double start_time_ = 0.0;
    std::uint64_t steps_ = 0;
    std::vector<std::vector<double>> sin_;
    std::vector<std::vector<double>> cos_;
    std::vector<double> sum_sin_;
    std::vector<double> sum_sin2_;
};

/// Single step on a detached state (recomputes the trigonometry cache).
SimState step(SimState state, const SimConfig& config, Rng& rng);

enum class Channel { OrderParameter, KineticTemperature, PhotonNumber, ReAlpha, ImAlpha, Bunching, MeanSin };

struct Recorder
{
    /// 0 means "use SimConfig::stride".
    std::size_t stride = 0;
    std::vector<Channel> channels{Channel::OrderParameter, Channel::KineticTemperature, Channel::PhotonNumber,
                                  Channel::ReAlpha,        Channel::ImAlpha,            Channel::Bunching};
    std::vector<double> snapshot_times;
};

struct Column
{
    std::string name;
    std::vector<double> values;
};

struct Snapshot
{
    double time = 0.0;
    SimState state;
};

struct TimeSeries
{
    std::vector<double> times;
    std::vector<Column> columns;
    SimConfig config;
    std::uint64_t seed = 0;
    std::vector<Snapshot> snapshots;
    SimState final_state;

    const Column& column(const std::string& name) const;
};

/// Column names in recording order for the given recorder and species count.
std::vector<std::string> column_names(const Recorder& recorder, std::size_t n_species);

TimeSeries run(const SimConfig& config, std::uint64_t seed, const Recorder& recorder = {});

struct EnsembleOptions
{
    Recorder recorder;
    std::size_t threads = 1;
    std::size_t histogram_bins = 64;
    /// Per species; if empty the larger of the initial and pooled final
    /// kinetic temperature sets the histogram range.
    std::vector<double> histogram_temperature;
};

struct EnsembleColumn
{
    std::string name;
    std::vector<double> mean;
    std::vector<double> stderr_;
    std::vector<double> max;
};

struct EnsembleStats
{
    std::vector<double> times;
    std::vector<EnsembleColumn> columns;
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<double>> final_momenta;  ///< pooled per species
    std::vector<Histogram> histograms;               ///< pooled final momenta per species
    std::vector<Complex> final_alpha;                ///< per realisation

    const EnsembleColumn& column(const std::string& name) const;
    std::size_t realisations() const { return seeds.size(); }
};

/// Realisation i runs with realisation_seed(base_seed, i). Reduction is in
/// realisation order, independent of the thread count.
EnsembleStats ensemble_run(const SimConfig& config, std::size_t n_realisations, std::uint64_t base_seed,
                           const EnsembleOptions& options = {});

}  // namespace selforg
