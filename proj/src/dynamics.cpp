#include "selforg/dynamics.hpp"
#include "selforg/trig.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

namespace selforg {

std::uint64_t realisation_seed(std::uint64_t base_seed, std::size_t index)
{
    std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

SimState sample_initial(const SimConfig& config, std::uint64_t seed)
{
    require_valid(config);
    Rng rng(seed);
    const double eps = config.initial.perturbation;
    SimState state;
    state.species.resize(config.species.size());
    for (std::size_t s = 0; s < config.species.size(); ++s) {
        const auto& sp = config.species[s];
        auto& st = state.species[s];
        st.x.resize(sp.count);
        st.p.resize(sp.count);
        for (auto& x : st.x) {
            // rejection sampling of (1 + eps sin x) / (2 pi)
            for (;;) {
                const double cand = kTwoPi * rng.uniform();
                if (eps == 0.0 || rng.uniform() * (1.0 + eps) <= 1.0 + eps * std::sin(cand)) {
                    x = wrap_phase(cand);
                    break;
                }
            }
        }
        const double sigma = std::sqrt(sp.mass * sp.temperature);
        for (auto& p : st.p)
            p = sigma * rng.normal();
    }
    return state;
}

double suggest_dt(const SimConfig& config)
{
    const auto& c = config.cavity;
    double delta = c.detuning;
    double collective = 0.0;
    for (const auto& s : config.species) {
        delta -= 0.5 * static_cast<double>(s.count) * s.light_shift;
        collective += static_cast<double>(s.count) * std::abs(s.pump);
    }
    const double alpha_max = collective / std::hypot(c.kappa, delta);
    double omega0_max = 0.0;
    for (const auto& s : config.species)
        omega0_max = std::max(omega0_max, std::sqrt(4.0 * std::abs(s.pump) * s.recoil() * alpha_max));
    double dt = 0.1 / c.kappa;
    if (omega0_max > 0.0)
        dt = std::min(dt, 0.05 / omega0_max);
    for (const auto& s : config.species) {
        const double v_fast = 4.0 * std::sqrt(s.temperature / s.mass);
        if (v_fast > 0.0)
            dt = std::min(dt, 0.1 / v_fast);
    }
    return dt;
}

double photon_guard(const SimConfig& config)
{
    double collective = 0.0;
    for (const auto& s : config.species)
        collective += static_cast<double>(s.count) * s.pump;
    const double scale = collective / config.cavity.kappa;
    return 1e4 * std::max(1.0, scale * scale);
}

// ---------------------------------------------------------------------------

namespace {

// (e^z - 1) without cancellation for small |z|
Complex expm1(Complex z)
{
    const double a = z.real();
    const double b = z.imag();
    const double sh = std::sin(0.5 * b);
    return {std::expm1(a) * std::cos(b) - 2.0 * sh * sh, std::exp(a) * std::sin(b)};
}

// (e^z - 1) / z
Complex phi1(Complex z)
{
    if (std::abs(z) < 1e-8)
        return 1.0 + 0.5 * z;
    return expm1(z) / z;
}

}  // namespace

Trajectory::Trajectory(const SimConfig& config, std::uint64_t seed)
    : Trajectory(config, sample_initial(config, seed), realisation_seed(seed, 0) ^ 0x5DEECE66DULL)
{
    seed_ = seed;
}

Trajectory::Trajectory(const SimConfig& config, SimState initial, std::uint64_t seed)
    : config_(config), state_(std::move(initial)), rng_(seed), seed_(seed), guard_(photon_guard(config)),
      start_time_(state_.t)
{
    require_valid(config_);
    if (state_.species.size() != config_.species.size())
        throw std::invalid_argument("Trajectory: state and config disagree on the number of species");
    for (std::size_t s = 0; s < config_.species.size(); ++s) {
        const auto& st = state_.species[s];
        if (st.x.size() != config_.species[s].count || st.p.size() != config_.species[s].count)
            throw std::invalid_argument("Trajectory: array length differs from species count");
    }
    sin_.resize(config_.species.size());
    cos_.resize(config_.species.size());
    sum_sin_.assign(config_.species.size(), 0.0);
    sum_sin2_.assign(config_.species.size(), 0.0);
    refresh_trig();
}

void Trajectory::refresh_trig()
{
    for (std::size_t s = 0; s < state_.species.size(); ++s) {
        const auto& x = state_.species[s].x;
        auto& sn = sin_[s];
        auto& cs = cos_[s];
        sn.resize(x.size());
        cs.resize(x.size());
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            double v;
            sincos_phase(x[j], v, cs[j]);
            sn[j] = v;
            s1 += v;
            s2 += v * v;
        }
        sum_sin_[s] = s1;
        sum_sin2_[s] = s2;
    }
}

// Exact solution of d alpha = (Lambda alpha + B) dt - sqrt(kappa) dW over h with
// the particle sums frozen.
void Trajectory::field_update(double h)
{
    if (config_.freeze_field)
        return;
    const auto& cav = config_.cavity;
    Complex lambda{-cav.kappa, cav.detuning};
    Complex source{0.0, 0.0};
    for (std::size_t s = 0; s < config_.species.size(); ++s) {
        const auto& sp = config_.species[s];
        lambda -= Complex{0.0, sp.light_shift * sum_sin2_[s]};
        source -= Complex{0.0, sp.pump * sum_sin_[s]};
    }
    const Complex z = lambda * h;
    const Complex e = std::exp(z);
    state_.alpha = e * state_.alpha + h * phi1(z) * source;
    if (config_.noise) {
        const double y = 2.0 * lambda.real() * h;
        const double variance = cav.kappa * h * (std::abs(y) < 1e-12 ? 1.0 : std::expm1(y) / y);
        const double sigma = std::sqrt(0.5 * variance);
        const double re = rng_.normal();
        const double im = rng_.normal();
        state_.alpha += Complex{sigma * re, sigma * im};
    }
}

// kick(h/2) . drift(h) . kick(h/2) at fixed alpha, one pass per particle.
void Trajectory::advance_particles(double h)
{
    const double re = state_.alpha.real();
    const double n = std::norm(state_.alpha);
    for (std::size_t s = 0; s < config_.species.size(); ++s) {
        const auto& sp = config_.species[s];
        const double a = -sp.pump * re * h;
        const double b = -sp.light_shift * n * h;
        const double inv_m = h / sp.mass;
        auto& st = state_.species[s];
        auto& sn = sin_[s];
        auto& cs = cos_[s];
        double s1 = 0.0;
        double s2 = 0.0;
        double p_max = 0.0;
        for (std::size_t j = 0; j < st.p.size(); ++j) {
            double p = st.p[j] + cs[j] * (a + b * sn[j]);
            double x = st.x[j] + p * inv_m;
            if (x >= kTwoPi)
                x -= kTwoPi;
            else if (x < 0.0)
                x += kTwoPi;
            if (!(x >= 0.0 && x < kTwoPi))
                x = wrap_phase(x);
            double sx;
            double cx;
            sincos_phase(x, sx, cx);
            p += cx * (a + b * sx);
            st.x[j] = x;
            st.p[j] = p;
            sn[j] = sx;
            cs[j] = cx;
            s1 += sx;
            s2 += sx * sx;
            p_max = std::max(p_max, std::abs(p));
        }
        sum_sin_[s] = s1;
        sum_sin2_[s] = s2;
        if (!(p_max <= kMomentumGuard)) {
            std::ostringstream msg;
            msg << "integration diverged at t=" << state_.t << ": |p|=" << p_max;
            throw DivergenceError(msg.str(), state_.t, seed_);
        }
    }
}

void Trajectory::check_guard() const
{
    const double n = std::norm(state_.alpha);
    if (!(n <= guard_)) {
        std::ostringstream msg;
        msg << "integration diverged at t=" << state_.t << ": |alpha|^2=" << n;
        throw DivergenceError(msg.str(), state_.t, seed_);
    }
}

void Trajectory::step()
{
    const double dt = config_.dt;
    field_update(0.5 * dt);
    advance_particles(dt);
    field_update(0.5 * dt);
    ++steps_;
    state_.t = start_time_ + static_cast<double>(steps_) * dt;
    check_guard();
}

SimState step(SimState state, const SimConfig& config, Rng& rng)
{
    // The detached form draws its own noise seed from the caller's stream.
    const auto seed = static_cast<std::uint64_t>(rng.uniform() * 18446744073709551615.0);
    Trajectory traj(config, std::move(state), seed);
    traj.step();
    return traj.state();
}

// ---------------------------------------------------------------------------

const Column& TimeSeries::column(const std::string& name) const
{
    for (const auto& c : columns)
        if (c.name == name)
            return c;
    throw std::out_of_range("TimeSeries: no column '" + name + "'");
}

std::vector<std::string> column_names(const Recorder& recorder, std::size_t n_species)
{
    std::vector<std::string> names;
    for (auto ch : recorder.channels) {
        switch (ch) {
        case Channel::PhotonNumber: names.emplace_back("photons"); break;
        case Channel::ReAlpha: names.emplace_back("re_alpha"); break;
        case Channel::ImAlpha: names.emplace_back("im_alpha"); break;
        default: break;
        }
    }
    for (std::size_t s = 1; s <= n_species; ++s) {
        const auto idx = std::to_string(s);
        for (auto ch : recorder.channels) {
            switch (ch) {
            case Channel::OrderParameter: names.push_back("theta_" + idx); break;
            case Channel::KineticTemperature: names.push_back("T_kin_" + idx); break;
            case Channel::Bunching: names.push_back("bunching_" + idx); break;
            case Channel::MeanSin: names.push_back("mean_sin_" + idx); break;
            default: break;
            }
        }
    }
    return names;
}

namespace {

void record(TimeSeries& ts, const Recorder& recorder, const SimState& state, const SimConfig& config)
{
    ts.times.push_back(state.t);
    std::size_t col = 0;
    for (auto ch : recorder.channels) {
        switch (ch) {
        case Channel::PhotonNumber: ts.columns[col++].values.push_back(photon_number(state)); break;
        case Channel::ReAlpha: ts.columns[col++].values.push_back(state.alpha.real()); break;
        case Channel::ImAlpha: ts.columns[col++].values.push_back(state.alpha.imag()); break;
        default: break;
        }
    }
    for (std::size_t s = 0; s < config.species.size(); ++s) {
        const auto& st = state.species[s];
        for (auto ch : recorder.channels) {
            switch (ch) {
            case Channel::OrderParameter: ts.columns[col++].values.push_back(order_parameter(st)); break;
            case Channel::KineticTemperature:
                ts.columns[col++].values.push_back(kinetic_temperature(st, config.species[s].mass));
                break;
            case Channel::Bunching: ts.columns[col++].values.push_back(bunching(st)); break;
            case Channel::MeanSin: ts.columns[col++].values.push_back(mean_sin(st)); break;
            default: break;
            }
        }
    }
}

}  // namespace

TimeSeries run(const SimConfig& config, std::uint64_t seed, const Recorder& recorder)
{
    if (recorder.channels.empty())
        throw std::invalid_argument("Recorder: channel list must be non-empty");
    const std::size_t stride = recorder.stride == 0 ? config.stride : recorder.stride;
    if (stride < 1)
        throw std::invalid_argument("Recorder: stride must be >= 1");

    Trajectory traj(config, seed);
    TimeSeries ts;
    ts.config = config;
    ts.seed = seed;
    for (auto& name : column_names(recorder, config.species.size()))
        ts.columns.push_back({std::move(name), {}});

    auto snapshots = recorder.snapshot_times;
    std::sort(snapshots.begin(), snapshots.end());
    std::size_t next_snapshot = 0;
    auto take_snapshots = [&] {
        while (next_snapshot < snapshots.size() && traj.state().t >= snapshots[next_snapshot] - 0.5 * config.dt) {
            ts.snapshots.push_back({snapshots[next_snapshot], traj.state()});
            ++next_snapshot;
        }
    };

    record(ts, recorder, traj.state(), config);
    take_snapshots();
    const std::size_t n = config.steps();
    for (std::size_t i = 1; i <= n; ++i) {
        traj.step();
        if (i % stride == 0)
            record(ts, recorder, traj.state(), config);
        take_snapshots();
    }
    ts.final_state = traj.state();
    return ts;
}

// ---------------------------------------------------------------------------

const EnsembleColumn& EnsembleStats::column(const std::string& name) const
{
    for (const auto& c : columns)
        if (c.name == name)
            return c;
    throw std::out_of_range("EnsembleStats: no column '" + name + "'");
}

EnsembleStats ensemble_run(const SimConfig& config, std::size_t n_realisations, std::uint64_t base_seed,
                           const EnsembleOptions& options)
{
    if (n_realisations < 1)
        throw std::invalid_argument("ensemble_run: need at least one realisation");
    require_valid(config);

    struct Result
    {
        std::vector<double> times;
        std::vector<Column> columns;
        SimState final_state;
        std::exception_ptr error;
    };
    std::vector<Result> results(n_realisations);
    std::vector<std::uint64_t> seeds(n_realisations);
    for (std::size_t i = 0; i < n_realisations; ++i)
        seeds[i] = realisation_seed(base_seed, i);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_realisations)
                return;
            try {
                auto ts = run(config, seeds[i], options.recorder);
                results[i].times = std::move(ts.times);
                results[i].columns = std::move(ts.columns);
                results[i].final_state = std::move(ts.final_state);
            }
            catch (...) {
                results[i].error = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(options.threads, 1, n_realisations);
    if (n_threads == 1) {
        worker();
    }
    else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t)
            pool.emplace_back(worker);
    }
    for (const auto& r : results)
        if (r.error)
            std::rethrow_exception(r.error);

    EnsembleStats stats;
    stats.seeds = seeds;
    stats.times = results.front().times;
    const double n = static_cast<double>(n_realisations);
    for (std::size_t c = 0; c < results.front().columns.size(); ++c) {
        EnsembleColumn col;
        col.name = results.front().columns[c].name;
        const std::size_t len = stats.times.size();
        col.mean.assign(len, 0.0);
        col.stderr_.assign(len, 0.0);
        col.max.assign(len, -std::numeric_limits<double>::infinity());
        // Welford in realisation order
        std::vector<double> m2(len, 0.0);
        for (std::size_t i = 0; i < n_realisations; ++i) {
            const auto& v = results[i].columns[c].values;
            for (std::size_t k = 0; k < len; ++k) {
                const double d = v[k] - col.mean[k];
                col.mean[k] += d / static_cast<double>(i + 1);
                m2[k] += d * (v[k] - col.mean[k]);
                col.max[k] = std::max(col.max[k], v[k]);
            }
        }
        if (n_realisations > 1)
            for (std::size_t k = 0; k < len; ++k)
                col.stderr_[k] = std::sqrt(m2[k] / (n - 1.0) / n);
        stats.columns.push_back(std::move(col));
    }

    const std::size_t n_species = config.species.size();
    stats.final_momenta.resize(n_species);
    for (const auto& r : results) {
        stats.final_alpha.push_back(r.final_state.alpha);
        for (std::size_t s = 0; s < n_species; ++s) {
            const auto& p = r.final_state.species[s].p;
            stats.final_momenta[s].insert(stats.final_momenta[s].end(), p.begin(), p.end());
        }
    }
    for (std::size_t s = 0; s < n_species; ++s) {
        const auto& sp = config.species[s];
        double t_est = 0.0;
        if (s < options.histogram_temperature.size()) {
            t_est = options.histogram_temperature[s];
        }
        else {
            SpeciesState pooled;
            pooled.p = stats.final_momenta[s];
            t_est = std::max(sp.temperature, kinetic_temperature(pooled, sp.mass));
        }
        stats.histograms.push_back(momentum_histogram(stats.final_momenta[s], sp.mass, t_est, options.histogram_bins));
    }
    return stats;
}

}  // namespace selforg
