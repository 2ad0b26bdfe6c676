#include "selforg/experiment.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "selforg/dynamics.hpp"
#include "selforg/kinetics.hpp"
#include "selforg/observables.hpp"

namespace selforg {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const Recorder& full_recorder()
{
    static const Recorder r{0,
                            {Channel::PhotonNumber, Channel::ReAlpha, Channel::ImAlpha, Channel::OrderParameter,
                             Channel::KineticTemperature, Channel::Bunching, Channel::MeanSin},
                            {}};
    return r;
}

std::string cell(double v) { return format_number(v); }
std::string cell(bool v) { return v ? "1" : "0"; }

std::string join(const std::vector<std::string>& items, char sep = ',')
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i)
            out += sep;
        out += items[i];
    }
    return out;
}

class CsvWriter
{
public:
    CsvWriter(const fs::path& path, const ExperimentConfig& config, const std::vector<std::string>& columns,
              const std::string& description)
        : out_(path)
    {
        if (!out_)
            throw std::ios_base::failure("cannot write " + path.string());
        out_ << "# " << description << '\n';
        std::istringstream cfg(to_text(config));
        for (std::string line; std::getline(cfg, line);)
            out_ << "#" << (line.empty() ? "" : " ") << line << '\n';
        out_ << join(columns) << '\n';
        width_ = columns.size();
    }

    void row(const std::vector<std::string>& cells)
    {
        if (cells.size() != width_)
            throw std::logic_error("CsvWriter: row width mismatch");
        out_ << join(cells) << '\n';
    }

private:
    std::ofstream out_;
    std::size_t width_ = 0;
};

class Summary
{
public:
    void add(const std::string& key, const std::string& value) { lines_.push_back(key + " = " + value); }
    void add(const std::string& key, double value) { add(key, format_number(value)); }
    void add_count(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
    void section(const std::string& name) { lines_.push_back("\n[" + name + "]"); }

    void write(const fs::path& path) const
    {
        std::ofstream out(path);
        if (!out)
            throw std::ios_base::failure("cannot write " + path.string());
        for (const auto& l : lines_)
            out << l << '\n';
    }

private:
    std::vector<std::string> lines_;
};

std::string timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::ostringstream out;
    out << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

// ---------------------------------------------------------------------------
// analytic predictions shared by every kind

struct Predictions
{
    StabilityReport stability;
    std::optional<double> critical_scale;
    std::optional<double> growth_hot;
    std::optional<EquilibriumPrediction> homogeneous;
    EquilibriumPrediction organised;
    double photon_bound = 0.0;
};

Predictions predict(const SimConfig& sim)
{
    Predictions p;
    p.stability = stability_margin(sim.cavity, sim.species);
    p.growth_hot = growth_rate_hot(sim.cavity, sim.species);
    if (p.stability.in_regime) {
        bool any_pump = false;
        for (const auto& s : sim.species)
            any_pump = any_pump || s.pump != 0.0;
        if (any_pump)
            p.critical_scale = critical_pump_scale(sim.cavity, sim.species);
        p.homogeneous = qgaussian_equilibrium(sim.cavity, sim.species);
    }
    p.organised = organised_equilibrium(sim.cavity, sim.species);
    double coherent = 0.0;
    for (const auto& s : sim.species)
        coherent += static_cast<double>(s.count) * std::abs(s.pump);
    const double delta = p.stability.delta;
    p.photon_bound = coherent * coherent / (sim.cavity.kappa * sim.cavity.kappa + delta * delta);
    return p;
}

bool organised_usable(const EquilibriumPrediction& eq) { return eq.converged && !eq.collapsed; }

void summarise(Summary& sum, const Predictions& p, const SimConfig& sim)
{
    sum.section("predictions");
    sum.add("delta", p.stability.delta);
    sum.add("threshold_lhs", p.stability.threshold_lhs);
    sum.add("in_regime", p.stability.in_regime ? "true" : "false");
    sum.add("unstable", p.stability.unstable ? "true" : "false");
    sum.add("growth_rate_hot", p.growth_hot ? *p.growth_hot : kNaN);
    sum.add("growth_rate_full", p.stability.growth_rate ? *p.stability.growth_rate : kNaN);
    sum.add("critical_pump_scale", p.critical_scale ? *p.critical_scale : kNaN);
    sum.add("photon_bound", p.photon_bound);
    if (p.homogeneous) {
        sum.add("temperature_star", p.homogeneous->temperature_star);
        sum.add("homogeneous_stable", p.homogeneous->stable ? "true" : "false");
        for (std::size_t s = 0; s < sim.species.size(); ++s) {
            const auto idx = std::to_string(s + 1);
            sum.add("q_" + idx, p.homogeneous->species[s].q);
            sum.add("homogeneous_T_kin_" + idx, p.homogeneous->species[s].kinetic_temperature);
            sum.add("homogeneous_exists_" + idx, p.homogeneous->species[s].exists ? "true" : "false");
        }
    }
    const auto& org = p.organised;
    sum.add("organised_converged", org.converged ? "true" : "false");
    sum.add("organised_collapsed", org.collapsed ? "true" : "false");
    sum.add("organised_iterations", static_cast<double>(org.iterations));
    sum.add("organised_residual", org.residual);
    if (organised_usable(org)) {
        sum.add("organised_re_alpha", org.alpha.real());
        sum.add("organised_im_alpha", org.alpha.imag());
        sum.add("organised_photons", std::norm(org.alpha));
        for (std::size_t s = 0; s < org.species.size(); ++s) {
            const auto idx = std::to_string(s + 1);
            const auto& e = org.species[s];
            sum.add("organised_T_kin_" + idx, e.kinetic_temperature);
            sum.add("organised_theta_" + idx, e.order_parameter);
            sum.add("organised_trap_frequency_" + idx, e.trap_frequency);
            sum.add("organised_uncertainty_" + idx, e.uncertainty);
        }
    }
}

std::vector<std::string> prediction_columns()
{
    return {"species",        "name",          "count",         "mass",           "pump",
            "light_shift",    "temperature",   "delta",         "threshold_lhs",  "unstable",
            "growth_rate",    "critical_pump_scale", "photon_bound", "temperature_star", "q",
            "homogeneous_T_kin", "organised_converged", "organised_re_alpha", "organised_im_alpha",
            "organised_T_kin", "organised_theta", "organised_mean_sin", "organised_bunching",
            "trap_frequency", "uncertainty"};
}

void write_predictions(const fs::path& dir, const ExperimentConfig& config, const Predictions& p)
{
    CsvWriter csv(dir / "predictions.csv", config, prediction_columns(),
                  "analytic predictions per species; nan where a branch does not exist");
    const auto& sim = config.sim;
    const bool org_ok = organised_usable(p.organised);
    for (std::size_t s = 0; s < sim.species.size(); ++s) {
        const auto& sp = sim.species[s];
        const SpeciesEquilibrium* h = p.homogeneous ? &p.homogeneous->species[s] : nullptr;
        const SpeciesEquilibrium* o = org_ok ? &p.organised.species[s] : nullptr;
        csv.row({std::to_string(s + 1), sp.name, std::to_string(sp.count), cell(sp.mass), cell(sp.pump),
                 cell(sp.light_shift), cell(sp.temperature), cell(p.stability.delta),
                 cell(p.stability.threshold_lhs), cell(p.stability.unstable),
                 cell(p.stability.growth_rate ? *p.stability.growth_rate : kNaN),
                 cell(p.critical_scale ? *p.critical_scale : kNaN), cell(p.photon_bound),
                 cell(p.homogeneous ? p.homogeneous->temperature_star : kNaN), cell(h ? h->q : kNaN),
                 cell(h && h->exists ? h->kinetic_temperature : kNaN), cell(org_ok),
                 cell(org_ok ? p.organised.alpha.real() : kNaN), cell(org_ok ? p.organised.alpha.imag() : kNaN),
                 cell(o ? o->kinetic_temperature : kNaN), cell(o ? o->order_parameter : kNaN),
                 cell(o ? o->mean_sin : kNaN), cell(o ? o->bunching : kNaN), cell(o ? o->trap_frequency : kNaN),
                 cell(o ? o->uncertainty : kNaN)});
    }
}

// ---------------------------------------------------------------------------
// histograms with analytic overlays

template <class Density>
std::vector<double> bin_average(const Histogram& h, Density&& f, std::size_t sub = 8)
{
    std::vector<double> out(h.bins());
    for (std::size_t b = 0; b < h.bins(); ++b) {
        double acc = 0.0;
        for (std::size_t k = 0; k < sub; ++k)
            acc += f(h.edge(b) + h.width() * (static_cast<double>(k) + 0.5) / static_cast<double>(sub));
        out[b] = acc / static_cast<double>(sub);
    }
    return out;
}

std::vector<std::string> histogram_columns()
{
    return {"species", "p_lo", "p_hi", "p_center", "count", "density", "qgauss_star",
            "gauss_star", "qfit", "organised", "adiabatic"};
}

/// alpha with the mean |Re alpha| of the realisations and their mean photon number.
Complex representative_alpha(const std::vector<Complex>& alphas)
{
    double re = 0.0;
    double n = 0.0;
    for (const auto& a : alphas) {
        re += std::abs(a.real());
        n += std::norm(a);
    }
    re /= static_cast<double>(alphas.size());
    n /= static_cast<double>(alphas.size());
    return {-re, std::sqrt(std::max(0.0, n - re * re))};
}

void write_histograms(const fs::path& dir, const ExperimentConfig& config, const Predictions& p,
                      const std::vector<Histogram>& hists, Complex final_alpha, Summary& sum)
{
    CsvWriter csv(dir / "histograms.csv", config, histogram_columns(),
                  "final momentum histograms with bin-averaged analytic densities");
    const auto& sim = config.sim;
    sum.section("fits");
    for (std::size_t s = 0; s < hists.size(); ++s) {
        const auto& sp = sim.species[s];
        const auto& h = hists[s];
        const auto idx = std::to_string(s + 1);
        const auto nan_column = std::vector<double>(h.bins(), kNaN);

        auto qstar = nan_column;
        auto gstar = nan_column;
        if (p.homogeneous) {
            const double t_star = p.homogeneous->temperature_star;
            const double q = p.homogeneous->species[s].q;
            if (q < 3.0)
                qstar = bin_average(h, [&](double x) { return qgaussian_density(x, q, t_star, sp.mass); });
            gstar = bin_average(h, [&](double x) { return qgaussian_density(x, 1.0, t_star, sp.mass); });
        }

        auto qfit = nan_column;
        try {
            const auto fit = fit_qgaussian(h, sp.mass);
            qfit = bin_average(h, [&](double x) { return qgaussian_density(x, fit.q, fit.temperature, sp.mass); });
            sum.add("qfit_q_" + idx, fit.q);
            sum.add("qfit_q_halfwidth_" + idx, fit.q_halfwidth);
            sum.add("qfit_temperature_" + idx, fit.temperature);
            sum.add("qfit_temperature_halfwidth_" + idx, fit.temperature_halfwidth);
            sum.add("qfit_residual_" + idx, fit.residual);
            sum.add("qfit_converged_" + idx, fit.converged ? "true" : "false");
        }
        catch (const std::invalid_argument& e) {
            sum.add("qfit_" + idx, std::string("unavailable (") + e.what() + ")");
        }

        auto organised = nan_column;
        if (organised_usable(p.organised)) {
            const double t = p.organised.species[s].kinetic_temperature;
            organised = bin_average(h, [&](double x) { return qgaussian_density(x, 1.0, t, sp.mass); });
        }

        const auto mapped = adiabatic_map(maxwellian(sp.mass, sp.temperature), final_alpha, sp);
        const auto adiabatic = mapped.binned_marginal(h.lo(), h.hi(), h.bins());

        const auto density = h.density();
        for (std::size_t b = 0; b < h.bins(); ++b)
            csv.row({idx, cell(h.edge(b)), cell(h.edge(b + 1)), cell(h.center(b)), cell(h.counts()[b]),
                     cell(density[b]), cell(qstar[b]), cell(gstar[b]), cell(qfit[b]), cell(organised[b]),
                     cell(adiabatic[b])});
        sum.add("adiabatic_theta_" + idx, std::abs(mapped.mean_sin()));
    }
    sum.add("adiabatic_re_alpha", final_alpha.real());
    sum.add("adiabatic_im_alpha", final_alpha.imag());
}

// ---------------------------------------------------------------------------

std::vector<std::string> simulate_columns(std::size_t n_species)
{
    std::vector<std::string> cols{"t"};
    for (auto& n : column_names(full_recorder(), n_species))
        cols.push_back(std::move(n));
    return cols;
}

std::vector<std::string> ensemble_columns(std::size_t n_species)
{
    std::vector<std::string> cols{"t"};
    for (const auto& n : column_names(full_recorder(), n_species)) {
        cols.push_back(n + "_mean");
        cols.push_back(n + "_stderr");
        cols.push_back(n + "_max");
    }
    return cols;
}

void run_simulate(const ExperimentConfig& config, const fs::path& dir, Summary& sum, const Predictions& pred)
{
    const auto& sim = config.sim;
    const auto ts = run(sim, sim.seed, full_recorder());
    {
        CsvWriter csv(dir / "timeseries.csv", config, simulate_columns(sim.species.size()),
                      "single trajectory; one row per recorded time");
        for (std::size_t k = 0; k < ts.times.size(); ++k) {
            std::vector<std::string> row{cell(ts.times[k])};
            for (const auto& c : ts.columns)
                row.push_back(cell(c.values[k]));
            csv.row(row);
        }
    }
    std::vector<Histogram> hists;
    for (std::size_t s = 0; s < sim.species.size(); ++s) {
        const auto& sp = sim.species[s];
        const auto& st = ts.final_state.species[s];
        const double t_est = std::max(sp.temperature, kinetic_temperature(st, sp.mass));
        hists.push_back(momentum_histogram(st.p, sp.mass, t_est, config.histogram_bins));
    }
    sum.section("final");
    sum.add("t", ts.final_state.t);
    sum.add("photons", photon_number(ts.final_state));
    sum.add("re_alpha", ts.final_state.alpha.real());
    sum.add("im_alpha", ts.final_state.alpha.imag());
    for (std::size_t s = 0; s < sim.species.size(); ++s) {
        const auto idx = std::to_string(s + 1);
        sum.add("theta_" + idx, order_parameter(ts.final_state.species[s]));
        sum.add("T_kin_" + idx, kinetic_temperature(ts.final_state.species[s], sim.species[s].mass));
    }
    const Complex a = ts.final_state.alpha;
    write_histograms(dir, config, pred, hists, {-std::abs(a.real()), a.imag()}, sum);
    write_predictions(dir, config, pred);
}

EnsembleStats run_ensemble(const ExperimentConfig& config, const fs::path& dir, Summary& sum, const Predictions& pred)
{
    const auto& sim = config.sim;
    EnsembleOptions opts;
    opts.recorder = full_recorder();
    opts.threads = config.threads;
    opts.histogram_bins = config.histogram_bins;
    const auto stats = ensemble_run(sim, config.realisations, sim.seed, opts);
    {
        CsvWriter csv(dir / "timeseries.csv", config, ensemble_columns(sim.species.size()),
                      "ensemble mean, standard error and maximum over realisations; one row per recorded time");
        for (std::size_t k = 0; k < stats.times.size(); ++k) {
            std::vector<std::string> row{cell(stats.times[k])};
            for (const auto& c : stats.columns) {
                row.push_back(cell(c.mean[k]));
                row.push_back(cell(c.stderr_[k]));
                row.push_back(cell(c.max[k]));
            }
            csv.row(row);
        }
    }
    sum.section("final");
    sum.add_count("realisations", stats.realisations());
    sum.add_count("first_realisation_seed", stats.seeds.front());
    sum.add("t", stats.times.back());
    for (const auto& c : stats.columns) {
        sum.add(c.name + "_mean", c.mean.back());
        sum.add(c.name + "_stderr", c.stderr_.back());
    }
    write_histograms(dir, config, pred, stats.histograms, representative_alpha(stats.final_alpha), sum);
    write_predictions(dir, config, pred);
    return stats;
}

std::vector<std::string> threshold_columns(std::size_t n_species)
{
    std::vector<std::string> cols{"delta",           "kappa",            "threshold_lhs",      "in_regime", "unstable",
                                  "growth_rate_hot", "growth_rate_full", "critical_pump_scale"};
    for (std::size_t s = 1; s <= n_species; ++s)
        cols.push_back("share_" + std::to_string(s));
    return cols;
}

void run_threshold(const ExperimentConfig& config, const fs::path& dir, const Predictions& p)
{
    CsvWriter csv(dir / "threshold.csv", config, threshold_columns(config.sim.species.size()),
                  "linear stability of the homogeneous Maxwellian state");
    std::vector<std::string> row{cell(p.stability.delta),
                                 cell(config.sim.cavity.kappa),
                                 cell(p.stability.threshold_lhs),
                                 cell(p.stability.in_regime),
                                 cell(p.stability.unstable),
                                 cell(p.growth_hot ? *p.growth_hot : kNaN),
                                 cell(p.stability.growth_rate ? *p.stability.growth_rate : kNaN),
                                 cell(p.critical_scale ? *p.critical_scale : kNaN)};
    for (std::size_t s = 0; s < config.sim.species.size(); ++s)
        row.push_back(cell(s < p.stability.shares.size() ? p.stability.shares[s] : kNaN));
    csv.row(row);
}

std::vector<std::string> heatflow_columns() { return {"delta", "delta_over_kappa", "q_2to1", "q_1to2"}; }

void run_heatflow(const ExperimentConfig& config, const fs::path& dir, Summary& sum)
{
    const auto& sim = config.sim;
    const double delta0 = effective_detuning(sim.cavity, sim.species);
    const double shift = sim.cavity.detuning - delta0;
    const auto hf = heat_flow(sim.cavity, sim.species[0], sim.species[1]);
    sum.section("heatflow");
    sum.add("delta", hf.delta);
    sum.add("q_2to1", hf.q_2to1);
    sum.add("q_1to2", hf.q_1to2);
    for (std::size_t i = 0; i < hf.warnings.size(); ++i)
        sum.add("warning_" + std::to_string(i + 1), hf.warnings[i]);

    CsvWriter csv(dir / "heatflow.csv", config, heatflow_columns(),
                  "heat flow per particle over a detuning scan at the configured temperatures");
    for (double r : heatflow_scan()) {
        CavityParams c = sim.cavity;
        const double delta = r * c.kappa;
        c.detuning = delta + shift;
        const auto h = heat_flow(c, sim.species[0], sim.species[1]);
        csv.row({cell(delta), cell(r), cell(h.q_2to1), cell(h.q_1to2)});
    }
}

std::vector<std::string> sweep_columns(std::size_t n_species)
{
    std::vector<std::string> cols{"value",        "delta",       "threshold_lhs", "unstable", "growth_rate",
                                  "critical_pump_scale", "temperature_star", "organised_photons", "heat_2to1",
                                  "heat_1to2"};
    for (std::size_t s = 1; s <= n_species; ++s) {
        const auto idx = std::to_string(s);
        cols.push_back("q_" + idx);
        cols.push_back("organised_T_kin_" + idx);
        cols.push_back("organised_theta_" + idx);
    }
    cols.emplace_back("sim_photons");
    for (std::size_t s = 1; s <= n_species; ++s) {
        const auto idx = std::to_string(s);
        cols.push_back("sim_theta_" + idx);
        cols.push_back("sim_T_kin_" + idx);
    }
    return cols;
}

void run_sweep(const ExperimentConfig& config, const fs::path& dir, Summary& sum, std::ostream& diagnostics)
{
    const auto& axis = *config.sweep;
    const std::size_t n_species = config.sim.species.size();
    CsvWriter csv(dir / "sweep.csv", config, sweep_columns(n_species),
                  "analytic predictions (and ensemble end values when simulating) along " + axis.parameter);
    for (std::size_t i = 0; i < axis.count; ++i) {
        ExperimentConfig point = config;
        point.kind = ExperimentKind::Ensemble;
        point.sweep.reset();
        apply_parameter(point, axis.parameter, axis.value(i));
        if (auto v = validate(point); !v.empty())
            throw ConfigError(v);
        const auto p = predict(point.sim);
        const bool org_ok = organised_usable(p.organised);
        std::vector<std::string> row{cell(axis.value(i)),
                                     cell(p.stability.delta),
                                     cell(p.stability.threshold_lhs),
                                     cell(p.stability.unstable),
                                     cell(p.stability.growth_rate ? *p.stability.growth_rate : kNaN),
                                     cell(p.critical_scale ? *p.critical_scale : kNaN),
                                     cell(p.homogeneous ? p.homogeneous->temperature_star : kNaN),
                                     cell(org_ok ? std::norm(p.organised.alpha) : kNaN)};
        if (n_species == 2 && p.stability.in_regime) {
            const auto hf = heat_flow(point.sim.cavity, point.sim.species[0], point.sim.species[1]);
            row.push_back(cell(hf.q_2to1));
            row.push_back(cell(hf.q_1to2));
        }
        else {
            row.push_back(cell(kNaN));
            row.push_back(cell(kNaN));
        }
        for (std::size_t s = 0; s < n_species; ++s) {
            row.push_back(cell(p.homogeneous ? p.homogeneous->species[s].q : kNaN));
            row.push_back(cell(org_ok ? p.organised.species[s].kinetic_temperature : kNaN));
            row.push_back(cell(org_ok ? p.organised.species[s].order_parameter : kNaN));
        }
        if (axis.simulate) {
            const fs::path sub = dir / ("point_" + std::to_string(i));
            point.output = sub.string();
            fs::create_directories(sub);
            Summary point_sum;
            point_sum.add("kind", "ensemble");
            point_sum.add("sweep_value", axis.value(i));
            summarise(point_sum, p, point.sim);
            const auto stats = run_ensemble(point, sub, point_sum, p);
            point_sum.write(sub / "summary.txt");
            row.push_back(cell(stats.column("photons").mean.back()));
            for (std::size_t s = 1; s <= n_species; ++s) {
                row.push_back(cell(stats.column("theta_" + std::to_string(s)).mean.back()));
                row.push_back(cell(stats.column("T_kin_" + std::to_string(s)).mean.back()));
            }
            diagnostics << "sweep point " << i + 1 << "/" << axis.count << " done\n";
        }
        else {
            for (std::size_t k = 0; k < 1 + 2 * n_species; ++k)
                row.push_back(cell(kNaN));
        }
        csv.row(row);
    }
    sum.add_count("sweep_points", axis.count);
}

}  // namespace

std::vector<double> heatflow_scan()
{
    std::vector<double> r;
    constexpr int n = 61;
    for (int i = 0; i < n; ++i)
        r.push_back(-std::pow(10.0, -1.5 + 3.0 * i / (n - 1)));
    r[n / 2] = -1.0;
    return r;
}

std::vector<std::string> csv_columns(const std::string& file, ExperimentKind kind, std::size_t n_species)
{
    if (file == "timeseries.csv") {
        if (kind == ExperimentKind::Simulate)
            return simulate_columns(n_species);
        if (kind == ExperimentKind::Ensemble)
            return ensemble_columns(n_species);
    }
    if (file == "histograms.csv" && (kind == ExperimentKind::Simulate || kind == ExperimentKind::Ensemble))
        return histogram_columns();
    if (file == "predictions.csv"
        && (kind == ExperimentKind::Simulate || kind == ExperimentKind::Ensemble || kind == ExperimentKind::Equilibrium))
        return prediction_columns();
    if (file == "threshold.csv" && kind == ExperimentKind::Threshold)
        return threshold_columns(n_species);
    if (file == "heatflow.csv" && kind == ExperimentKind::HeatFlow)
        return heatflow_columns();
    if (file == "sweep.csv" && kind == ExperimentKind::Sweep)
        return sweep_columns(n_species);
    return {};
}

int run_experiment(const ExperimentConfig& config, std::ostream& diagnostics)
{
    if (auto v = validate(config); !v.empty()) {
        diagnostics << ConfigError(v).what() << '\n';
        return kExitConfig;
    }
    try {
        const fs::path dir(config.output);
        fs::create_directories(dir);

        Summary sum;
        sum.section("run");
        sum.add("kind", std::string(to_string(config.kind)));
        sum.add("timestamp", timestamp());
        sum.add_count("seed", config.sim.seed);
        sum.add_count("realisations", config.realisations);
        sum.add_count("threads", config.threads);
        sum.add_count("steps", config.sim.steps());

        const auto pred = predict(config.sim);
        summarise(sum, pred, config.sim);

        int status = kExitOk;
        switch (config.kind) {
        case ExperimentKind::Simulate: run_simulate(config, dir, sum, pred); break;
        case ExperimentKind::Ensemble: run_ensemble(config, dir, sum, pred); break;
        case ExperimentKind::Threshold: run_threshold(config, dir, pred); break;
        case ExperimentKind::Equilibrium:
            write_predictions(dir, config, pred);
            if (!pred.organised.converged && !pred.organised.collapsed) {
                diagnostics << "organised equilibrium did not converge after " << pred.organised.iterations
                            << " iterations (residual " << format_number(pred.organised.residual) << ")\n";
                status = kExitNumerical;
            }
            break;
        case ExperimentKind::HeatFlow: run_heatflow(config, dir, sum); break;
        case ExperimentKind::Sweep: run_sweep(config, dir, sum, diagnostics); break;
        }

        sum.section("config");
        std::istringstream cfg(to_text(config));
        for (std::string line; std::getline(cfg, line);)
            if (!line.empty() && line.front() != '[')
                sum.add("config." + line.substr(0, line.find(" = ")), line.substr(line.find(" = ") + 3));
        sum.write(dir / "summary.txt");
        return status;
    }
    catch (const DivergenceError& e) {
        diagnostics << "integration diverged at t = " << format_number(e.time()) << " (seed " << e.seed()
                    << "): " << e.what() << '\n';
        return kExitNumerical;
    }
    catch (const QuadratureError& e) {
        diagnostics << "quadrature failed for species " << e.species() + 1 << ": " << e.what() << '\n';
        return kExitNumerical;
    }
    catch (const std::domain_error& e) {
        diagnostics << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    catch (const ConfigError& e) {
        diagnostics << e.what() << '\n';
        return kExitConfig;
    }
    catch (const std::invalid_argument& e) {
        diagnostics << "invalid configuration: " << e.what() << '\n';
        return kExitConfig;
    }
    catch (const std::ios_base::failure& e) {
        diagnostics << "i/o error: " << e.what() << '\n';
        return kExitIo;
    }
    catch (const fs::filesystem_error& e) {
        diagnostics << "i/o error: " << e.what() << '\n';
        return kExitIo;
    }
}

}  // namespace selforg
