#pragma once

// Measured quantities: order parameters, kinetic temperatures, photon
// numbers, momentum histograms, q-Gaussian fits and CDF distances.

#include <span>
#include <vector>

#include "selforg/model.hpp"

namespace selforg {

/// |N^-1 sum_j sin(kx_j)|.
double order_parameter(const SpeciesState& s);
/// N^-1 sum_j sin(kx_j), keeping the sign (which well set is occupied).
double mean_sin(const SpeciesState& s);
/// <sin^2 kx>.
double bunching(const SpeciesState& s);
/// k_B T_kin = <p^2> / m.
double kinetic_temperature(const SpeciesState& s, double mass);
double photon_number(const SimState& state);

/// Uniform-bin histogram over [lo, hi). Samples outside the range are counted
/// in `total` but not binned, so the density of a clipped histogram integrates
/// to the captured fraction.
class Histogram
{
public:
    Histogram(double lo, double hi, std::size_t bins);

    static Histogram from_samples(std::span<const double> samples, double lo, double hi, std::size_t bins);

    void add(double value, double weight = 1.0);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    std::size_t bins() const { return counts_.size(); }
    double width() const { return (hi_ - lo_) / static_cast<double>(counts_.size()); }
    double edge(std::size_t i) const { return lo_ + width() * static_cast<double>(i); }
    double center(std::size_t i) const { return lo_ + width() * (static_cast<double>(i) + 0.5); }
    const std::vector<double>& counts() const { return counts_; }
    double total() const { return total_; }
    double captured() const;

    /// counts / (total * width); integrates to captured()/total().
    std::vector<double> density() const;
    /// Same, but normalised over the captured samples only (integrates to 1).
    std::vector<double> normalized_density() const;
    std::size_t nonzero_bins() const;

private:
    double lo_;
    double hi_;
    std::vector<double> counts_;
    double total_ = 0.0;
};

/// Default momentum binning: 64 bins over +-5 sqrt(m k_B T).
Histogram momentum_histogram(std::span<const double> p, double mass, double temperature_estimate,
                             std::size_t bins = 64);

/// Normalised q-Gaussian momentum density,
/// f(p) ~ [1 + (q-1) p^2 / (2 m T)]^(-1/(q-1)), Gaussian at q = 1. Requires 1 <= q < 3.
double qgaussian_density(double p, double q, double temperature, double mass);
/// <p^2>/m of the q-Gaussian; infinite for q >= 5/3.
double qgaussian_kinetic_temperature(double q, double temperature);

struct QGaussianFit
{
    double q = 1.0;
    double temperature = 0.0;
    double residual = 0.0;  ///< weighted RMS density residual
    double q_halfwidth = 0.0;
    double temperature_halfwidth = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Weighted least-squares fit of the normalised q-Gaussian density to the
/// histogram density; weights scale as sqrt(counts). Constrained to q >= 1.
/// Throws std::invalid_argument with fewer than 20 populated bins.
QGaussianFit fit_qgaussian(const Histogram& hist, double mass);

/// Sup-norm distance between the empirical CDFs of two histograms, evaluated on
/// the union of their bin edges with linear interpolation inside each bin.
double ks_distance(const Histogram& a, const Histogram& b);

}  // namespace selforg
