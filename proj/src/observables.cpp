#include "selforg/observables.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace selforg {

double mean_sin(const SpeciesState& s)
{
    if (s.x.empty())
        return 0.0;
    double sum = 0.0;
    for (double x : s.x)
        sum += std::sin(x);
    return sum / static_cast<double>(s.x.size());
}

double order_parameter(const SpeciesState& s)
{
    return std::abs(mean_sin(s));
}

double bunching(const SpeciesState& s)
{
    if (s.x.empty())
        return 0.0;
    double sum = 0.0;
    for (double x : s.x) {
        const double sn = std::sin(x);
        sum += sn * sn;
    }
    return sum / static_cast<double>(s.x.size());
}

double kinetic_temperature(const SpeciesState& s, double mass)
{
    if (s.p.empty())
        return 0.0;
    double sum = 0.0;
    for (double p : s.p)
        sum += p * p;
    return sum / static_cast<double>(s.p.size()) / mass;
}

double photon_number(const SimState& state)
{
    return std::norm(state.alpha);
}

// ---------------------------------------------------------------------------

Histogram::Histogram(double lo, double hi, std::size_t bins)
    : lo_(lo), hi_(hi), counts_(bins, 0.0)
{
    if (bins == 0 || !(hi > lo))
        throw std::invalid_argument("Histogram: need bins > 0 and hi > lo");
}

Histogram Histogram::from_samples(std::span<const double> samples, double lo, double hi, std::size_t bins)
{
    Histogram h(lo, hi, bins);
    for (double v : samples)
        h.add(v);
    return h;
}

void Histogram::add(double value, double weight)
{
    total_ += weight;
    if (!(value >= lo_ && value < hi_))
        return;
    auto i = static_cast<std::size_t>((value - lo_) / width());
    counts_[std::min(i, counts_.size() - 1)] += weight;
}

double Histogram::captured() const
{
    double c = 0.0;
    for (double v : counts_)
        c += v;
    return c;
}

std::vector<double> Histogram::density() const
{
    std::vector<double> d(counts_.size(), 0.0);
    if (total_ <= 0.0)
        return d;
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = counts_[i] / (total_ * width());
    return d;
}

std::vector<double> Histogram::normalized_density() const
{
    std::vector<double> d(counts_.size(), 0.0);
    const double c = captured();
    if (c <= 0.0)
        return d;
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = counts_[i] / (c * width());
    return d;
}

std::size_t Histogram::nonzero_bins() const
{
    return static_cast<std::size_t>(std::count_if(counts_.begin(), counts_.end(), [](double c) { return c > 0.0; }));
}

Histogram momentum_histogram(std::span<const double> p, double mass, double temperature_estimate, std::size_t bins)
{
    const double half = 5.0 * std::sqrt(mass * temperature_estimate);
    return Histogram::from_samples(p, -half, half, bins);
}

// ---------------------------------------------------------------------------

double qgaussian_density(double p, double q, double temperature, double mass)
{
    if (!(q >= 1.0 && q < 3.0))
        throw std::domain_error("qgaussian_density: need 1 <= q < 3");
    const double scale = 2.0 * mass * temperature;
    if (q - 1.0 < 1e-9)
        return std::exp(-p * p / scale) / std::sqrt(std::numbers::pi * scale);
    const double n = 1.0 / (q - 1.0);
    const double a2 = scale * n;
    const double log_norm = 0.5 * std::log(std::numbers::pi * a2) + std::lgamma(n - 0.5) - std::lgamma(n);
    return std::exp(-n * std::log1p(p * p / a2) - log_norm);
}

double qgaussian_kinetic_temperature(double q, double temperature)
{
    if (q >= 5.0 / 3.0)
        return std::numeric_limits<double>::infinity();
    return 2.0 * temperature / (5.0 - 3.0 * q);
}

namespace {

constexpr double kMaxFitQ = 2.9;

// Bin-averaged model density (Simpson over the bin).
std::vector<double> model_density(const Histogram& h, double q, double temperature, double mass)
{
    std::vector<double> m(h.bins());
    for (std::size_t i = 0; i < h.bins(); ++i) {
        const double a = h.edge(i);
        const double b = h.edge(i + 1);
        m[i] = (qgaussian_density(a, q, temperature, mass) + 4.0 * qgaussian_density(0.5 * (a + b), q, temperature, mass)
                + qgaussian_density(b, q, temperature, mass))
               / 6.0;
    }
    return m;
}

struct FitProblem
{
    const Histogram& hist;
    double mass;
    std::vector<double> data;
    std::vector<double> sqrt_w;

    // params: (q, log T)
    std::vector<double> residuals(const std::array<double, 2>& par) const
    {
        auto m = model_density(hist, par[0], std::exp(par[1]), mass);
        std::vector<double> r(m.size());
        for (std::size_t i = 0; i < m.size(); ++i)
            r[i] = sqrt_w[i] * (data[i] - m[i]);
        return r;
    }
};

double sum_sq(const std::vector<double>& r)
{
    double s = 0.0;
    for (double v : r)
        s += v * v;
    return s;
}

std::array<double, 2> clamp_params(std::array<double, 2> par)
{
    par[0] = std::clamp(par[0], 1.0, kMaxFitQ);
    return par;
}

}  // namespace

QGaussianFit fit_qgaussian(const Histogram& hist, double mass)
{
    if (hist.nonzero_bins() < 20)
        throw std::invalid_argument("fit_qgaussian: histogram needs at least 20 populated bins");

    FitProblem prob{hist, mass, hist.density(), {}};
    prob.sqrt_w.resize(hist.bins());
    double wsum = 0.0;
    for (std::size_t i = 0; i < hist.bins(); ++i) {
        const double w = std::sqrt(std::max(hist.counts()[i], 1.0));
        prob.sqrt_w[i] = w;
        wsum += w;
    }
    // normalise weights so the residual is on the density scale
    for (auto& w : prob.sqrt_w)
        w = std::sqrt(w * static_cast<double>(hist.bins()) / wsum);

    // moment estimate of T from the captured samples
    double m2 = 0.0;
    for (std::size_t i = 0; i < hist.bins(); ++i)
        m2 += hist.counts()[i] * hist.center(i) * hist.center(i);
    m2 /= std::max(hist.captured(), 1.0);
    std::array<double, 2> par{1.05, std::log(std::max(m2 / mass, 1e-300))};

    auto r = prob.residuals(par);
    double cost = sum_sq(r);
    double lambda = 1e-3;
    QGaussianFit fit;
    std::array<std::array<double, 2>, 2> jtj{};

    auto jacobian = [&](const std::array<double, 2>& at, const std::vector<double>& r0) {
        std::vector<std::array<double, 2>> jac(r0.size());
        for (int k = 0; k < 2; ++k) {
            auto shifted = at;
            double h = 1e-6 * std::max(1.0, std::abs(at[k]));
            // one-sided step into the feasible region at the q = 1 boundary
            shifted[k] += h;
            if (k == 0 && shifted[0] > kMaxFitQ) {
                h = -h;
                shifted[0] = at[0] + h;
            }
            auto rs = prob.residuals(shifted);
            for (std::size_t i = 0; i < r0.size(); ++i)
                jac[i][k] = (rs[i] - r0[i]) / h;
        }
        return jac;
    };

    for (fit.iterations = 0; fit.iterations < 200; ++fit.iterations) {
        auto jac = jacobian(par, r);
        jtj = {};
        std::array<double, 2> jtr{};
        for (std::size_t i = 0; i < r.size(); ++i) {
            for (int a = 0; a < 2; ++a) {
                jtr[a] += jac[i][a] * r[i];
                for (int b = 0; b < 2; ++b)
                    jtj[a][b] += jac[i][a] * jac[i][b];
            }
        }
        bool improved = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            const double a00 = jtj[0][0] * (1.0 + lambda);
            const double a11 = jtj[1][1] * (1.0 + lambda);
            const double a01 = jtj[0][1];
            const double det = a00 * a11 - a01 * a01;
            if (!(std::abs(det) > 0.0))
                break;
            const std::array<double, 2> step{-(a11 * jtr[0] - a01 * jtr[1]) / det, -(a00 * jtr[1] - a01 * jtr[0]) / det};
            auto trial = clamp_params({par[0] + step[0], par[1] + step[1]});
            auto rt = prob.residuals(trial);
            const double ct = sum_sq(rt);
            if (ct < cost) {
                const double rel = (cost - ct) / std::max(cost, 1e-300);
                const double dpar = std::abs(trial[0] - par[0]) + std::abs(trial[1] - par[1]);
                par = trial;
                r = std::move(rt);
                cost = ct;
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
                if (rel < 1e-12 || dpar < 1e-10)
                    fit.converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved) {
            // no descent direction left: we are at a (possibly boundary) minimum
            fit.converged = true;
        }
        if (fit.converged)
            break;
    }

    fit.q = par[0];
    fit.temperature = std::exp(par[1]);
    const auto n = static_cast<double>(r.size());
    fit.residual = std::sqrt(cost / n);

    // 95% half-widths from the linearised covariance
    auto jac = jacobian(par, r);
    jtj = {};
    for (const auto& row : jac)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                jtj[a][b] += row[a] * row[b];
    const double det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[0][1];
    const double s2 = cost / std::max(n - 2.0, 1.0);
    if (det > 0.0) {
        fit.q_halfwidth = 1.96 * std::sqrt(s2 * jtj[1][1] / det);
        fit.temperature_halfwidth = 1.96 * fit.temperature * std::sqrt(s2 * jtj[0][0] / det);
    }
    return fit;
}

// ---------------------------------------------------------------------------

namespace {

double histogram_cdf(const Histogram& h, double x, const std::vector<double>& cumulative)
{
    if (x <= h.lo())
        return 0.0;
    if (x >= h.hi())
        return 1.0;
    const double pos = (x - h.lo()) / h.width();
    auto i = std::min(static_cast<std::size_t>(pos), h.bins() - 1);
    const double frac = pos - static_cast<double>(i);
    return cumulative[i] + frac * (cumulative[i + 1] - cumulative[i]);
}

std::vector<double> cumulative_fraction(const Histogram& h)
{
    std::vector<double> c(h.bins() + 1, 0.0);
    const double total = h.captured();
    for (std::size_t i = 0; i < h.bins(); ++i)
        c[i + 1] = c[i] + h.counts()[i];
    if (total > 0.0)
        for (auto& v : c)
            v /= total;
    return c;
}

}  // namespace

double ks_distance(const Histogram& a, const Histogram& b)
{
    const auto ca = cumulative_fraction(a);
    const auto cb = cumulative_fraction(b);
    std::vector<double> points;
    points.reserve(a.bins() + b.bins() + 2);
    for (std::size_t i = 0; i <= a.bins(); ++i)
        points.push_back(a.edge(i));
    for (std::size_t i = 0; i <= b.bins(); ++i)
        points.push_back(b.edge(i));
    double d = 0.0;
    for (double x : points)
        d = std::max(d, std::abs(histogram_cdf(a, x, ca) - histogram_cdf(b, x, cb)));
    return d;
}

}  // namespace selforg
