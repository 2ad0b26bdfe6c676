#pragma once

// Experiment orchestration: runs a parsed ExperimentConfig and writes its
// artifacts into config.output.
//
// Files per kind (every CSV starts with '#' lines echoing the resolved config):
//   simulate, ensemble  summary.txt, timeseries.csv, histograms.csv, predictions.csv
//   threshold           summary.txt, threshold.csv
//   equilibrium         summary.txt, predictions.csv
//   heatflow            summary.txt, heatflow.csv
//   sweep               summary.txt, sweep.csv (+ point_<i>/ run directories when simulating)
//
// timeseries.csv   simulate: t, photons, re_alpha, im_alpha, then per species s
//                  theta_s, T_kin_s, bunching_s, mean_sin_s.
//                  ensemble: t, then <column>_mean, <column>_stderr, <column>_max
//                  for each of the columns above.
// histograms.csv   species, p_lo, p_hi, p_center, count, density, qgauss_star,
//                  gauss_star, qfit, organised, adiabatic. Prediction columns
//                  are bin averages of the corresponding normalised densities;
//                  nan where a prediction does not exist.
// predictions.csv  one row per species with the homogeneous, organised and
//                  threshold predictions for the configured parameters.
// threshold.csv    one row: delta, kappa, threshold_lhs, in_regime, unstable,
//                  growth_rate_hot, growth_rate_full, critical_pump_scale,
//                  share_s per species.
// heatflow.csv     delta, delta_over_kappa, q_2to1, q_1to2 over a detuning scan
//                  (cavity detuning shifted so the light shift is kept).
// sweep.csv        value, analytic columns, and sim_* columns (nan unless the
//                  sweep also simulates).

#include <iosfwd>
#include <string>
#include <vector>

#include "selforg/config.hpp"

namespace selforg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Runs the experiment, writing artifacts to config.output. Returns an exit
/// code and prints diagnostics for any failure to `diagnostics`.
int run_experiment(const ExperimentConfig& config, std::ostream& diagnostics);

/// Ratios delta/kappa used by the heatflow detuning scan (contains -1 exactly).
std::vector<double> heatflow_scan();

/// Header row of each CSV for a given kind and species count.
std::vector<std::string> csv_columns(const std::string& file, ExperimentKind kind, std::size_t n_species);

}  // namespace selforg
