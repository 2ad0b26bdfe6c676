#pragma once

// Key-value experiment configuration with repeated [species] blocks.
//
//   # comment
//   [experiment]
//   kind = ensemble            # simulate | ensemble | threshold | equilibrium | heatflow | sweep
//   realisations = 250
//   [cavity]
//   kappa = 100
//   detuning = -2.6            # or: effective_detuning = -2.5
//   [simulation]
//   dt = auto                  # or a number
//   duration = 300
//   [species]
//   count = 300
//   mass_ratio = 1             # m_s / m_ref
//   collective_pump = 800      # or: pump = eta_s
//   collective_light_shift = -0.1
//   temperature = star         # or a number; "star" = (kappa^2 + delta^2) / (4 |delta|)
//   [sweep]
//   parameter = cavity.detuning
//   from = -300
//   to = -10
//   count = 30
//
// Parsing resolves every convenience form into primitive fields, so the
// canonical echo from to_text() reparses to an identical ExperimentConfig.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "selforg/model.hpp"

namespace selforg {

enum class ExperimentKind { Simulate, Ensemble, Threshold, Equilibrium, HeatFlow, Sweep };

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view text);

struct SweepAxis
{
    std::string parameter;
    double from = 0.0;
    double to = 0.0;
    std::size_t count = 0;
    /// Also run an ensemble at every sweep point.
    bool simulate = false;

    double value(std::size_t i) const;
    bool operator==(const SweepAxis&) const = default;
};

struct ExperimentConfig
{
    ExperimentKind kind = ExperimentKind::Simulate;
    SimConfig sim;
    std::size_t realisations = 1;
    std::size_t threads = 1;
    std::string output = "out";
    std::size_t histogram_bins = 64;
    std::optional<SweepAxis> sweep;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Malformed text; carries the 1-based line and column.
class ParseError : public std::runtime_error
{
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column);
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Well-formed text describing an invalid experiment; lists every violation.
class ConfigError : public std::runtime_error
{
public:
    explicit ConfigError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// Strict parse: unknown sections or keys are errors. A missing seed is drawn
/// from std::random_device and recorded in the result.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Canonical, fully resolved text form.
std::string to_text(const ExperimentConfig& config);

/// Every invariant violation of a resolved config.
std::vector<std::string> validate(const ExperimentConfig& config);

/// Sets the numeric field addressed by `path` (cavity.kappa, cavity.detuning,
/// simulation.dt, simulation.duration, simulation.perturbation,
/// species.<i>.{count,mass_ratio,pump,light_shift,temperature}, 1-based i).
void apply_parameter(ExperimentConfig& config, const std::string& path, double value);
bool is_parameter_path(const ExperimentConfig& config, const std::string& path);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

}  // namespace selforg
