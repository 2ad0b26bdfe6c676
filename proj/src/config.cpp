#include "selforg/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "selforg/dynamics.hpp"
#include "selforg/kinetics.hpp"

namespace selforg {

std::string_view to_string(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Ensemble: return "ensemble";
    case ExperimentKind::Threshold: return "threshold";
    case ExperimentKind::Equilibrium: return "equilibrium";
    case ExperimentKind::HeatFlow: return "heatflow";
    case ExperimentKind::Sweep: return "sweep";
    }
    return "unknown";
}

std::optional<ExperimentKind> parse_kind(std::string_view text)
{
    for (auto k : {ExperimentKind::Simulate, ExperimentKind::Ensemble, ExperimentKind::Threshold,
                   ExperimentKind::Equilibrium, ExperimentKind::HeatFlow, ExperimentKind::Sweep})
        if (to_string(k) == text)
            return k;
    return std::nullopt;
}

double SweepAxis::value(std::size_t i) const
{
    if (count < 2)
        return from;
    return from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1);
}

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line), column_(column)
{
}

namespace {

std::string join_violations(const std::vector<std::string>& v)
{
    std::string s = "invalid configuration:";
    for (const auto& e : v)
        s += "\n  " + e;
    return s;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations))
{
}

std::string format_number(double value)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, end);
}

// ---------------------------------------------------------------------------

namespace {

struct Token
{
    std::string text;
    std::size_t line = 0;
    std::size_t column = 0;
};

using Block = std::map<std::string, Token>;

struct RawConfig
{
    Block experiment;
    Block cavity;
    Block simulation;
    Block sweep;
    bool has_sweep = false;
    std::vector<Block> species;
};

const std::map<std::string, std::vector<std::string>>& allowed_keys()
{
    static const std::map<std::string, std::vector<std::string>> keys{
        {"experiment", {"kind", "realisations", "threads", "output", "histogram_bins"}},
        {"cavity", {"kappa", "detuning", "effective_detuning"}},
        {"simulation", {"dt", "duration", "stride", "noise", "seed", "perturbation"}},
        {"species",
         {"name", "count", "mass_ratio", "pump", "collective_pump", "light_shift", "collective_light_shift",
          "temperature"}},
        {"sweep", {"parameter", "from", "to", "count", "simulate"}},
    };
    return keys;
}

std::string_view trim(std::string_view s, std::size_t* offset = nullptr)
{
    std::size_t b = 0;
    while (b < s.size() && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r'))
        ++b;
    std::size_t e = s.size();
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r'))
        --e;
    if (offset)
        *offset = b;
    return s.substr(b, e - b);
}

RawConfig tokenize(std::string_view text)
{
    RawConfig raw;
    Block* current = nullptr;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        std::size_t lead = 0;
        const auto body = trim(line, &lead);
        if (body.empty())
            continue;
        if (body.front() == '[') {
            if (body.back() != ']')
                throw ParseError("unterminated section header", line_no, lead + 1);
            section = std::string(trim(body.substr(1, body.size() - 2)));
            if (section == "experiment")
                current = &raw.experiment;
            else if (section == "cavity")
                current = &raw.cavity;
            else if (section == "simulation")
                current = &raw.simulation;
            else if (section == "sweep") {
                current = &raw.sweep;
                raw.has_sweep = true;
            }
            else if (section == "species") {
                raw.species.emplace_back();
                current = &raw.species.back();
            }
            else
                throw ParseError("unknown section [" + section + "]", line_no, lead + 2);
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("expected 'key = value'", line_no, lead + 1);
        if (!current)
            throw ParseError("key outside of any section", line_no, lead + 1);
        const std::string key(trim(body.substr(0, eq)));
        std::size_t value_off = 0;
        const auto value = trim(body.substr(eq + 1), &value_off);
        const auto& keys = allowed_keys().at(section);
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ParseError("unknown key '" + key + "' in [" + section + "]", line_no, lead + 1);
        if (value.empty())
            throw ParseError("missing value for '" + key + "'", line_no, lead + eq + 2);
        if (current->count(key))
            throw ParseError("duplicate key '" + key + "'", line_no, lead + 1);
        (*current)[key] = Token{std::string(value), line_no, lead + eq + 2 + value_off};
    }
    return raw;
}

double to_double(const Token& t, const std::string& key)
{
    double v = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw ParseError("expected a number for '" + key + "', got '" + t.text + "'", t.line, t.column);
    return v;
}

std::uint64_t to_unsigned(const Token& t, const std::string& key)
{
    std::uint64_t v = 0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw ParseError("expected a non-negative integer for '" + key + "', got '" + t.text + "'", t.line, t.column);
    return v;
}

bool to_bool(const Token& t, const std::string& key)
{
    if (t.text == "true" || t.text == "on" || t.text == "yes")
        return true;
    if (t.text == "false" || t.text == "off" || t.text == "no")
        return false;
    throw ParseError("expected true/false for '" + key + "', got '" + t.text + "'", t.line, t.column);
}

const Token* find(const Block& b, const std::string& key)
{
    auto it = b.find(key);
    return it == b.end() ? nullptr : &it->second;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text)
{
    const RawConfig raw = tokenize(text);
    ExperimentConfig cfg;
    std::vector<std::string> violations;

    if (auto t = find(raw.experiment, "kind")) {
        auto k = parse_kind(t->text);
        if (!k)
            throw ParseError("unknown experiment kind '" + t->text + "'", t->line, t->column);
        cfg.kind = *k;
    }
    if (auto t = find(raw.experiment, "realisations"))
        cfg.realisations = to_unsigned(*t, "realisations");
    if (auto t = find(raw.experiment, "threads"))
        cfg.threads = to_unsigned(*t, "threads");
    if (auto t = find(raw.experiment, "output"))
        cfg.output = t->text;
    if (auto t = find(raw.experiment, "histogram_bins"))
        cfg.histogram_bins = to_unsigned(*t, "histogram_bins");

    auto& sim = cfg.sim;
    sim.stride = 100;
    if (auto t = find(raw.cavity, "kappa"))
        sim.cavity.kappa = to_double(*t, "kappa");
    else
        violations.emplace_back("cavity: kappa is required");
    const Token* detuning = find(raw.cavity, "detuning");
    const Token* eff_detuning = find(raw.cavity, "effective_detuning");
    if (detuning && eff_detuning)
        violations.emplace_back("cavity: give either detuning or effective_detuning, not both");
    else if (!detuning && !eff_detuning)
        violations.emplace_back("cavity: detuning (or effective_detuning) is required");

    // species
    std::vector<const Token*> temperature_tokens;
    for (std::size_t i = 0; i < raw.species.size(); ++i) {
        const auto& b = raw.species[i];
        const std::string tag = "species " + std::to_string(i + 1);
        SpeciesParams s;
        s.name = find(b, "name") ? find(b, "name")->text : "species" + std::to_string(i + 1);
        if (auto t = find(b, "count"))
            s.count = to_unsigned(*t, "count");
        else
            violations.push_back(tag + ": count is required");
        if (auto t = find(b, "mass_ratio"))
            s.mass = kReferenceMass * to_double(*t, "mass_ratio");
        const auto n = static_cast<double>(s.count);
        const Token* pump = find(b, "pump");
        const Token* cpump = find(b, "collective_pump");
        if (pump && cpump)
            violations.push_back(tag + ": give either pump or collective_pump, not both");
        else if (pump)
            s.pump = to_double(*pump, "pump");
        else if (cpump && n > 0)
            s.pump = to_double(*cpump, "collective_pump") / std::sqrt(n);
        const Token* shift = find(b, "light_shift");
        const Token* cshift = find(b, "collective_light_shift");
        if (shift && cshift)
            violations.push_back(tag + ": give either light_shift or collective_light_shift, not both");
        else if (shift)
            s.light_shift = to_double(*shift, "light_shift");
        else if (cshift && n > 0)
            s.light_shift = to_double(*cshift, "collective_light_shift") / n;
        const Token* temp = find(b, "temperature");
        temperature_tokens.push_back(temp);
        if (temp && temp->text != "star")
            s.temperature = to_double(*temp, "temperature");
        sim.species.push_back(s);
    }

    if (detuning)
        sim.cavity.detuning = to_double(*detuning, "detuning");
    else if (eff_detuning) {
        double d = to_double(*eff_detuning, "effective_detuning");
        for (const auto& s : sim.species)
            d += 0.5 * static_cast<double>(s.count) * s.light_shift;
        sim.cavity.detuning = d;
    }

    const double delta = effective_detuning(sim.cavity, sim.species);
    for (std::size_t i = 0; i < sim.species.size(); ++i) {
        const Token* temp = temperature_tokens[i];
        if (!temp || temp->text == "star") {
            if (delta < 0.0 && sim.cavity.kappa > 0.0)
                sim.species[i].temperature = temperature_star(sim.cavity.kappa, delta);
            else
                violations.push_back("species " + std::to_string(i + 1)
                                     + ": temperature = star needs a negative effective detuning");
        }
    }

    if (auto t = find(raw.simulation, "duration"))
        sim.duration = to_double(*t, "duration");
    if (auto t = find(raw.simulation, "stride"))
        sim.stride = to_unsigned(*t, "stride");
    if (auto t = find(raw.simulation, "noise"))
        sim.noise = to_bool(*t, "noise");
    if (auto t = find(raw.simulation, "perturbation"))
        sim.initial.perturbation = to_double(*t, "perturbation");
    if (auto t = find(raw.simulation, "seed")) {
        sim.seed = to_unsigned(*t, "seed");
    }
    else {
        std::random_device rd;
        sim.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    const Token* dt = find(raw.simulation, "dt");
    if (dt && dt->text != "auto")
        sim.dt = to_double(*dt, "dt");
    else if (sim.cavity.kappa > 0.0)
        sim.dt = suggest_dt(sim);

    if (raw.has_sweep) {
        SweepAxis axis;
        if (auto t = find(raw.sweep, "parameter"))
            axis.parameter = t->text;
        else
            violations.emplace_back("sweep: parameter is required");
        if (auto t = find(raw.sweep, "from"))
            axis.from = to_double(*t, "from");
        else
            violations.emplace_back("sweep: from is required");
        if (auto t = find(raw.sweep, "to"))
            axis.to = to_double(*t, "to");
        else
            violations.emplace_back("sweep: to is required");
        if (auto t = find(raw.sweep, "count"))
            axis.count = to_unsigned(*t, "count");
        if (auto t = find(raw.sweep, "simulate"))
            axis.simulate = to_bool(*t, "simulate");
        cfg.sweep = axis;
    }

    auto more = validate(cfg);
    violations.insert(violations.end(), more.begin(), more.end());
    if (!violations.empty())
        throw ConfigError(violations);
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError({"cannot open config file '" + path + "'"});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::vector<std::string> validate(const ExperimentConfig& config)
{
    auto v = validate(config.sim);
    if (config.realisations < 1)
        v.emplace_back("experiment: realisations must be >= 1");
    if (config.threads < 1)
        v.emplace_back("experiment: threads must be >= 1");
    if (config.histogram_bins < 2)
        v.emplace_back("experiment: histogram_bins must be >= 2");
    if (config.kind == ExperimentKind::Sweep && !config.sweep)
        v.emplace_back("sweep: kind = sweep needs a [sweep] block");
    if (config.sweep) {
        if (config.kind == ExperimentKind::Sweep && config.sweep->count < 2)
            v.emplace_back("sweep: count must be >= 2");
        if (!config.sweep->parameter.empty() && !is_parameter_path(config, config.sweep->parameter))
            v.push_back("sweep: parameter '" + config.sweep->parameter + "' does not name a numeric field");
    }
    if (config.kind == ExperimentKind::HeatFlow && config.sim.species.size() != 2)
        v.emplace_back("heatflow: needs exactly two species");
    return v;
}

// ---------------------------------------------------------------------------

namespace {

double* species_field(SpeciesParams& s, const std::string& field)
{
    if (field == "pump")
        return &s.pump;
    if (field == "light_shift")
        return &s.light_shift;
    if (field == "temperature")
        return &s.temperature;
    return nullptr;
}

bool split_species_path(const std::string& path, std::size_t& index, std::string& field)
{
    if (path.rfind("species.", 0) != 0)
        return false;
    const auto rest = path.substr(8);
    const auto dot = rest.find('.');
    if (dot == std::string::npos)
        return false;
    const auto idx = rest.substr(0, dot);
    auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), index);
    if (ec != std::errc() || ptr != idx.data() + idx.size())
        return false;
    field = rest.substr(dot + 1);
    return true;
}

}  // namespace

bool is_parameter_path(const ExperimentConfig& config, const std::string& path)
{
    static const std::vector<std::string> scalar{"cavity.kappa", "cavity.detuning", "simulation.dt",
                                                 "simulation.duration", "simulation.perturbation"};
    if (std::find(scalar.begin(), scalar.end(), path) != scalar.end())
        return true;
    std::size_t index = 0;
    std::string field;
    if (!split_species_path(path, index, field))
        return false;
    if (index < 1 || index > config.sim.species.size())
        return false;
    return field == "count" || field == "mass_ratio" || field == "pump" || field == "light_shift"
           || field == "temperature";
}

void apply_parameter(ExperimentConfig& config, const std::string& path, double value)
{
    if (!is_parameter_path(config, path))
        throw std::invalid_argument("apply_parameter: '" + path + "' does not name a numeric field");
    auto& sim = config.sim;
    if (path == "cavity.kappa")
        sim.cavity.kappa = value;
    else if (path == "cavity.detuning")
        sim.cavity.detuning = value;
    else if (path == "simulation.dt")
        sim.dt = value;
    else if (path == "simulation.duration")
        sim.duration = value;
    else if (path == "simulation.perturbation")
        sim.initial.perturbation = value;
    else {
        std::size_t index = 0;
        std::string field;
        split_species_path(path, index, field);
        auto& s = sim.species[index - 1];
        if (field == "count")
            s.count = static_cast<std::size_t>(std::llround(std::max(value, 0.0)));
        else if (field == "mass_ratio")
            s.mass = kReferenceMass * value;
        else
            *species_field(s, field) = value;
    }
}

std::string to_text(const ExperimentConfig& config)
{
    std::ostringstream out;
    const auto& sim = config.sim;
    out << "[experiment]\n"
        << "kind = " << to_string(config.kind) << '\n'
        << "realisations = " << config.realisations << '\n'
        << "threads = " << config.threads << '\n'
        << "output = " << config.output << '\n'
        << "histogram_bins = " << config.histogram_bins << "\n\n";
    out << "[cavity]\n"
        << "kappa = " << format_number(sim.cavity.kappa) << '\n'
        << "detuning = " << format_number(sim.cavity.detuning) << "\n\n";
    out << "[simulation]\n"
        << "dt = " << format_number(sim.dt) << '\n'
        << "duration = " << format_number(sim.duration) << '\n'
        << "stride = " << sim.stride << '\n'
        << "noise = " << (sim.noise ? "true" : "false") << '\n'
        << "seed = " << sim.seed << '\n'
        << "perturbation = " << format_number(sim.initial.perturbation) << '\n';
    for (const auto& s : sim.species) {
        out << "\n[species]\n"
            << "name = " << s.name << '\n'
            << "count = " << s.count << '\n'
            << "mass_ratio = " << format_number(s.mass / kReferenceMass) << '\n'
            << "pump = " << format_number(s.pump) << '\n'
            << "light_shift = " << format_number(s.light_shift) << '\n'
            << "temperature = " << format_number(s.temperature) << '\n';
    }
    if (config.sweep) {
        const auto& w = *config.sweep;
        out << "\n[sweep]\n"
            << "parameter = " << w.parameter << '\n'
            << "from = " << format_number(w.from) << '\n'
            << "to = " << format_number(w.to) << '\n'
            << "count = " << w.count << '\n'
            << "simulate = " << (w.simulate ? "true" : "false") << '\n';
    }
    return out.str();
}

}  // namespace selforg
