#include "bubblesim/config_io.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace bubblesim {

namespace {

struct RawEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (!quoted && (line[i] == '#' || line[i] == ';')) return line.substr(0, i);
    }
    return line;
}

class RawConfig {
public:
    RawConfig(const std::string& text, const std::string& origin) : origin_(origin) {
        std::istringstream in(text);
        std::string line;
        std::string section;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            line = trim(strip_comment(line));
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    fail(line_no, "unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty()) fail(line_no, "empty section name");
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                fail(line_no, "expected `key = value`");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) fail(line_no, "missing key before `=`");
            if (value.empty()) fail(line_no, "missing value after `=`");
            const std::string full = section.empty() ? key : section + "." + key;
            if (entries_.count(full))
                fail(line_no, "duplicate key `" + full + "`");
            entries_[full] = {value, line_no, false};
        }
    }

    [[noreturn]] void fail(int line, const std::string& message) const {
        throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + message);
    }
    [[noreturn]] void fail_field(const std::string& field, const std::string& message) const {
        const auto it = entries_.find(field);
        const std::string at = it != entries_.end()
                                   ? origin_ + ":" + std::to_string(it->second.line) + ": "
                                   : origin_ + ": ";
        throw ConfigError(at + "field `" + field + "`: " + message);
    }

    bool has(const std::string& field) const { return entries_.count(field) != 0; }

    std::string get_string(const std::string& field) {
        RawEntry& e = require(field);
        if (e.value.size() < 2 || e.value.front() != '"' || e.value.back() != '"')
            fail_field(field, "expected a quoted string");
        return e.value.substr(1, e.value.size() - 2);
    }

    double get_number(const std::string& field) {
        RawEntry& e = require(field);
        return parse_number(field, e.value);
    }

    std::vector<double> get_numbers(const std::string& field) {
        RawEntry& e = require(field);
        std::vector<double> out;
        std::stringstream ss(e.value);
        std::string part;
        while (std::getline(ss, part, ',')) out.push_back(parse_number(field, trim(part)));
        if (out.empty()) fail_field(field, "expected at least one number");
        return out;
    }

    long long get_integer(const std::string& field) {
        RawEntry& e = require(field);
        try {
            std::size_t used = 0;
            const long long v = std::stoll(e.value, &used);
            if (used != e.value.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            fail_field(field, "expected an integer, got `" + e.value + "`");
        }
    }

    std::uint64_t get_u64(const std::string& field) {
        RawEntry& e = require(field);
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(e.value, &used);
            if (used != e.value.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            fail_field(field, "expected an unsigned integer, got `" + e.value + "`");
        }
    }

    bool get_bool(const std::string& field) {
        RawEntry& e = require(field);
        if (e.value == "true") return true;
        if (e.value == "false") return false;
        fail_field(field, "expected true or false, got `" + e.value + "`");
    }

    void check_unused() const {
        for (const auto& [key, entry] : entries_)
            if (!entry.used)
                throw ConfigError(origin_ + ":" + std::to_string(entry.line) +
                                  ": unknown key `" + key + "`");
    }

private:
    RawEntry& require(const std::string& field) {
        const auto it = entries_.find(field);
        if (it == entries_.end())
            throw ConfigError(origin_ + ": missing required field `" + field + "`");
        it->second.used = true;
        return it->second;
    }

    double parse_number(const std::string& field, const std::string& text) {
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            fail_field(field, "expected a number, got `" + text + "`");
        }
    }

    std::string origin_;
    std::map<std::string, RawEntry> entries_;
};

}  // namespace

ScenarioConfig parse_scenario_config_text(const std::string& text, const std::string& origin) {
    RawConfig raw(text, origin);

    ScenarioConfig cfg;
    const std::string kind_name = raw.get_string("scenario.kind");
    const auto kind = scenario_kind_from_string(kind_name);
    if (!kind)
        raw.fail_field("scenario.kind",
                       "unknown scenario `" + kind_name +
                           "` (expected optimist, pessimist, drawdown_pair, or two_stock)");
    cfg.kind = *kind;

    cfg.d0 = raw.get_number("scenario.D0");
    cfg.vol = raw.get_numbers("scenario.v");
    if (raw.has("scenario.a")) cfg.drift = raw.get_number("scenario.a");
    if (raw.has("scenario.kappa")) cfg.kappa = raw.get_number("scenario.kappa");
    if (raw.has("scenario.psi0")) cfg.psi0 = raw.get_number("scenario.psi0");
    if (raw.has("scenario.v_psi")) cfg.v_psi = raw.get_numbers("scenario.v_psi");

    if (raw.has("agents.w")) cfg.wealth = raw.get_numbers("agents.w");
    if (raw.has("agents.utility")) {
        // The scenario templates are logarithmic; reject anything else loudly.
        std::stringstream ss(raw.get_string("agents.utility"));
        if (ss.str() != "log")
            raw.fail_field("agents.utility",
                           "scenario runs support log utility only (got `" + ss.str() + "`)");
    }

    if (raw.has("simulation.T")) cfg.horizon = raw.get_number("simulation.T");
    if (raw.has("simulation.rho")) cfg.rho = raw.get_number("simulation.rho");
    if (raw.has("simulation.n_steps"))
        cfg.n_steps = static_cast<int>(raw.get_integer("simulation.n_steps"));
    if (raw.has("simulation.n_paths"))
        cfg.n_paths = static_cast<std::size_t>(raw.get_integer("simulation.n_paths"));
    if (raw.has("simulation.seed")) cfg.seed = raw.get_u64("simulation.seed");
    if (raw.has("simulation.bridge")) cfg.bridge = raw.get_bool("simulation.bridge");
    if (raw.has("simulation.workers"))
        cfg.workers = static_cast<unsigned>(raw.get_integer("simulation.workers"));
    if (raw.has("simulation.n_bootstrap"))
        cfg.n_bootstrap = static_cast<int>(raw.get_integer("simulation.n_bootstrap"));

    raw.check_unused();

    const auto errors = cfg.validate();
    if (!errors.empty()) throw ConfigError(origin + ": " + errors.front());
    return cfg;
}

ScenarioConfig parse_scenario_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario_config_text(buffer.str(), path);
}

}  // namespace bubblesim
