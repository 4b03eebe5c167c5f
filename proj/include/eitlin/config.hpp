#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eitlin/bench.hpp"
#include "eitlin/error.hpp"
#include "eitlin/randfield.hpp"

namespace eitlin {

enum class ModelKind { Continuum, Cem };

/// Fully resolved experiment settings.
struct ExperimentConfig {
    ModelKind model = ModelKind::Continuum;
    int mesh_nodes = 30000;
    int cells = 1800;
    int basis_size = 16;
    int electrodes = 16;
    double coverage = 0.46;
    FieldSpec field = field_preset("F1");
    std::optional<ContactSpec> contacts; ///< set for the electrode model
    std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
    int samples = 2000;
    std::uint64_t seed = 1;
    std::vector<double> t_grid; ///< empty: derived from the noise level
    int t_count = 40;
    unsigned threads = 0;
    std::string output_dir = "out";

    /// key = value lines that reproduce this configuration.
    std::string describe() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct Entry {
    std::string value;
    std::string origin; ///< "config.txt:12" or "command line"
};

class ConfigReader {
public:
    explicit ConfigReader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    const Entry& entry(const std::string& key) const { return entries_.at(key); }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError(entry(key).origin + ": key '" + key + "': " + what);
    }

    std::string text(const std::string& key, std::string fallback) const {
        return has(key) ? entry(key).value : fallback;
    }

    template <typename T>
    T number(const std::string& key, T fallback) const {
        if (!has(key)) return fallback;
        return parse<T>(key, entry(key).value);
    }

    template <typename T>
    T parse(const std::string& key, const std::string& raw) const {
        T value{};
        const char* begin = raw.data();
        const char* end = raw.data() + raw.size();
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc() || ptr != end) fail(key, "cannot parse '" + raw + "' as a number");
        return value;
    }

private:
    std::map<std::string, Entry> entries_;
};

inline const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "model",         "mesh_nodes",    "cells",          "basis_size",      "electrodes", "coverage",
        "field",         "field_mean",    "field_variance", "field_length",    "contacts",   "contact_mean",
        "contact_variance", "methods",    "samples",        "seed",            "t_grid",     "t_count",
        "threads",       "output_dir"};
    return keys;
}

inline void add_entry(std::map<std::string, Entry>& entries, const std::string& line, const std::string& origin) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ": expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw ConfigError(origin + ": unknown key '" + key + "'");
    }
    entries[key] = Entry{trim(line.substr(eq + 1)), origin};
}

} // namespace detail

inline ExperimentConfig resolve_config(const std::map<std::string, detail::Entry>& entries) {
    const detail::ConfigReader in(entries);
    ExperimentConfig c;

    const std::string model = in.text("model", "continuum");
    if (model == "continuum") {
        c.model = ModelKind::Continuum;
    } else if (model == "cem") {
        c.model = ModelKind::Cem;
    } else {
        in.fail("model", "expected 'continuum' or 'cem', got '" + model + "'");
    }

    c.mesh_nodes = in.number("mesh_nodes", c.mesh_nodes);
    if (c.mesh_nodes < 100) in.fail("mesh_nodes", "must be at least 100");
    c.cells = in.number("cells", c.cells);
    if (c.cells < 1) in.fail("cells", "must be positive");
    c.basis_size = in.number("basis_size", c.basis_size);
    if (c.basis_size < 2 || c.basis_size % 2) in.fail("basis_size", "must be even and at least 2");
    c.electrodes = in.number("electrodes", c.electrodes);
    if (c.electrodes < 2 || c.electrodes % 2) in.fail("electrodes", "must be even and at least 2");
    c.coverage = in.number("coverage", c.coverage);
    if (!(c.coverage > 0.0 && c.coverage < 1.0)) in.fail("coverage", "must lie in (0, 1)");

    const std::string field = in.text("field", "F1");
    if (field == "custom") {
        c.field = FieldSpec{};
        c.field.name = "custom";
    } else {
        try {
            c.field = field_preset(field);
        } catch (const ConfigError& e) {
            in.fail("field", e.what());
        }
    }
    c.field.cells = c.cells;
    if (in.has("field_mean")) c.field.mean = Eigen::VectorXd::Constant(1, in.number("field_mean", 0.0));
    c.field.variance = in.number("field_variance", c.field.variance);
    if (!(c.field.variance > 0.0)) in.fail(in.has("field_variance") ? "field_variance" : "field", "variance must be positive");
    c.field.length = in.number("field_length", c.field.length);
    if (!(c.field.length > 0.0)) in.fail(in.has("field_length") ? "field_length" : "field", "length must be positive");

    if (c.model == ModelKind::Cem) {
        const std::string contacts = in.text("contacts", "C1");
        ContactSpec spec;
        if (contacts != "custom") {
            try {
                spec = contact_preset(contacts);
            } catch (const ConfigError& e) {
                in.fail("contacts", e.what());
            }
        }
        spec.electrodes = c.electrodes;
        spec.mean = in.number("contact_mean", spec.mean);
        spec.variance = in.number("contact_variance", spec.variance);
        if (!(spec.variance > 0.0)) in.fail(in.has("contact_variance") ? "contact_variance" : "contacts", "variance must be positive");
        c.contacts = spec;
    }

    if (in.has("methods")) {
        c.methods.clear();
        for (const auto& name : detail::split_list(in.entry("methods").value)) {
            try {
                const Method m = parse_method(name);
                if (std::find(c.methods.begin(), c.methods.end(), m) == c.methods.end()) c.methods.push_back(m);
            } catch (const ConfigError& e) {
                in.fail("methods", e.what());
            }
        }
        if (c.methods.empty()) in.fail("methods", "at least one method is required");
    }

    c.samples = in.number("samples", c.samples);
    if (c.samples < 1) in.fail("samples", "must be positive");
    c.seed = in.number<std::uint64_t>("seed", c.seed);
    c.t_count = in.number("t_count", c.t_count);
    if (c.t_count < 1) in.fail("t_count", "must be positive");
    if (in.has("t_grid")) {
        const std::string raw = in.entry("t_grid").value;
        if (raw != "auto") {
            for (const auto& item : detail::split_list(raw)) c.t_grid.push_back(in.parse<double>("t_grid", item));
            if (c.t_grid.empty()) in.fail("t_grid", "grid is empty");
            for (std::size_t i = 0; i < c.t_grid.size(); ++i) {
                if (!(c.t_grid[i] > 0.0)) in.fail("t_grid", "entries must be positive");
                if (i > 0 && !(c.t_grid[i] > c.t_grid[i - 1])) in.fail("t_grid", "entries must be strictly increasing");
            }
        }
    }
    c.threads = in.number("threads", c.threads);
    c.output_dir = in.text("output_dir", c.output_dir);
    if (c.output_dir.empty()) in.fail("output_dir", "must not be empty");
    return c;
}

/// Parses "key = value" lines ('#' starts a comment), then applies
/// "key=value" overrides in order.
inline ExperimentConfig parse_config(std::istream& in, const std::string& name,
                                     const std::vector<std::string>& overrides = {}) {
    std::map<std::string, detail::Entry> entries;
    std::string line;
    for (int number = 1; std::getline(in, line); ++number) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (detail::trim(line).empty()) continue;
        detail::add_entry(entries, line, name + ":" + std::to_string(number));
    }
    for (const auto& o : overrides) detail::add_entry(entries, o, "command line '" + o + "'");
    return resolve_config(entries);
}

inline ExperimentConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
    if (!path) {
        std::istringstream empty;
        return parse_config(empty, "<defaults>", overrides);
    }
    std::ifstream file(*path);
    if (!file) throw IoError("cannot open config file '" + *path + "'");
    return parse_config(file, *path, overrides);
}

inline std::string ExperimentConfig::describe() const {
    std::ostringstream out;
    out.precision(17);
    out << "model = " << (model == ModelKind::Cem ? "cem" : "continuum") << '\n'
        << "mesh_nodes = " << mesh_nodes << '\n'
        << "cells = " << cells << '\n'
        << "basis_size = " << basis_size << '\n'
        << "electrodes = " << electrodes << '\n'
        << "coverage = " << coverage << '\n'
        << "field = " << field.name << '\n'
        << "field_mean = " << field.mean[0] << '\n'
        << "field_variance = " << field.variance << '\n'
        << "field_length = " << field.length << '\n';
    if (contacts) {
        out << "contacts = " << contacts->name << '\n'
            << "contact_mean = " << contacts->mean << '\n'
            << "contact_variance = " << contacts->variance << '\n';
    }
    out << "methods = ";
    for (std::size_t i = 0; i < methods.size(); ++i) out << (i ? "," : "") << to_string(methods[i]);
    out << '\n' << "samples = " << samples << '\n' << "seed = " << seed << '\n' << "t_grid = ";
    if (t_grid.empty()) out << "auto";
    for (std::size_t i = 0; i < t_grid.size(); ++i) out << (i ? "," : "") << t_grid[i];
    out << '\n'
        << "t_count = " << t_count << '\n'
        << "threads = " << threads << '\n'
        << "output_dir = " << output_dir << '\n';
    return out.str();
}

} // namespace eitlin
