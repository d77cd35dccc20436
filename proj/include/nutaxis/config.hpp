#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nutaxis/csv.hpp"
#include "nutaxis/errors.hpp"
#include "nutaxis/grid.hpp"
#include "nutaxis/model.hpp"
#include "nutaxis/snapshot.hpp"
#include "nutaxis/solver.hpp"

namespace nutaxis {

// Named initial-condition profiles. The library is deliberately small so
// every run is reproducible from its config alone.
struct IcConstant {
    double value = 0.0;
};
struct IcGaussian {
    std::array<double, 3> center{0.0, 0.0, 0.0};
    double width = 1.0;
    double amplitude = 0.0;
    double base = 0.0;
};
struct IcCosine {
    double base = 0.0;
    double amplitude = 0.0;
    int mode = 1;
};
struct IcFile {
    std::string path;
};
using IcSpec = std::variant<IcConstant, IcGaussian, IcCosine, IcFile>;

struct GridSpec {
    int dim = 1;
    std::vector<index_t> cells;
    std::vector<double> lengths;
};

struct OutputSpec {
    std::string dir = "out";
    bool snapshots = true;
    std::uint64_t seed = 0; // reserved for randomized initial data
    double tail_fraction = 0.25;
};

struct RunConfig {
    GridSpec grid;
    ModelParams model;
    StepControl control;
    IcSpec init_u = IcConstant{};
    IcSpec init_v = IcConstant{};
    OutputSpec output;
};

namespace detail {

struct ConfigValue {
    std::string text;
    int line = -1;
    mutable bool used = false;
};

using Section = std::map<std::string, ConfigValue>;

struct RawConfig {
    std::map<std::string, Section> sections;
    std::map<std::string, int> section_lines;
};

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline RawConfig tokenize_config(std::string_view text) {
    RawConfig raw;
    std::string current;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                              : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string t = trim(line);
        if (t.empty()) continue;

        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3)
                throw ConfigError("malformed section header '" + t + "'", line_no);
            current = trim(std::string_view(t).substr(1, t.size() - 2));
            if (current.empty()) throw ConfigError("empty section name", line_no);
            raw.sections[current]; // create
            raw.section_lines.emplace(current, line_no);
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value', got '" + t + "'", line_no);
        if (current.empty()) throw ConfigError("key outside any [section]", line_no);
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string val = trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (val.empty()) throw ConfigError("empty value for key '" + key + "'", line_no);
        auto [it, inserted] = raw.sections[current].emplace(key, ConfigValue{val, line_no});
        if (!inserted) throw ConfigError("duplicate key '" + current + "." + key + "'", line_no);
    }
    return raw;
}

class SectionReader {
public:
    SectionReader(const RawConfig& raw, std::string name) : name_(std::move(name)) {
        auto it = raw.sections.find(name_);
        sec_ = it == raw.sections.end() ? nullptr : &it->second;
    }

    bool present() const { return sec_ != nullptr; }

    const ConfigValue* find(const std::string& key) const {
        if (!sec_) return nullptr;
        auto it = sec_->find(key);
        if (it == sec_->end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    std::string require_raw(const std::string& key) const {
        const ConfigValue* v = find(key);
        if (!v) throw ConfigError("missing required key '" + name_ + "." + key + "'");
        return v->text;
    }

    double require_double(const std::string& key) const { return to_double(key, require_raw(key)); }

    double get_double(const std::string& key, double fallback) const {
        const ConfigValue* v = find(key);
        return v ? to_double(key, v->text) : fallback;
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        const ConfigValue* v = find(key);
        if (!v) return fallback;
        const double d = to_double(key, v->text);
        const auto i = static_cast<std::int64_t>(d);
        if (static_cast<double>(i) != d)
            throw ConfigError("'" + name_ + "." + key + "' must be an integer", v->line);
        return i;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const ConfigValue* v = find(key);
        if (!v) return fallback;
        if (v->text == "true" || v->text == "on" || v->text == "1") return true;
        if (v->text == "false" || v->text == "off" || v->text == "0") return false;
        throw ConfigError("'" + name_ + "." + key + "' must be a boolean", v->line);
    }

    std::string get_string(const std::string& key, std::string fallback) const {
        const ConfigValue* v = find(key);
        return v ? v->text : std::move(fallback);
    }

    std::vector<double> require_list(const std::string& key, std::size_t expect) const {
        const std::string raw = require_raw(key);
        std::vector<double> out;
        std::size_t start = 0;
        while (start <= raw.size()) {
            std::size_t comma = raw.find(',', start);
            const std::string item =
                trim(std::string_view(raw).substr(start, (comma == std::string::npos ? raw.size() : comma) - start));
            if (item.empty()) throw ConfigError("'" + name_ + "." + key + "' has an empty entry");
            out.push_back(to_double(key, item));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (expect != 0 && out.size() != expect)
            throw ConfigError("'" + name_ + "." + key + "' must list " + std::to_string(expect) +
                              " value(s)");
        return out;
    }

    void reject_unknown() const {
        if (!sec_) return;
        for (const auto& [key, val] : *sec_)
            if (!val.used)
                throw ConfigError("unknown key '" + name_ + "." + key + "'", val.line);
    }

private:
    double to_double(const std::string& key, const std::string& text) const {
        try {
            return parse_double(text);
        } catch (const Error&) {
            throw ConfigError("'" + name_ + "." + key + "' is not a number: '" + text + "'");
        }
    }

    std::string name_;
    const Section* sec_ = nullptr;
};

inline IcSpec parse_ic(const SectionReader& sec, const std::string& section_name, int dim) {
    const std::string profile = sec.require_raw("profile");
    if (profile == "constant") {
        IcConstant ic;
        ic.value = sec.require_double("value");
        if (ic.value < 0.0)
            throw ConfigError("'" + section_name + ".value' must be >= 0 (initial data are nonnegative)");
        return ic;
    }
    if (profile == "gaussian") {
        IcGaussian ic;
        const auto center = sec.require_list("center", static_cast<std::size_t>(dim));
        for (int a = 0; a < dim; ++a) ic.center[a] = center[static_cast<std::size_t>(a)];
        ic.width = sec.require_double("width");
        ic.amplitude = sec.require_double("amplitude");
        ic.base = sec.get_double("base", 0.0);
        if (!(ic.width > 0.0)) throw ConfigError("'" + section_name + ".width' must be > 0");
        if (ic.amplitude < 0.0)
            throw ConfigError("'" + section_name + ".amplitude' must be >= 0 (initial data are nonnegative)");
        if (ic.base < 0.0) throw ConfigError("'" + section_name + ".base' must be >= 0");
        return ic;
    }
    if (profile == "cosine") {
        IcCosine ic;
        ic.base = sec.require_double("base");
        ic.amplitude = sec.require_double("amplitude");
        ic.mode = static_cast<int>(sec.get_int("mode", 1));
        if (ic.base < 0.0) throw ConfigError("'" + section_name + ".base' must be >= 0");
        if (ic.amplitude < 0.0)
            throw ConfigError("'" + section_name + ".amplitude' must be >= 0 (initial data are nonnegative)");
        if (ic.mode < 0) throw ConfigError("'" + section_name + ".mode' must be >= 0");
        return ic;
    }
    if (profile == "file") {
        IcFile ic;
        ic.path = sec.require_raw("path");
        return ic;
    }
    throw ConfigError("'" + section_name + ".profile' must be one of constant|gaussian|cosine|file, got '" +
                      profile + "'");
}

} // namespace detail

inline RunConfig parse_config(std::string_view text) {
    const detail::RawConfig raw = detail::tokenize_config(text);

    static const std::set<std::string> known{"grid", "model", "time", "init_u", "init_v", "output"};
    for (const auto& [name, _] : raw.sections)
        if (!known.count(name))
            throw ConfigError("unknown section '[" + name + "]'", raw.section_lines.at(name));

    RunConfig cfg;

    detail::SectionReader grid(raw, "grid");
    if (!grid.present()) throw ConfigError("missing required section [grid]");
    cfg.grid.dim = static_cast<int>(grid.get_int("dim", 0));
    if (cfg.grid.dim < 1 || cfg.grid.dim > 3)
        throw ConfigError("'grid.dim' must be 1, 2 or 3");
    const auto cells = grid.require_list("cells", static_cast<std::size_t>(cfg.grid.dim));
    for (double c : cells) {
        if (c != std::floor(c) || c < 2) throw ConfigError("'grid.cells' entries must be integers >= 2");
        cfg.grid.cells.push_back(static_cast<index_t>(c));
    }
    cfg.grid.lengths = grid.require_list("lengths", static_cast<std::size_t>(cfg.grid.dim));
    for (double l : cfg.grid.lengths)
        if (!(l > 0.0)) throw ConfigError("'grid.lengths' entries must be > 0");
    grid.reject_unknown();

    detail::SectionReader model(raw, "model");
    if (!model.present()) throw ConfigError("missing required section [model]");
    cfg.model.m = model.require_double("m");
    if (!(cfg.model.m > 1.0)) throw ConfigError("model.m must be > 1");
    cfg.model.chi = model.require_double("chi");
    if (!(cfg.model.chi > 0.0)) throw ConfigError("model.chi must be > 0");
    cfg.model.xi = model.get_double("xi", 0.0);
    cfg.model.rho = model.get_double("rho", 0.0);
    cfg.model.mu = model.get_double("mu", 0.0);
    cfg.model.eps_reg = model.get_double("eps_reg", 0.0);
    try {
        validate(cfg.model);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    model.reject_unknown();

    detail::SectionReader time(raw, "time");
    if (!time.present()) throw ConfigError("missing required section [time]");
    cfg.control.t_end = time.require_double("t_end");
    cfg.control.cfl_safety = time.get_double("cfl_safety", 0.9);
    cfg.control.dt_min = time.get_double("dt_min", 1e-12);
    cfg.control.dt_max = time.get_double("dt_max", 0.1);
    cfg.control.output_cadence =
        time.get_double("output_cadence", cfg.control.t_end > 0.0 ? cfg.control.t_end / 200.0 : 0.0);
    try {
        validate(cfg.control);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    time.reject_unknown();

    detail::SectionReader init_u(raw, "init_u");
    if (!init_u.present()) throw ConfigError("missing required section [init_u]");
    cfg.init_u = detail::parse_ic(init_u, "init_u", cfg.grid.dim);
    init_u.reject_unknown();

    detail::SectionReader init_v(raw, "init_v");
    if (!init_v.present()) throw ConfigError("missing required section [init_v]");
    cfg.init_v = detail::parse_ic(init_v, "init_v", cfg.grid.dim);
    init_v.reject_unknown();

    detail::SectionReader output(raw, "output");
    cfg.output.dir = output.get_string("dir", "out");
    cfg.output.snapshots = output.get_bool("snapshots", true);
    cfg.output.seed = static_cast<std::uint64_t>(output.get_int("seed", 0));
    cfg.output.tail_fraction = output.get_double("tail_fraction", 0.25);
    if (!(cfg.output.tail_fraction > 0.0 && cfg.output.tail_fraction < 1.0))
        throw ConfigError("'output.tail_fraction' must be in (0,1)");
    output.reject_unknown();

    return cfg;
}

// Scalar override "section.key=value" used by parameter sweeps.
inline void apply_override(RunConfig& cfg, const std::string& key, double value) {
    auto fail = [&] { throw UsageError("sweep axis key '" + key + "' is not a sweepable scalar"); };
    if (key == "model.m") cfg.model.m = value;
    else if (key == "model.chi") cfg.model.chi = value;
    else if (key == "model.xi") cfg.model.xi = value;
    else if (key == "model.rho") cfg.model.rho = value;
    else if (key == "model.mu") cfg.model.mu = value;
    else if (key == "model.eps_reg") cfg.model.eps_reg = value;
    else if (key == "time.t_end") cfg.control.t_end = value;
    else if (key == "time.dt_max") cfg.control.dt_max = value;
    else if (key == "init_u.amplitude") {
        if (auto* g = std::get_if<IcGaussian>(&cfg.init_u)) g->amplitude = value;
        else if (auto* c = std::get_if<IcCosine>(&cfg.init_u)) c->amplitude = value;
        else fail();
    } else if (key == "init_v.amplitude") {
        if (auto* g = std::get_if<IcGaussian>(&cfg.init_v)) g->amplitude = value;
        else if (auto* c = std::get_if<IcCosine>(&cfg.init_v)) c->amplitude = value;
        else fail();
    } else {
        fail();
    }
    validate(cfg.model);
    validate(cfg.control);
}

namespace detail {

inline Field sample_ic(const IcSpec& spec, const Grid& g, const std::string& which) {
    Field f(g);
    if (const auto* c = std::get_if<IcConstant>(&spec)) {
        for (index_t i = 0; i < g.cell_count; ++i) f[i] = c->value;
    } else if (const auto* gs = std::get_if<IcGaussian>(&spec)) {
        for (index_t i = 0; i < g.cell_count; ++i) {
            const auto x = g.cell_center(i);
            double q = 0.0;
            for (int a = 0; a < g.dim; ++a) {
                const double d = (x[a] - gs->center[a]) / gs->width;
                q += d * d;
            }
            f[i] = gs->base + gs->amplitude * std::exp(-0.5 * q);
        }
    } else if (const auto* cs = std::get_if<IcCosine>(&spec)) {
        const double pi = 3.14159265358979323846;
        for (index_t i = 0; i < g.cell_count; ++i) {
            const auto x = g.cell_center(i);
            double prod = 1.0;
            for (int a = 0; a < g.dim; ++a)
                prod *= std::cos(cs->mode * pi * x[a] / g.lengths[a]);
            f[i] = cs->base + cs->amplitude * prod;
        }
    } else {
        const auto& file = std::get<IcFile>(spec);
        const SimState snap = read_snapshot(file.path);
        if (snap.u.grid != g)
            throw ConfigError("'" + which + "': snapshot grid does not match [grid]");
        return which == "init_v" ? snap.v : snap.u;
    }
    for (double x : f.values)
        if (x < 0.0)
            throw ConfigError("'" + which + "': profile produces negative values (initial data are nonnegative)");
    return f;
}

} // namespace detail

inline SimState build_state(const RunConfig& cfg) {
    const Grid g = make_grid(cfg.grid.dim, cfg.grid.cells, cfg.grid.lengths);
    SimState s;
    s.u = detail::sample_ic(cfg.init_u, g, "init_u");
    s.v = detail::sample_ic(cfg.init_v, g, "init_v");
    s.t = 0.0;
    return s;
}

} // namespace nutaxis
