#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "format.hpp"
#include "scene.hpp"

namespace slp {

/// Parse failure with a 1-based position in the source text.
class ConfigError : public Error {
public:
    ConfigError(int line, int column, const std::string& what)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + what), line_(line), column_(column)
    {
    }
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_, column_;
};

enum class Operation { Contact, Curvature, Viscosity, Abp, Harnack, All };

inline const char* operation_tag(Operation o)
{
    switch (o) {
    case Operation::Contact: return "contact";
    case Operation::Curvature: return "curvature";
    case Operation::Viscosity: return "viscosity";
    case Operation::Abp: return "abp";
    case Operation::Harnack: return "harnack";
    case Operation::All: return "all";
    }
    return "?";
}

inline std::optional<Operation> operation_from_tag(std::string_view s)
{
    for (Operation o : {Operation::Contact, Operation::Curvature, Operation::Viscosity, Operation::Abp,
                        Operation::Harnack, Operation::All})
        if (s == operation_tag(o))
            return o;
    return std::nullopt;
}

struct RunConfig {
    Operation operation = Operation::All;
    std::vector<SceneSpec> scenes;
    std::vector<double> openings{1.0};
    std::vector<double> resolutions;  ///< empty keeps each scene's rho; else strictly decreasing
    std::optional<int> m;             ///< stratum dimension; the scene's by default
    std::optional<double> h;          ///< curvature bound; the scene's by default
    double center_radius = 1.0;       ///< C = lattice of B(0, center_radius) at spacing rho
    std::uint64_t seed = 1;
    std::size_t trials = 200;
    double curvature_step = 1.0 / 64.0;
    std::size_t curvature_pairs = 400;  ///< contact pairs sampled per run for curvature bounds

    // harnack
    std::vector<double> radii{0.9};
    std::vector<double> x0;  ///< empty = origin
    double safety = 2.0;
    double alpha = 2.0;
    int k = 3;
    double mu = 0.1;

    bool svg = false;
    std::string hash;  ///< FNV-1a of the source text, 16 hex digits
};

inline std::string fnv1a_hex(std::string_view text)
{
    std::uint64_t hsh = 14695981039346656037ull;
    for (unsigned char c : text) {
        hsh ^= c;
        hsh *= 1099511628211ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[hsh & 15u];
        hsh >>= 4;
    }
    return out;
}

namespace detail {

struct Cursor {
    int line = 0;
    int column = 1;      ///< of the value
    int key_column = 1;
    Cursor at_key() const { return {line, key_column, key_column}; }
};

[[noreturn]] inline void config_fail(const Cursor& c, const std::string& what) { throw ConfigError(c.line, c.column, what); }

/// Real number, "p/q" fractions allowed.
inline double config_real(std::string_view s, const Cursor& c)
{
    try {
        const auto slash = s.find('/');
        if (slash == std::string_view::npos)
            return parse_real(s);
        const double q = parse_real(s.substr(slash + 1));
        if (q == 0.0)
            config_fail(c, "division by zero in '" + std::string(s) + "'");
        return parse_real(s.substr(0, slash)) / q;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        config_fail(c, "expected a number, got '" + std::string(s) + "'");
    }
}

inline std::vector<double> config_reals(std::string_view s, const Cursor& c)
{
    std::vector<double> out;
    for (auto part : split(s, ',')) {
        const auto item = trim(part);
        Cursor at = c;
        at.column += static_cast<int>((item.empty() ? part.data() : item.data()) - s.data());
        out.push_back(config_real(item, at));
    }
    return out;
}

inline long long config_int(std::string_view s, const Cursor& c)
{
    const double v = config_real(s, c);
    if (v != std::floor(v) || std::abs(v) > 9e15)
        config_fail(c, "expected an integer, got '" + std::string(s) + "'");
    return static_cast<long long>(v);
}

inline bool config_bool(std::string_view s, const Cursor& c)
{
    if (s == "true" || s == "yes" || s == "1")
        return true;
    if (s == "false" || s == "no" || s == "0")
        return false;
    config_fail(c, "expected true or false, got '" + std::string(s) + "'");
}

inline void set_scene_key(SceneSpec& s, std::string_view key, std::string_view val, const Cursor& c)
{
    if (key == "generator") {
        auto g = generator_from_tag(val);
        if (!g)
            config_fail(c, "unknown generator '" + std::string(val) + "'");
        s.generator = *g;
    } else if (key == "kind") {
        auto k = graph_kind_from_tag(val);
        if (!k)
            config_fail(c, "unknown graph kind '" + std::string(val) + "'");
        s.kind = *k;
    } else if (key == "n") {
        s.n = static_cast<int>(config_int(val, c));
    } else if (key == "rho") {
        s.rho = config_real(val, c);
    } else if (key == "slope") {
        s.slope = config_real(val, c);
    } else if (key == "shift") {
        s.shift = config_real(val, c);
    } else if (key == "coef") {
        s.coef = config_real(val, c);
    } else if (key == "amplitude") {
        s.amplitude = config_real(val, c);
    } else if (key == "width") {
        s.width = config_real(val, c);
    } else if (key == "lambda") {
        s.lambda = config_real(val, c);
    } else if (key == "radius") {
        s.radius = config_real(val, c);
    } else if (key == "center") {
        s.center = config_reals(val, c);
    } else if (key == "upper_cap_only") {
        s.upper_cap_only = config_bool(val, c);
    } else if (key == "depth") {
        s.depth = static_cast<int>(config_int(val, c));
    } else if (key == "points") {
        // points = x1 y1 z1; x2 y2 z2
        for (auto pt : split(val, ';')) {
            std::vector<double> p;
            std::istringstream is{std::string(trim(pt))};
            std::string tok;
            while (is >> tok)
                p.push_back(config_real(tok, c));
            s.points.push_back(std::move(p));
        }
    } else if (key == "intrinsic_dim") {
        s.intrinsic_dim = static_cast<int>(config_int(val, c));
    } else if (key == "mc_bound") {
        s.mc_bound = config_real(val, c);
    } else {
        config_fail(c.at_key(), "unknown scene key '" + std::string(key) + "'");
    }
}

inline void set_run_key(RunConfig& r, std::string_view key, std::string_view val, const Cursor& c)
{
    auto positive = [&](double v) {
        if (!(v > 0.0))
            config_fail(c, "'" + std::string(key) + "' must be positive");
        return v;
    };
    if (key == "operation") {
        auto o = operation_from_tag(val);
        if (!o)
            config_fail(c, "unknown operation '" + std::string(val) + "'");
        r.operation = *o;
    } else if (key == "a") {
        r.openings = config_reals(val, c);
        for (double a : r.openings)
            positive(a);
    } else if (key == "rho") {
        r.resolutions = config_reals(val, c);
        for (std::size_t i = 0; i < r.resolutions.size(); ++i) {
            positive(r.resolutions[i]);
            if (i > 0 && !(r.resolutions[i] < r.resolutions[i - 1]))
                config_fail(c, "resolutions must be strictly decreasing");
        }
    } else if (key == "m") {
        r.m = static_cast<int>(config_int(val, c));
    } else if (key == "h") {
        r.h = config_real(val, c);
        if (!(*r.h >= 0.0))
            config_fail(c, "'h' must be non-negative");
    } else if (key == "center_radius") {
        r.center_radius = positive(config_real(val, c));
    } else if (key == "seed") {
        const auto v = config_int(val, c);
        if (v < 0)
            config_fail(c, "'seed' must be non-negative");
        r.seed = static_cast<std::uint64_t>(v);
    } else if (key == "trials") {
        r.trials = static_cast<std::size_t>(std::max(0ll, config_int(val, c)));
    } else if (key == "curvature_step") {
        r.curvature_step = positive(config_real(val, c));
    } else if (key == "curvature_pairs") {
        r.curvature_pairs = static_cast<std::size_t>(std::max(1ll, config_int(val, c)));
    } else if (key == "r") {
        r.radii = config_reals(val, c);
        for (double v : r.radii)
            positive(v);
    } else if (key == "x0") {
        r.x0 = config_reals(val, c);
    } else if (key == "safety") {
        r.safety = config_real(val, c);
        if (!(r.safety > 1.0))
            config_fail(c, "'safety' must exceed 1");
    } else if (key == "alpha") {
        r.alpha = config_real(val, c);
        if (!(r.alpha > 1.0))
            config_fail(c, "'alpha' must exceed 1");
    } else if (key == "k") {
        r.k = static_cast<int>(config_int(val, c));
        if (r.k < 1)
            config_fail(c, "'k' must be at least 1");
    } else if (key == "mu") {
        r.mu = positive(config_real(val, c));
    } else if (key == "svg") {
        r.svg = config_bool(val, c);
    } else {
        config_fail(c.at_key(), "unknown run key '" + std::string(key) + "'");
    }
}

} // namespace detail

/// Sectioned key = value text. `[run]` holds run parameters, each
/// `[scene <id>]` one scene. '#' starts a comment anywhere, ';' only at the
/// start of a line.
inline RunConfig parse_config(std::string_view text)
{
    RunConfig cfg;
    cfg.hash = fnv1a_hex(text);
    enum class Section { None, Run, Scene } section = Section::None;
    std::map<std::string, int> scene_lines;
    detail::Cursor cur;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view raw = text.substr(pos, end - pos);
        pos = end + 1;
        ++cur.line;
        cur.column = 1;

        std::string_view line = raw;
        if (auto c = line.find('#'); c != std::string_view::npos)
            line = line.substr(0, c);
        const auto lead = line.find_first_not_of(" \t");
        if (lead == std::string_view::npos || trim(line).empty() || line[lead] == ';')
            continue;
        cur.column = cur.key_column = static_cast<int>(lead) + 1;
        line = trim(line);

        if (line.front() == '[') {
            if (line.back() != ']')
                detail::config_fail(cur, "unterminated section header");
            auto head = trim(line.substr(1, line.size() - 2));
            if (head == "run") {
                section = Section::Run;
            } else if (head.substr(0, 6) == "scene " || head == "scene") {
                auto id = trim(head.substr(5));
                if (id.empty())
                    detail::config_fail(cur, "scene section needs an id");
                if (!scene_lines.emplace(std::string(id), cur.line).second)
                    detail::config_fail(cur, "duplicate scene id '" + std::string(id) + "'");
                SceneSpec s;
                s.id = std::string(id);
                cfg.scenes.push_back(std::move(s));
                section = Section::Scene;
            } else {
                detail::config_fail(cur, "unknown section '" + std::string(head) + "'");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            detail::config_fail(cur, "expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto val = trim(line.substr(eq + 1));
        if (key.empty())
            detail::config_fail(cur, "empty key");
        cur.column = static_cast<int>(lead + (val.data() - line.data())) + 1;
        if (val.empty())
            detail::config_fail(cur, "missing value for '" + std::string(key) + "'");
        switch (section) {
        case Section::None: detail::config_fail(cur.at_key(), "key outside of a section");
        case Section::Run: detail::set_run_key(cfg, key, val, cur); break;
        case Section::Scene: detail::set_scene_key(cfg.scenes.back(), key, val, cur); break;
        }
    }
    if (cfg.scenes.empty())
        throw ConfigError(1, 1, "no [scene ...] section");
    if (cfg.openings.empty() || cfg.radii.empty())
        throw ConfigError(1, 1, "parameter grids must be nonempty");
    return cfg;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace slp
