#include "pilotwave/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pilotwave/action_gauge.hpp"
#include "pilotwave/bohm.hpp"
#include "pilotwave/error.hpp"
#include "pilotwave/expression.hpp"
#include "pilotwave/operators.hpp"
#include "pilotwave/output.hpp"
#include "pilotwave/schrodinger.hpp"
#include "pilotwave/stats.hpp"
#include "pilotwave/version.hpp"

namespace pilotwave {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::array kKindNames{
    std::pair{ScenarioKind::plane_wave, "plane_wave"},
    std::pair{ScenarioKind::free_gaussian, "free_gaussian"},
    std::pair{ScenarioKind::harmonic_ground, "harmonic_ground"},
    std::pair{ScenarioKind::point_source_2d, "point_source_2d"},
    std::pair{ScenarioKind::custom, "custom"},
};

constexpr std::array kCheckNames{
    std::pair{Check::schrodinger, "schrodinger"},
    std::pair{Check::model_field, "model_field"},
    std::pair{Check::gauge_identity, "gauge_identity"},
    std::pair{Check::continuity, "continuity"},
    std::pair{Check::eikonal, "eikonal"},
    std::pair{Check::stationary_action, "stationary_action"},
    std::pair{Check::mass_ratio, "mass_ratio"},
    std::pair{Check::velocity_gauge, "velocity_gauge"},
    std::pair{Check::gauge_transfer, "gauge_transfer"},
    std::pair{Check::equivariance, "equivariance"},
    std::pair{Check::source_term, "source_term"},
    std::pair{Check::isotropy, "isotropy"},
};

constexpr std::size_t kMaxGridPoints = std::size_t{1} << 24;
constexpr std::size_t kMaxStoredValues = std::size_t{1} << 26;

bool needs_action(Check c) {
    switch (c) {
        case Check::model_field:
        case Check::gauge_identity:
        case Check::continuity:
        case Check::eikonal:
        case Check::stationary_action:
        case Check::mass_ratio:
        case Check::velocity_gauge:
        case Check::gauge_transfer:
            return true;
        default:
            return false;
    }
}

bool is_residual_check(Check c) { return c != Check::gauge_transfer && (c == Check::schrodinger || needs_action(c)); }

// Walks one JSON object, remembering which keys were read so that anything
// else can be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& value, std::string path) : value_(value), path_(std::move(path)) {
        if (!value_.is_object()) throw ValidationError(where() + " must be an object");
    }

    const json* find(const std::string& key) {
        known_.insert(key);
        const auto it = value_.find(key);
        return it == value_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) out = as_number(*v, key);
    }

    void count(const std::string& key, std::size_t& out) {
        if (const json* v = find(key)) out = static_cast<std::size_t>(as_count(*v, key));
    }

    void seed(const std::string& key, std::uint64_t& out) {
        if (const json* v = find(key)) out = as_count(*v, key);
    }

    void text(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw ValidationError("key \"" + name(key) + "\" must be a string");
            out = v->get<std::string>();
        }
    }

    void flag(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ValidationError("key \"" + name(key) + "\" must be true or false");
            out = v->get<bool>();
        }
    }

    void point(const std::string& key, Point& out) {
        if (const json* v = find(key)) out = as_point(*v, key);
    }

    Point as_point(const json& v, const std::string& key) const {
        if (!v.is_array() || v.empty() || v.size() > kMaxDim) {
            throw ValidationError("key \"" + name(key) + "\" must be an array of 1 to 3 numbers");
        }
        Point p{};
        for (std::size_t i = 0; i < v.size(); ++i) p[i] = as_number(v[i], key);
        return p;
    }

    double as_number(const json& v, const std::string& key) const {
        if (!v.is_number()) throw ValidationError("key \"" + name(key) + "\" must be a number");
        return v.get<double>();
    }

    std::uint64_t as_count(const json& v, const std::string& key) const {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (d >= 0.0 && d < 0x1.0p63 && std::floor(d) == d) return static_cast<std::uint64_t>(d);
        }
        throw ValidationError("key \"" + name(key) + "\" must be a non-negative integer");
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (const auto& [key, _] : value_.items()) {
            if (!known_.count(key)) throw ValidationError("unknown key \"" + name(key) + "\"");
        }
    }

private:
    std::string where() const { return path_.empty() ? "config" : "key \"" + path_ + "\""; }

    const json& value_;
    std::string path_;
    std::set<std::string> known_;
};

template <typename Enum, std::size_t N>
Enum enum_from(const std::array<std::pair<Enum, const char*>, N>& table, const std::string& text, const std::string& key) {
    for (const auto& [value, label] : table) {
        if (text == label) return value;
    }
    std::string allowed;
    for (const auto& [value, label] : table) allowed += (allowed.empty() ? "" : ", ") + std::string(label);
    throw ValidationError("key \"" + key + "\" has unknown value \"" + text + "\" (expected one of " + allowed + ")");
}

void apply_kind_defaults(ScenarioConfig& c) {
    const auto set_grid = [&](int dim, double extent, std::size_t points) {
        c.grid.dim = dim;
        c.grid.extent = {extent, extent, extent};
        c.grid.points = {points, points, points};
    };
    switch (c.kind) {
        case ScenarioKind::plane_wave:
            set_grid(1, 2 * std::numbers::pi, 64);
            c.dt = 1e-4;
            c.steps = 100;
            c.frame_stride = 1;
            break;
        case ScenarioKind::free_gaussian:
            set_grid(1, 40.0, 256);
            c.dt = 1e-3;
            c.steps = 1000;
            c.frame_stride = 10;
            break;
        case ScenarioKind::harmonic_ground:
            set_grid(1, 20.0, 128);
            c.dt = 1e-3;
            c.steps = 1000;
            c.frame_stride = 10;
            break;
        case ScenarioKind::point_source_2d:
            set_grid(2, 32.0, 128);
            c.dt = 1e-2;
            c.steps = 210;
            c.frame_stride = 2;
            c.initial.sigma0 = 0.5;
            c.ensemble.size = 4000;
            break;
        case ScenarioKind::custom:
            set_grid(1, 20.0, 128);
            c.dt = 1e-3;
            c.steps = 100;
            c.frame_stride = 1;
            break;
    }
}

void read_grid(const json& v, ScenarioConfig& c) {
    ObjectReader r(v, "grid");
    if (const json* d = r.find("dim")) {
        const auto dim = r.as_count(*d, "dim");
        if (dim < 1 || dim > kMaxDim) throw ValidationError("key \"grid.dim\" must be 1, 2 or 3");
        c.grid.dim = static_cast<int>(dim);
    }
    if (const json* e = r.find("extent")) {
        if (e->is_array()) {
            if (e->size() != static_cast<std::size_t>(c.grid.dim)) {
                throw ValidationError("key \"grid.extent\" needs one entry per dimension");
            }
            for (std::size_t a = 0; a < e->size(); ++a) c.grid.extent[a] = r.as_number((*e)[a], "extent");
        } else {
            c.grid.extent.fill(r.as_number(*e, "extent"));
        }
    }
    if (const json* p = r.find("points")) {
        if (p->is_array()) {
            if (p->size() != static_cast<std::size_t>(c.grid.dim)) {
                throw ValidationError("key \"grid.points\" needs one entry per dimension");
            }
            for (std::size_t a = 0; a < p->size(); ++a) c.grid.points[a] = r.as_count((*p)[a], "points");
        } else {
            c.grid.points.fill(static_cast<std::size_t>(r.as_count(*p, "points")));
        }
    }
    r.finish();
}

void read_potential(const json& v, ScenarioConfig& c) {
    ObjectReader r(v, "potential");
    std::string kind;
    r.text("kind", kind);
    if (!kind.empty()) {
        if (kind == "free") c.potential.kind = PotentialConfig::Kind::free;
        else if (kind == "harmonic") c.potential.kind = PotentialConfig::Kind::harmonic;
        else if (kind == "expression") c.potential.kind = PotentialConfig::Kind::expression;
        else throw ValidationError("key \"potential.kind\" has unknown value \"" + kind + "\"");
    }
    r.number("omega", c.potential.omega);
    r.point("center", c.potential.center);
    r.text("expression", c.potential.expression);
    r.finish();
}

void read_initial(const json& v, ScenarioConfig& c) {
    ObjectReader r(v, "initial");
    r.number("k", c.initial.k);
    r.number("sigma0", c.initial.sigma0);
    r.number("omega", c.initial.omega);
    r.point("center", c.initial.center);
    r.text("re", c.initial.re);
    r.text("im", c.initial.im);
    r.flag("normalize", c.initial.normalize);
    r.finish();
}

void read_ensemble(const json& v, ScenarioConfig& c) {
    ObjectReader r(v, "ensemble");
    r.count("size", c.ensemble.size);
    r.seed("seed", c.ensemble.seed);
    r.count("substeps", c.ensemble.substeps);
    if (const json* t = r.find("t_check")) {
        if (t->is_null()) c.ensemble.t_check.reset();
        else c.ensemble.t_check = r.as_number(*t, "t_check");
    }
    r.flag("frozen_control", c.ensemble.frozen_control);
    r.finish();
}

void read_detector(const json& v, ScenarioConfig& c) {
    ObjectReader r(v, "detector");
    r.number("radius_sigmas", c.detector.radius_sigmas);
    r.number("t_ring", c.detector.t_ring);
    r.count("bins", c.detector.bins);
    r.finish();
}

void read_mollifier(const json& v, ScenarioConfig& c) {
    if (v.is_null()) {
        c.mollifier.reset();
        return;
    }
    ObjectReader r(v, "mollifier");
    MollifierConfig m;
    r.number("epsilon", m.epsilon);
    r.point("position", m.position);
    if (const json* vel = r.find("velocity")) {
        if (vel->is_string()) {
            const auto s = vel->get<std::string>();
            if (s == "b_over_m") m.velocity_mode = MollifierConfig::Velocity::b_over_m;
            else if (s == "guidance") m.velocity_mode = MollifierConfig::Velocity::guidance;
            else throw ValidationError("key \"mollifier.velocity\" must be \"b_over_m\", \"guidance\" or an array");
        } else {
            m.velocity_mode = MollifierConfig::Velocity::given;
            m.velocity = r.as_point(*vel, "velocity");
        }
    }
    r.finish();
    if (!(m.epsilon > 0.0)) throw ValidationError("key \"mollifier.epsilon\" is required and must be positive");
    c.mollifier = m;
}

void read_output(const json& v, ScenarioConfig& c) {
    ObjectReader r(v, "output");
    r.count("trajectory_files", c.output.trajectory_files);
    r.flag("heatmaps", c.output.heatmaps);
    r.finish();
}

std::vector<Check> default_checks(const ScenarioConfig& c) {
    std::vector<Check> out{Check::schrodinger};
    if (c.action) {
        for (const auto& [check, _] : kCheckNames) {
            if (needs_action(check)) out.push_back(check);
        }
    }
    if (c.ensemble.size > 0) out.push_back(c.kind == ScenarioKind::point_source_2d ? Check::isotropy : Check::equivariance);
    if (c.mollifier) out.push_back(Check::source_term);
    return out;
}

std::string line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

ordered_json point_json(const Point& p, int dim) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < dim; ++i) a.push_back(p[i]);
    return a;
}

void require(bool condition, const std::string& message) {
    if (!condition) throw ValidationError(message);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

double wave_width(const ScenarioConfig& c, double t) {
    const double s0 = c.initial.sigma0;
    const double r = c.units.hbar * t / (2.0 * c.units.mass * s0 * s0);
    return s0 * std::sqrt(1.0 + r * r);
}

}  // namespace

std::string to_string(ScenarioKind kind) {
    for (const auto& [k, label] : kKindNames) {
        if (k == kind) return label;
    }
    return "unknown";
}

std::string to_string(Check check) {
    for (const auto& [c, label] : kCheckNames) {
        if (c == check) return label;
    }
    return "unknown";
}

std::optional<ScenarioKind> scenario_kind_from(std::string_view name) {
    for (const auto& [k, label] : kKindNames) {
        if (name == label) return k;
    }
    return std::nullopt;
}

std::optional<Check> check_from(std::string_view name) {
    for (const auto& [c, label] : kCheckNames) {
        if (name == label) return c;
    }
    return std::nullopt;
}

GridSpec ScenarioConfig::make_grid() const {
    return pilotwave::make_grid(grid.dim, std::span<const double>(grid.extent.data(), grid.dim),
                                std::span<const std::size_t>(grid.points.data(), grid.dim));
}

ScenarioConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        std::string what = e.what();
        if (const auto colon = what.rfind(": "); colon != std::string::npos) what = what.substr(colon + 2);
        throw ValidationError("JSON syntax error at " + line_column(text, e.byte) + ": " + what);
    }

    ObjectReader r(doc, "");
    ScenarioConfig c;
    std::string kind;
    r.text("scenario", kind);
    require(!kind.empty(), "key \"scenario\" is required");
    c.kind = enum_from(kKindNames, kind, "scenario");
    apply_kind_defaults(c);
    c.id = to_string(c.kind);
    r.text("id", c.id);

    if (const json* g = r.find("grid")) read_grid(*g, c);
    for (int a = c.grid.dim; a < kMaxDim; ++a) {
        c.grid.extent[a] = 1.0;
        c.grid.points[a] = 1;
    }
    r.number("dt", c.dt);
    r.count("steps", c.steps);
    r.count("frame_stride", c.frame_stride);
    r.number("hbar", c.units.hbar);
    r.number("mass", c.units.mass);

    std::string method = to_string(c.method);
    r.text("method", method);
    c.method = enum_from(std::array{std::pair{Propagator::split_step, "split_step"},
                                    std::pair{Propagator::implicit_midpoint, "implicit_midpoint"}},
                         method, "method");
    std::string scheme = "spectral";
    r.text("scheme", scheme);
    c.scheme = enum_from(std::array{std::pair{DerivativeScheme::spectral, "spectral"},
                                    std::pair{DerivativeScheme::central2, "central2"}},
                         scheme, "scheme");

    if (const json* v = r.find("initial")) read_initial(*v, c);
    if (c.kind == ScenarioKind::harmonic_ground) {
        c.potential.kind = PotentialConfig::Kind::harmonic;
        c.potential.omega = c.initial.omega;
        c.potential.center = c.initial.center;
    }
    if (const json* v = r.find("potential")) read_potential(*v, c);

    if (c.kind == ScenarioKind::plane_wave) c.action = format_number(2.0 * c.units.hbar * c.initial.k) + "*x";
    if (const json* v = r.find("action")) {
        if (v->is_null()) {
            c.action.reset();
        } else {
            require(v->is_string(), "key \"action\" must be an expression string or null");
            c.action = v->get<std::string>();
        }
    }

    if (const json* v = r.find("ensemble")) read_ensemble(*v, c);
    if (const json* v = r.find("detector")) read_detector(*v, c);
    if (const json* v = r.find("mollifier")) read_mollifier(*v, c);
    r.number("node_threshold", c.node_threshold);
    c.output_dir = "out/" + c.id;
    r.text("output_dir", c.output_dir);
    if (const json* v = r.find("output")) read_output(*v, c);

    if (const json* v = r.find("checks")) {
        require(v->is_array(), "key \"checks\" must be an array of check names");
        for (const auto& item : *v) {
            require(item.is_string(), "key \"checks\" must be an array of check names");
            c.checks.push_back(enum_from(kCheckNames, item.get<std::string>(), "checks"));
        }
    } else {
        c.checks = default_checks(c);
    }
    r.finish();

    validate_config(c);
    return c;
}

void validate_config(const ScenarioConfig& c) {
    require(!c.id.empty() && c.id.size() <= 128, "key \"id\" must be 1 to 128 characters");
    require(std::all_of(c.id.begin(), c.id.end(),
                        [](char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.'; }) &&
                c.id != "." && c.id != "..",
            "key \"id\" may only contain letters, digits, '_', '-' and '.'");
    require(c.grid.dim >= 1 && c.grid.dim <= kMaxDim, "key \"grid.dim\" must be 1, 2 or 3");
    std::size_t total = 1;
    for (int a = 0; a < c.grid.dim; ++a) {
        require(finite_positive(c.grid.extent[a]) && c.grid.extent[a] <= 1e6, "key \"grid.extent\" must be in (0, 1e6]");
        require(c.grid.points[a] >= 8 && c.grid.points[a] <= 8192 && c.grid.points[a] % 2 == 0,
                "key \"grid.points\" must be even and in [8, 8192]");
        total *= c.grid.points[a];
    }
    require(total <= kMaxGridPoints, "grid has " + std::to_string(total) + " points; the limit is 2^24");
    if (c.kind == ScenarioKind::point_source_2d) require(c.grid.dim == 2, "point_source_2d needs grid.dim = 2");

    require(finite_positive(c.dt) && c.dt <= 10.0, "key \"dt\" must be in (0, 10]");
    require(c.steps >= 1 && c.steps <= 10'000'000, "key \"steps\" must be in [1, 1e7]");
    require(c.frame_stride >= 1 && c.frame_stride <= c.steps, "key \"frame_stride\" must be in [1, steps]");
    const std::size_t frames = c.steps / c.frame_stride + 1;
    require(frames <= kMaxStoredValues / total,
            "storing " + std::to_string(frames) + " frames of " + std::to_string(total) +
                " points exceeds the 2^26 value limit; raise frame_stride");
    require(finite_positive(c.units.hbar) && c.units.hbar <= 1e6, "key \"hbar\" must be in (0, 1e6]");
    require(finite_positive(c.units.mass) && c.units.mass <= 1e6, "key \"mass\" must be in (0, 1e6]");

    require(std::isfinite(c.initial.k), "key \"initial.k\" must be finite");
    require(finite_positive(c.initial.sigma0), "key \"initial.sigma0\" must be positive");
    require(finite_positive(c.initial.omega), "key \"initial.omega\" must be positive");
    for (int a = 0; a < kMaxDim; ++a) {
        require(std::isfinite(c.initial.center[a]) && std::isfinite(c.potential.center[a]), "centers must be finite");
    }
    if (c.kind == ScenarioKind::plane_wave) {
        const double windings = c.initial.k * c.grid.extent[0] / (2 * std::numbers::pi);
        require(std::abs(windings - std::round(windings)) <= 1e-9 * std::max(1.0, std::abs(windings)),
                "plane_wave needs k * extent / (2 pi) to be an integer so the wave is periodic");
    }
    if (c.kind == ScenarioKind::custom) {
        require(!c.initial.re.empty(), "custom scenarios need key \"initial.re\"");
        Expression::parse(c.initial.re);
        Expression::parse(c.initial.im);
    }
    switch (c.potential.kind) {
        case PotentialConfig::Kind::free:
            break;
        case PotentialConfig::Kind::harmonic:
            require(finite_positive(c.potential.omega), "key \"potential.omega\" must be positive");
            break;
        case PotentialConfig::Kind::expression: {
            require(!c.potential.expression.empty(), "key \"potential.expression\" is required for kind expression");
            const auto e = Expression::parse(c.potential.expression);
            require(!e.depends_on_time(), "key \"potential.expression\" must not depend on t");
            break;
        }
    }
    if (c.action) Expression::parse(*c.action);

    require(c.ensemble.size <= 1'000'000, "key \"ensemble.size\" must be at most 1e6");
    require(c.ensemble.substeps >= 1 && c.ensemble.substeps <= 1000, "key \"ensemble.substeps\" must be in [1, 1000]");
    if (c.ensemble.t_check) {
        const double t = *c.ensemble.t_check;
        const double interval = c.dt * static_cast<double>(c.frame_stride);
        const double u = t / interval;
        require(std::isfinite(t) && t >= 0.0 && t <= c.final_time() * (1 + 1e-12) &&
                    std::abs(u - std::round(u)) <= 1e-9 * std::max(1.0, u),
                "key \"ensemble.t_check\" must be a stored frame time in [0, dt * steps]");
    }
    require(finite_positive(c.detector.radius_sigmas) && c.detector.radius_sigmas <= 100.0,
            "key \"detector.radius_sigmas\" must be in (0, 100]");
    require(finite_positive(c.detector.t_ring), "key \"detector.t_ring\" must be positive");
    require(c.detector.bins >= 2 && c.detector.bins <= 4096, "key \"detector.bins\" must be in [2, 4096]");
    if (c.mollifier) {
        require(finite_positive(c.mollifier->epsilon), "key \"mollifier.epsilon\" must be positive");
        for (int a = 0; a < kMaxDim; ++a) {
            require(std::isfinite(c.mollifier->position[a]) && std::isfinite(c.mollifier->velocity[a]),
                    "mollifier position and velocity must be finite");
        }
    }
    require(c.node_threshold > 0.0 && c.node_threshold < 1.0, "key \"node_threshold\" must be in (0, 1)");
    require(!c.output_dir.empty(), "key \"output_dir\" must not be empty");
    require(c.output.trajectory_files <= 100'000, "key \"output.trajectory_files\" must be at most 1e5");

    std::set<Check> seen;
    for (Check check : c.checks) {
        const std::string name = to_string(check);
        require(seen.insert(check).second, "check \"" + name + "\" is listed twice");
        if (needs_action(check)) require(c.action.has_value(), "check \"" + name + "\" needs key \"action\"");
        if (check == Check::schrodinger || is_residual_check(check) || check == Check::gauge_transfer) {
            require(frames >= 3, "check \"" + name + "\" needs at least 3 stored frames");
        }
        if (check == Check::equivariance || check == Check::isotropy) {
            require(c.ensemble.size > 0, "check \"" + name + "\" needs ensemble.size > 0");
        }
        if (check == Check::isotropy) {
            require(c.grid.dim == 2, "check \"isotropy\" needs a 2D grid");
            require(c.kind == ScenarioKind::point_source_2d || c.kind == ScenarioKind::free_gaussian,
                    "check \"isotropy\" needs a Gaussian scenario");
        }
        if (check == Check::source_term) require(c.mollifier.has_value(), "check \"source_term\" needs key \"mollifier\"");
    }
}

std::string serialize_config(const ScenarioConfig& c) {
    ordered_json j;
    j["scenario"] = to_string(c.kind);
    j["id"] = c.id;
    ordered_json grid;
    grid["dim"] = c.grid.dim;
    grid["extent"] = ordered_json::array();
    grid["points"] = ordered_json::array();
    for (int a = 0; a < c.grid.dim; ++a) {
        grid["extent"].push_back(c.grid.extent[a]);
        grid["points"].push_back(c.grid.points[a]);
    }
    j["grid"] = grid;
    j["dt"] = c.dt;
    j["steps"] = c.steps;
    j["frame_stride"] = c.frame_stride;
    j["hbar"] = c.units.hbar;
    j["mass"] = c.units.mass;
    j["method"] = to_string(c.method);
    j["scheme"] = c.scheme == DerivativeScheme::spectral ? "spectral" : "central2";

    ordered_json pot;
    static const char* pot_kinds[] = {"free", "harmonic", "expression"};
    pot["kind"] = pot_kinds[static_cast<int>(c.potential.kind)];
    pot["omega"] = c.potential.omega;
    pot["center"] = point_json(c.potential.center, kMaxDim);
    pot["expression"] = c.potential.expression;
    j["potential"] = pot;

    ordered_json init;
    init["k"] = c.initial.k;
    init["sigma0"] = c.initial.sigma0;
    init["omega"] = c.initial.omega;
    init["center"] = point_json(c.initial.center, kMaxDim);
    init["re"] = c.initial.re;
    init["im"] = c.initial.im;
    init["normalize"] = c.initial.normalize;
    j["initial"] = init;
    j["action"] = c.action ? ordered_json(*c.action) : ordered_json(nullptr);

    ordered_json ens;
    ens["size"] = c.ensemble.size;
    ens["seed"] = c.ensemble.seed;
    ens["substeps"] = c.ensemble.substeps;
    ens["t_check"] = c.ensemble.t_check ? ordered_json(*c.ensemble.t_check) : ordered_json(nullptr);
    ens["frozen_control"] = c.ensemble.frozen_control;
    j["ensemble"] = ens;

    ordered_json det;
    det["radius_sigmas"] = c.detector.radius_sigmas;
    det["t_ring"] = c.detector.t_ring;
    det["bins"] = c.detector.bins;
    j["detector"] = det;

    if (c.mollifier) {
        ordered_json m;
        m["epsilon"] = c.mollifier->epsilon;
        m["position"] = point_json(c.mollifier->position, kMaxDim);
        switch (c.mollifier->velocity_mode) {
            case MollifierConfig::Velocity::b_over_m: m["velocity"] = "b_over_m"; break;
            case MollifierConfig::Velocity::guidance: m["velocity"] = "guidance"; break;
            case MollifierConfig::Velocity::given: m["velocity"] = point_json(c.mollifier->velocity, kMaxDim); break;
        }
        j["mollifier"] = m;
    } else {
        j["mollifier"] = nullptr;
    }
    j["node_threshold"] = c.node_threshold;
    j["output_dir"] = c.output_dir;
    ordered_json out;
    out["trajectory_files"] = c.output.trajectory_files;
    out["heatmaps"] = c.output.heatmaps;
    j["output"] = out;
    j["checks"] = ordered_json::array();
    for (Check check : c.checks) j["checks"].push_back(to_string(check));
    return j.dump(2) + "\n";
}

std::vector<ScenarioInfo> list_scenarios() {
    return {
        {ScenarioKind::plane_wave, "plane wave with S = 2 hbar k x; every residual check applies"},
        {ScenarioKind::free_gaussian, "spreading free Gaussian; equivariance of a Born ensemble"},
        {ScenarioKind::harmonic_ground, "harmonic oscillator ground state; stationary density"},
        {ScenarioKind::point_source_2d, "2D point-like Gaussian source; ring detector isotropy"},
        {ScenarioKind::custom, "initial state, potential and S given as expressions"},
    };
}

fs::path resolve_output_dir(const ScenarioConfig& c) {
    if (const char* root = std::getenv("PILOTWAVE_OUTPUT_ROOT"); root && *root) return fs::path(root) / c.id;
    return fs::path(c.output_dir);
}

std::string version_string() { return PILOTWAVE_VERSION; }

std::optional<double> RunManifest::metric(std::string_view name) const {
    for (const auto& row : summary) {
        if (row.metric == name) return row.value;
    }
    return std::nullopt;
}

const ResidualReport* RunManifest::residual(std::string_view equation) const {
    for (const auto& r : residuals) {
        if (r.equation == equation) return &r;
    }
    return nullptr;
}

namespace {

constexpr const char* kManifestName = "manifest.json";

bool safe_relative(const fs::path& p) {
    if (p.empty() || p.is_absolute()) return false;
    for (const auto& part : p) {
        if (part == "..") return false;
    }
    return true;
}

std::vector<std::string> listed_files(const fs::path& manifest) {
    std::ifstream in(manifest);
    std::stringstream buf;
    buf << in.rdbuf();
    const json doc = json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded() || !doc.contains("files") || !doc["files"].is_array()) {
        throw Error("cannot read " + manifest.string());
    }
    std::vector<std::string> out;
    for (const auto& f : doc["files"]) {
        if (f.contains("path") && f["path"].is_string()) out.push_back(f["path"].get<std::string>());
    }
    return out;
}

void prepare_output_dir(const fs::path& dir) {
    if (fs::exists(dir) && !fs::is_directory(dir)) throw Error(dir.string() + " exists and is not a directory");
    fs::create_directories(dir);
    const fs::path manifest = dir / kManifestName;
    std::set<std::string> earlier;
    if (fs::exists(manifest)) {
        for (const auto& rel : listed_files(manifest)) {
            if (safe_relative(rel)) earlier.insert(fs::path(rel).generic_string());
        }
        earlier.insert(kManifestName);
    }
    // Refuse before touching anything, so a wrong directory loses nothing.
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_directory()) continue;
        const auto rel = fs::relative(e.path(), dir).generic_string();
        if (!earlier.count(rel)) {
            throw Error("output directory " + dir.string() + " holds " + rel +
                        ", which no earlier run recorded; use an empty directory");
        }
    }
    for (const auto& rel : earlier) fs::remove(dir / rel);
    std::vector<fs::path> dirs;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_directory()) dirs.push_back(e.path());
    }
    std::sort(dirs.rbegin(), dirs.rend());
    for (const auto& d : dirs) {
        if (fs::is_empty(d)) fs::remove(d);
    }
}

std::vector<ManifestFile> collect_files(const fs::path& dir) {
    std::vector<ManifestFile> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir).generic_string();
        if (rel == kManifestName) continue;
        files.push_back({rel, e.file_size(), sha256_file(e.path())});
    }
    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    return files;
}

ordered_json residual_json(const ResidualReport& r) {
    ordered_json j;
    j["equation"] = r.equation;
    j["rel_l2"] = r.rel_l2;
    j["l_inf"] = r.l_inf;
    j["unmasked_fraction"] = r.unmasked_fraction;
    j["n"] = r.n;
    j["dt"] = r.dt;
    return j;
}

void write_manifest(const RunManifest& m) {
    ordered_json j;
    j["version"] = m.version;
    j["status"] = m.ok() ? "ok" : "failed";
    j["seed"] = m.seed;
    j["config"] = ordered_json::parse(m.config_json);
    j["phases"] = ordered_json::array();
    for (const auto& p : m.phases) j["phases"].push_back({{"phase", p.phase}, {"seconds", p.seconds}});
    j["failures"] = ordered_json::array();
    for (const auto& f : m.failures) j["failures"].push_back({{"phase", f.phase}, {"message", f.message}});
    j["residuals"] = ordered_json::array();
    for (const auto& r : m.residuals) j["residuals"].push_back(residual_json(r));
    j["summary"] = ordered_json::array();
    for (const auto& s : m.summary) j["summary"].push_back({{"metric", s.metric}, {"value", s.value}});
    j["files"] = ordered_json::array();
    for (const auto& f : m.files) j["files"].push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
    const fs::path path = m.output_dir / kManifestName;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out.flush()) throw Error("failed writing " + path.string());
}

ComplexField initial_state(const ScenarioConfig& c, const GridSpec& g) {
    ComplexField psi(g, 0.0);
    const double hbar = c.units.hbar;
    const double m = c.units.mass;
    const int dim = g.dim();
    switch (c.kind) {
        case ScenarioKind::plane_wave: {
            const double amp = 1.0 / std::sqrt(g.volume());
            for (std::size_t j = 0; j < g.size(); ++j) psi.values[j] = std::polar(amp, c.initial.k * g.position(j)[0]);
            break;
        }
        case ScenarioKind::free_gaussian:
        case ScenarioKind::point_source_2d: {
            const double s0 = c.initial.sigma0;
            const double amp = std::pow(2 * std::numbers::pi * s0 * s0, -0.25 * dim);
            for (std::size_t j = 0; j < g.size(); ++j) {
                const Point d = g.displacement(g.position(j), c.initial.center);
                psi.values[j] = amp * std::exp(-dot(d, d) / (4 * s0 * s0));
            }
            break;
        }
        case ScenarioKind::harmonic_ground: {
            const double a = m * c.initial.omega / hbar;
            const double amp = std::pow(a / std::numbers::pi, 0.25 * dim);
            for (std::size_t j = 0; j < g.size(); ++j) {
                const Point d = g.displacement(g.position(j), c.initial.center);
                psi.values[j] = amp * std::exp(-0.5 * a * dot(d, d));
            }
            break;
        }
        case ScenarioKind::custom: {
            const auto re = sample_expression(Expression::parse(c.initial.re), g, 0.0);
            const auto im = sample_expression(Expression::parse(c.initial.im), g, 0.0);
            for (std::size_t j = 0; j < g.size(); ++j) psi.values[j] = Complex(re.values[j], im.values[j]);
            break;
        }
    }
    require_finite(psi, "initial state");
    if (c.initial.normalize) {
        double mass = 0.0;
        for (const auto& v : psi.values) mass += std::norm(v);
        mass *= g.cell_volume();
        if (!(mass > 0.0)) throw DegenerateFieldError("initial state is identically zero");
        const double s = 1.0 / std::sqrt(mass);
        for (auto& v : psi.values) v *= s;
    }
    return psi;
}

Potential make_potential(const ScenarioConfig& c, const GridSpec& g) {
    switch (c.potential.kind) {
        case PotentialConfig::Kind::free:
            return Potential::free();
        case PotentialConfig::Kind::harmonic:
            return Potential::harmonic(c.potential.omega, c.potential.center);
        case PotentialConfig::Kind::expression:
            return Potential::tabulated(sample_expression(Expression::parse(c.potential.expression), g, 0.0));
    }
    return Potential::free();
}

struct CheckOutcome {
    std::vector<ResidualReport> residuals;
    std::vector<SummaryRow> summary;
    std::optional<Table> ring_histogram;
    std::optional<RealField> source_magnitude;
};

// Everything later phases share. Filled in phase order; a phase only runs
// when what it reads is present.
struct RunState {
    std::optional<GridSpec> grid;
    std::optional<ComplexField> psi0;
    std::optional<Potential> potential;
    std::optional<PropagationResult> frames;
    std::optional<GaugeTriple> triple;
    std::vector<VectorField> b_model;  // b of psi (of Psi when there is no S)
    std::vector<VectorField> v_big;
    std::optional<Ensemble> ensemble;
    std::optional<Ensemble> frozen;
    std::vector<Trajectory> written;  // trajectories with their action, for output

    const std::vector<ComplexField>& model_frames() const {
        return triple ? triple->small_psi : frames->frames;
    }
};

double angular_variance(const ComplexField& psi, const Point& center, double radius) {
    constexpr int kAngles = 64;
    const SpectralInterpolant interp(psi);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < kAngles; ++i) {
        const double th = 2 * std::numbers::pi * i / kAngles;
        const Point p{center[0] + radius * std::cos(th), center[1] + radius * std::sin(th), 0.0};
        const double rho = std::norm(interp(p));
        sum += rho;
        sum2 += rho * rho;
    }
    const double mean = sum / kAngles;
    const double var = std::max(0.0, sum2 / kAngles - mean * mean);
    return var / (mean * mean);
}

CheckOutcome isotropy_check(const ScenarioConfig& c, const RunState& s) {
    CheckOutcome out;
    const auto& g = *s.grid;
    const Point& center = c.initial.center;
    const double radius = c.detector.radius_sigmas * wave_width(c, c.detector.t_ring);
    const std::size_t bins = c.detector.bins;

    std::vector<double> counts(bins, 0.0);
    std::size_t crossed = 0, missed = 0, outside = 0;
    for (const auto& traj : s.ensemble->trajectories) {
        const auto radial = [&](const Point& p) { return norm(g.displacement(p, center)); };
        if (traj.samples.empty() || radial(traj.samples.front().position) >= radius) {
            ++outside;
            continue;
        }
        bool hit = false;
        for (std::size_t k = 1; k < traj.samples.size() && !hit; ++k) {
            const Point a = g.displacement(traj.samples[k - 1].position, center);
            const Point b = g.displacement(traj.samples[k].position, center);
            const double ra = norm(a), rb = norm(b);
            if (rb < radius) continue;
            const double w = (radius - ra) / (rb - ra);
            const double x = a[0] + w * (b[0] - a[0]);
            const double y = a[1] + w * (b[1] - a[1]);
            const double u = (std::atan2(y, x) + std::numbers::pi) / (2 * std::numbers::pi);
            const auto bin = std::min(bins - 1, static_cast<std::size_t>(u * static_cast<double>(bins)));
            counts[bin] += 1.0;
            hit = true;
        }
        hit ? ++crossed : ++missed;
    }
    if (crossed == 0) throw DegenerateFieldError("no trajectory reached the detector ring");
    const std::vector<double> expected(bins, static_cast<double>(crossed) / static_cast<double>(bins));
    const double p = chi_square_p_value(counts, expected);

    Table hist{{"bin", "theta_lo", "theta_hi", "count", "expected"}, {}};
    for (std::size_t b = 0; b < bins; ++b) {
        const double lo = -std::numbers::pi + 2 * std::numbers::pi * static_cast<double>(b) / static_cast<double>(bins);
        const double hi = -std::numbers::pi + 2 * std::numbers::pi * static_cast<double>(b + 1) / static_cast<double>(bins);
        hist.add_row({static_cast<std::int64_t>(b), lo, hi, static_cast<std::int64_t>(counts[b]), expected[b]});
    }
    out.ring_histogram = std::move(hist);

    // Symmetry of the field itself, at the ring time and at the end.
    const auto& frames = *s.frames;
    const double t_ring = std::min(c.detector.t_ring, frames.frames.back().time);
    const auto ring_frame = static_cast<std::size_t>(std::lround(t_ring / frames.frame_interval()));
    double worst = 0.0;
    for (std::size_t k : {std::min(ring_frame, frames.frames.size() - 1), frames.frames.size() - 1}) {
        for (double r : {0.5 * radius, radius, 1.5 * radius}) {
            worst = std::max(worst, angular_variance(frames.frames[k], center, r));
        }
    }

    out.summary = {{"ring_radius", radius},
                   {"ring_crossings", static_cast<double>(crossed)},
                   {"ring_missed", static_cast<double>(missed)},
                   {"ring_started_outside", static_cast<double>(outside)},
                   {"isotropy_chi2_p_value", p},
                   {"angular_variance", worst}};
    return out;
}

CheckOutcome equivariance_check(const ScenarioConfig& c, const RunState& s) {
    CheckOutcome out;
    const double t = c.ensemble.t_check.value_or(s.frames->frames.back().time);
    const auto r = equivariance_statistic(*s.frames, *s.ensemble, t);
    const bool ks = r.kind == EquivarianceResult::Kind::ks_distance;
    out.summary.push_back({ks ? "equivariance_ks" : "equivariance_chi2_p_value", r.statistic});
    out.summary.push_back({"equivariance_survivors", static_cast<double>(r.survivors)});
    out.summary.push_back({"equivariance_aborted", static_cast<double>(r.aborted)});
    if (ks) out.summary.push_back({"ks_critical_99", ks_critical_99(r.survivors)});
    if (s.frozen) {
        const auto f = equivariance_statistic(*s.frames, *s.frozen, t);
        out.summary.push_back({ks ? "frozen_control_ks" : "frozen_control_chi2_p_value", f.statistic});
    }
    return out;
}

CheckOutcome source_check(const ScenarioConfig& c, const RunState& s) {
    CheckOutcome out;
    const auto& m = *c.mollifier;
    const NodeMaskPolicy policy{c.node_threshold};
    const ComplexField& phi = s.model_frames().back();
    ParticleState particle{s.grid->wrap(m.position), m.velocity};
    if (m.velocity_mode != MollifierConfig::Velocity::given) {
        const bool guidance = m.velocity_mode == MollifierConfig::Velocity::guidance;
        const auto field = guidance ? velocity_field(s.frames->frames.back(), c.scheme, policy, c.units)
                                    : b_field(phi, c.scheme, policy, c.units);
        const auto at = interpolate_linear(field, particle.position);
        if (!at) throw NodeError("the particle position is masked as a node");
        particle.velocity = *at;
        if (!guidance) {
            for (double& v : particle.velocity) v /= c.units.mass;
        }
    }
    const auto src = source_term_field(phi, particle, m.epsilon, policy, c.units, c.scheme);
    out.summary = {{"source_l1_mass", src.l1_mass}, {"source_reference_scale", src.reference_scale}};
    // Below this the field is rounding noise and has no meaningful shape.
    if (src.l1_mass > 1e-10 * src.reference_scale) {
        out.summary.push_back(
            {"source_l1_fraction_3eps", l1_fraction_within(src.field, particle.position, 3 * m.epsilon)});
    }
    if (s.grid->dim() == 2) {
        RealField mag(*s.grid, src.field.time);
        for (std::size_t j = 0; j < mag.size(); ++j) mag.values[j] = std::abs(src.field.values[j]);
        out.source_magnitude = std::move(mag);
    }
    return out;
}

CheckOutcome run_check(Check check, const ScenarioConfig& c, const RunState& s) {
    const ResidualOptions opts{c.scheme, NodeMaskPolicy{c.node_threshold}};
    CheckOutcome out;
    const auto residual = [&](ResidualReport r) { out.residuals.push_back(std::move(r)); };
    switch (check) {
        case Check::schrodinger:
            residual(schrodinger_residual(*s.frames, *s.potential, c.units, opts));
            break;
        case Check::model_field:
            residual(model_field_residual(*s.triple, *s.potential, opts));
            break;
        case Check::gauge_identity:
            residual(gauge_identity_residual(s.triple->small_psi, s.triple->action, c.units, opts));
            break;
        case Check::continuity: {
            std::vector<RealField> probability;
            for (const auto& f : s.triple->small_psi) probability.push_back(abs2(f));
            residual(continuity_residual(*s.triple, probability, 1.0 / c.units.mass, opts));
            break;
        }
        case Check::eikonal:
            residual(eikonal_identity_residual(s.triple->action, s.b_model, c.units, opts));
            break;
        case Check::stationary_action:
            residual(stationary_action_residual(s.triple->action));
            break;
        case Check::mass_ratio:
            residual(mass_ratio_residual(s.b_model, s.v_big, c.units.mass));
            break;
        case Check::velocity_gauge:
            residual(velocity_gauge_residual(s.frames->frames, s.triple->action, c.units, opts));
            break;
        case Check::gauge_transfer: {
            const auto r = gauge_transfer_discrepancy(*s.triple, *s.potential, opts);
            out.summary = {{"gauge_transfer_rel_l2", r.rel_l2}, {"gauge_transfer_l_inf", r.l_inf}};
            break;
        }
        case Check::equivariance:
            return equivariance_check(c, s);
        case Check::source_term:
            return source_check(c, s);
        case Check::isotropy:
            return isotropy_check(c, s);
    }
    return out;
}

bool wants(const ScenarioConfig& c, Check check) {
    return std::find(c.checks.begin(), c.checks.end(), check) != c.checks.end();
}

}  // namespace

RunManifest run_scenario(const ScenarioConfig& config) { return run_scenario(config, resolve_output_dir(config)); }

RunManifest run_scenario(const ScenarioConfig& c, const fs::path& dir) {
    validate_config(c);
    prepare_output_dir(dir);

    RunManifest m;
    m.config_json = serialize_config(c);
    m.version = version_string();
    m.output_dir = dir;
    m.seed = c.ensemble.seed;

    const auto phase = [&](const std::string& name, const std::function<void()>& body) {
        const auto start = std::chrono::steady_clock::now();
        bool ok = true;
        try {
            body();
        } catch (const std::exception& e) {
            m.failures.push_back({name, e.what()});
            ok = false;
        }
        m.phases.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
        return ok;
    };

    RunState s;
    const NodeMaskPolicy policy{c.node_threshold};
    bool ready = phase("initial", [&] {
        s.grid = c.make_grid();
        s.psi0 = initial_state(c, *s.grid);
        s.potential = make_potential(c, *s.grid);
    });
    ready = ready && phase("propagate", [&] {
        s.frames = c.method == Propagator::split_step
                       ? evolve_split_step(*s.psi0, *s.potential, c.dt, c.steps, c.frame_stride, c.units)
                       : evolve_implicit_midpoint(*s.psi0, *s.potential, c.dt, c.steps, c.frame_stride, c.units);
    });
    if (ready && c.action) {
        ready = phase("gauge", [&] {
            const auto expr = Expression::parse(*c.action);
            std::vector<RealField> action;
            for (const auto& f : s.frames->frames) action.push_back(sample_expression(expr, *s.grid, f.time));
            s.triple = make_gauge_triple(*s.frames, std::move(action), c.units);
        });
    }
    const bool need_b = wants(c, Check::eikonal) || wants(c, Check::mass_ratio) ||
                        (c.ensemble.size > 0 && c.output.trajectory_files > 0);
    if (ready && need_b) {
        ready = phase("fields", [&] {
            for (const auto& f : s.model_frames()) s.b_model.push_back(b_field(f, c.scheme, policy, c.units));
            if (wants(c, Check::mass_ratio)) {
                for (const auto& f : s.frames->frames) s.v_big.push_back(velocity_field(f, c.scheme, policy, c.units));
            }
        });
    }
    bool have_ensemble = false;
    if (ready && c.ensemble.size > 0) {
        have_ensemble = phase("ensemble", [&] {
            const GuidanceField guidance(*s.frames, c.scheme, policy, c.units);
            const auto starts = sample_born(s.frames->frames.front(), c.ensemble.size, c.ensemble.seed);
            const TrajectoryOptions opts{c.ensemble.substeps};
            s.ensemble = integrate_ensemble(guidance, starts, c.ensemble.seed, opts);
            if (c.ensemble.frozen_control && wants(c, Check::equivariance)) {
                s.frozen = integrate_ensemble(guidance, starts, c.ensemble.seed, opts, true);
            }
            const std::size_t n = std::min(c.output.trajectory_files, s.ensemble->trajectories.size());
            for (std::size_t i = 0; i < n; ++i) {
                s.written.push_back(action_along_trajectory(s.ensemble->trajectories[i], s.b_model));
            }
        });
    }

    std::vector<CheckOutcome> outcomes;
    if (ready) {
        const auto start = std::chrono::steady_clock::now();
        std::vector<std::pair<Check, std::future<CheckOutcome>>> pending;
        for (Check check : c.checks) {
            if ((check == Check::equivariance || check == Check::isotropy) && !have_ensemble) {
                m.failures.push_back({"check:" + to_string(check), "skipped: the ensemble phase failed"});
                continue;
            }
            pending.emplace_back(check, std::async(std::launch::async, [&, check] { return run_check(check, c, s); }));
        }
        for (auto& [check, future] : pending) {
            try {
                outcomes.push_back(future.get());
            } catch (const std::exception& e) {
                m.failures.push_back({"check:" + to_string(check), e.what()});
            }
        }
        m.phases.push_back({"checks", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
    }

    phase("outputs", [&] {
        Table residuals = residual_table();
        Table summary = summary_table();
        summary.add_row({c.id, std::string("seed"), static_cast<std::int64_t>(c.ensemble.seed)});
        for (const auto& o : outcomes) {
            for (const auto& r : o.residuals) {
                add_residual_row(residuals, c.id, r);
                m.residuals.push_back(r);
            }
            for (const auto& row : o.summary) {
                summary.add_row({c.id, row.metric, row.value});
                m.summary.push_back(row);
            }
            if (o.ring_histogram) emit_csv(*o.ring_histogram, dir / "ring_histogram.csv");
            if (o.source_magnitude && c.output.heatmaps) emit_heatmap(*o.source_magnitude, dir / "source.pgm");
        }
        emit_csv(residuals, dir / "residuals.csv");
        emit_csv(summary, dir / "summary.csv");

        const int dim = c.grid.dim;
        for (std::size_t i = 0; i < s.written.size(); ++i) {
            Table t = trajectory_table(dim);
            add_trajectory_rows(t, s.written[i], dim);
            char name[32];
            std::snprintf(name, sizeof name, "trajectory_%04zu.csv", i);
            emit_csv(t, dir / "trajectories" / name);
        }
        if (c.output.heatmaps && dim == 2 && s.frames) {
            emit_heatmap(abs2(s.frames->frames.back()), dir / "density_final.pgm");
            if (s.triple) emit_heatmap(s.triple->action.back(), dir / "action_final.pgm");
        }
    });

    m.files = collect_files(dir);
    write_manifest(m);
    return m;
}

std::vector<std::string> verify_manifest(const fs::path& dir) {
    std::vector<std::string> bad;
    std::set<std::string> listed;
    std::ifstream in(dir / kManifestName);
    std::stringstream buf;
    buf << in.rdbuf();
    const json doc = json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded() || !doc.contains("files")) return {kManifestName};
    for (const auto& f : doc["files"]) {
        const auto rel = f.value("path", std::string{});
        listed.insert(rel);
        const fs::path p = dir / rel;
        if (!safe_relative(rel) || !fs::is_regular_file(p) || fs::file_size(p) != f.value("bytes", std::uintmax_t{0}) ||
            sha256_file(p) != f.value("sha256", std::string{})) {
            bad.push_back(rel);
        }
    }
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir).generic_string();
        if (rel != kManifestName && !listed.count(rel)) bad.push_back(rel);
    }
    return bad;
}

}  // namespace pilotwave
