#pragma once

#include "axieuler/bichar.hpp"
#include "axieuler/criteria.hpp"
#include "axieuler/flows.hpp"
#include "axieuler/linstab.hpp"
#include "axieuler/selfsim.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace axieuler {

/// Maps JSON pointers ("/grid/nr") to the 1-based line where the value starts.
/// Assumes the text already parsed as JSON.
inline std::map<std::string, int> json_value_lines(const std::string& text) {
    std::map<std::string, int> lines;
    struct Frame {
        bool array;
        std::string path;
        int index;
        std::string key;
    };
    std::vector<Frame> st;
    int line = 1;
    std::size_t i = 0;
    auto escape = [](const std::string& k) {
        std::string o;
        for (char c : k) o += c == '~' ? std::string("~0") : c == '/' ? std::string("~1") : std::string(1, c);
        return o;
    };
    auto here = [&]() -> std::string {
        if (st.empty()) return "";
        const Frame& f = st.back();
        return f.path + "/" + (f.array ? std::to_string(f.index) : escape(f.key));
    };
    auto read_string = [&]() {
        std::string s;
        ++i;
        while (i < text.size() && text[i] != '"') {
            if (text[i] == '\\' && i + 1 < text.size()) {
                s += text[i + 1];
                i += 2;
                continue;
            }
            s += text[i++];
        }
        ++i;
        return s;
    };
    bool expect_key = false;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == ':') {
            ++i;
            continue;
        }
        if (c == ',') {
            if (!st.empty() && st.back().array) ++st.back().index;
            expect_key = !st.empty() && !st.back().array;
            ++i;
            continue;
        }
        if (c == '}' || c == ']') {
            st.pop_back();
            expect_key = false;
            ++i;
            continue;
        }
        if (expect_key && c == '"') {
            st.back().key = read_string();
            expect_key = false;
            continue;
        }
        const std::string at = here();
        lines.emplace(at, line);
        if (c == '{' || c == '[') {
            st.push_back({c == '[', at, 0, {}});
            expect_key = c == '{';
            ++i;
            continue;
        }
        if (c == '"') {
            read_string();
            continue;
        }
        while (i < text.size() && std::string(",}] \t\r\n").find(text[i]) == std::string::npos) ++i;
    }
    return lines;
}

/// Error raised while loading a config; the message carries file:line.
class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// JSON document with source lines for every value.
class ConfigSource {
public:
    ConfigSource(std::string text, std::string file) : file_(std::move(file)), text_(std::move(text)) {
        try {
            doc_ = nlohmann::json::parse(text_);
        } catch (const nlohmann::json::parse_error& e) {
            std::size_t line = 1, col = 1;
            for (std::size_t i = 0; i + 1 < e.byte && i < text_.size(); ++i) {
                if (text_[i] == '\n') {
                    ++line;
                    col = 1;
                } else {
                    ++col;
                }
            }
            throw ConfigError(file_ + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON: " +
                              e.what());
        }
        if (!doc_.is_object()) throw ConfigError(file_ + ":1: config must be a JSON object");
        lines_ = json_value_lines(text_);
    }

    static ConfigSource load(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw ConfigError(p.string() + ": cannot open config");
        std::ostringstream os;
        os << in.rdbuf();
        return ConfigSource(os.str(), p.string());
    }

    const nlohmann::json& doc() const { return doc_; }
    const std::string& file() const { return file_; }
    const std::string& text() const { return text_; }

    int line_of(const std::string& pointer) const {
        std::string p = pointer;
        for (;;) {
            const auto it = lines_.find(p);
            if (it != lines_.end()) return it->second;
            const auto slash = p.rfind('/');
            if (slash == std::string::npos || p.empty()) return 1;
            p = p.substr(0, slash);
        }
    }
    [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
        throw ConfigError(file_ + ":" + std::to_string(line_of(pointer)) + ": " + (pointer.empty() ? "/" : pointer) +
                          ": " + msg);
    }

private:
    std::string file_;
    std::string text_;
    nlohmann::json doc_;
    std::map<std::string, int> lines_;
};

/// Typed reader over one JSON object, rejecting unknown keys.
class Section {
public:
    Section(const ConfigSource& src, std::string pointer, std::set<std::string> known)
        : src_(src), ptr_(std::move(pointer)), known_(std::move(known)) {
        const nlohmann::json* j = node();
        if (j && !j->is_object()) src_.fail(ptr_, "must be an object");
        if (j)
            for (auto it = j->begin(); it != j->end(); ++it)
                if (!known_.count(it.key())) src_.fail(ptr_ + "/" + it.key(), "unknown key");
    }

    bool present() const { return node() != nullptr; }
    bool has(const std::string& k) const { return node() && node()->contains(k); }
    std::string at(const std::string& k) const { return ptr_ + "/" + k; }
    [[noreturn]] void fail(const std::string& k, const std::string& msg) const { src_.fail(at(k), msg); }

    double number(const std::string& k, double def) const {
        if (!has(k)) return def;
        return number_at(k, (*node())[k]);
    }
    double number(const std::string& k) const {
        if (!has(k)) src_.fail(ptr_, "missing required key '" + k + "'");
        return number_at(k, (*node())[k]);
    }
    int integer(const std::string& k, int def) const {
        if (!has(k)) return def;
        const auto& v = (*node())[k];
        if (!v.is_number_integer()) fail(k, "must be an integer");
        return v.get<int>();
    }
    std::string string(const std::string& k, const std::string& def) const {
        if (!has(k)) return def;
        const auto& v = (*node())[k];
        if (!v.is_string()) fail(k, "must be a string");
        return v.get<std::string>();
    }
    /// A number, "inf", or an exact fraction such as "1/2".
    Rational rational(const std::string& k, Rational def) const {
        if (!has(k)) return def;
        return rational_of((*node())[k], at(k));
    }
    std::vector<double> numbers(const std::string& k, std::vector<double> def) const {
        if (!has(k)) return def;
        const auto& v = (*node())[k];
        if (!v.is_array() || v.empty()) fail(k, "must be a non-empty array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number_value(v[i], at(k) + "/" + std::to_string(i)));
        return out;
    }
    std::vector<Rational> rationals(const std::string& k, std::vector<Rational> def) const {
        if (!has(k)) return def;
        const auto& v = (*node())[k];
        if (!v.is_array() || v.empty()) fail(k, "must be a non-empty array");
        std::vector<Rational> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(rational_of(v[i], at(k) + "/" + std::to_string(i)));
        return out;
    }

private:
    const nlohmann::json* node() const {
        const nlohmann::json::json_pointer jp(ptr_);
        return src_.doc().contains(jp) ? &src_.doc()[jp] : nullptr;
    }
    double number_value(const nlohmann::json& v, const std::string& p) const {
        if (v.is_number()) return v.get<double>();
        if (v.is_string()) {
            const std::string s = v.get<std::string>();
            if (s == "inf" || s == "infinity") return infinity;
            try {
                return rational_of(v, p).to_double();
            } catch (const ConfigError&) {
            }
        }
        src_.fail(p, "must be a number");
    }
    double number_at(const std::string& k, const nlohmann::json& v) const { return number_value(v, at(k)); }
    Rational rational_of(const nlohmann::json& v, const std::string& p) const {
        try {
            if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
            if (v.is_number()) return Rational::approximate(v.get<double>());
            if (v.is_string()) return Rational::parse(v.get<std::string>());
        } catch (const ValidationError& e) {
            src_.fail(p, e.what());
        }
        src_.fail(p, "must be a number or a fraction string such as \"1/2\"");
    }

    const ConfigSource& src_;
    std::string ptr_;
    std::set<std::string> known_;
};

struct OutputConfig {
    std::string dir = "run";
    int snapshot_stride = 10;
};

struct RunLength {
    double t_end = 1.0;
    double dt_max = 1e-2;
};

struct TraceConfig {
    std::string snapshots;       ///< empty: <out>/snapshots
    double T = 0.0;              ///< 0: last snapshot time
    double sigma = 0.0;
    int audit_seeds = 8;
};

struct MonitorConfig {
    std::string snapshots;
    CriterionParams params{};
};

struct LambdaConfig {
    double p = 2.0;
    double sigma = 0.0;
    double T = 0.1;
    std::vector<double> eps{0.1, 0.05, 0.025};
    double delta = 0.0;
    double xi_scale = 1.0;
    int generic_members = 2;
    int samples = 4;             ///< output times in (0, T]
    double tolerance = 0.05;
    std::string base = "initial";  ///< "initial" (frozen initial state) or "snapshots"
};

struct ScalingConfig {
    bool present = false;
    ScalingParams params{};
    std::string series;          ///< lambda CSV; empty: <out>/lambda.csv
    ProfileWindow window{};
};

struct RunConfig {
    std::string source_file;
    nlohmann::json echo;
    AxiGrid grid = make_grid(1.0, 0.0, 1.0, 64, 64);
    std::string flow_name = "gaussian_swirl_ring";
    FlowParams flow{};
    SolverConfig solver{};
    RunLength run{};
    OutputConfig output{};
    EnsembleSpec ensemble{};
    TraceConfig trace{};
    MonitorConfig monitor{};
    LambdaConfig lambda{};
    ScalingConfig scaling{};

    std::string flow_id() const {
        std::ostringstream os;
        os << flow_name << "@" << grid.nr << "x" << grid.nz;
        return os.str();
    }
};

inline RunConfig parse_config(const ConfigSource& src) {
    RunConfig c;
    c.source_file = src.file();
    c.echo = src.doc();
    Section top(src, "", {"grid", "flow", "solver", "output", "ensemble", "trace", "monitor", "lambda", "scaling"});

    Section g(src, "/grid", {"nr", "nz", "r_max", "z_min", "z_max"});
    {
        const int nr = g.integer("nr", 64), nz = g.integer("nz", 64);
        if (nr < 8) g.fail("nr", "must be >= 8");
        if (nz < 8) g.fail("nz", "must be >= 8");
        const double r_max = g.number("r_max", 1.0), z_min = g.number("z_min", 0.0), z_max = g.number("z_max", 1.0);
        if (!(r_max > 0.0) || !std::isfinite(r_max)) g.fail("r_max", "must be positive");
        if (!(z_max > z_min)) g.fail("z_max", "must exceed z_min");
        c.grid = make_grid(r_max, z_min, z_max, nr, nz);
    }

    Section f(src, "/flow", {"name", "omega", "r0", "z0", "delta", "amplitude", "chi_amplitude", "perturbation",
                            "perturbation_mode"});
    c.flow_name = f.string("name", c.flow_name);
    try {
        parse_flow_name(c.flow_name);
    } catch (const ValidationError&) {
        f.fail("name", "unknown flow '" + c.flow_name + "' (zero, rigid_rotation, gaussian_swirl_ring, poloidal_ring)");
    }
    c.flow.omega = f.number("omega", c.flow.omega);
    c.flow.r0 = f.number("r0", c.flow.r0);
    c.flow.z0 = f.number("z0", c.flow.z0);
    c.flow.delta = f.number("delta", c.flow.delta);
    c.flow.amplitude = f.number("amplitude", c.flow.amplitude);
    c.flow.chi_amplitude = f.number("chi_amplitude", c.flow.chi_amplitude);
    c.flow.perturbation = f.number("perturbation", c.flow.perturbation);
    c.flow.perturbation_mode = f.integer("perturbation_mode", c.flow.perturbation_mode);
    if (!(c.flow.delta > 0.0)) f.fail("delta", "must be positive");
    if (!(c.flow.r0 > 0.0 && c.flow.r0 < c.grid.r_max)) f.fail("r0", "must lie in (0, r_max)");

    Section s(src, "/solver", {"t_end", "dt_max", "cfl", "advection", "hyperviscosity"});
    c.run.t_end = s.number("t_end", c.run.t_end);
    c.run.dt_max = s.number("dt_max", c.run.dt_max);
    if (!(c.run.t_end > 0.0) || !std::isfinite(c.run.t_end)) s.fail("t_end", "must be positive");
    if (!(c.run.dt_max > 0.0)) s.fail("dt_max", "must be positive");
    c.solver.cfl = s.number("cfl", c.solver.cfl);
    if (!(c.solver.cfl > 0.0 && c.solver.cfl <= 1.0)) s.fail("cfl", "must lie in (0, 1]");
    const std::string adv = s.string("advection", "upwind3");
    if (adv == "upwind3")
        c.solver.advection = AdvectionScheme::upwind3;
    else if (adv == "centered2")
        c.solver.advection = AdvectionScheme::centered2;
    else
        s.fail("advection", "must be \"upwind3\" or \"centered2\"");
    c.solver.hyperviscosity = s.number("hyperviscosity", 0.0);
    if (!(c.solver.hyperviscosity >= 0.0)) s.fail("hyperviscosity", "must be >= 0");

    Section o(src, "/output", {"dir", "snapshot_stride"});
    c.output.dir = o.string("dir", c.output.dir);
    c.output.snapshot_stride = o.integer("snapshot_stride", c.output.snapshot_stride);
    if (c.output.snapshot_stride < 1) o.fail("snapshot_stride", "must be >= 1");

    Section e(src, "/ensemble", {"positions", "angles", "r_min_seed", "r_max_seed", "dt"});
    c.ensemble.positions = e.integer("positions", c.ensemble.positions);
    c.ensemble.angles = e.integer("angles", c.ensemble.angles);
    c.ensemble.r_min_seed = e.number("r_min_seed", c.ensemble.r_min_seed);
    c.ensemble.r_max_seed = e.number("r_max_seed", c.ensemble.r_max_seed);
    c.ensemble.dt = e.number("dt", c.ensemble.dt);
    if (c.ensemble.positions < 1) e.fail("positions", "must be >= 1");
    if (c.ensemble.angles < 1) e.fail("angles", "must be >= 1");
    if (!(c.ensemble.r_min_seed > 0.0 && c.ensemble.r_min_seed < c.grid.r_max)) e.fail("r_min_seed", "must lie in (0, r_max)");
    if (c.ensemble.r_max_seed != 0.0 && !(c.ensemble.r_max_seed > c.ensemble.r_min_seed && c.ensemble.r_max_seed <= c.grid.r_max))
        e.fail("r_max_seed", "must be 0 or lie in (r_min_seed, r_max]");
    if (!(c.ensemble.dt > 0.0)) e.fail("dt", "must be positive");

    Section t(src, "/trace", {"snapshots", "T", "sigma", "audit_seeds"});
    c.trace.snapshots = t.string("snapshots", "");
    c.trace.T = t.number("T", 0.0);
    c.trace.sigma = t.number("sigma", 0.0);
    c.trace.audit_seeds = t.integer("audit_seeds", c.trace.audit_seeds);
    if (!(c.trace.T >= 0.0)) t.fail("T", "must be >= 0");
    if (!std::isfinite(c.trace.sigma)) t.fail("sigma", "must be finite");
    if (c.trace.audit_seeds < 0) t.fail("audit_seeds", "must be >= 0");

    Section m(src, "/monitor", {"snapshots", "a", "b", "s", "q"});
    c.monitor.snapshots = m.string("snapshots", "");
    c.monitor.params.a = m.rational("a", Rational(1, 2));
    c.monitor.params.b = m.rational("b", Rational(1, 2));
    c.monitor.params.s = m.number("s", 3.5);
    if (m.has("q")) c.monitor.params.q = m.number("q");
    if (const auto v = c.monitor.params.violations(); !v.empty()) {
        std::string msg = "criterion parameters violate:";
        for (const auto& x : v) msg += " [" + x + "]";
        src.fail(m.present() ? "/monitor" : "", msg);
    }

    Section l(src, "/lambda", {"p", "sigma", "T", "eps", "delta", "xi_scale", "generic_members", "samples", "tolerance", "base"});
    c.lambda.p = l.number("p", c.lambda.p);
    c.lambda.sigma = l.number("sigma", c.lambda.sigma);
    c.lambda.T = l.number("T", c.lambda.T);
    c.lambda.eps = l.numbers("eps", c.lambda.eps);
    c.lambda.delta = l.number("delta", c.lambda.delta);
    c.lambda.xi_scale = l.number("xi_scale", c.lambda.xi_scale);
    c.lambda.generic_members = l.integer("generic_members", c.lambda.generic_members);
    c.lambda.samples = l.integer("samples", c.lambda.samples);
    c.lambda.tolerance = l.number("tolerance", c.lambda.tolerance);
    c.lambda.base = l.string("base", c.lambda.base);
    if (!(c.lambda.p >= 1.0)) l.fail("p", "must be >= 1");
    {
        const NormSpec ns{c.lambda.p, c.lambda.sigma, Measure::three_d};
        if (!ns.sigma_admissible()) l.fail("sigma", "must lie in the open interval (-2/p', 2/p)");
    }
    if (!(c.lambda.T > 0.0)) l.fail("T", "must be positive");
    for (std::size_t i = 0; i < c.lambda.eps.size(); ++i)
        if (!(c.lambda.eps[i] > 0.0)) src.fail(l.at("eps") + "/" + std::to_string(i), "must be positive");
    if (!(c.lambda.delta >= 0.0)) l.fail("delta", "must be >= 0 (0 selects five cells)");
    if (!(c.lambda.xi_scale > 0.0)) l.fail("xi_scale", "must be positive");
    if (c.lambda.generic_members < 0) l.fail("generic_members", "must be >= 0");
    if (c.lambda.samples < 1) l.fail("samples", "must be >= 1");
    if (!(c.lambda.tolerance >= 0.0)) l.fail("tolerance", "must be >= 0");
    if (c.lambda.base != "initial" && c.lambda.base != "snapshots") l.fail("base", "must be \"initial\" or \"snapshots\"");

    Section sc(src, "/scaling", {"alpha", "beta", "T_star", "p", "center", "series", "window"});
    c.scaling.present = sc.present();
    if (sc.present()) {
        ScalingParams& sp = c.scaling.params;
        sp.alpha = sc.number("alpha");
        sp.beta = sc.number("beta");
        sp.T_star = sc.number("T_star");
        sp.p = sc.number("p", 2.0);
        if (!(sp.beta > 0.0)) sc.fail("beta", "must be > 0");
        if (!(sp.p >= 1.0)) sc.fail("p", "must be >= 1");
        Section ce(src, "/scaling/center", {"t", "r", "z"});
        if (ce.present()) {
            sp.center.t = ce.numbers("t", {0.0});
            sp.center.r = ce.numbers("r", {0.5});
            sp.center.z = ce.numbers("z", {0.5});
            try {
                sp.center.validate();
            } catch (const ValidationError& err) {
                src.fail("/scaling/center", err.what());
            }
        }
        c.scaling.series = sc.string("series", "");
        Section w(src, "/scaling/window", {"yr_min", "yr_max", "yz_min", "yz_max", "nr", "nz"});
        ProfileWindow& pw = c.scaling.window;
        pw.yr_min = w.number("yr_min", pw.yr_min);
        pw.yr_max = w.number("yr_max", pw.yr_max);
        pw.yz_min = w.number("yz_min", pw.yz_min);
        pw.yz_max = w.number("yz_max", pw.yz_max);
        pw.nr = w.integer("nr", pw.nr);
        pw.nz = w.integer("nz", pw.nz);
        try {
            pw.validate();
        } catch (const ValidationError& err) {
            src.fail("/scaling/window", err.what());
        }
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& p) { return parse_config(ConfigSource::load(p)); }

} // namespace axieuler
