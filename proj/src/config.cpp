#include "sre/config.hpp"

#include <fstream>
#include <sstream>

namespace sre {

using nlohmann::json;

SolveOptions SolverConfig::solve_options() const {
    SolveOptions opts;
    opts.picard.picard_tol = picard_tol;
    opts.picard.max_iter = max_iter;
    opts.picard.overflow_guard = overflow_guard;
    opts.check_tol = check_tol;
    opts.delta = delta;
    opts.residual_tol = residual_tol;
    opts.identity_tol = identity_tol;
    opts.bound_tol = bound_tol;
    opts.override_checks = override_checks;
    return opts;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

const json& field(const json& j, const std::string& where, const std::string& key) {
    const auto it = j.find(key);
    if (it == j.end()) fail(where, "missing required field '" + key + "'");
    return *it;
}

double get_number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

double number_or(const json& j, const std::string& where, const std::string& key,
                 double fallback) {
    const auto it = j.find(key);
    return it == j.end() ? fallback : get_number(*it, where + "." + key);
}

int int_or(const json& j, const std::string& where, const std::string& key,
           int fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer()) fail(where + "." + key, "expected an integer");
    return it->get<int>();
}

bool bool_or(const json& j, const std::string& where, const std::string& key,
             bool fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_boolean()) fail(where + "." + key, "expected a boolean");
    return it->get<bool>();
}

std::uint64_t seed_or(const json& j, const std::string& where, const std::string& key,
                      std::uint64_t fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer()) fail(where + "." + key, "expected an integer seed");
    return it->get<std::uint64_t>();
}

Mat flat_to_mat(const json& arr, Eigen::Index n, const std::string& where) {
    if (!arr.is_array()) fail(where, "expected a flat row-major array");
    if (arr.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
        std::ostringstream os;
        os << "expected " << n * n << " entries for n=" << n << ", got " << arr.size();
        fail(where, os.str());
    }
    Mat m(n, n);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            m(i, j) = get_number(arr[k++], where);
        }
    }
    return m;
}

/// A matrix-valued coefficient: a number (n = 1), a flat row-major array,
/// or a table {"times": [...], "values": [[...], ...]}.
MatFn parse_mat_fn(const json& j, Eigen::Index n, const std::string& where) {
    if (j.is_number()) {
        if (n != 1) fail(where, "scalar shorthand is only valid for n=1");
        Mat m(1, 1);
        m(0, 0) = j.get<double>();
        return MatFn::constant(m);
    }
    if (j.is_array()) {
        return MatFn::constant(flat_to_mat(j, n, where));
    }
    if (j.is_object()) {
        const json& times = field(j, where, "times");
        const json& values = field(j, where, "values");
        if (!times.is_array() || !values.is_array() || times.size() != values.size()) {
            fail(where, "table needs matching 'times' and 'values' arrays");
        }
        std::vector<double> ts;
        std::vector<Mat> vs;
        for (std::size_t k = 0; k < times.size(); ++k) {
            ts.push_back(get_number(times[k], where + ".times"));
            vs.push_back(flat_to_mat(values[k], n, where + ".values"));
        }
        try {
            return MatFn::table(std::move(ts), std::move(vs));
        } catch (const Error& e) {
            fail(where, e.what());
        }
    }
    fail(where, "expected a number, flat array, or {times, values} table");
}

Mat parse_mat(const json& j, Eigen::Index n, const std::string& where) {
    if (j.is_number()) {
        if (n != 1) fail(where, "scalar shorthand is only valid for n=1");
        Mat m(1, 1);
        m(0, 0) = j.get<double>();
        return m;
    }
    return flat_to_mat(j, n, where);
}

SymMat parse_sym_mat(const json& j, Eigen::Index n, const std::string& where) {
    try {
        return SymMat(parse_mat(j, n, where));
    } catch (const NonSymmetric& e) {
        fail(where, e.what());
    }
}

MatFn constant_zero(Eigen::Index n) {
    return MatFn::constant(Mat::Zero(n, n));
}

SREProblem parse_problem(const json& j) {
    const std::string where = "problem";
    SREProblem p;
    const int n_int = int_or(j, where, "n", 0);
    if (n_int < 1) fail(where + ".n", "dimension must be a positive integer");
    const auto n = static_cast<Eigen::Index>(n_int);
    p.coeffs.n = n;
    p.T = get_number(field(j, where, "T"), where + ".T");
    p.coeffs.A = parse_mat_fn(field(j, where, "A"), n, where + ".A");
    p.coeffs.B = parse_mat_fn(field(j, where, "B"), n, where + ".B");
    p.coeffs.C = parse_mat_fn(field(j, where, "C"), n, where + ".C");
    p.coeffs.Q = parse_mat_fn(field(j, where, "Q"), n, where + ".Q");
    p.H = parse_sym_mat(field(j, where, "H"), n, where + ".H");

    if (j.contains("gauge")) {
        const json& g = j["gauge"];
        const std::string gw = where + ".gauge";
        const std::string mode = g.value("mode", std::string("deterministic"));
        if (mode == "deterministic") {
            p.gauge.mode = GaugeMode::deterministic;
        } else if (mode == "pathwise") {
            p.gauge.mode = GaugeMode::pathwise;
        } else {
            fail(gw + ".mode", "expected 'deterministic' or 'pathwise'");
        }
        p.gauge.R0 = g.contains("R0") ? parse_sym_mat(g["R0"], n, gw + ".R0")
                                      : SymMat::zero(n);
        p.gauge.F = g.contains("F") ? parse_mat_fn(g["F"], n, gw + ".F")
                                    : constant_zero(n);
        p.gauge.G = g.contains("G") ? parse_mat_fn(g["G"], n, gw + ".G")
                                    : constant_zero(n);
    } else {
        p.gauge.R0 = SymMat::zero(n);
        p.gauge.F = constant_zero(n);
        p.gauge.G = constant_zero(n);
    }
    return p;
}

SolverConfig parse_solver(const json& j) {
    const std::string where = "solver";
    SolverConfig s;
    s.grid_steps = int_or(j, where, "grid_steps", s.grid_steps);
    s.picard_tol = number_or(j, where, "picard_tol", s.picard_tol);
    s.max_iter = int_or(j, where, "max_iter", s.max_iter);
    s.overflow_guard = number_or(j, where, "overflow_guard", s.overflow_guard);
    s.override_checks = bool_or(j, where, "override_checks", s.override_checks);
    s.check_tol = number_or(j, where, "check_tol", s.check_tol);
    s.delta = number_or(j, where, "delta", s.delta);
    s.residual_tol = number_or(j, where, "residual_tol", s.residual_tol);
    s.identity_tol = number_or(j, where, "identity_tol", s.identity_tol);
    s.bound_tol = number_or(j, where, "bound_tol", s.bound_tol);
    if (s.grid_steps < 2) fail(where + ".grid_steps", "need at least 2 steps");
    if (s.max_iter < 1) fail(where + ".max_iter", "need at least 1 iteration");
    if (!(s.picard_tol > 0)) fail(where + ".picard_tol", "must be positive");
    return s;
}

OracleConfig parse_oracle(const json& j) {
    const std::string where = "oracle";
    OracleConfig o;
    o.seed = seed_or(j, where, "seed", o.seed);
    o.n_paths = int_or(j, where, "n_paths", o.n_paths);
    o.antithetic = bool_or(j, where, "antithetic", o.antithetic);
    o.bias_coeff = number_or(j, where, "bias_coeff", o.bias_coeff);
    o.T = number_or(j, where, "T", o.T);
    o.grid_steps = int_or(j, where, "grid_steps", o.grid_steps);
    if (o.n_paths < 1) fail(where + ".n_paths", "need at least one path");
    if (o.grid_steps < 2) fail(where + ".grid_steps", "need at least 2 steps");

    const int n_int = int_or(j, where, "n", 1);
    if (n_int < 1) fail(where + ".n", "dimension must be a positive integer");
    const auto n = static_cast<Eigen::Index>(n_int);
    o.data.Ahat = parse_mat_fn(field(j, where, "Ahat"), n, where + ".Ahat");
    o.data.Chat = parse_mat_fn(field(j, where, "Chat"), n, where + ".Chat");
    o.data.Qhat = parse_mat_fn(field(j, where, "Qhat"), n, where + ".Qhat");
    o.data.Hhat = parse_sym_mat(field(j, where, "Hhat"), n, where + ".Hhat");

    const json& probes = field(j, where, "probes");
    if (!probes.is_array() || probes.empty()) {
        fail(where + ".probes", "expected a non-empty array of vectors");
    }
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const json& pj = probes[k];
        if (!pj.is_array() || pj.size() != static_cast<std::size_t>(n)) {
            fail(where + ".probes", "each probe must be a length-n vector");
        }
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i) = get_number(pj[static_cast<std::size_t>(i)], where + ".probes");
        }
        o.probes.push_back(std::move(v));
    }
    return o;
}

ExplodeConfig parse_explode(const json& j) {
    const std::string where = "explode";
    ExplodeConfig e;
    e.T = number_or(j, where, "T", e.T);
    e.grid_steps = int_or(j, where, "grid_steps", e.grid_steps);
    e.overflow_guard = number_or(j, where, "overflow_guard", e.overflow_guard);
    const int n_int = int_or(j, where, "n", 1);
    if (n_int < 1) fail(where + ".n", "dimension must be a positive integer");
    const auto n = static_cast<Eigen::Index>(n_int);
    e.Qtil = parse_sym_mat(field(j, where, "Qtil"), n, where + ".Qtil");
    e.X_T = parse_sym_mat(field(j, where, "X_T"), n, where + ".X_T");
    return e;
}

GenrConfig parse_genr(const json& j) {
    const std::string where = "genr";
    GenrConfig g;
    g.T = number_or(j, where, "T", g.T);
    g.seed = seed_or(j, where, "seed", g.seed);
    g.flip_compensator = bool_or(j, where, "flip_compensator", g.flip_compensator);
    g.slope_min = number_or(j, where, "slope_min", g.slope_min);
    const int n_int = int_or(j, where, "n", 1);
    if (n_int < 1) fail(where + ".n", "dimension must be a positive integer");
    const auto n = static_cast<Eigen::Index>(n_int);
    g.B = parse_mat(field(j, where, "B"), n, where + ".B");
    g.C = parse_mat(field(j, where, "C"), n, where + ".C");
    g.F = parse_mat_fn(field(j, where, "F"), n, where + ".F");
    g.S0 = parse_sym_mat(field(j, where, "S0"), n, where + ".S0");
    if (j.contains("ladder")) {
        const json& lad = j["ladder"];
        if (!lad.is_array() || lad.size() < 2) {
            fail(where + ".ladder", "expected an array of at least two step counts");
        }
        g.ladder.clear();
        for (const json& v : lad) {
            if (!v.is_number_integer() || v.get<int>() < 2) {
                fail(where + ".ladder", "entries must be integers >= 2");
            }
            g.ladder.push_back(v.get<int>());
        }
    }
    return g;
}

OutputConfig parse_output(const json& j) {
    const std::string where = "output";
    OutputConfig o;
    o.directory = j.value("directory", o.directory);
    if (j.contains("formats")) {
        const json& fmts = j["formats"];
        if (!fmts.is_array()) fail(where + ".formats", "expected an array");
        o.json = false;
        o.csv = false;
        for (const json& f : fmts) {
            const std::string s = f.get<std::string>();
            if (s == "json") {
                o.json = true;
            } else if (s == "csv") {
                o.csv = true;
            } else {
                fail(where + ".formats", "unknown format '" + s + "'");
            }
        }
    }
    return o;
}

} // namespace

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    RunConfig cfg;
    cfg.echo = doc;
    if (doc.contains("problem")) cfg.problem = parse_problem(doc["problem"]);
    if (doc.contains("solver")) cfg.solver = parse_solver(doc["solver"]);
    if (doc.contains("oracle")) cfg.oracle = parse_oracle(doc["oracle"]);
    if (doc.contains("explode")) cfg.explode = parse_explode(doc["explode"]);
    if (doc.contains("genr")) cfg.genr = parse_genr(doc["genr"]);
    if (doc.contains("output")) cfg.output = parse_output(doc["output"]);
    if (cfg.problem) {
        cfg.problem->grid_steps = cfg.solver.grid_steps;
        try {
            cfg.problem->validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("problem: ") + e.what());
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(doc);
}

} // namespace sre
