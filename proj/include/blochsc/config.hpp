#pragma once

// Experiment configuration: line-oriented `[section]` headers with `key = value`
// pairs, `#` comments, bracketed comma lists (nestable). Repeatable keys:
// potential.term, scenario.omega, scenario.K.
//
//   [lattice]        dim = 1            basis = [[1.0]]
//   [potential]      term = [[1], 0.1, 0.0]         # n, amplitude, phase
//   [physics]        hbar = 1e-3  lambda = 1  T = 1  dt = 1e-3
//   [discretization] M  Nk  Nq  Np  p_max  L_cut  time_steps  stability_times  gc_per_axis  gc_quasi  gc_steps
//   [scenario]       omega = [[-0.1], [0.1]]  K = [[-0.5], [0.5], [1], [2]]  delta = 0.05
//   [initial]        kind = toeplitz|pure  q0 = [0]  p0 = [1.5]  sigma_q = 0.1  sigma_p = 0.08
//   [output]         dir = out

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "core.hpp"

namespace blochsc::config {

struct ParseError : std::runtime_error {
    int line, column;
    ParseError(int l, int c, const std::string& m)
        : std::runtime_error("line " + std::to_string(l) + ", column " + std::to_string(c) + ": " + m), line(l), column(c) {}
};

struct ValidationError : std::runtime_error {
    std::string field;
    ValidationError(std::string f, const std::string& m) : std::runtime_error(f + ": " + m), field(std::move(f)) {}
};

struct Value {
    enum Kind { Number, String, List } kind = Number;
    double num = 0.0;
    std::string str;
    std::vector<Value> list;
    int line = 0, col = 0;
};

namespace detail {

class ValueParser {
public:
    ValueParser(const std::string& s, int line, int col0) : s_(s), line_(line), col0_(col0) {}

    Value parse() {
        Value v = value();
        skip();
        if (i_ != s_.size()) fail("unexpected trailing characters");
        return v;
    }

private:
    const std::string& s_;
    std::size_t i_ = 0;
    int line_, col0_;

    [[noreturn]] void fail(const std::string& m) const { throw ParseError(line_, col0_ + static_cast<int>(i_), m); }
    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }

    Value value() {
        skip();
        Value v;
        v.line = line_;
        v.col = col0_ + static_cast<int>(i_);
        if (i_ >= s_.size()) fail("missing value");
        if (s_[i_] == '[') {
            ++i_;
            v.kind = Value::List;
            skip();
            if (i_ < s_.size() && s_[i_] == ']') {
                ++i_;
                return v;
            }
            for (;;) {
                v.list.push_back(value());
                skip();
                if (i_ >= s_.size()) fail("unterminated list");
                if (s_[i_] == ',') {
                    ++i_;
                    continue;
                }
                if (s_[i_] == ']') {
                    ++i_;
                    return v;
                }
                fail("expected ',' or ']'");
            }
        }
        if (s_[i_] == '"') {
            const std::size_t end = s_.find('"', i_ + 1);
            if (end == std::string::npos) fail("unterminated string");
            v.kind = Value::String;
            v.str = s_.substr(i_ + 1, end - i_ - 1);
            i_ = end + 1;
            return v;
        }
        const std::size_t start = i_;
        while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != ']' && !std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
        const std::string tok = s_.substr(start, i_ - start);
        if (tok.empty()) fail("empty value");
        double d = 0.0;
        const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), d);
        if (r.ec == std::errc{} && r.ptr == tok.data() + tok.size()) {
            v.kind = Value::Number;
            v.num = d;
        } else {
            v.kind = Value::String;
            v.str = tok;
        }
        return v;
    }
};

}  // namespace detail

struct Entry {
    std::string section, key;
    Value value;
};

/// Splits a config text into entries. Syntax errors carry line and column.
inline std::vector<Entry> parse_entries(const std::string& text) {
    std::vector<Entry> out;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw.substr(0, raw.find('#'));
        const auto first = s.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = s.find_last_not_of(" \t\r");
        s = s.substr(0, last + 1);
        const int col = static_cast<int>(first) + 1;
        if (s[first] == '[') {
            if (s.back() != ']') throw ParseError(line, static_cast<int>(s.size()), "section header must end with ']'");
            section = s.substr(first + 1, s.size() - first - 2);
            const auto a = section.find_first_not_of(' '), b = section.find_last_not_of(' ');
            if (a == std::string::npos) throw ParseError(line, col, "empty section name");
            section = section.substr(a, b - a + 1);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(line, col, "expected 'key = value'");
        std::string key = s.substr(first, eq - first);
        key = key.substr(0, key.find_last_not_of(" \t") + 1);
        if (key.empty()) throw ParseError(line, col, "missing key");
        if (section.empty()) throw ParseError(line, col, "key outside of any section");
        const std::string rhs = s.substr(eq + 1);
        detail::ValueParser vp(rhs, line, static_cast<int>(eq) + 2);
        out.push_back({section, key, vp.parse()});
    }
    return out;
}

struct TermSpec {
    std::vector<long> n;
    double amplitude = 0.0;
    double phase = 0.0;
};

struct BoxSpec {
    std::vector<double> lo, hi;
};

struct PhaseBoxSpec {
    BoxSpec x, xi;
};

struct ExperimentConfig {
    int dim = 1;
    std::vector<std::vector<double>> basis;  ///< rows are lattice basis vectors (default: identity)
    std::vector<TermSpec> terms;

    std::optional<double> hbar;
    double lambda = 1.0;
    std::optional<double> T;
    double dt = 1e-3;

    std::optional<int> M;
    int Nk = 8;
    int Nq = 16;
    int Np = 16;
    double p_max = 0.0;  ///< half-width of the Husimi momentum window around p0 (0: automatic)
    int L_cut = 0;       ///< translate window for bloch-check (0: automatic)
    int time_steps = 200;
    int stability_times = 20;
    int gc_per_axis = 0;
    int gc_quasi = 1000;
    int gc_steps = 2000;

    std::vector<BoxSpec> omega;
    std::vector<PhaseBoxSpec> K;
    std::optional<double> delta;

    std::string kind = "toeplitz";
    std::vector<double> q0, p0;
    double sigma_q = 0.1;
    double sigma_p = 0.1;

    std::string out_dir = ".";
    std::uint64_t hash = 0;
};

namespace detail {

inline double number(const Value& v, const std::string& what) {
    if (v.kind != Value::Number) throw ParseError(v.line, v.col, what + ": expected a number");
    return v.num;
}

inline int integer(const Value& v, const std::string& what) {
    const double d = number(v, what);
    if (d != std::floor(d) || std::abs(d) > 1e9) throw ParseError(v.line, v.col, what + ": expected an integer");
    return static_cast<int>(d);
}

inline std::vector<double> numbers(const Value& v, const std::string& what) {
    if (v.kind != Value::List) throw ParseError(v.line, v.col, what + ": expected a list");
    std::vector<double> out;
    for (const auto& e : v.list) out.push_back(number(e, what));
    return out;
}

inline const Value& item(const Value& v, std::size_t i, std::size_t n, const std::string& what) {
    if (v.kind != Value::List || v.list.size() != n)
        throw ParseError(v.line, v.col, what + ": expected a list of " + std::to_string(n) + " entries");
    return v.list[i];
}

}  // namespace detail

/// Parses the text into a config. Unknown keys and ill-typed values are parse errors.
inline ExperimentConfig parse(const std::string& text) {
    using namespace detail;
    ExperimentConfig c;
    c.hash = fnv1a(text);
    for (const auto& e : parse_entries(text)) {
        const std::string id = e.section + "." + e.key;
        const Value& v = e.value;
        if (id == "lattice.dim") c.dim = integer(v, id);
        else if (id == "lattice.basis") {
            if (v.kind != Value::List) throw ParseError(v.line, v.col, id + ": expected a list of rows");
            c.basis.clear();
            for (const auto& row : v.list) c.basis.push_back(numbers(row, id));
        } else if (id == "potential.term") {
            TermSpec t;
            for (double x : numbers(item(v, 0, 3, id), id)) {
                if (x != std::floor(x)) throw ParseError(v.line, v.col, id + ": frequency must be integer");
                t.n.push_back(static_cast<long>(x));
            }
            t.amplitude = number(item(v, 1, 3, id), id);
            t.phase = number(item(v, 2, 3, id), id);
            c.terms.push_back(t);
        } else if (id == "physics.hbar") c.hbar = number(v, id);
        else if (id == "physics.lambda") c.lambda = number(v, id);
        else if (id == "physics.T") c.T = number(v, id);
        else if (id == "physics.dt") c.dt = number(v, id);
        else if (id == "discretization.M") c.M = integer(v, id);
        else if (id == "discretization.Nk") c.Nk = integer(v, id);
        else if (id == "discretization.Nq") c.Nq = integer(v, id);
        else if (id == "discretization.Np") c.Np = integer(v, id);
        else if (id == "discretization.p_max") c.p_max = number(v, id);
        else if (id == "discretization.L_cut") c.L_cut = integer(v, id);
        else if (id == "discretization.time_steps") c.time_steps = integer(v, id);
        else if (id == "discretization.stability_times") c.stability_times = integer(v, id);
        else if (id == "discretization.gc_per_axis") c.gc_per_axis = integer(v, id);
        else if (id == "discretization.gc_quasi") c.gc_quasi = integer(v, id);
        else if (id == "discretization.gc_steps") c.gc_steps = integer(v, id);
        else if (id == "scenario.omega") c.omega.push_back({numbers(item(v, 0, 2, id), id), numbers(item(v, 1, 2, id), id)});
        else if (id == "scenario.K")
            c.K.push_back({{numbers(item(v, 0, 4, id), id), numbers(item(v, 1, 4, id), id)},
                           {numbers(item(v, 2, 4, id), id), numbers(item(v, 3, 4, id), id)}});
        else if (id == "scenario.delta") c.delta = number(v, id);
        else if (id == "initial.kind") {
            if (v.kind != Value::String) throw ParseError(v.line, v.col, id + ": expected toeplitz or pure");
            c.kind = v.str;
        } else if (id == "initial.q0") c.q0 = numbers(v, id);
        else if (id == "initial.p0") c.p0 = numbers(v, id);
        else if (id == "initial.sigma_q") c.sigma_q = number(v, id);
        else if (id == "initial.sigma_p") c.sigma_p = number(v, id);
        else if (id == "output.dir") {
            if (v.kind != Value::String) throw ParseError(v.line, v.col, id + ": expected a path");
            c.out_dir = v.str;
        } else {
            throw ParseError(v.line, 1, "unknown key '" + id + "'");
        }
    }
    return c;
}

inline ExperimentConfig load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("--config", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

/// Which optional blocks a subcommand needs.
struct Needs {
    bool scenario = false;
    bool initial = true;
    bool dynamics = false;
};

/// Largest |n_a| of plane waves carrying the initial state above ~1e-14 relative.
inline double state_band(const ExperimentConfig& c) {
    const int d = c.dim;
    double pmax = 0.0;
    for (int a = 0; a < d; ++a) {
        double p = std::abs(c.p0[static_cast<std::size_t>(a)]);
        if (c.kind == "toeplitz") p += 6.0 * c.sigma_p;
        pmax = std::max(pmax, p);
    }
    double amax = 0.0;
    for (const auto& row : c.basis) {
        double s = 0.0;
        for (double x : row) s += x * x;
        amax = std::max(amax, std::sqrt(s));
    }
    const double h = *c.hbar;
    // n_a = a_a . p / (2 pi hbar), Gaussian envelope exp(-hbar |G - p/hbar|^2 / 2), k shift up to 1/2
    return amax * pmax / (two_pi * h) + 0.5 + 8.0 * amax / (two_pi * std::sqrt(h));
}

inline void validate(ExperimentConfig& c, const Needs& need) {
    using VE = ValidationError;
    if (c.dim < 1 || c.dim > 3) throw VE("lattice.dim", "must be 1, 2 or 3");
    const auto d = static_cast<std::size_t>(c.dim);
    if (c.basis.empty()) {
        c.basis.assign(d, std::vector<double>(d, 0.0));
        for (std::size_t i = 0; i < d; ++i) c.basis[i][i] = 1.0;
    }
    if (c.basis.size() != d) throw VE("lattice.basis", "needs dim rows");
    for (const auto& r : c.basis)
        if (r.size() != d) throw VE("lattice.basis", "every row needs dim entries");
    for (const auto& t : c.terms) {
        if (t.n.size() != d) throw VE("potential.term", "frequency needs dim entries");
        if (!std::isfinite(t.amplitude) || !std::isfinite(t.phase)) throw VE("potential.term", "must be finite");
    }
    if (!c.hbar) throw VE("physics.hbar", "missing");
    if (!(*c.hbar > 0.0)) throw VE("physics.hbar", "must be positive");
    if (!c.T) throw VE("physics.T", "missing");
    if (!(*c.T > 0.0)) throw VE("physics.T", "T must be positive");
    if (!(c.lambda > 0.0)) throw VE("physics.lambda", "must be positive");
    if (!(c.dt > 0.0)) throw VE("physics.dt", "must be positive");
    if (!c.M) throw VE("discretization.M", "missing");
    if (*c.M < 2) throw VE("discretization.M", "must be at least 2");
    if (*c.M * std::sqrt(*c.hbar) < 4.0) throw VE("discretization.M", "M sqrt(hbar) must be at least 4");
    if (c.Nk < 2) throw VE("discretization.Nk", "must be at least 2");
    if (c.Nq < 2) throw VE("discretization.Nq", "must be at least 2");
    if (c.Np < 2) throw VE("discretization.Np", "must be at least 2");
    if (c.time_steps < 2) throw VE("discretization.time_steps", "must be at least 2");
    if (c.stability_times < 2) throw VE("discretization.stability_times", "must be at least 2");
    if (c.gc_steps < 2) throw VE("discretization.gc_steps", "must be at least 2");
    if (c.gc_per_axis < 0 || c.gc_per_axis == 1) throw VE("discretization.gc_per_axis", "must be 0 or at least 2");
    if (c.gc_quasi < 0) throw VE("discretization.gc_quasi", "must be nonnegative");
    if (c.p_max < 0.0) throw VE("discretization.p_max", "must be nonnegative");
    if (c.L_cut < 0) throw VE("discretization.L_cut", "must be nonnegative");
    if (need.initial) {
        if (c.kind != "toeplitz" && c.kind != "pure") throw VE("initial.kind", "must be toeplitz or pure");
        if (c.q0.size() != d) throw VE("initial.q0", c.q0.empty() ? "missing" : "needs dim entries");
        if (c.p0.size() != d) throw VE("initial.p0", c.p0.empty() ? "missing" : "needs dim entries");
        if (!(c.sigma_q > 0.0)) throw VE("initial.sigma_q", "must be positive");
        if (!(c.sigma_p > 0.0)) throw VE("initial.sigma_p", "must be positive");
        long vband = 0;
        for (const auto& t : c.terms)
            for (long x : t.n) vband = std::max(vband, std::abs(x));
        const double band = state_band(c);
        if (static_cast<double>(*c.M) < band + static_cast<double>(vband))
            throw VE("discretization.M", "anti-aliasing: M must cover the state band " +
                                             std::to_string(static_cast<int>(std::ceil(band))) + " plus the potential band " +
                                             std::to_string(vband));
    }
    if (need.scenario) {
        if (!c.delta) throw VE("scenario.delta", "missing");
        if (!(*c.delta > 0.0)) throw VE("scenario.delta", "must be positive");
        if (c.K.empty()) throw VE("scenario.K", "missing");
        if (c.omega.empty()) throw VE("scenario.omega", "missing");
        for (const auto& b : c.omega)
            if (b.lo.size() != d || b.hi.size() != d) throw VE("scenario.omega", "corners need dim entries");
        for (const auto& b : c.K)
            if (b.x.lo.size() != d || b.x.hi.size() != d || b.xi.lo.size() != d || b.xi.hi.size() != d)
                throw VE("scenario.K", "corners need dim entries");
    }
}

}  // namespace blochsc::config
