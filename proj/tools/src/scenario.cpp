#include "nslab/cli/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "nslab/regularizers.hpp"

namespace nslab::cli {

using nlohmann::json;

namespace {

class TomlReader {
public:
    explicit TomlReader(const std::string& text) : s_(text) {}

    json parse() {
        json root = json::object();
        json* table = &root;
        for (;;) {
            skip_blank_lines();
            if (pos_ >= s_.size()) break;
            if (s_[pos_] == '[') {
                table = &header(root);
            } else {
                key_value(*table);
            }
            end_of_line();
        }
        return root;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
    std::set<std::string> headers_;

    [[noreturn]] void fail(const std::string& msg) const {
        const auto line = 1 + std::count(s_.begin(), s_.begin() + static_cast<long>(std::min(pos_, s_.size())), '\n');
        throw ValidationError("line " + std::to_string(line), msg);
    }

    void skip_spaces() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    void skip_comment() {
        if (pos_ < s_.size() && s_[pos_] == '#') {
            while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
        }
    }

    void skip_blank_lines() {
        for (;;) {
            skip_spaces();
            skip_comment();
            if (pos_ < s_.size() && (s_[pos_] == '\n' || s_[pos_] == '\r')) {
                ++pos_;
                continue;
            }
            return;
        }
    }

    // Whitespace, newlines and comments inside arrays.
    void skip_array_space() { skip_blank_lines(); }

    void end_of_line() {
        skip_spaces();
        skip_comment();
        if (pos_ < s_.size() && s_[pos_] == '\r') ++pos_;
        if (pos_ < s_.size() && s_[pos_] != '\n') fail("expected end of line");
    }

    std::string bare_or_quoted_key() {
        skip_spaces();
        if (pos_ < s_.size() && s_[pos_] == '"') return basic_string();
        const std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-')) {
            ++pos_;
        }
        if (pos_ == start) fail("expected a key");
        return s_.substr(start, pos_ - start);
    }

    std::vector<std::string> dotted_key() {
        std::vector<std::string> parts{bare_or_quoted_key()};
        for (;;) {
            skip_spaces();
            if (pos_ < s_.size() && s_[pos_] == '.') {
                ++pos_;
                parts.push_back(bare_or_quoted_key());
            } else {
                return parts;
            }
        }
    }

    json& descend(json& root, const std::vector<std::string>& parts, std::size_t n) {
        json* t = &root;
        for (std::size_t i = 0; i < n; ++i) {
            json& next = (*t)[parts[i]];
            if (next.is_null()) next = json::object();
            if (!next.is_object()) fail("'" + parts[i] + "' is not a table");
            t = &next;
        }
        return *t;
    }

    json& header(json& root) {
        ++pos_;
        auto parts = dotted_key();
        skip_spaces();
        if (pos_ >= s_.size() || s_[pos_] != ']') fail("expected ']'");
        ++pos_;
        std::string joined;
        for (const auto& p : parts) joined += (joined.empty() ? "" : ".") + p;
        if (!headers_.insert(joined).second) fail("table [" + joined + "] defined twice");
        return descend(root, parts, parts.size());
    }

    void key_value(json& table) {
        auto parts = dotted_key();
        skip_spaces();
        if (pos_ >= s_.size() || s_[pos_] != '=') fail("expected '='");
        ++pos_;
        skip_spaces();
        json& owner = descend(table, parts, parts.size() - 1);
        if (owner.contains(parts.back())) fail("key '" + parts.back() + "' defined twice");
        owner[parts.back()] = value();
    }

    json value() {
        if (pos_ >= s_.size()) fail("expected a value");
        const char c = s_[pos_];
        if (c == '"') return basic_string();
        if (c == '\'') return literal_string();
        if (c == '[') return array();
        if (s_.compare(pos_, 4, "true") == 0) {
            pos_ += 4;
            return true;
        }
        if (s_.compare(pos_, 5, "false") == 0) {
            pos_ += 5;
            return false;
        }
        return number();
    }

    std::string basic_string() {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            if (s_[pos_] == '\n') fail("unterminated string");
            char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size()) fail("unterminated string");
                const char e = s_[pos_++];
                switch (e) {
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case 'r': out += '\r'; break;
                    default: fail(std::string("unsupported escape \\") + e);
                }
            } else {
                out += c;
            }
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    std::string literal_string() {
        ++pos_;
        const std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != '\'' && s_[pos_] != '\n') ++pos_;
        if (pos_ >= s_.size() || s_[pos_] != '\'') fail("unterminated string");
        return s_.substr(start, pos_++ - start);
    }

    json array() {
        ++pos_;
        json arr = json::array();
        for (;;) {
            skip_array_space();
            if (pos_ >= s_.size()) fail("unterminated array");
            if (s_[pos_] == ']') {
                ++pos_;
                return arr;
            }
            arr.push_back(value());
            skip_array_space();
            if (pos_ < s_.size() && s_[pos_] == ',') {
                ++pos_;
            } else if (pos_ >= s_.size() || s_[pos_] != ']') {
                fail("expected ',' or ']'");
            }
        }
    }

    json number() {
        const std::size_t start = pos_;
        std::string lit;
        bool is_float = false;
        while (pos_ < s_.size()) {
            const char c = s_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-') {
                lit += c;
            } else if (c == '.' || c == 'e' || c == 'E') {
                is_float = true;
                lit += c;
            } else if (c != '_') {
                break;
            }
            ++pos_;
        }
        if (lit.empty()) fail("expected a value");
        char* end = nullptr;
        if (!is_float) {
            errno = 0;
            const long long v = std::strtoll(lit.c_str(), &end, 10);
            if (*end == '\0' && errno == 0) return v;
        }
        const double v = std::strtod(lit.c_str(), &end);
        if (*end != '\0' || !std::isfinite(v)) {
            pos_ = start;
            fail("malformed number '" + lit + "'");
        }
        return v;
    }
};

// Typed access to a table with unknown-key rejection.
class Table {
public:
    Table(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_, "expected a table");
    }

    void allow(std::initializer_list<const char*> keys) const {
        for (const auto& item : j_.items()) {
            bool known = false;
            for (const char* k : keys) known = known || item.key() == k;
            if (!known) throw ValidationError(at(item.key()), "unknown key");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    const json& raw(const char* key) const { return j_.at(key); }

    double number(const char* key) const {
        if (!has(key)) throw ValidationError(at(key), "required");
        return as_number(j_.at(key), at(key));
    }
    double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }
    std::optional<double> maybe_number(const char* key) const {
        if (!has(key)) return std::nullopt;
        return number(key);
    }

    std::string string(const char* key) const {
        if (!has(key)) throw ValidationError(at(key), "required");
        if (!j_.at(key).is_string()) throw ValidationError(at(key), "expected a string");
        return j_.at(key).get<std::string>();
    }
    std::string string(const char* key, const std::string& fallback) const {
        return has(key) ? string(key) : fallback;
    }

    static double as_number(const json& v, const std::string& path) {
        if (!v.is_number()) throw ValidationError(path, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ValidationError(path, "must be finite");
        return d;
    }

private:
    const json& j_;
    std::string path_;
};

template <class E>
E choose(const std::string& value, const std::string& path,
         std::initializer_list<std::pair<const char*, E>> options) {
    std::string names;
    for (const auto& [name, e] : options) {
        if (value == name) return e;
        names += (names.empty() ? "" : ", ") + std::string(name);
    }
    throw ValidationError(path, "'" + value + "' is not one of " + names);
}

Vec read_point(const json& v, std::size_t k, const std::string& path) {
    if (v.is_number()) {
        if (k != 1) throw ValidationError(path, "expected an array of " + std::to_string(k) + " numbers");
        return {Table::as_number(v, path)};
    }
    if (!v.is_array() || v.size() != k) {
        throw ValidationError(path, "expected an array of " + std::to_string(k) + " numbers");
    }
    Vec out;
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(Table::as_number(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

void read_system(const json& doc, Scenario& sc) {
    if (!doc.contains("system")) throw ValidationError("system", "required");
    Table t(doc.at("system"), "system");
    t.allow({"f", "g", "M", "k"});
    if (!t.has("f")) throw ValidationError("system.f", "required");
    const json& f = t.raw("f");
    std::vector<std::string> f_text;
    if (f.is_string()) {
        f_text.push_back(f.get<std::string>());
    } else if (f.is_array() && !f.empty()) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (!f[i].is_string()) {
                throw ValidationError("system.f[" + std::to_string(i) + "]", "expected a string");
            }
            f_text.push_back(f[i].get<std::string>());
        }
    } else {
        throw ValidationError("system.f", "expected a string or a non-empty array of strings");
    }
    SystemBlock& s = sc.system;
    s.k = f_text.size();
    if (t.has("k")) {
        const double k = t.number("k");
        if (k != static_cast<double>(s.k)) {
            throw ValidationError("system.k", "must equal the number of f expressions (" +
                                                  std::to_string(s.k) + ")");
        }
    }
    s.M = t.number("M", 1.0);
    if (!(s.M > 0.0)) throw ValidationError("system.M", "must be positive");
    const auto vars = system_variables(s.k);
    s.f_text = f_text;
    s.f.clear();
    for (std::size_t i = 0; i < f_text.size(); ++i) {
        const std::string path = f.is_array() ? "system.f[" + std::to_string(i) + "]" : "system.f";
        try {
            s.f.push_back(parse_expr(f_text[i], vars));
        } catch (const ParseError& e) {
            throw ValidationError(path, e.what());
        }
    }
    s.g_text = t.string("g");
    try {
        s.g = parse_expr(s.g_text, vars);
    } catch (const ParseError& e) {
        throw ValidationError("system.g", e.what());
    }
}

void read_run(const json& doc, Scenario& sc) {
    const json empty = json::object();
    Table t(doc.contains("run") ? doc.at("run") : empty, "run");
    t.allow({"method", "alpha", "epsilon", "kappa", "delta0", "T", "x0", "y0", "u0", "mode0"});
    RunBlock& r = sc.run;
    const std::size_t k = sc.system.k;
    r.method = choose<RunMethod>(t.string("method", "hysteresis"), "run.method",
                                 {{"hysteresis", RunMethod::Hysteresis},
                                  {"smoothing", RunMethod::Smoothing},
                                  {"embedding", RunMethod::Embedding},
                                  {"filippov", RunMethod::Filippov},
                                  {"utkin", RunMethod::Utkin}});
    r.T = t.number("T", 1.0);
    if (!(r.T > 0.0)) throw ValidationError("run.T", "must be positive");
    r.x0 = t.has("x0") ? read_point(t.raw("x0"), k, "run.x0") : Vec(k, 0.0);
    if (max_norm(r.x0) > sc.system.M) throw ValidationError("run.x0", "outside |x| <= M");

    const bool sliding = r.method == RunMethod::Filippov || r.method == RunMethod::Utkin;
    r.alpha = sliding ? t.number("alpha", 0.0) : t.number("alpha");
    r.delta0 = t.number("delta0", r.alpha * r.alpha);
    if (!sliding && r.method != RunMethod::Embedding && !(r.alpha > 0.0)) {
        throw ValidationError("run.alpha", "must be positive");
    }
    if (r.method == RunMethod::Embedding) {
        if (r.alpha == 0.0) throw ValidationError("run.alpha", "must be nonzero");
        if (t.has("epsilon") && t.has("kappa")) {
            throw ValidationError("run.kappa", "give either epsilon or kappa, not both");
        }
        if (t.has("epsilon")) {
            r.epsilon = t.number("epsilon");
            r.kappa = r.epsilon / r.alpha;
        } else if (t.has("kappa")) {
            r.kappa = t.number("kappa");
            r.epsilon = r.kappa * r.alpha;
        } else {
            throw ValidationError("run.epsilon", "required for the embedding (or run.kappa)");
        }
        if (!(r.epsilon > 0.0)) {
            throw ValidationError(t.has("epsilon") ? "run.epsilon" : "run.kappa",
                                  "epsilon must be positive and kappa must share the sign of alpha");
        }
        if (r.alpha > 0.0 && !(r.kappa < 0.25)) {
            throw ValidationError(t.has("epsilon") ? "run.epsilon" : "run.kappa",
                                  "kappa = epsilon/alpha must be below 1/4 for alpha > 0");
        }
    } else {
        r.epsilon = t.number("epsilon", 0.0);
        r.kappa = t.number("kappa", 0.0);
    }

    switch (r.method) {
        case RunMethod::Hysteresis: {
            const double m = t.number("mode0", -1.0);
            if (m != 1.0 && m != -1.0) throw ValidationError("run.mode0", "must be 1 or -1");
            r.mode0 = static_cast<int>(m);
            r.y0 = t.number("y0", r.mode0 < 0 ? -r.alpha : r.alpha);
            if (r.mode0 > 0 && r.y0 < -r.alpha) throw ValidationError("run.y0", "below -alpha in mode +1");
            if (r.mode0 < 0 && r.y0 > r.alpha) throw ValidationError("run.y0", "above alpha in mode -1");
            break;
        }
        case RunMethod::Smoothing:
            r.y0 = t.number("y0", 0.0);
            if (std::abs(r.y0) > r.alpha) throw ValidationError("run.y0", "must satisfy |y0| <= alpha");
            break;
        case RunMethod::Embedding:
            r.y0 = t.number("y0", 0.0);
            r.u0 = t.number("u0", 1.0);
            if (std::abs(r.u0) > 1.0 + kDeltaOne) throw ValidationError("run.u0", "must satisfy |u0| <= 1.25");
            break;
        case RunMethod::Filippov:
        case RunMethod::Utkin:
            r.y0 = t.number("y0", 0.0);
            if (r.y0 != 0.0) throw ValidationError("run.y0", "sliding runs start on y = 0");
            break;
    }
}

void read_integrator(const json& doc, Scenario& sc) {
    IntegratorOptions& o = sc.integrator;
    if (!doc.contains("integrator")) return;
    Table t(doc.at("integrator"), "integrator");
    t.allow({"rtol", "atol", "event_tol", "h_init", "h_min", "h_max", "max_steps"});
    o.rtol = t.number("rtol", o.rtol);
    o.atol = t.number("atol", o.atol);
    o.event_tol = t.number("event_tol", o.event_tol);
    o.h_init = t.number("h_init", o.h_init);
    o.h_min = t.number("h_min", o.h_min);
    o.h_max = t.number("h_max", o.h_max);
    const double steps = t.number("max_steps", static_cast<double>(o.max_steps));
    if (!(steps >= 1.0) || steps != std::floor(steps)) {
        throw ValidationError("integrator.max_steps", "must be a positive integer");
    }
    o.max_steps = static_cast<std::size_t>(steps);
    try {
        o.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError("integrator", e.what());
    }
}

void read_output(const json& doc, Scenario& sc) {
    if (!doc.contains("output")) return;
    Table t(doc.at("output"), "output");
    t.allow({"path", "format"});
    sc.output.path = t.string("path", "");
    sc.output.format = t.string("format", "csv");
    if (sc.output.format != "csv" && sc.output.format != "json") {
        throw ValidationError("output.format", "must be csv or json");
    }
}

void read_converge(const json& doc, Scenario& sc) {
    if (!doc.contains("converge")) return;
    Table t(doc.at("converge"), "converge");
    t.allow({"coupling", "alphas", "kappa", "correction", "reference"});
    ConvergeBlock c;
    std::string fallback = "hysteresis";
    if (sc.run.method == RunMethod::Smoothing) fallback = "smoothing";
    if (sc.run.method == RunMethod::Embedding) fallback = "kappa_constant";
    c.coupling = choose<Coupling>(t.string("coupling", fallback), "converge.coupling",
                                  {{"hysteresis", Coupling::Hysteresis},
                                   {"smoothing", Coupling::Smoothing},
                                   {"eps_alpha_squared", Coupling::EpsilonAlphaSquared},
                                   {"kappa_constant", Coupling::KappaConstant}});
    if (!t.has("alphas") || !t.raw("alphas").is_array()) {
        throw ValidationError("converge.alphas", "required array of numbers");
    }
    const json& a = t.raw("alphas");
    for (std::size_t i = 0; i < a.size(); ++i) {
        c.alphas.push_back(Table::as_number(a[i], "converge.alphas[" + std::to_string(i) + "]"));
    }
    if (c.alphas.size() < 4) {
        throw ValidationError("converge.alphas", "at least 4 values are required, got " +
                                                     std::to_string(c.alphas.size()));
    }
    for (std::size_t i = 0; i < c.alphas.size(); ++i) {
        const std::string p = "converge.alphas[" + std::to_string(i) + "]";
        if (!(c.alphas[i] > 0.0)) throw ValidationError(p, "must be positive");
        if (i > 0 && !(c.alphas[i] < c.alphas[i - 1])) throw ValidationError(p, "must be strictly decreasing");
    }
    c.kappa = t.number("kappa", sc.run.method == RunMethod::Embedding ? sc.run.kappa : 0.1);
    if (c.coupling == Coupling::KappaConstant) {
        if (c.kappa == 0.0) throw ValidationError("converge.kappa", "must be nonzero");
        if (c.kappa > 0.0 && !(c.kappa < 0.25)) throw ValidationError("converge.kappa", "must be below 1/4");
    }
    c.correction = choose<Correction>(t.string("correction", "none"), "converge.correction",
                                      {{"none", Correction::None}, {"log", Correction::LogFactor}});
    if (t.has("reference")) {
        c.reference = choose<SlidingKind>(t.string("reference"), "converge.reference",
                                          {{"filippov", SlidingKind::Filippov}, {"utkin", SlidingKind::Utkin}});
    }
    sc.converge = c;
}

void read_grid(const json& doc, Scenario& sc) {
    if (!doc.contains("grid")) return;
    Table t(doc.at("grid"), "grid");
    t.allow({"x", "x_min", "x_max", "n", "tol"});
    GridBlock g;
    const std::size_t k = sc.system.k;
    if (t.has("x")) {
        if (t.has("x_min") || t.has("x_max") || t.has("n")) {
            throw ValidationError("grid.x", "give either x or x_min/x_max/n");
        }
        const json& xs = t.raw("x");
        if (!xs.is_array() || xs.empty()) throw ValidationError("grid.x", "expected a non-empty array");
        for (std::size_t i = 0; i < xs.size(); ++i) {
            g.x.push_back(read_point(xs[i], k, "grid.x[" + std::to_string(i) + "]"));
        }
    } else {
        if (k != 1) throw ValidationError("grid.x", "required when k > 1");
        const double lo = t.number("x_min", -0.5 * sc.system.M);
        const double hi = t.number("x_max", 0.5 * sc.system.M);
        const double n = t.number("n", 11.0);
        if (!(n >= 1.0) || n != std::floor(n)) throw ValidationError("grid.n", "must be a positive integer");
        if (!(hi >= lo)) throw ValidationError("grid.x_max", "must not be below x_min");
        const auto count = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < count; ++i) {
            g.x.push_back({count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1)});
        }
    }
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        if (max_norm(g.x[i]) > sc.system.M) {
            throw ValidationError("grid.x[" + std::to_string(i) + "]", "outside |x| <= M");
        }
    }
    g.tol = t.number("tol", g.tol);
    if (!(g.tol > 0.0)) throw ValidationError("grid.tol", "must be positive");
    sc.grid = g;
}

void read_region(const json& doc, Scenario& sc) {
    if (!doc.contains("region")) return;
    Table t(doc.at("region"), "region");
    t.allow({"kind", "alpha", "kappa", "delta0", "delta", "v_bound", "samples"});
    RegionBlock r;
    r.kind = choose<RegionKind>(t.string("kind"), "region.kind",
                                {{"annulus", RegionKind::Annulus}, {"block", RegionKind::Block}});
    r.alpha = t.number("alpha", sc.run.alpha);
    r.kappa = t.maybe_number("kappa");
    r.delta = t.maybe_number("delta");
    r.v_bound = t.number("v_bound", 0.0);
    const double n = t.number("samples", 200.0);
    if (!(n >= 1.0) || n != std::floor(n)) throw ValidationError("region.samples", "must be a positive integer");
    r.samples = static_cast<std::size_t>(n);
    if (r.kind == RegionKind::Annulus) {
        if (!(r.alpha > 0.0)) throw ValidationError("region.alpha", "the annulus needs alpha > 0");
        if (!r.kappa) throw ValidationError("region.kappa", "required for the annulus");
        if (!(*r.kappa > 0.0 && *r.kappa < 0.25)) throw ValidationError("region.kappa", "must lie in (0, 1/4)");
        r.delta0 = t.number("delta0", r.alpha * r.alpha);
        if (!(r.delta0 > 0.0)) throw ValidationError("region.delta0", "must be positive");
    } else {
        if (!(r.alpha < 0.0)) throw ValidationError("region.alpha", "the block needs alpha < 0");
        if (r.kappa && !(*r.kappa < 0.0)) throw ValidationError("region.kappa", "must be negative for the block");
        if (r.delta && !(*r.delta > 0.0)) throw ValidationError("region.delta", "must be positive");
    }
    sc.region = r;
}

}  // namespace

json parse_toml(const std::string& text) { return TomlReader(text).parse(); }

std::string_view to_string(RunMethod m) {
    switch (m) {
        case RunMethod::Hysteresis: return "hysteresis";
        case RunMethod::Smoothing: return "smoothing";
        case RunMethod::Embedding: return "embedding";
        case RunMethod::Filippov: return "filippov";
        case RunMethod::Utkin: return "utkin";
    }
    return "unknown";
}

SwitchedSystem Scenario::make_system() const {
    SwitchedSystem sys;
    sys.dim = system.k;
    sys.bound = system.M;
    sys.name = "scenario";
    const auto f = system.f;
    const auto g = system.g;
    const std::size_t k = system.k;
    // Slots follow system_variables(k): x components, then y, then u.
    sys.rate_x = [f, k](std::span<const double> x, double y, double u, std::span<double> out) {
        double slots[64];
        std::vector<double> heap;
        double* p = slots;
        if (k + 2 > 64) {
            heap.resize(k + 2);
            p = heap.data();
        }
        std::copy(x.begin(), x.end(), p);
        p[k] = y;
        p[k + 1] = u;
        for (std::size_t i = 0; i < k; ++i) out[i] = f[i](std::span<const double>(p, k + 2));
    };
    sys.rate_y = [g, k](std::span<const double> x, double y, double u) {
        double slots[64];
        std::vector<double> heap;
        double* p = slots;
        if (k + 2 > 64) {
            heap.resize(k + 2);
            p = heap.data();
        }
        std::copy(x.begin(), x.end(), p);
        p[k] = y;
        p[k + 1] = u;
        return g(std::span<const double>(p, k + 2));
    };
    return sys;
}

Scenario validate_scenario(const json& doc) {
    if (!doc.is_object()) throw ValidationError("", "scenario must be a table");
    for (const auto& item : doc.items()) {
        static const std::set<std::string> known = {"system", "run",  "integrator", "output",
                                                    "converge", "grid", "region"};
        if (!known.count(item.key())) throw ValidationError(item.key(), "unknown table");
    }
    Scenario sc;
    read_system(doc, sc);
    read_run(doc, sc);
    read_integrator(doc, sc);
    read_output(doc, sc);
    read_converge(doc, sc);
    read_grid(doc, sc);
    read_region(doc, sc);
    sc.source = doc;

    // Crossing condition of the model on samples of the domain.
    const SwitchedSystem sys = sc.make_system();
    const auto samples = sample_domain(sys, sc.system.k == 1 ? 41 : 5);
    TransversalityReport rep;
    try {
        rep = check_transversality(sys, samples);
    } catch (const std::exception& e) {
        throw ValidationError("system", std::string("evaluation failed on |x| <= M: ") + e.what());
    }
    if (!rep.ok) {
        std::ostringstream msg;
        msg << "crossing condition fails on " << rep.failures
            << " samples (need g(x,0,+1) < 0 < g(x,0,-1) and dg/du < 0)";
        throw ValidationError("system.g", msg.str());
    }
    return sc;
}

json read_scenario_document(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("", "cannot read scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_toml(buf.str());
}

Scenario load_scenario(const std::string& path) { return validate_scenario(read_scenario_document(path)); }

}  // namespace nslab::cli
