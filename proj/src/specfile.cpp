#include "nfkit/specfile.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nfkit {

using json = nlohmann::ordered_json;

namespace {

struct Position {
    int line = 1;
    int column = 1;
};

Position position_at(const std::string& text, std::size_t offset) {
    Position p;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++p.line;
            p.column = 1;
        } else {
            ++p.column;
        }
    }
    return p;
}

// Location of the first occurrence of a JSON string literal, plus an offset inside it.
Position locate_literal(const std::string& text, const std::string& literal, std::size_t inner = 0) {
    const std::string quoted = json(literal).dump();
    const std::size_t at = text.find(quoted);
    if (at == std::string::npos) return {};
    return position_at(text, at + 1 + inner);
}

[[noreturn]] void fail_at(const std::string& text, const std::string& key, const std::string& what) {
    const Position p = locate_literal(text, key);
    throw ParseError(what, p.line, p.column);
}

const char* kBlockKeys[3] = {"x", "y", "z"};

std::vector<Complex> read_matrix(const std::string& text, const json& j, const char* key, int n) {
    std::vector<Complex> out;
    if (!j.contains(key)) {
        if (n == 0) return out;
        fail_at(text, "blocks", std::string("missing matrix ") + key);
    }
    const json& M = j.at(key);
    if (!M.is_array() || static_cast<int>(M.size()) != n)
        fail_at(text, key, std::string("matrix ") + key + " must have " + std::to_string(n) + " rows");
    for (const auto& row : M) {
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            fail_at(text, key, std::string("matrix ") + key + " must have " + std::to_string(n) + " columns");
        for (const auto& e : row) {
            if (e.is_number()) {
                out.emplace_back(e.get<double>(), 0.0);
            } else if (e.is_object() && e.contains("re") && e.contains("im") && e["re"].is_number() &&
                       e["im"].is_number()) {
                out.emplace_back(e["re"].get<double>(), e["im"].get<double>());
            } else {
                fail_at(text, key, std::string("matrix ") + key + " entries must be numbers or {re, im}");
            }
        }
    }
    return out;
}

json write_matrix(const std::vector<Complex>& M, int n) {
    json rows = json::array();
    for (int i = 0; i < n; ++i) {
        json row = json::array();
        for (int j = 0; j < n; ++j) {
            const Complex c = M[static_cast<std::size_t>(i * n + j)];
            if (c.imag() == 0.0)
                row.push_back(c.real());
            else
                row.push_back(json{{"re", c.real()}, {"im", c.imag()}});
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::string> read_terms(const std::string& text, const json& j, const std::string& where) {
    std::vector<std::string> out;
    if (j.is_string()) {
        out.push_back(j.get<std::string>());
        return out;
    }
    if (!j.is_array()) fail_at(text, where, where + " must be a list of term strings");
    for (const auto& t : j) {
        if (!t.is_string()) fail_at(text, where, where + " must be a list of term strings");
        out.push_back(t.get<std::string>());
    }
    return out;
}

template <class S>
DenseMatrix<S> to_matrix(const std::vector<Complex>& v, int n) {
    DenseMatrix<S> M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Complex c = v[static_cast<std::size_t>(i * n + j)];
            if constexpr (ScalarTraits<S>::exact)
                M(i, j) = S(rational_from_decimal(format_real(c.real())), rational_from_decimal(format_real(c.imag())));
            else
                M(i, j) = c;
        }
    return M;
}

// Extends a block matrix with zero rows and columns for symbolic parameters.
template <class S>
DenseMatrix<S> pad(const DenseMatrix<S>& M, int extra) {
    DenseMatrix<S> out(M.rows() + extra, M.cols() + extra);
    for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j) out(i, j) = M(i, j);
    return out;
}

template <class S>
MultiSeries<S> parse_block(const std::vector<std::vector<std::string>>& comps, int dim, const VariableTable& vars,
                           const char* key) {
    const Layout L = vars.layout();
    MultiSeries<S> s(L, dim);
    for (int i = 0; i < static_cast<int>(comps.size()); ++i)
        for (std::size_t k = 0; k < comps[static_cast<std::size_t>(i)].size(); ++k) {
            const std::string& term = comps[static_cast<std::size_t>(i)][k];
            try {
                ParsedTerm<S> pt = parse_term<S>(term, vars);
                s.add(pt.index, i, pt.coeff);
            } catch (const ParseError& e) {
                throw ParseError(std::string("equations.") + key + "[" + std::to_string(i) + "][" + std::to_string(k) +
                                     "]: " + e.message,
                                 e.line, e.column);
            }
        }
    return s;
}

}  // namespace

SpecFile parse_specfile(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const Position p = position_at(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError(std::string("malformed JSON: ") + e.what(), p.line, p.column);
    }
    if (!j.is_object()) throw ParseError("spec file must be a JSON object", 1, 1);
    SpecFile s;
    try {
        s.version = j.value("version", std::string("nfspec-1"));
        if (s.version != "nfspec-1") fail_at(text, "version", "unsupported spec version '" + s.version + "'");
        s.name = j.value("name", std::string());
        s.description = j.value("description", std::string());
        if (!j.contains("blocks") || !j["blocks"].is_object()) throw ParseError("missing blocks {m, n, l}", 1, 1);
        const json& b = j["blocks"];
        s.blocks.m = b.value("m", 0);
        s.blocks.n = b.value("n", 0);
        s.blocks.l = b.value("l", 0);
        if (s.blocks.m < 0 || s.blocks.n < 0 || s.blocks.l < 0) fail_at(text, "blocks", "block sizes must be nonnegative");
        s.A = read_matrix(text, j, "A", s.blocks.m);
        s.B = read_matrix(text, j, "B", s.blocks.n);
        s.C = read_matrix(text, j, "C", s.blocks.l);
        const int dims[3] = {s.blocks.m, s.blocks.n, s.blocks.l};
        const json eq = j.value("equations", json::object());
        for (int k = 0; k < 3; ++k) {
            auto& comps = s.equations[static_cast<std::size_t>(k)];
            comps.assign(static_cast<std::size_t>(dims[k]), {});
            if (!eq.contains(kBlockKeys[k])) continue;
            const json& list = eq[kBlockKeys[k]];
            if (!list.is_array() || static_cast<int>(list.size()) != dims[k])
                fail_at(text, kBlockKeys[k],
                        std::string("equations.") + kBlockKeys[k] + " needs " + std::to_string(dims[k]) + " components");
            for (int i = 0; i < dims[k]; ++i)
                comps[static_cast<std::size_t>(i)] =
                    read_terms(text, list[static_cast<std::size_t>(i)], std::string("equations.") + kBlockKeys[k]);
        }
        if (j.contains("denominators")) {
            const json& d = j["denominators"];
            for (int k = 0; k < 3; ++k)
                if (d.contains(kBlockKeys[k]))
                    s.denominators[static_cast<std::size_t>(k)] =
                        read_terms(text, d[kBlockKeys[k]], std::string("denominators.") + kBlockKeys[k]);
        }
        if (j.contains("params")) {
            for (const auto& [name, v] : j["params"].items()) {
                if (is_reserved_name(name)) fail_at(text, name, "parameter name '" + name + "' is reserved");
                SpecParam p{name, std::nullopt};
                if (v.is_number())
                    p.value = format_real(v.get<double>());
                else if (v.is_string() && v.get<std::string>() != "symbolic")
                    p.value = v.get<std::string>();
                else if (!v.is_string())
                    fail_at(text, name, "parameter '" + name + "' must be a number or \"symbolic\"");
                s.params.push_back(std::move(p));
            }
        }
        const json o = j.value("options", json::object());
        SpecOptions& opt = s.options;
        opt.order = o.value("order", opt.order);
        opt.mutilde = o.value("mutilde", opt.mutilde);
        if (o.contains("mu")) opt.mu = o["mu"].get<double>();
        if (o.contains("mode")) {
            try {
                opt.mode = mode_from_string(o["mode"].get<std::string>());
            } catch (const Error& e) {
                fail_at(text, "mode", e.what());
            }
        }
        if (o.contains("tolerances")) {
            const json& t = o["tolerances"];
            opt.tol.drop = t.value("drop", opt.tol.drop);
            opt.tol.rate = t.value("rate", opt.tol.rate);
            opt.tol.max_power = t.value("max_power", opt.tol.max_power);
            opt.tol.residual = t.value("residual", opt.tol.residual);
        }
        opt.t0 = o.value("t0", opt.t0);
        if (o.contains("t1")) opt.t1 = o["t1"].get<double>();
        opt.seed = o.value("seed", opt.seed);
        opt.max_iter = o.value("max_iter", opt.max_iter);
        opt.balance = o.value("balance", opt.balance);
        opt.rational = o.value("rational", opt.rational);
        opt.exact = o.value("exact", opt.exact);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid spec field: ") + e.what(), 1, 1);
    }
    // Parse every term once so that errors surface with their location.
    const VariableTable vars = variable_table(s);
    for (int k = 0; k < 3; ++k)
        for (const auto& comp : s.equations[static_cast<std::size_t>(k)])
            for (const auto& term : comp) {
                try {
                    (void)parse_term<Complex>(term, vars);
                } catch (const ParseError& e) {
                    const Position p = locate_literal(text, term, static_cast<std::size_t>(e.column - 1));
                    throw ParseError(std::string("term \"") + term + "\": " + e.message, p.line, p.column);
                }
            }
    return s;
}

SpecFile load_specfile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read spec file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_specfile(ss.str());
}

std::string serialize_specfile(const SpecFile& s) {
    json j;
    j["version"] = s.version;
    if (!s.name.empty()) j["name"] = s.name;
    if (!s.description.empty()) j["description"] = s.description;
    j["blocks"] = json{{"m", s.blocks.m}, {"n", s.blocks.n}, {"l", s.blocks.l}};
    j["A"] = write_matrix(s.A, s.blocks.m);
    j["B"] = write_matrix(s.B, s.blocks.n);
    j["C"] = write_matrix(s.C, s.blocks.l);
    json eq = json::object();
    for (int k = 0; k < 3; ++k) {
        json comps = json::array();
        for (const auto& c : s.equations[static_cast<std::size_t>(k)]) comps.push_back(c);
        eq[kBlockKeys[k]] = std::move(comps);
    }
    j["equations"] = std::move(eq);
    bool any_den = false;
    json den = json::object();
    for (int k = 0; k < 3; ++k)
        if (s.denominators[static_cast<std::size_t>(k)]) {
            den[kBlockKeys[k]] = *s.denominators[static_cast<std::size_t>(k)];
            any_den = true;
        }
    if (any_den) j["denominators"] = std::move(den);
    if (!s.params.empty()) {
        json p = json::object();
        for (const auto& q : s.params) {
            if (!q.value) {
                p[q.name] = "symbolic";
                continue;
            }
            const double v = std::strtod(q.value->c_str(), nullptr);
            if (std::isfinite(v) && format_real(v) == *q.value)
                p[q.name] = v;
            else
                p[q.name] = *q.value;
        }
        j["params"] = std::move(p);
    }
    const SpecOptions& o = s.options;
    json opt;
    opt["order"] = o.order;
    opt["mutilde"] = o.mutilde;
    if (o.mu) opt["mu"] = *o.mu;
    opt["mode"] = to_string(o.mode);
    opt["tolerances"] = json{{"drop", o.tol.drop}, {"rate", o.tol.rate}, {"max_power", o.tol.max_power},
                             {"residual", o.tol.residual}};
    opt["t0"] = o.t0;
    if (o.t1) opt["t1"] = *o.t1;
    opt["seed"] = o.seed;
    opt["max_iter"] = o.max_iter;
    opt["balance"] = o.balance;
    opt["rational"] = o.rational;
    opt["exact"] = o.exact;
    j["options"] = std::move(opt);
    return j.dump(2) + "\n";
}

void set_param(SpecFile& spec, const std::string& name, const std::optional<std::string>& value) {
    if (is_reserved_name(name)) throw ValidationError("parameter name '" + name + "' is reserved");
    if (value) (void)rational_from_decimal(*value);
    for (auto& p : spec.params)
        if (p.name == name) {
            p.value = value;
            return;
        }
    spec.params.push_back({name, value});
}

VariableTable variable_table(const SpecFile& spec) {
    VariableTable v;
    v.declared = spec.blocks;
    for (const auto& p : spec.params) {
        if (p.value)
            v.numeric[p.name] = *p.value;
        else
            v.symbolic.push_back(p.name);
    }
    return v;
}

ConstructOptions construct_options(const SpecFile& spec) {
    ConstructOptions o;
    o.order = spec.options.order;
    o.mutilde = spec.options.mutilde;
    o.mode = spec.options.mode;
    o.tol = spec.options.tol;
    o.max_iter = spec.options.max_iter;
    o.balance = spec.options.balance;
    return o;
}

template <class S>
SystemSpec<S> build_system(const SpecFile& spec) {
    const VariableTable vars = variable_table(spec);
    const Layout L = vars.layout();
    const int extra = static_cast<int>(vars.symbolic.size());
    SystemSpec<S> sys;
    sys.layout = L;
    sys.options = construct_options(spec);
    ScopedTolerances guard(sys.options.tol);
    sys.A = pad(to_matrix<S>(spec.A, spec.blocks.m), extra);
    sys.B = to_matrix<S>(spec.B, spec.blocks.n);
    sys.C = to_matrix<S>(spec.C, spec.blocks.l);
    // Parameter rows of f stay zero: parameters have no dynamics.
    auto xs = spec.equations[0];
    xs.insert(xs.begin() + spec.blocks.m, static_cast<std::size_t>(extra), std::vector<std::string>{});
    sys.f = parse_block<S>(xs, L.m, vars, "x");
    sys.g = parse_block<S>(spec.equations[1], L.n, vars, "y");
    sys.h = parse_block<S>(spec.equations[2], L.l, vars, "z");
    if (spec.options.rational) {
        std::optional<MultiSeries<S>>* dens[3] = {&sys.fbar, &sys.gbar, &sys.hbar};
        for (int k = 0; k < 3; ++k)
            if (spec.denominators[static_cast<std::size_t>(k)])
                *dens[k] = parse_block<S>({*spec.denominators[static_cast<std::size_t>(k)]}, 1, vars, kBlockKeys[k]);
    }
    return sys;
}

template SystemSpec<Complex> build_system<Complex>(const SpecFile&);
template SystemSpec<GaussianRational> build_system<GaussianRational>(const SpecFile&);

}  // namespace nfkit
