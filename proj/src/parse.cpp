#include "nfkit/parse.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <limits>

namespace nfkit {

namespace {

template <class S>
S real_number(std::string_view text) {
    if constexpr (ScalarTraits<S>::exact) {
        return S(rational_from_decimal(text));
    } else {
        return S(std::strtod(std::string(text).c_str(), nullptr), 0.0);
    }
}

template <class S>
class TermParser {
public:
    TermParser(std::string_view s, const VariableTable& vars) : s_(s), vars_(vars), L_(vars.layout()) {}

    ParsedTerm<S> run() {
        ParsedTerm<S> out{MultiIndex(L_.vars()), QuasiPoly<S>::constant(ScalarTraits<S>::one())};
        skip();
        if (at_end()) fail("empty term");
        if (eat('-')) out.coeff = -out.coeff;
        else eat('+');
        item(out);
        while (eat('*')) item(out);
        if (!at_end()) fail(std::string("unexpected '") + s_[pos_] + "'");
        return out;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(what, 1, static_cast<int>(pos_) + 1);
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool at_end() {
        skip();
        return pos_ >= s_.size();
    }
    char peek() {
        skip();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }
    bool eat(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!eat(c)) fail(std::string("expected '") + c + "'");
    }

    std::string identifier() {
        skip();
        const std::size_t b = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        return std::string(s_.substr(b, pos_ - b));
    }

    int integer() {
        skip();
        const std::size_t b = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (b == pos_) fail("expected an integer");
        int v = 0;
        auto [p, ec] = std::from_chars(s_.data() + b, s_.data() + pos_, v);
        (void)p;
        if (ec != std::errc() || v > std::numeric_limits<std::int16_t>::max()) {
            pos_ = b;
            fail("power overflow");
        }
        return v;
    }

    // Unsigned decimal literal with optional '/digits'.
    S decimal() {
        skip();
        const std::size_t b = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }
        if (pos_ == b || (pos_ == b + 1 && s_[b] == '.')) {
            pos_ = b;
            fail("expected a number");
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t e = pos_ + 1;
            if (e < s_.size() && (s_[e] == '+' || s_[e] == '-')) ++e;
            if (e < s_.size() && std::isdigit(static_cast<unsigned char>(s_[e]))) {
                pos_ = e;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            }
        }
        S v = real_number<S>(s_.substr(b, pos_ - b));
        if (pos_ + 1 < s_.size() && s_[pos_] == '/' && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1]))) {
            ++pos_;
            const std::size_t d = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            S den = real_number<S>(s_.substr(d, pos_ - d));
            if (ScalarTraits<S>::is_zero(den)) fail("division by zero");
            v = v / den;
        }
        return v;
    }

    bool digit_next() {
        const char c = peek();
        return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
    }

    // number 'i'?
    S number() {
        S v = decimal();
        if (pos_ < s_.size() && s_[pos_] == 'i' &&
            !(pos_ + 1 < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_ + 1])) || s_[pos_ + 1] == '_'))) {
            ++pos_;
            v = v * S(typename ScalarTraits<S>::Real(0), typename ScalarTraits<S>::Real(1));
        }
        return v;
    }

    S signed_real() {
        S sign = ScalarTraits<S>::one();
        if (eat('-')) sign = -sign;
        else eat('+');
        return sign * decimal();
    }

    // '*t)' closing a rate argument; a bare 't' stands for rate 1.
    void close_rate() {
        expect('*');
        if (identifier() != "t") fail("expected 't'");
        expect(')');
    }

    S rate() {
        S sign = ScalarTraits<S>::one();
        if (eat('-')) sign = -sign;
        else eat('+');
        if (peek() == 't') {
            const std::size_t b = pos_;
            if (identifier() == "t") {
                expect(')');
                return sign;
            }
            pos_ = b;
            fail("expected a rate");
        }
        S r = sign * number();
        const char c = peek();
        if (c == '+' || c == '-') {
            ++pos_;
            S im = decimal();
            if (!(pos_ < s_.size() && s_[pos_] == 'i')) fail("expected 'i'");
            ++pos_;
            im = im * S(typename ScalarTraits<S>::Real(0), typename ScalarTraits<S>::Real(1));
            r = c == '+' ? r + im : r - im;
        }
        close_rate();
        return r;
    }

    S frequency() {
        if (peek() == 't') {
            const std::size_t b = pos_;
            if (identifier() == "t") {
                expect(')');
                return ScalarTraits<S>::one();
            }
            pos_ = b;
        }
        S w = signed_real();
        close_rate();
        return w;
    }

    // Items free of state variables; returns the coefficient factor.
    QuasiPoly<S> time_factor(const std::string& name) {
        using T = ScalarTraits<S>;
        const S I(typename T::Real(0), typename T::Real(1));
        const S half = T::one() / T::from_int(2);
        if (name == "t") {
            int k = 1;
            if (eat('^')) k = integer();
            return QuasiPoly<S>::monomial(T::one(), T::zero(), k);
        }
        expect('(');
        if (name == "exp") return QuasiPoly<S>::monomial(T::one(), rate(), 0);
        const S w = frequency() * I;
        if (name == "cos")
            return QuasiPoly<S>::monomial(half, w, 0) + QuasiPoly<S>::monomial(half, -w, 0);
        return QuasiPoly<S>::monomial(-half * I, w, 0) + QuasiPoly<S>::monomial(half * I, -w, 0);
    }

    QuasiPoly<S> product() {
        QuasiPoly<S> c = QuasiPoly<S>::constant(ScalarTraits<S>::one());
        do {
            if (digit_next()) {
                c = c * number();
            } else {
                const std::size_t b = pos_;
                const std::string id = identifier();
                if (id == "t" || id == "exp" || id == "cos" || id == "sin") {
                    c = c * time_factor(id);
                } else if (vars_.numeric.count(id)) {
                    c = c * numeric_power(id);
                } else {
                    pos_ = b;
                    fail(id.empty() ? "expected a coefficient" : "state variable '" + id + "' inside a coefficient");
                }
            }
        } while (peek() == '*' && (++pos_, true));
        return c;
    }

    QuasiPoly<S> sum() {
        QuasiPoly<S> total;
        bool neg = false;
        if (eat('-')) neg = true;
        else eat('+');
        for (;;) {
            QuasiPoly<S> p = product();
            total += neg ? -p : p;
            if (eat('+')) neg = false;
            else if (eat('-')) neg = true;
            else break;
        }
        expect(')');
        return total;
    }

    QuasiPoly<S> numeric_power(const std::string& name) {
        S v = real_number<S>(vars_.numeric.at(name));
        int k = 1;
        if (eat('^')) k = integer();
        S r = ScalarTraits<S>::one();
        for (int i = 0; i < k; ++i) r = r * v;
        return QuasiPoly<S>::constant(r);
    }

    void item(ParsedTerm<S>& out) {
        const char c = peek();
        if (c == '\0') fail("expected a factor");
        if (c == '(') {
            ++pos_;
            out.coeff = out.coeff * sum();
            return;
        }
        if (digit_next()) {
            out.coeff = out.coeff * number();
            return;
        }
        const std::size_t b = pos_;
        const std::string id = identifier();
        if (id.empty()) fail(std::string("unexpected '") + c + "'");
        if (id == "t" || id == "exp" || id == "cos" || id == "sin") {
            out.coeff = out.coeff * time_factor(id);
            return;
        }
        if (vars_.numeric.count(id)) {
            out.coeff = out.coeff * numeric_power(id);
            return;
        }
        const auto v = vars_.index_of(id);
        if (!v) {
            pos_ = b;
            fail("unknown variable '" + id + "'");
        }
        int k = 1;
        if (eat('^')) k = integer();
        const int total = out.index[*v] + k;
        if (total > std::numeric_limits<std::int16_t>::max()) fail("power overflow");
        out.index.set(*v, total);
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    const VariableTable& vars_;
    Layout L_;
};

}  // namespace

std::vector<std::string> VariableTable::names() const {
    std::vector<std::string> out;
    for (int i = 0; i < declared.m; ++i) out.push_back("x" + std::to_string(i + 1));
    for (const auto& s : symbolic) out.push_back(s);
    for (int i = 0; i < declared.n; ++i) out.push_back("y" + std::to_string(i + 1));
    for (int i = 0; i < declared.l; ++i) out.push_back("z" + std::to_string(i + 1));
    return out;
}

std::vector<std::string> VariableTable::upper_names() const {
    std::vector<std::string> out;
    for (int i = 0; i < declared.m; ++i) out.push_back("X" + std::to_string(i + 1));
    for (const auto& s : symbolic) out.push_back(s);
    for (int i = 0; i < declared.n; ++i) out.push_back("Y" + std::to_string(i + 1));
    for (int i = 0; i < declared.l; ++i) out.push_back("Z" + std::to_string(i + 1));
    return out;
}

std::optional<int> VariableTable::index_of(std::string_view name) const {
    const int np = static_cast<int>(symbolic.size());
    for (int k = 0; k < np; ++k)
        if (symbolic[static_cast<std::size_t>(k)] == name) return declared.m + k;
    if (name.size() < 2) return std::nullopt;
    const char b = name[0];
    int j = 0;
    auto [p, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), j);
    if (ec != std::errc() || p != name.data() + name.size() || j < 1 || name[1] == '0') return std::nullopt;
    if (b == 'x' && j <= declared.m) return j - 1;
    if (b == 'y' && j <= declared.n) return declared.m + np + j - 1;
    if (b == 'z' && j <= declared.l) return declared.m + np + declared.n + j - 1;
    return std::nullopt;
}

bool is_reserved_name(std::string_view name) {
    if (name == "t" || name == "i" || name == "exp" || name == "cos" || name == "sin") return true;
    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'y' || name[0] == 'z') &&
        std::isdigit(static_cast<unsigned char>(name[1])))
        return true;
    return false;
}

template <class S>
ParsedTerm<S> parse_term(std::string_view text, const VariableTable& vars) {
    return TermParser<S>(text, vars).run();
}

template ParsedTerm<Complex> parse_term<Complex>(std::string_view, const VariableTable&);
template ParsedTerm<GaussianRational> parse_term<GaussianRational>(std::string_view, const VariableTable&);

std::string format_real(double v) {
    if (!std::isfinite(v)) throw ValidationError("cannot format a non-finite number");
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

std::string format_coeff(const QuasiPoly<Complex>& c) {
    std::vector<std::string> atoms;
    for (const auto& t : c.terms()) {
        std::string suffix;
        if (t.power == 1) suffix += "*t";
        if (t.power > 1) suffix += "*t^" + std::to_string(t.power);
        if (t.rate != Complex{}) {
            std::string r;
            if (t.rate.real() != 0.0 || t.rate.imag() == 0.0) r = format_real(t.rate.real());
            if (t.rate.imag() != 0.0) {
                std::string im = format_real(t.rate.imag()) + "i";
                if (!r.empty() && im[0] != '-') r += "+";
                r += im;
            }
            suffix += "*exp(" + r + "*t)";
        }
        if (t.coeff.real() != 0.0) atoms.push_back(format_real(t.coeff.real()) + suffix);
        if (t.coeff.imag() != 0.0) atoms.push_back(format_real(t.coeff.imag()) + "i" + suffix);
    }
    if (atoms.empty()) return "0";
    if (atoms.size() == 1) return atoms.front();
    std::string s = "(";
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (k > 0 && atoms[k][0] != '-') s += "+";
        s += atoms[k];
    }
    return s + ")";
}

std::string format_term(const MultiIndex& idx, const QuasiPoly<Complex>& c, const std::vector<std::string>& names) {
    std::string s = format_coeff(c);
    for (int v = 0; v < idx.size(); ++v) {
        const int k = idx[v];
        if (k == 0) continue;
        s += "*" + names[static_cast<std::size_t>(v)];
        if (k > 1) s += "^" + std::to_string(k);
    }
    return s;
}

}  // namespace nfkit
