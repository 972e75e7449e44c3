#pragma once

// Term grammar for right-hand sides:
//
//   term    := sign? item ('*' item)*
//   item    := number | '(' sum ')' | tfactor | name ('^' int)?
//   sum     := sign? product (('+' | '-') product)*      products hold no state variables
//   number  := decimal ('/' digits)? 'i'?
//   tfactor := 't' ('^' int)? | 'exp(' rate '*t)' | 'cos(' real '*t)' | 'sin(' real '*t)'
//   rate    := real | real ('+' | '-') decimal 'i' | real 'i'
//
// Names are x1..xm, y1..yn, z1..zl and declared parameters. cos and sin expand into
// conjugate exponential pairs.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nfkit/series.hpp"

namespace nfkit {

// Maps names to variable positions. Symbolic parameters become extra center variables
// placed after x1..xm; numeric parameters are substituted by value.
struct VariableTable {
    Layout declared;                               // blocks as written in the spec
    std::vector<std::string> symbolic;             // in variable order
    std::map<std::string, std::string> numeric;    // name -> decimal text

    Layout layout() const { return {declared.m + static_cast<int>(symbolic.size()), declared.n, declared.l}; }
    // Lower-case names x1.., parameters, y1.., z1...
    std::vector<std::string> names() const;
    // Upper-case names for normal-form variables.
    std::vector<std::string> upper_names() const;
    // Variable index of a name, or nullopt.
    std::optional<int> index_of(std::string_view name) const;

    static VariableTable plain(const Layout& L) { return VariableTable{L, {}, {}}; }
};

template <class S>
struct ParsedTerm {
    MultiIndex index;
    QuasiPoly<S> coeff;
};

// Throws ParseError (line 1, 1-based column) or PowerCapError.
template <class S>
ParsedTerm<S> parse_term(std::string_view text, const VariableTable& vars);

// Shortest decimal that reads back to the same double.
std::string format_real(double v);

// Inverse of parse_term for floating coefficients; names are indexed by variable.
std::string format_coeff(const QuasiPoly<Complex>& c);
std::string format_term(const MultiIndex& idx, const QuasiPoly<Complex>& c, const std::vector<std::string>& names);

bool is_reserved_name(std::string_view name);

}  // namespace nfkit
