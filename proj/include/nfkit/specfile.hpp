#pragma once

// JSON spec files ("nfspec-1"):
//
// {
//   "version": "nfspec-1",
//   "name": "...", "description": "...",
//   "blocks": {"m": 1, "n": 1, "l": 0},
//   "A": [[0]], "B": [[-1]], "C": [],            entries are numbers or {"re": .., "im": ..}
//   "equations": {"x": [["-1*x1*y1"]], "y": [["1*x1^2", "-2*y1^2"]], "z": []},
//   "denominators": {"x": ["..."], ...},          optional, used when options.rational is set
//   "params": {"b": 0.3, "eps": "symbolic"},
//   "options": {"order": 3, "mutilde": 0, "mu": 0.5, "mode": "csu", "tolerances": {...},
//               "t0": 0, "t1": 40, "seed": 1, "max_iter": 0, "balance": 1,
//               "rational": false, "exact": false}
// }

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nfkit/normalform.hpp"
#include "nfkit/parse.hpp"

namespace nfkit {

struct SpecOptions {
    int order = 3;
    double mutilde = 0.0;
    std::optional<double> mu;
    Mode mode = Mode::CenterStableUnstable;
    Tolerances tol{};
    double t0 = 0.0;
    std::optional<double> t1;
    std::uint64_t seed = 1;
    int max_iter = 0;
    double balance = 1.0;
    bool rational = false;
    bool exact = false;
};

struct SpecParam {
    std::string name;
    std::optional<std::string> value;  // decimal text; nullopt keeps the parameter symbolic
};

struct SpecFile {
    std::string version = "nfspec-1";
    std::string name;
    std::string description;
    Layout blocks;
    std::vector<Complex> A, B, C;  // row-major
    // Per block x, y, z: one list of term strings per component.
    std::array<std::vector<std::vector<std::string>>, 3> equations;
    std::array<std::optional<std::vector<std::string>>, 3> denominators;
    std::vector<SpecParam> params;
    SpecOptions options;
};

// Throws ParseError anchored at the offending line and column.
SpecFile parse_specfile(const std::string& text);
SpecFile load_specfile(const std::string& path);
std::string serialize_specfile(const SpecFile& spec);

// Sets, adds or (with no value) makes symbolic a parameter.
void set_param(SpecFile& spec, const std::string& name, const std::optional<std::string>& value);

VariableTable variable_table(const SpecFile& spec);
ConstructOptions construct_options(const SpecFile& spec);

template <class S>
SystemSpec<S> build_system(const SpecFile& spec);

}  // namespace nfkit
