// nfkit command line: construct, domain, verify, report.
//
// Exit codes: 0 success, 1 parse or validation error, 2 construction error,
// 3 verification FAIL. Diagnostics go to standard error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "nfkit/domain.hpp"
#include "nfkit/io.hpp"
#include "nfkit/normalform.hpp"
#include "nfkit/specfile.hpp"
#include "nfkit/verify.hpp"

using namespace nfkit;

namespace {

struct Flags {
    std::string input;
    std::string output;
    std::optional<int> order;
    std::optional<double> mutilde, mu, t0, t1, tol_rate, tol_drop;
    std::optional<std::string> mode;
    std::optional<int> max_iter;
    std::optional<std::uint64_t> seed;
    bool rational = false;
    bool exact = false;
    std::vector<std::string> params;
    std::string latex;
    std::string dump_dir;
};

// Everything a subcommand needs, built from a spec file or a stored result.
struct Session {
    SpecFile file;
    std::optional<SystemSpec<Complex>> system;
    std::optional<NormalFormResult<Complex>> result;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << text;
}

void apply_flags(SpecFile& f, const Flags& fl) {
    SpecOptions& o = f.options;
    if (fl.order) o.order = *fl.order;
    if (fl.mutilde) o.mutilde = *fl.mutilde;
    if (fl.mu) o.mu = *fl.mu;
    if (fl.mode) o.mode = mode_from_string(*fl.mode);
    if (fl.tol_rate) o.tol.rate = *fl.tol_rate;
    if (fl.tol_drop) o.tol.drop = *fl.tol_drop;
    if (fl.max_iter) o.max_iter = *fl.max_iter;
    if (fl.seed) o.seed = *fl.seed;
    if (fl.t0) o.t0 = *fl.t0;
    if (fl.t1) o.t1 = *fl.t1;
    if (fl.rational) o.rational = true;
    if (fl.exact) o.exact = true;
    for (const auto& p : fl.params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos)
            set_param(f, p, std::nullopt);
        else
            set_param(f, p.substr(0, eq), p.substr(eq + 1));
    }
}

Session open_input(const Flags& fl) {
    const std::string text = read_file(fl.input);
    Session s;
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const ojson::exception&) {
        // Let the spec parser produce the located message.
        s.file = parse_specfile(text);
        apply_flags(s.file, fl);
        return s;
    }
    if (doc.is_object() && doc.contains("schema")) {
        if (doc["schema"] != kResultSchema) throw ValidationError("unsupported document schema");
        if (!doc.contains("spec")) throw ValidationError("result document carries no spec");
        s.file = parse_specfile(doc["spec"].dump(2));
        const bool reconstruct = fl.order || fl.mutilde || fl.mode || fl.tol_rate || fl.tol_drop || fl.max_iter ||
                                 fl.rational || fl.exact || !fl.params.empty();
        apply_flags(s.file, fl);
        if (!reconstruct) s.result = result_from_json(doc);
        return s;
    }
    s.file = parse_specfile(text);
    apply_flags(s.file, fl);
    return s;
}

const SystemSpec<Complex>& system_of(Session& s) {
    if (!s.system) {
        if (s.file.options.exact)
            s.system = to_floating(build_system<GaussianRational>(s.file));
        else
            s.system = build_system<Complex>(s.file);
    }
    return *s.system;
}

const NormalFormResult<Complex>& result_of(Session& s) {
    if (!s.result) {
        if (s.file.options.exact)
            s.result = to_floating(construct(build_system<GaussianRational>(s.file)));
        else
            s.result = construct(system_of(s));
        for (const auto& w : s.result->warnings) std::cerr << "warning: " << w << "\n";
    }
    return *s.result;
}

double choose_mu(const Session& s, const NormalFormResult<Complex>& res) {
    if (s.file.options.mu) return *s.file.options.mu;
    const SpectralData& sd = res.spectral;
    return std::isfinite(sd.beta) ? 0.5 * (sd.alpha + sd.beta - sd.delta) : sd.alpha + 1.0;
}

double choose_t1(const Session& s, double mu) {
    return s.file.options.t1 ? *s.file.options.t1 : s.file.options.t0 + 20.0 / mu;
}

ojson result_document(Session& s) {
    ojson j = result_to_json(result_of(s), variable_table(s.file));
    j["spec"] = ojson::parse(serialize_specfile(s.file));
    return j;
}

VerificationReport verify_session(Session& s, bool keep) {
    const NormalFormResult<Complex>& res = result_of(s);
    VerifyOptions vo;
    vo.mu = choose_mu(s, res);
    vo.t0 = s.file.options.t0;
    vo.t1 = choose_t1(s, vo.mu);
    vo.seed = s.file.options.seed;
    vo.keep_trajectories = keep;
    return run_verification(system_of(s), res, vo);
}

void dump_trajectories(const VerificationReport& rep, const std::string& dir, const VariableTable& vars) {
    std::filesystem::create_directories(dir);
    for (const auto& nt : rep.trajectories) {
        std::ofstream out(std::filesystem::path(dir) / (nt.name + ".csv"));
        if (!out) throw ValidationError("cannot write trajectories to '" + dir + "'");
        out << "t";
        for (const auto& n : vars.names()) out << "," << n;
        out << "\n";
        for (std::size_t k = 0; k < nt.trajectory.times.size(); ++k) {
            out << format_real(nt.trajectory.times[k]);
            for (double v : nt.trajectory.states[k]) out << "," << format_real(v);
            out << "\n";
        }
    }
}

int run_construct(const Flags& fl) {
    Session s = open_input(fl);
    const ojson j = result_document(s);
    write_output(fl.output, j.dump(2) + "\n");
    if (!fl.latex.empty()) write_output(fl.latex, latex_result(*s.result, variable_table(s.file)));
    return 0;
}

int run_domain(const Flags& fl) {
    Session s = open_input(fl);
    const NormalFormResult<Complex>& res = result_of(s);
    const double mu = choose_mu(s, res);
    const DomainEstimate d = estimate_domain(res, mu, s.file.options.t0, choose_t1(s, mu), s.file.options.seed);
    write_output(fl.output, domain_to_json(d).dump(2) + "\n");
    return 0;
}

int run_verify(const Flags& fl) {
    Session s = open_input(fl);
    const VerificationReport rep = verify_session(s, !fl.dump_dir.empty());
    write_output(fl.output, verification_to_json(rep).dump(2) + "\n");
    if (!fl.dump_dir.empty()) dump_trajectories(rep, fl.dump_dir, variable_table(s.file));
    if (!rep.pass) {
        std::cerr << "verification FAIL\n";
        for (const auto& n : rep.notes) std::cerr << "  " << n << "\n";
        return 3;
    }
    return 0;
}

int run_report(const Flags& fl) {
    Session s = open_input(fl);
    const NormalFormResult<Complex>& res = result_of(s);
    const VariableTable vars = variable_table(s.file);
    std::optional<DomainEstimate> dom;
    std::optional<VerificationReport> ver;
    const double mu = choose_mu(s, res);
    try {
        dom = estimate_domain(res, mu, s.file.options.t0, choose_t1(s, mu), s.file.options.seed);
    } catch (const Error& e) {
        std::cerr << "domain skipped: " << e.what() << "\n";
    }
    try {
        ver = verify_session(s, false);
    } catch (const Error& e) {
        std::cerr << "verification skipped: " << e.what() << "\n";
    }
    write_output(fl.output, text_report(s.file.name, res, vars, dom ? &*dom : nullptr, ver ? &*ver : nullptr));
    if (!fl.latex.empty()) write_output(fl.latex, latex_result(res, vars));
    return 0;
}

int exit_code(const Error& e) {
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
        dynamic_cast<const DimensionError*>(&e))
        return 1;
    return 2;
}

void add_common(CLI::App* cmd, Flags& fl) {
    cmd->add_option("spec", fl.input, "spec file, or a result JSON from construct")->required();
    cmd->add_option("-o,--output", fl.output, "output file (default stdout)");
    cmd->add_option("--order", fl.order, "order p of the transform and normal form")->check(CLI::Range(1, 16));
    cmd->add_option("--mutilde", fl.mutilde, "center rate threshold");
    cmd->add_option("--mu", fl.mu, "decay rate for domain and verification bounds");
    cmd->add_option("--mode", fl.mode, "csu or slow-fast");
    cmd->add_flag("--rational", fl.rational, "divide by the spec denominators");
    cmd->add_flag("--exact", fl.exact, "construct with exact rational coefficients");
    cmd->add_option("--tol-rate", fl.tol_rate, "rate matching tolerance");
    cmd->add_option("--tol-drop", fl.tol_drop, "coefficient drop tolerance");
    cmd->add_option("--max-iter", fl.max_iter, "iteration cap (0: 40 per order)");
    cmd->add_option("--seed", fl.seed, "random seed");
    cmd->add_option("--t0", fl.t0, "initial time");
    cmd->add_option("--t1", fl.t1, "final time");
    cmd->add_option("--param", fl.params, "name=value, or name alone to keep it symbolic");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nfkit: normal forms and invariant manifolds of non-autonomous ODEs"};
    app.require_subcommand(1);
    Flags fl;
    CLI::App* c = app.add_subcommand("construct", "write the result JSON");
    CLI::App* d = app.add_subcommand("domain", "write the domain estimate JSON");
    CLI::App* v = app.add_subcommand("verify", "write the verification JSON");
    CLI::App* r = app.add_subcommand("report", "print a text summary");
    for (CLI::App* cmd : {c, d, v, r}) add_common(cmd, fl);
    c->add_option("--latex", fl.latex, "also write a LaTeX rendering to this file");
    r->add_option("--latex", fl.latex, "also write a LaTeX rendering to this file");
    v->add_option("--dump-trajectories", fl.dump_dir, "directory for CSV trajectory dumps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    try {
        if (*c) return run_construct(fl);
        if (*d) return run_domain(fl);
        if (*v) return run_verify(fl);
        return run_report(fl);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
