#include "nfkit/io.hpp"

#include <cmath>
#include <sstream>

namespace nfkit {

namespace {

ojson real_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson radius_json(double v) { return std::isfinite(v) ? ojson(v) : ojson("unbounded"); }

ojson complex_json(Complex c) { return ojson{{"re", c.real()}, {"im", c.imag()}}; }

ojson matrix_json(const CMatrix& M) {
    ojson rows = ojson::array();
    for (int i = 0; i < M.rows(); ++i) {
        ojson row = ojson::array();
        for (int j = 0; j < M.cols(); ++j) row.push_back(complex_json(M(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

CMatrix matrix_from_json(const ojson& j, int n) {
    CMatrix M(n, n);
    if (static_cast<int>(j.size()) != n) throw ValidationError("stored matrix has the wrong size");
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const ojson& e = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            M(i, k) = Complex(e.at("re").get<double>(), e.at("im").get<double>());
        }
    return M;
}

ojson triangularization_json(const Triangularization& t) {
    ojson eig = ojson::array();
    for (const auto& e : t.eigenvalues) eig.push_back(complex_json(e));
    return ojson{{"eigenvalues", eig},
                 {"condS", t.condS},
                 {"delta", t.delta},
                 {"offdiag_norm", t.offdiag_norm},
                 {"from_schur", t.from_schur}};
}

std::vector<int> exps(const MultiIndex& idx, int begin, int count) {
    std::vector<int> v;
    for (int i = 0; i < count; ++i) v.push_back(idx[begin + i]);
    return v;
}

std::string latex_name(const std::string& n) {
    if (n.size() >= 2 && std::isalpha(static_cast<unsigned char>(n[0])) && std::isdigit(static_cast<unsigned char>(n[1])))
        return n.substr(0, 1) + "_{" + n.substr(1) + "}";
    return n.size() == 1 ? n : "\\mathrm{" + n + "}";
}

std::string latex_coeff(const QP& c, bool& needs_sign) {
    auto num = [](double v) { return format_real(v); };
    std::vector<std::string> atoms;
    for (const auto& t : c.terms()) {
        std::string suffix;
        if (t.power == 1) suffix += " t";
        if (t.power > 1) suffix += " t^{" + std::to_string(t.power) + "}";
        if (t.rate != Complex{}) {
            std::string r;
            if (t.rate.real() != 0.0) r = num(t.rate.real());
            if (t.rate.imag() != 0.0) {
                std::string im = num(t.rate.imag()) + "i";
                if (!r.empty() && im[0] != '-') r += "+";
                r += im;
            }
            suffix += " e^{(" + r + ")t}";
        }
        if (t.coeff.real() != 0.0) atoms.push_back(num(t.coeff.real()) + suffix);
        if (t.coeff.imag() != 0.0) atoms.push_back(num(t.coeff.imag()) + "i" + suffix);
    }
    needs_sign = atoms.size() == 1 && atoms.front()[0] == '-';
    if (atoms.size() == 1) return atoms.front();
    std::string s = "\\left(";
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (k > 0 && atoms[k][0] != '-') s += "+";
        s += atoms[k];
    }
    return s + "\\right)";
}

std::string latex_monomial(const MultiIndex& idx, const std::vector<std::string>& names) {
    std::string s;
    for (int v = 0; v < idx.size(); ++v) {
        if (idx[v] == 0) continue;
        s += latex_name(names[static_cast<std::size_t>(v)]);
        if (idx[v] > 1) s += "^{" + std::to_string(idx[v]) + "}";
    }
    return s;
}

void append_block(std::ostringstream& os, const Series& s, const std::vector<std::string>& names,
                  const std::vector<std::string>& lhs) {
    for (int i = 0; i < s.dim(); ++i) {
        os << "  " << lhs[static_cast<std::size_t>(i)] << " &= ";
        bool first = true;
        for (const auto& [idx, cs] : s.terms()) {
            const QP& c = cs[static_cast<std::size_t>(i)];
            if (c.is_zero()) continue;
            bool neg = false;
            std::string coeff = latex_coeff(c, neg);
            if (neg) coeff.erase(0, 1);
            const std::string mono = latex_monomial(idx, names);
            if (coeff == "1" && !mono.empty()) coeff.clear();
            if (first)
                os << (neg ? "-" : "");
            else
                os << (neg ? " - " : " + ");
            os << coeff;
            if (!mono.empty()) os << (coeff.empty() ? "" : " ") << mono;
            first = false;
        }
        if (first) os << "0";
        os << " \\\\\n";
    }
}

std::vector<std::string> component_labels(const std::string& base, const std::vector<std::string>& names, int begin,
                                          int count, bool dot) {
    std::vector<std::string> out;
    for (int i = 0; i < count; ++i) {
        std::string n = latex_name(names[static_cast<std::size_t>(begin + i)]);
        out.push_back(dot ? "\\dot " + n : n);
    }
    (void)base;
    return out;
}

}  // namespace

std::vector<std::string> flag_names(unsigned flags) {
    std::vector<std::string> out;
    if (flags & kPastBranch) out.push_back("past");
    if (flags & kFutureBranch) out.push_back("future");
    if (flags & kBoundedOscillatory) out.push_back("bounded");
    return out;
}

unsigned flags_from_names(const ojson& j) {
    unsigned f = 0;
    for (const auto& n : j) {
        const std::string s = n.get<std::string>();
        if (s == "past") f |= kPastBranch;
        else if (s == "future") f |= kFutureBranch;
        else if (s == "bounded") f |= kBoundedOscillatory;
        else throw ValidationError("unknown provenance flag '" + s + "'");
    }
    return f;
}

ojson qp_to_json(const QP& c) {
    ojson a = ojson::array();
    for (const auto& t : c.terms())
        a.push_back(ojson{{"re_c", t.coeff.real()},
                          {"im_c", t.coeff.imag()},
                          {"re_lambda", t.rate.real()},
                          {"im_lambda", t.rate.imag()},
                          {"k", t.power}});
    return a;
}

QP qp_from_json(const ojson& j, unsigned flags) {
    QP q;
    q.add_flags(flags);
    const Tolerances& tol = tolerances();
    for (const auto& r : j)
        q.accumulate(Complex(r.at("re_c").get<double>(), r.at("im_c").get<double>()),
                     Complex(r.at("re_lambda").get<double>(), r.at("im_lambda").get<double>()), r.at("k").get<int>(),
                     tol);
    q.prune(tol);
    return q;
}

ojson series_to_json(const Series& s) {
    const Layout& L = s.layout();
    ojson a = ojson::array();
    for (const auto& [idx, cs] : s.terms())
        for (int i = 0; i < s.dim(); ++i) {
            const QP& c = cs[static_cast<std::size_t>(i)];
            if (c.is_zero()) continue;
            a.push_back(ojson{{"component", i + 1},
                              {"p", exps(idx, 0, L.m)},
                              {"q", exps(idx, L.m, L.n)},
                              {"r", exps(idx, L.m + L.n, L.l)},
                              {"coeff", qp_to_json(c)},
                              {"flags", flag_names(c.flags())}});
        }
    return a;
}

Series series_from_json(const ojson& j, const Layout& L, int dim, int truncation) {
    Series s(L, dim, truncation);
    for (const auto& rec : j) {
        MultiIndex idx(L.vars());
        const auto p = rec.at("p").get<std::vector<int>>();
        const auto q = rec.at("q").get<std::vector<int>>();
        const auto r = rec.at("r").get<std::vector<int>>();
        if (static_cast<int>(p.size()) != L.m || static_cast<int>(q.size()) != L.n || static_cast<int>(r.size()) != L.l)
            throw ValidationError("stored series index does not match the layout");
        for (int i = 0; i < L.m; ++i) idx.set(i, p[static_cast<std::size_t>(i)]);
        for (int i = 0; i < L.n; ++i) idx.set(L.m + i, q[static_cast<std::size_t>(i)]);
        for (int i = 0; i < L.l; ++i) idx.set(L.m + L.n + i, r[static_cast<std::size_t>(i)]);
        const int comp = rec.at("component").get<int>() - 1;
        s.add(idx, comp, qp_from_json(rec.at("coeff"), flags_from_names(rec.value("flags", ojson::array()))));
    }
    return s;
}

ojson result_to_json(const NormalFormResult<Complex>& res, const VariableTable& vars) {
    const Layout& L = res.layout;
    ojson j;
    j["schema"] = kResultSchema;
    j["layout"] = ojson{{"m", L.m}, {"n", L.n}, {"l", L.l}};
    j["declared"] = ojson{{"m", vars.declared.m}, {"n", vars.declared.n}, {"l", vars.declared.l}};
    j["variables"] = vars.upper_names();
    j["symbolic_params"] = vars.symbolic;
    j["order"] = res.order;
    j["mode"] = to_string(res.mode);
    j["mutilde"] = res.mutilde;
    j["transform"] = ojson{{"x", series_to_json(res.x)}, {"y", series_to_json(res.y)}, {"z", series_to_json(res.z)}};
    j["normal_form"] = ojson{{"A", matrix_json(res.A)},           {"B", matrix_json(res.B)},
                             {"C", matrix_json(res.C)},           {"F", series_to_json(res.F)},
                             {"GY", series_to_json(res.GY)},      {"HZ", series_to_json(res.HZ)}};
    const CenterManifold<Complex> cm = center_manifold(res);
    j["center_manifold"] = ojson{{"x", series_to_json(cm.x)},
                                 {"y", series_to_json(cm.y)},
                                 {"z", series_to_json(cm.z)},
                                 {"Fc", series_to_json(cm.Fc)},
                                 {"graph_form", cm.graph_form}};
    j["residual_by_order"] = res.residual_by_order;
    unsigned counts[3] = {0, 0, 0};
    for (const Series* s : {&res.x, &res.y, &res.z, &res.F, &res.GY, &res.HZ})
        for (const auto& [idx, cs] : s->terms())
            for (const auto& c : cs) {
                if (c.flags() & kPastBranch) ++counts[0];
                if (c.flags() & kFutureBranch) ++counts[1];
                if (c.flags() & kBoundedOscillatory) ++counts[2];
            }
    j["provenance"] = ojson{{"anticipation_on_center", anticipation_on_center(res)},
                            {"flag_counts", ojson{{"past", counts[0]}, {"future", counts[1]}, {"bounded", counts[2]}}}};
    const SpectralData& sd = res.spectral;
    j["spectral"] = ojson{{"alpha", sd.alpha},
                          {"beta", real_or_null(sd.beta)},
                          {"delta", sd.delta},
                          {"mutilde", sd.mutilde},
                          {"smoothness", sd.smoothness},
                          {"A", triangularization_json(sd.A)},
                          {"B", triangularization_json(sd.B)},
                          {"C", triangularization_json(sd.C)}};
    j["warnings"] = res.warnings;
    j["iterations"] = res.iterations;
    return j;
}

NormalFormResult<Complex> result_from_json(const ojson& j) {
    if (j.value("schema", std::string()) != kResultSchema) throw ValidationError("not an nf-result/1 document");
    NormalFormResult<Complex> r;
    try {
        const ojson& lay = j.at("layout");
        const Layout L{lay.at("m").get<int>(), lay.at("n").get<int>(), lay.at("l").get<int>()};
        r.layout = L;
        r.order = j.at("order").get<int>();
        r.mode = mode_from_string(j.at("mode").get<std::string>());
        r.mutilde = j.at("mutilde").get<double>();
        const ojson& t = j.at("transform");
        r.x = series_from_json(t.at("x"), L, L.m, r.order);
        r.y = series_from_json(t.at("y"), L, L.n, r.order);
        r.z = series_from_json(t.at("z"), L, L.l, r.order);
        const ojson& nf = j.at("normal_form");
        r.A = matrix_from_json(nf.at("A"), L.m);
        r.B = matrix_from_json(nf.at("B"), L.n);
        r.C = matrix_from_json(nf.at("C"), L.l);
        r.F = series_from_json(nf.at("F"), L, L.m, r.order);
        r.GY = series_from_json(nf.at("GY"), L, L.n, r.order);
        r.HZ = series_from_json(nf.at("HZ"), L, L.l, r.order);
        r.residual_by_order = j.value("residual_by_order", std::vector<double>{});
        r.warnings = j.value("warnings", std::vector<std::string>{});
        r.iterations = j.value("iterations", 0);
    } catch (const ojson::exception& e) {
        throw ValidationError(std::string("malformed result document: ") + e.what());
    }
    SpectralData& sd = r.spectral;
    sd.mode = r.mode;
    sd.mutilde = r.mutilde;
    sd.smoothness = r.order + 1;
    sd.A = triangularize(r.A);
    sd.B = triangularize(r.B);
    sd.C = triangularize(r.C);
    spectral_bounds(sd);
    return r;
}

VariableTable variables_from_result_json(const ojson& j) {
    VariableTable v;
    const ojson& d = j.contains("declared") ? j.at("declared") : j.at("layout");
    v.declared = Layout{d.at("m").get<int>(), d.at("n").get<int>(), d.at("l").get<int>()};
    v.symbolic = j.value("symbolic_params", std::vector<std::string>{});
    return v;
}

ojson domain_to_json(const DomainEstimate& d) {
    ojson samples = ojson::array();
    for (const auto& s : d.margin_samples)
        samples.push_back(ojson{{"radius", s.radius}, {"g_bound", s.g_bound}, {"h_bound", s.h_bound}, {"margin", s.margin}});
    return ojson{{"schema", kDomainSchema},
                 {"mu", d.mu},
                 {"alpha", d.alpha},
                 {"beta", real_or_null(d.beta)},
                 {"delta", d.delta},
                 {"condP", d.condP},
                 {"condQ", d.condQ},
                 {"condR", d.condR},
                 {"gprime_max", d.gprime_max},
                 {"radius", radius_json(d.radius)},
                 {"certified_radius", radius_json(d.certified_radius)},
                 {"margin", real_or_null(d.margin)},
                 {"time_interval", ojson::array({d.t0, real_or_null(d.t1)})},
                 {"margin_samples", samples},
                 {"sampled_G_norm", d.sampled_G_norm},
                 {"sampled_H_norm", d.sampled_H_norm},
                 {"jacobian", ojson{{"samples", d.jacobian.samples},
                                    {"min_det", real_or_null(d.jacobian.min_det)},
                                    {"max_det", real_or_null(d.jacobian.max_det)},
                                    {"sign_constant", d.jacobian.sign_constant}}}};
}

ojson verification_to_json(const VerificationReport& r) {
    ojson defects = ojson::array();
    for (const auto& [eps, d] : r.scaling.samples) defects.push_back(ojson{{"epsilon", eps}, {"max_defect", d}});
    ojson em = ojson::array();
    for (const auto& e : r.emergence)
        em.push_back(ojson{{"u0", e.u0},
                           {"U0", e.U0},
                           {"fitted_rate", std::isfinite(e.rate) ? ojson(e.rate) : ojson("exact")},
                           {"bound_constant", e.constant},
                           {"radius", radius_json(e.radius)},
                           {"samples", e.samples},
                           {"violations", e.violations},
                           {"max_ratio", e.max_ratio},
                           {"exit_time", e.exit_time ? ojson(*e.exit_time) : ojson(nullptr)},
                           {"pass", e.pass}});
    return ojson{{"schema", kVerifySchema},
                 {"defect_samples", defects},
                 {"fitted_slope", r.scaling.floor ? ojson("floor") : ojson(r.scaling.slope)},
                 {"fit_residual", r.scaling.fit_residual},
                 {"emergence_fits", em},
                 {"trichotomy", ojson{{"trajectories", r.trichotomy.trajectories},
                                      {"pairs", r.trichotomy.pairs},
                                      {"y_violations", r.trichotomy.y_violations},
                                      {"z_violations", r.trichotomy.z_violations},
                                      {"x_violations", r.trichotomy.x_violations}}},
                 {"trichotomy_violations", r.trichotomy.violations()},
                 {"notes", r.notes},
                 {"pass", r.pass}};
}

std::string latex_series(const Series& s, const std::vector<std::string>& names) {
    std::ostringstream os;
    std::vector<std::string> lhs;
    for (int i = 0; i < s.dim(); ++i) lhs.push_back("f_{" + std::to_string(i + 1) + "}");
    os << "\\begin{align*}\n";
    append_block(os, s, names, lhs);
    os << "\\end{align*}\n";
    return os.str();
}

std::string latex_result(const NormalFormResult<Complex>& res, const VariableTable& vars) {
    const Layout& L = res.layout;
    const auto upper = vars.upper_names();
    const auto lower = vars.names();
    std::ostringstream os;
    os << "% coordinate transform\n\\begin{align*}\n";
    append_block(os, res.x, upper, component_labels("x", lower, 0, L.m, false));
    append_block(os, res.y, upper, component_labels("y", lower, L.m, L.n, false));
    append_block(os, res.z, upper, component_labels("z", lower, L.m + L.n, L.l, false));
    os << "\\end{align*}\n% normal form\n\\begin{align*}\n";
    const MultiSeries<Complex> rhs = normal_form_rhs(res, kUntruncated);
    std::vector<std::string> lhs = component_labels("X", upper, 0, L.vars(), true);
    append_block(os, rhs, upper, lhs);
    os << "\\end{align*}\n";
    return os.str();
}

std::vector<std::string> format_series(const Series& s, const std::vector<std::string>& names,
                                       const std::vector<std::string>& lhs) {
    std::vector<std::string> out;
    for (int i = 0; i < s.dim(); ++i) {
        std::string line = lhs[static_cast<std::size_t>(i)] + " =";
        bool first = true;
        for (const auto& [idx, cs] : s.terms()) {
            const QP& c = cs[static_cast<std::size_t>(i)];
            if (c.is_zero()) continue;
            std::string t = format_term(idx, c, names);
            if (first)
                line += " " + t;
            else if (t[0] == '-')
                line += " - " + t.substr(1);
            else
                line += " + " + t;
            first = false;
        }
        if (first) line += " 0";
        out.push_back(std::move(line));
    }
    return out;
}

std::string text_report(const std::string& title, const NormalFormResult<Complex>& res, const VariableTable& vars,
                        const DomainEstimate* domain, const VerificationReport* verification) {
    const Layout& L = res.layout;
    const auto upper = vars.upper_names();
    const auto lower = vars.names();
    std::ostringstream os;
    os << "== " << (title.empty() ? "normal form report" : title) << " ==\n";
    os << "blocks m=" << L.m << " n=" << L.n << " l=" << L.l << "  mode " << to_string(res.mode) << "  order "
       << res.order << "  mutilde " << res.mutilde << "\n";
    const SpectralData& sd = res.spectral;
    os << "alpha " << sd.alpha << "  beta " << sd.beta << "  delta " << sd.delta << "\n";
    auto eig = [&](const char* n, const Triangularization& t) {
        if (t.eigenvalues.empty()) return;
        os << "eig(" << n << "):";
        for (const auto& e : t.eigenvalues) os << " " << format_real(e.real()) << (e.imag() < 0 ? "" : "+") << format_real(e.imag()) << "i";
        os << "  cond " << t.condS << "\n";
    };
    eig("A", sd.A);
    eig("B", sd.B);
    eig("C", sd.C);

    const CenterManifold<Complex> cm = center_manifold(res);
    os << "\n-- center manifold (Y = Z = 0)" << (cm.graph_form ? ", graph form" : "") << "\n";
    std::vector<std::string> lx(lower.begin(), lower.begin() + L.m), ly(lower.begin() + L.m, lower.begin() + L.m + L.n),
        lz(lower.begin() + L.m + L.n, lower.end());
    for (const auto& s : format_series(cm.x, upper, lx)) os << "  " << s << "\n";
    for (const auto& s : format_series(cm.y, upper, ly)) os << "  " << s << "\n";
    for (const auto& s : format_series(cm.z, upper, lz)) os << "  " << s << "\n";
    std::vector<std::string> dX, dY, dZ;
    for (int i = 0; i < L.vars(); ++i) {
        const std::string d = "d" + upper[static_cast<std::size_t>(i)] + "/dt";
        (i < L.m ? dX : (i < L.m + L.n ? dY : dZ)).push_back(d);
    }
    for (const auto& s : format_series(ms_linear_block(L, res.A, 0) + cm.Fc, upper, dX)) os << "  " << s << "\n";

    os << "\n-- normal form\n";
    const MultiSeries<Complex> rhs = normal_form_rhs(res, kUntruncated);
    std::vector<std::string> all = dX;
    all.insert(all.end(), dY.begin(), dY.end());
    all.insert(all.end(), dZ.begin(), dZ.end());
    for (const auto& s : format_series(rhs, upper, all)) os << "  " << s << "\n";
    os << "\n-- transform\n";
    for (const auto& s : format_series(res.x, upper, lx)) os << "  " << s << "\n";
    for (const auto& s : format_series(res.y, upper, ly)) os << "  " << s << "\n";
    for (const auto& s : format_series(res.z, upper, lz)) os << "  " << s << "\n";

    os << "\nresidual by order:";
    for (std::size_t o = 0; o < res.residual_by_order.size(); ++o) os << " [" << o << "] " << res.residual_by_order[o];
    os << "\niterations " << res.iterations << "\n";
    for (const auto& w : res.warnings) os << "warning: " << w << "\n";
    for (const auto& a : anticipation_on_center(res)) os << "anticipation on the center manifold: " << a << "\n";

    if (domain) {
        const DomainEstimate& d = *domain;
        os << "\n-- domain (mu = " << d.mu << ", t in [" << d.t0 << ", " << d.t1 << "])\n";
        os << "  condP " << d.condP << "  condQ " << d.condQ << "  condR " << d.condR << "\n";
        os << "  ball radius " << (std::isfinite(d.radius) ? format_real(d.radius) : "unbounded") << "  G'max "
           << d.gprime_max << "  margin " << d.margin << "\n";
        os << "  certified radius " << (std::isfinite(d.certified_radius) ? format_real(d.certified_radius) : "unbounded")
           << "\n";
        os << "  sampled |G| " << d.sampled_G_norm << "  sampled |H| " << d.sampled_H_norm << "\n";
        os << "  jacobian det in [" << d.jacobian.min_det << ", " << d.jacobian.max_det << "] over "
           << d.jacobian.samples << " boundary samples" << (d.jacobian.sign_constant ? "" : " (sign change)") << "\n";
    }
    if (verification) {
        const VerificationReport& v = *verification;
        os << "\n-- verification: " << (v.pass ? "PASS" : "FAIL") << "\n";
        if (v.scaling.floor)
            os << "  defect at machine floor\n";
        else if (!v.scaling.samples.empty())
            os << "  defect slope " << v.scaling.slope << " (fit rms " << v.scaling.fit_residual << ")\n";
        int viol = 0;
        for (const auto& e : v.emergence) viol += e.violations;
        os << "  emergence runs " << v.emergence.size() << ", bound violations " << viol << "\n";
        os << "  trichotomy violations " << v.trichotomy.violations() << " (X bound: " << v.trichotomy.x_violations
           << ") over " << v.trichotomy.trajectories << " trajectories\n";
        for (const auto& n : v.notes) os << "  note: " << n << "\n";
    }
    return os.str();
}

}  // namespace nfkit
