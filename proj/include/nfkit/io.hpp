#pragma once

// JSON, LaTeX and plain-text renderings of results, domain estimates and verification reports.

#include <string>
#include <vector>

#include <json.hpp>

#include "nfkit/domain.hpp"
#include "nfkit/parse.hpp"
#include "nfkit/verify.hpp"

namespace nfkit {

using ojson = nlohmann::ordered_json;

inline constexpr const char* kResultSchema = "nf-result/1";
inline constexpr const char* kDomainSchema = "nf-domain/1";
inline constexpr const char* kVerifySchema = "nf-verify/1";

// [{re_c, im_c, re_lambda, im_lambda, k}, ...]
ojson qp_to_json(const QP& c);
QP qp_from_json(const ojson& j, unsigned flags = 0);

std::vector<std::string> flag_names(unsigned flags);
unsigned flags_from_names(const ojson& j);

// [{component, p, q, r, coeff, flags}, ...] with 1-based components.
ojson series_to_json(const Series& s);
Series series_from_json(const ojson& j, const Layout& L, int dim, int truncation);

ojson result_to_json(const NormalFormResult<Complex>& res, const VariableTable& vars);
// Rebuilds the result; spectral data is recomputed from the stored linear parts.
NormalFormResult<Complex> result_from_json(const ojson& j);
VariableTable variables_from_result_json(const ojson& j);

ojson domain_to_json(const DomainEstimate& d);
ojson verification_to_json(const VerificationReport& r);

// align* blocks for the transform and the normal form.
std::string latex_result(const NormalFormResult<Complex>& res, const VariableTable& vars);
std::string latex_series(const Series& s, const std::vector<std::string>& names);

// Human-readable lines "lhs = term + term ..." for each component.
std::vector<std::string> format_series(const Series& s, const std::vector<std::string>& names,
                                       const std::vector<std::string>& lhs);

// Combined summary; domain and verification are optional.
std::string text_report(const std::string& title, const NormalFormResult<Complex>& res, const VariableTable& vars,
                        const DomainEstimate* domain, const VerificationReport* verification);

}  // namespace nfkit
