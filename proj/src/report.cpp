#include "magnify/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace magnify {

namespace {

constexpr std::size_t kMaxListedFailures = 16;

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json pairs_json(const std::vector<std::pair<double, double>>& points) {
  Json out = Json::array();
  for (const auto& [a, b] : points) out.push_back({a, b});
  return out;
}

}  // namespace

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
  return out;
}

Json to_json(const Expansion& e) {
  Json out;
  out["base_point"] = to_json(e.base_point);
  out["order"] = e.order;
  out["value"] = to_json(e.value);
  out["linear"] = to_json(e.linear);
  if (e.quadratic) {
    Json forms = Json::array();
    for (const auto& b : e.quadratic->forms()) forms.push_back(to_json(b));
    out["quadratic"] = forms;
  } else {
    out["quadratic"] = nullptr;
  }
  if (e.cubic) {
    const int n = e.cubic->dimension();
    Json cubic = Json::array();
    for (int i = 0; i < n; ++i) {
      Json ti = Json::array();
      for (int a = 0; a < n; ++a) {
        Json ta = Json::array();
        for (int b = 0; b < n; ++b) {
          Json tb = Json::array();
          for (int c = 0; c < n; ++c) tb.push_back((*e.cubic)(i, a, b, c));
          ta.push_back(tb);
        }
        ti.push_back(ta);
      }
      cubic.push_back(ti);
    }
    out["cubic"] = cubic;
  } else {
    out["cubic"] = nullptr;
  }
  out["remainder_diagnostics"] = pairs_json(e.remainder_diagnostics);
  return out;
}

Json to_json(const RegularityReport& r) {
  return {{"margin", r.margin},
          {"witness", to_json(r.witness)},
          {"c_hat", r.c_hat},
          {"c_hat_witness", to_json(r.c_hat_witness)},
          {"samples", r.samples},
          {"refinement_iterations", r.refinement_iterations}};
}

Json to_json(const RemainderSlope& r) {
  return {{"slope", optional_number(r.slope)},
          {"saturated", r.saturated},
          {"noise_floor", r.noise_floor},
          {"points_used", r.points_used},
          {"profile", pairs_json(r.profile)}};
}

Json to_json(const CoverageResult& r) {
  Json failures = Json::array();
  for (std::size_t i = 0; i < std::min(r.failures.size(), kMaxListedFailures); ++i) {
    failures.push_back({{"target", to_json(r.failures[i].target)}, {"best_residual", r.failures[i].best_residual}});
  }
  return {{"fraction", r.fraction},
          {"targets", r.targets},
          {"successes", r.successes},
          {"radius", r.radius},
          {"max_residual", r.max_residual},
          {"failure_count", r.failures.size()},
          {"failures", failures}};
}

Json to_json(const InjectivityAudit& a) {
  Json collisions = Json::array();
  for (const auto& c : a.collisions) {
    collisions.push_back({{"first", to_json(c.first)},
                          {"second", to_json(c.second)},
                          {"image_gap", c.image_gap},
                          {"separation", c.separation},
                          {"antipodal_offset", c.antipodal_offset}});
  }
  return {{"clean", a.clean},
          {"pairs_examined", a.pairs_examined},
          {"antipodal_probes", a.antipodal_probes},
          {"collisions", collisions}};
}

Json to_json(const FirstOrderCertificate& c) {
  Json modulus = Json::array();
  for (const auto& m : c.modulus) {
    modulus.push_back({{"radius", m.radius}, {"omega", m.omega}, {"raw", m.raw}, {"pairs", m.pairs}});
  }
  return {{"kind", "first_order"},
          {"status", to_string(c.status)},
          {"reason", c.reason},
          {"base_point", to_json(c.base_point)},
          {"linear", to_json(c.linear)},
          {"sigma_min", c.sigma_min},
          {"inverse_norm", c.inverse_norm},
          {"kappa", c.kappa},
          {"radius", optional_number(c.radius)},
          {"covering_radius", c.covering_radius},
          {"modulus", modulus},
          {"coverage", to_json(c.coverage)}};
}

Json to_json(const QuadraticCertificate& c) {
  Json levels = Json::array();
  for (const auto& level : c.coverage) {
    levels.push_back({{"radius", level.radius}, {"target_radius", level.target_radius}, {"result", to_json(level.result)}});
  }
  Json forms = nullptr;
  if (c.quadratic) {
    forms = Json::array();
    for (const auto& b : c.quadratic->forms()) forms.push_back(to_json(b));
  }
  const bool reached_regularity = c.failed_stage == 0 || c.failed_stage >= 2;
  const bool reached_remainder = c.failed_stage == 0 || c.failed_stage >= 3;
  return {{"kind", "quadratic"},
          {"status", to_string(c.status)},
          {"failed_stage", c.failed_stage},
          {"reason", c.reason},
          {"antipodal_note", c.status == CertificateStatus::certified_up_to_antipodes},
          {"base_point", to_json(c.base_point)},
          {"value", to_json(c.value)},
          {"linear_norm", c.linear_norm},
          {"linear_tol", c.linear_tol},
          {"quadratic", forms},
          {"regularity", reached_regularity ? to_json(c.regularity) : Json(nullptr)},
          {"margin_tol", c.margin_tol},
          {"scale", c.scale},
          {"a_bound", c.a_bound},
          {"binding", c.binding.empty() ? Json(nullptr) : Json(c.binding)},
          {"remainder", reached_remainder && c.remainder ? to_json(*c.remainder) : Json(nullptr)},
          {"coverage", levels},
          {"coverage_fraction", c.coverage_fraction},
          {"covered_radius", c.covered_radius()},
          {"audit", c.failed_stage == 0 ? to_json(c.audit) : Json(nullptr)}};
}

Json to_json(const InverseSolution& s) {
  Json preimages = Json::array();
  for (std::size_t i = 0; i < s.preimages.size(); ++i) {
    preimages.push_back({{"point", to_json(s.preimages[i])},
                         {"residual", s.residuals[i]},
                         {"iterations", i < s.iterations.size() ? s.iterations[i] : 0}});
  }
  Json traces = Json::array();
  for (const auto& trace : s.traces) {
    Json t = Json::array();
    for (const auto& entry : trace) t.push_back({{"point", to_json(entry.point)}, {"residual", entry.residual}});
    traces.push_back(t);
  }
  Json out = {{"status", to_string(s.status)},
              {"message", s.message},
              {"best_residual", s.best_residual},
              {"preimages", preimages},
              {"traces", traces}};
  out["predictor_residual"] = optional_number(s.predictor_residual);
  out["within_certified_range"] = s.within_certified_range ? Json(*s.within_certified_range) : Json(nullptr);
  return out;
}

Json to_json(const SweepResult& s) {
  Json transcript = Json::array();
  for (const auto& e : s.transcript) {
    Json entry = {{"scale", e.scale}, {"passed", e.passed}, {"value", e.value}};
    entry["error"] = e.error.empty() ? Json(nullptr) : Json(e.error);
    transcript.push_back(entry);
  }
  return {{"largest_passing", optional_number(s.largest_passing)}, {"transcript", transcript}};
}

Json series(const std::vector<std::pair<double, double>>& points) {
  auto sorted = points;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return pairs_json(sorted);
}

void emit_csv(const Json& report, const std::string& name, std::ostream& out) {
  if (name.empty()) throw UsageError("emit_csv: empty series selector");
  const auto all = report.find("series");
  if (all == report.end() || !all->contains(name)) throw UsageError("emit_csv: report has no series '" + name + "'");
  std::vector<std::pair<double, double>> rows;
  for (const auto& row : (*all)[name]) {
    rows.emplace_back(row.at(0).is_null() ? std::nan("") : row.at(0).get<double>(),
                      row.at(1).is_null() ? std::nan("") : row.at(1).get<double>());
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  out << "scale,value\n";
  char buffer[64];
  for (const auto& [scale, value] : rows) {
    std::snprintf(buffer, sizeof buffer, "%.17g,%.17g\n", scale, value);
    out << buffer;
  }
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

}  // namespace magnify
