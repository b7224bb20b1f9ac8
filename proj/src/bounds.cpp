#include "graphflow/bounds.hpp"

#include "graphflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace graphflow {

EnvelopeParams fit_c0(double rho0_min, double sigma) {
  if (rho0_min <= 0.0) {
    throw NotStrictlyDecreasingError(
        "envelope fit needs strictly area decreasing data (min rho > 0), got " +
        std::to_string(rho0_min));
  }
  if (rho0_min >= 1.0) {
    throw NotStrictlyDecreasingError("envelope fit needs min rho < 1, got " +
                                     std::to_string(rho0_min));
  }
  EnvelopeParams p;
  p.sigma = sigma;
  p.c0 = rho0_min / std::sqrt(1.0 - rho0_min * rho0_min);
  p.variant = sigma >= 0.0 ? EnvelopeVariant::SigmaNonneg : EnvelopeVariant::SigmaNeg;
  return p;
}

double envelope(double t, const EnvelopeParams& p) {
  double rate = p.variant == EnvelopeVariant::SigmaNonneg ? p.sigma : 2.0 * p.sigma;
  double e = p.c0 * std::exp(rate * t);
  return e / std::sqrt(1.0 + e * e);
}

namespace {

// Supremum of t * series(t), plus the trend flag over the final half.
struct WeightedSeries {
  double sup = 0.0;
  double sup_time = 0.0;
  bool trend_ok = true;
  bool finite = true;
};

template <typename Getter>
WeightedSeries weighted(const std::vector<DiagnosticsRecord>& recs, Getter get,
                        double trend_slack) {
  WeightedSeries w;
  if (recs.empty()) return w;
  double t0 = recs.front().t, t1 = recs.back().t;
  double half = t0 + 0.5 * (t1 - t0);
  double half_ref = -1.0;
  for (const auto& r : recs) {
    double v = r.t * get(r);
    if (!std::isfinite(v)) w.finite = false;
    if (v > w.sup) {
      w.sup = v;
      w.sup_time = r.t;
    }
    if (r.t >= half) {
      if (half_ref < 0.0) half_ref = v;
      if (v > (1.0 + trend_slack) * std::max(half_ref, 1e-300)) w.trend_ok = false;
    }
  }
  return w;
}

}  // namespace

DecayReport check_decay(const std::vector<DiagnosticsRecord>& records, SigmaSign sigma_sign,
                        const EnvelopeContext& env, double trend_slack) {
  DecayReport rep;
  auto record_clause = [&](const std::string& name, bool applicable, bool ok) {
    rep.verdicts[name] = applicable ? (ok ? "pass" : "fail") : "n/a";
    if (applicable && !ok) rep.pass = false;
  };

  auto wH2 = weighted(records, [](const DiagnosticsRecord& r) { return r.max_normH2; },
                      trend_slack);
  auto wA2 = weighted(records, [](const DiagnosticsRecord& r) { return r.max_normA2; },
                      trend_slack);
  auto wIg = weighted(records, [](const DiagnosticsRecord& r) { return r.int_A2_gt; },
                      trend_slack);
  auto wIm = weighted(records, [](const DiagnosticsRecord& r) { return r.int_A2_gM; },
                      trend_slack);
  rep.sup_t_max_H2 = wH2.sup;
  rep.sup_t_max_A2 = wA2.sup;
  rep.sup_t_int_A2_gt = wIg.sup;
  rep.sup_t_int_A2_gM = wIm.sup;
  for (const auto& r : records) rep.sup_max_A2 = std::max(rep.sup_max_A2, r.max_normA2);

  bool bounded_A2 = std::isfinite(rep.sup_max_A2);
  record_clause("H2_decays_like_1_over_t", true, wH2.finite && wH2.trend_ok);
  record_clause("A2_decays_like_1_over_t", sigma_sign == SigmaSign::Positive,
                wA2.finite && wA2.trend_ok);
  record_clause("A2_uniformly_bounded", sigma_sign == SigmaSign::Zero, bounded_A2);
  record_clause("intA2_evolving_decays_like_1_over_t", sigma_sign == SigmaSign::Zero,
                wIg.finite && wIg.trend_ok);
  record_clause("intA2_domain_decays_like_1_over_t", sigma_sign == SigmaSign::Zero,
                wIm.finite && wIm.trend_ok);

  // envelope margin
  if (env.fitted) {
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
      margin = std::min(margin, r.min_rho - envelope(r.t, env.params));
    }
    rep.envelope_min_margin = margin;
    record_clause("rho_above_envelope", true, margin >= -env.eps);
  } else {
    rep.envelope_min_margin = 0.0;
    rep.verdicts["rho_above_envelope"] = "n/a";
  }

  // area-derivative identity: centered dA/dt vs -int ||H||^2 over the
  // evolving area element, interior records only
  double worst = 0.0;
  for (size_t k = 1; k + 1 < records.size(); ++k) {
    const auto& a = records[k - 1];
    const auto& b = records[k];
    const auto& c = records[k + 1];
    double dt = c.t - a.t;
    if (dt <= 0.0) continue;
    double d_area = (c.area - a.area) / dt;
    double err = std::abs(d_area + b.int_H2_gt) / std::max(1.0, b.int_H2_gt);
    worst = std::max(worst, err);
  }
  rep.area_identity_max_error = worst;
  return rep;
}

std::string limit_class_name(LimitClass c) {
  switch (c) {
    case LimitClass::ConstantMap: return "constant_map";
    case LimitClass::TotallyGeodesic: return "totally_geodesic";
    case LimitClass::Minimal: return "minimal";
    case LimitClass::NotConverged: return "not_converged";
  }
  return "?";
}

double image_diameter(const MapState& state) {
  // exact pairwise scan; records are taken once per run so O(n^2) is fine
  const auto& vals = state.values;
  const long n = static_cast<long>(vals.size());
  double best = 0.0;
  if (state.target.kind() == SurfaceKind::RoundSphere) {
    // chord scan, converted to geodesic distance at the end
    double worst_chord2 = 0.0;
    for (long a = 0; a < n; ++a)
      for (long b = a + 1; b < n; ++b) {
        Vec3 d = vals[a] - vals[b];
        worst_chord2 = std::max(worst_chord2, dot(d, d));
      }
    double r = state.target.embedding_radius();
    double s = std::clamp(std::sqrt(worst_chord2) / (2.0 * r), 0.0, 1.0);
    return 2.0 * r * std::asin(s);
  }
  for (long a = 0; a < n; ++a)
    for (long b = a + 1; b < n; ++b)
      best = std::max(best, target_distance(state.target, vals[a], vals[b]));
  return best;
}

LimitClass classify_limit(const MapState& final_state, double max_normA2, double max_normH2,
                          const ClassifyTolerances& tol) {
  if (image_diameter(final_state) <= tol.tol_diam) return LimitClass::ConstantMap;
  if (max_normA2 <= tol.tol_A) return LimitClass::TotallyGeodesic;
  if (max_normH2 <= tol.tol_H) return LimitClass::Minimal;
  return LimitClass::NotConverged;
}

}  // namespace graphflow
