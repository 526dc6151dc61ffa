#include "evcf/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "evcf/numeric.hpp"

namespace evcf {

namespace {

// Jacobi eigenvalue iteration for small symmetric matrices; returns
// eigenvalues and orthonormal eigenvectors (columns of V).
void jacobi_eigen(std::vector<double> a, std::size_t p, std::vector<double>& eig,
                  std::vector<double>& V) {
  V.assign(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) V[i * p + i] = 1.0;
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) off += a[i * p + j] * a[i * p + j];
    if (off < 1e-300) break;
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        const double apq = a[i * p + j];
        if (apq == 0.0) continue;
        const double app = a[i * p + i], aqq = a[j * p + j];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < p; ++k) {
          const double aik = a[i * p + k], ajk = a[j * p + k];
          a[i * p + k] = c * aik - s * ajk;
          a[j * p + k] = s * aik + c * ajk;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double aki = a[k * p + i], akj = a[k * p + j];
          a[k * p + i] = c * aki - s * akj;
          a[k * p + j] = s * aki + c * akj;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double vki = V[k * p + i], vkj = V[k * p + j];
          V[k * p + i] = c * vki - s * vkj;
          V[k * p + j] = s * vki + c * vkj;
        }
      }
    }
  }
  eig.assign(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) eig[i] = a[i * p + i];
}

// Solve M x = b for symmetric PSD M; false when the condition number
// exceeds `limit` (or M is not positive).
bool solve_spd(const std::vector<double>& m, std::size_t p, const double* b, double* x,
               double limit) {
  std::vector<double> eig, V;
  jacobi_eigen(m, p, eig, V);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double e : eig) {
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  if (!(hi > 0.0) || !(lo > 0.0) || hi / lo > limit) return false;
  // x = V diag(1/eig) V' b
  std::vector<double> tmp(p, 0.0);
  for (std::size_t k = 0; k < p; ++k) {
    double dot = 0.0;
    for (std::size_t i = 0; i < p; ++i) dot += V[i * p + k] * b[i];
    tmp[k] = dot / eig[k];
  }
  for (std::size_t i = 0; i < p; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < p; ++k) acc += V[i * p + k] * tmp[k];
    x[i] = acc;
  }
  return true;
}

struct SweepEvent {
  double time;
  std::size_t path;
  std::size_t order;  // original index within the path, stabilizes ties
  const Event* ev;
};

std::vector<SweepEvent> merged_events(const Cohort& cohort) {
  std::vector<SweepEvent> out;
  for (std::size_t i = 0; i < cohort.paths.size(); ++i)
    for (std::size_t k = 0; k < cohort.paths[i].events.size(); ++k)
      out.push_back({cohort.paths[i].events[k].time, i, k, &cohort.paths[i].events[k]});
  std::sort(out.begin(), out.end(), [](const SweepEvent& a, const SweepEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.path != b.path) return a.path < b.path;
    return a.order < b.order;
  });
  return out;
}

}  // namespace

Covariate Covariate::parse(const std::string& text) {
  if (text.empty()) throw std::runtime_error("covariate: empty column name");
  Covariate c;
  if (text == "1") {
    c.kind = Kind::intercept;
    return c;
  }
  if (text.size() > 5 && text.rfind("minus") == text.size() - 5) {
    c.kind = Kind::state_left;
    c.name = text.substr(0, text.size() - 5);
    return c;
  }
  c.kind = Kind::baseline_value;
  c.name = text;
  return c;
}

std::string Covariate::label() const {
  switch (kind) {
    case Kind::intercept:
      return "1";
    case Kind::baseline_value:
      return name;
    case Kind::state_left:
      return name + "minus";
  }
  return "?";
}

AalenFit aalen_fit(const Cohort& cohort, const std::string& outcome,
                   std::span<const Covariate> covariates, const AalenOptions& opt) {
  const std::size_t n = cohort.paths.size();
  const std::size_t p = covariates.size();
  if (p == 0) throw std::runtime_error("aalen_fit: no covariates");

  AalenFit fit;
  for (const auto& c : covariates) {
    fit.labels.push_back(c.label());
    fit.cumulative.emplace_back(0.0);
  }

  // initial design rows; state_left columns start at 0
  std::vector<std::vector<double>> row(n, std::vector<double>(p, 0.0));
  std::vector<char> alive(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) {
      const auto& c = covariates[k];
      if (c.kind == Covariate::Kind::intercept) {
        row[i][k] = 1.0;
      } else if (c.kind == Covariate::Kind::baseline_value) {
        const auto it = cohort.paths[i].baseline.find(c.name);
        if (it == cohort.paths[i].baseline.end())
          throw std::runtime_error("aalen_fit: path " + cohort.paths[i].id +
                                   " is missing baseline covariate " + c.name);
        row[i][k] = it->second;
      }
    }
  }

  std::vector<double> M(p * p, 0.0);
  auto add_row = [&](std::size_t i, double sign) {
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) M[a * p + b] += sign * row[i][a] * row[i][b];
  };
  for (std::size_t i = 0; i < n; ++i) add_row(i, +1.0);

  const std::set<std::string> censors(opt.censoring.begin(), opt.censoring.end());
  std::size_t off_risk_events = 0;
  std::vector<double> delta(p, 0.0);

  for (const auto& se : merged_events(cohort)) {
    const auto& ev = *se.ev;
    const std::size_t i = se.path;
    if (ev.module == outcome) {
      if (alive[i]) {
        if (solve_spd(M, p, row[i].data(), delta.data(), opt.condition_limit)) {
          for (std::size_t k = 0; k < p; ++k) fit.cumulative[k].add_jump(ev.time, delta[k]);
          ++fit.events_used;
        } else {
          fit.skipped_times.push_back(ev.time);
        }
        // outcome state leaves 0: path exits the risk set
        add_row(i, -1.0);
        alive[i] = 0;
      } else {
        ++off_risk_events;
      }
      continue;
    }
    if (censors.count(ev.module)) {
      if (alive[i]) {
        add_row(i, -1.0);
        alive[i] = 0;
      }
      continue;
    }
    // covariate update
    bool touches = false;
    for (std::size_t k = 0; k < p; ++k)
      touches = touches || (covariates[k].kind == Covariate::Kind::state_left &&
                            covariates[k].name == ev.module);
    if (!touches || !alive[i]) continue;
    add_row(i, -1.0);
    for (std::size_t k = 0; k < p; ++k)
      if (covariates[k].kind == Covariate::Kind::state_left &&
          covariates[k].name == ev.module)
        row[i][k] += ev.delta;
    add_row(i, +1.0);
  }

  if (fit.events_used == 0)
    fit.warnings.push_back("no usable outcome events; cumulative coefficients are zero");
  if (off_risk_events > 0)
    fit.warnings.push_back("outcome events while not at risk: " +
                           std::to_string(off_risk_events));
  if (!fit.skipped_times.empty())
    fit.warnings.push_back("singular design at " +
                           std::to_string(fit.skipped_times.size()) +
                           " event times (increments skipped)");
  return fit;
}

GcdeFit sequential_g_fit(const Cohort& cohort, const StudySchema& schema) {
  const std::size_t n = cohort.paths.size();
  if (n == 0) throw std::runtime_error("sequential_g_fit: empty cohort");

  std::vector<double> A(n, 0.0);
  bool seen0 = false, seen1 = false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = cohort.paths[i].baseline.find(schema.treat);
    if (it == cohort.paths[i].baseline.end())
      throw std::runtime_error("sequential_g_fit: path " + cohort.paths[i].id +
                               " is missing treatment " + schema.treat);
    if (it->second != 0 && it->second != 1)
      throw std::runtime_error("sequential_g_fit: treatment must be binary 0/1");
    A[i] = it->second;
    (it->second ? seen1 : seen0) = true;
  }
  if (!seen0 || !seen1)
    throw std::runtime_error("sequential_g_fit: design degenerate, one treatment arm is empty");

  GcdeFit out;

  // stage 1: mediator coefficient from the full additive fit
  const std::array<Covariate, 4> cov = {
      Covariate::parse("1"), Covariate::parse(schema.treat),
      Covariate::parse(schema.covariate), Covariate::parse(schema.mediator + "minus")};
  AalenOptions aopt;
  aopt.censoring = {schema.censor};
  out.stage1 = aalen_fit(cohort, schema.outcome, cov, aopt);
  out.mediator = out.stage1.cumulative[3];

  // stages 2 and 3 share one chronological sweep
  std::vector<char> alive(n, 1);
  std::vector<double> H(n, 1.0);   // exp(int K_{s-} dPsi), valid while alive
  std::vector<double> K(n, 0.0);   // mediator left-limit state
  double S0 = 0.0, S1 = 0.0;       // sum YH, sum YHA
  for (std::size_t i = 0; i < n; ++i) {
    S0 += 1.0;
    S1 += A[i];
  }

  const StepFunction& psi = out.mediator;
  std::span<const double> psi_times = psi.jump_times();
  std::span<const double> psi_sizes = psi.jump_sizes();
  std::size_t psi_idx = 0;

  const auto events = merged_events(cohort);
  std::size_t ev_idx = 0;
  out.direct_base = StepFunction(0.0);
  out.direct_treat = StepFunction(0.0);

  auto stage3_solve = [&](double t, const double* b, double* x) -> bool {
    // M = [[S0, S1], [S1, S1]] (binary arm); closed-form 2x2 with a
    // condition-number guard on the eigenvalues
    const double det = S1 * (S0 - S1);
    const double tr = S0 + S1;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double lo = tr / 2.0 - disc, hi = tr / 2.0 + disc;
    if (!(lo > 0.0) || hi / lo > 1e12) {
      out.skipped_times.push_back(t);
      return false;
    }
    x[0] = (S1 * b[0] - S1 * b[1]) / det;
    x[1] = (-S1 * b[0] + S0 * b[1]) / det;
    return true;
  };

  // process psi jumps and outcome/censor/mediator events in time order;
  // at equal times the dN term and the subtraction term share left limits
  while (ev_idx < events.size() || psi_idx < psi_times.size()) {
    const double t_ev =
        ev_idx < events.size() ? events[ev_idx].time : std::numeric_limits<double>::infinity();
    const double t_psi = psi_idx < psi_times.size() ? psi_times[psi_idx]
                                                    : std::numeric_limits<double>::infinity();
    const double t = std::min(t_ev, t_psi);

    // subtraction term at a psi jump: dGamma -= M^-1 (sum YHKz) dPsi
    if (t_psi == t) {
      const double dpsi = psi_sizes[psi_idx];
      double b0 = 0.0, b1 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        const double hk = H[i] * K[i];
        b0 += hk;
        b1 += hk * A[i];
      }
      b0 *= dpsi;
      b1 *= dpsi;
      double x[2];
      const double b[2] = {b0, b1};
      if (stage3_solve(t, b, x)) {
        out.direct_base.add_jump(t, -x[0]);
        out.direct_treat.add_jump(t, -x[1]);
      }
    }

    // dN term for outcome events at t (left-limit M, H, K)
    std::size_t e = ev_idx;
    for (; e < events.size() && events[e].time == t; ++e) {
      const auto& ev = *events[e].ev;
      const std::size_t i = events[e].path;
      if (ev.module != schema.outcome || !alive[i]) continue;
      const double b[2] = {H[i], H[i] * A[i]};
      double x[2];
      if (stage3_solve(t, b, x)) {
        out.direct_base.add_jump(t, x[0]);
        out.direct_treat.add_jump(t, x[1]);
      }
    }

    // now apply state changes at t
    if (t_psi == t) {
      for (std::size_t i = 0; i < n; ++i)
        if (alive[i] && K[i] != 0.0) {
          const double f = std::exp(K[i] * psi_sizes[psi_idx]);
          const double dh = H[i] * (f - 1.0);
          S0 += dh;
          S1 += dh * A[i];
          H[i] *= f;
        }
      ++psi_idx;
    }
    for (; ev_idx < e || (ev_idx < events.size() && events[ev_idx].time == t); ++ev_idx) {
      const auto& ev = *events[ev_idx].ev;
      const std::size_t i = events[ev_idx].path;
      if (ev.module == schema.outcome || ev.module == schema.censor) {
        if (alive[i]) {
          S0 -= H[i];
          S1 -= H[i] * A[i];
          alive[i] = 0;
        }
      } else if (ev.module == schema.mediator) {
        K[i] += ev.delta;
      }
    }
  }

  if (!out.skipped_times.empty())
    out.warnings.push_back("stage-3 design singular at " +
                           std::to_string(out.skipped_times.size()) + " times");
  out.warnings.insert(out.warnings.end(), out.stage1.warnings.begin(),
                      out.stage1.warnings.end());
  return out;
}

StepFunction counterfactual_hazard(const GcdeFit& fit, const InterventionSpec& theta,
                                   const StudySchema& schema) {
  const auto* arule = theta.find_baseline(schema.treat);
  if (!arule || !arule->value.free_vars().empty())
    throw std::runtime_error(
        "counterfactual_hazard: intervention must fix the treatment to a constant");
  struct Nothing final : StateView {
    double state(const std::string&) const override {
      throw std::logic_error("constant expression read a state");
    }
  } nothing;
  const double a = arule->value.eval(nothing);

  const auto* krule = theta.find_schedule(schema.mediator);
  if (!krule)
    throw std::runtime_error(
        "counterfactual_hazard: intervention must fix every mediator decision");
  std::vector<std::pair<double, double>> k_jumps;  // (time, enforced jump 0/1)
  for (std::size_t i = 0; i < krule->times.size(); ++i) {
    if (!krule->decisions[i].free_vars().empty())
      throw std::runtime_error(
          "counterfactual_hazard: mediator decisions must be constants");
    k_jumps.emplace_back(krule->times[i],
                         krule->decisions[i].eval(nothing) >= 0.5 ? 1.0 : 0.0);
  }

  // K_theta(s-): enforced mediator trajectory, unit jumps
  const auto k_left = [&](double s) {
    double k = 0.0;
    for (const auto& [u, d] : k_jumps)
      if (u < s) k += d;
    return k;
  };

  StepFunction mediated(0.0);
  for (std::size_t j = 0; j < fit.mediator.jump_count(); ++j) {
    const double u = fit.mediator.jump_times()[j];
    mediated.add_jump(u, k_left(u) * fit.mediator.jump_sizes()[j]);
  }
  const std::array<StepFunction, 3> parts = {fit.direct_base, fit.direct_treat.scaled(a),
                                             mediated};
  return StepFunction::sum(parts);
}

StepFunction hazard_to_survival(const StepFunction& cum_hazard,
                                std::vector<std::string>* warnings) {
  StepFunction surv(1.0);
  double s = 1.0;
  std::size_t negatives = 0, overshoots = 0;
  for (std::size_t j = 0; j < cum_hazard.jump_count(); ++j) {
    const double t = cum_hazard.jump_times()[j];
    const double d = cum_hazard.jump_sizes()[j];
    if (d < 0.0) ++negatives;
    double factor = 1.0 - d;
    if (factor < 0.0) {
      ++overshoots;
      factor = 0.0;
    }
    double next = s * factor;
    next = std::min(1.0, std::max(0.0, next));
    surv.add_jump(t, next - s);
    s = next;
  }
  if (warnings) {
    if (negatives)
      warnings->push_back("survival: " + std::to_string(negatives) +
                          " negative hazard increments");
    if (overshoots)
      warnings->push_back("survival: " + std::to_string(overshoots) +
                          " hazard increments above 1 (clamped to 0)");
  }
  return surv;
}

}  // namespace evcf
