#include "delayiqc/run.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "delayiqc/error.hpp"

namespace delayiqc {

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string recipe_label(const Recipe& r) {
  std::string s;
  for (const RecipeItem& it : r.items) s += (s.empty() ? "" : "+") + it.name;
  return s;
}

AnalysisOptions lmi_options(const RunConfig& c) {
  AnalysisOptions o;
  o.sdp = c.solver;
  return o;
}

SosOptions sos_options(const RunConfig& c, int degree) {
  SosOptions o;
  o.sdp = c.solver;
  o.v_degree = degree;
  return o;
}

Method resolve(const RunConfig& c) {
  if (c.method != Method::kAuto) return c.method;
  return c.plant.poly ? Method::kSos : Method::kLmi;
}

void run_margin(const RunConfig& c, RunOutcome& out) {
  std::ostringstream os;
  os << "method,recipe,v_degree,margin,omega,exceeds_cap,steps,status\n";
  const Method m = resolve(c);
  const std::string label = recipe_label(c.recipe);
  double best = 0.0;
  bool any = false;
  if (m == Method::kFrequencyResponse) {
    try {
      const FrMargin fr = fr_delay_margin(*c.plant.open_loop);
      os << "frequency-response,,," << num(fr.tau) << ',' << num(fr.omega) << ",0,0,feasible\n";
      best = fr.tau;
      any = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoCrossover) throw;
      os << "frequency-response,,,inf,,1,0,no-crossover\n";
      best = std::numeric_limits<double>::infinity();
      any = true;
    }
  } else if (m == Method::kLmi) {
    try {
      const MarginResult r = delay_margin(*c.plant.lpv, c.recipe.fn(), c.bisection, lmi_options(c));
      os << "lmi," << label << ",," << num(r.margin) << ",," << (r.exceeds_cap ? 1 : 0) << ',' << r.steps
         << ",feasible\n";
      best = r.margin;
      any = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasibleAtLo) throw;
      os << "lmi," << label << ",,0,,0,0,infeasible-at-lo\n";
    }
  } else {
    for (int deg : c.v_degrees) {
      try {
        const MarginResult r = sos_delay_margin(*c.plant.poly, c.recipe.fn(), c.bisection, sos_options(c, deg));
        os << "sos," << label << ',' << deg << ',' << num(r.margin) << ",," << (r.exceeds_cap ? 1 : 0) << ','
           << r.steps << ",feasible\n";
        best = any ? std::max(best, r.margin) : r.margin;
        any = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInfeasibleAtLo) throw;
        os << "sos," << label << ',' << deg << ",0,,0,0,infeasible-at-lo\n";
      }
    }
  }
  out.files.emplace_back("margin.csv", versioned_csv("margin", os.str()));
  out.summary["margin"] = any ? Json(best) : Json(nullptr);
  out.exit_code = any ? 0 : 2;
  out.status = any ? "feasible" : "infeasible";
}

struct GainRow {
  AnalysisStatus status;
  double gamma;
  std::vector<double> lambda;
};

GainRow gain_at(const RunConfig& c, double tau, int degree) {
  const std::vector<IqcTerm> terms = c.recipe.instantiate(tau);
  if (resolve(c) == Method::kSos) {
    const SosResult r = sos_gain(build_extended_poly(*c.plant.poly, terms), terms, sos_options(c, degree));
    return {r.status, r.gamma, r.lambda};
  }
  const AnalysisResult r = solve_gain(build_extended(*c.plant.lpv, terms), terms, lmi_options(c));
  return {r.status, r.gamma, r.lambda};
}

std::string gain_rows(const RunConfig& c, const std::vector<double>& taus, bool* any_feasible) {
  std::ostringstream os;
  os << "tau,gamma,status";
  for (std::size_t i = 0; i < c.recipe.items.size(); ++i) os << ",lambda_" << c.recipe.items[i].name;
  os << '\n';
  const int degree = c.v_degrees.back();
  for (double tau : taus) {
    const GainRow r = gain_at(c, tau, degree);
    const bool ok = r.status == AnalysisStatus::kFeasible;
    *any_feasible = *any_feasible || ok;
    os << num(tau) << ',' << (ok ? num(r.gamma) : "inf") << ',' << to_string(r.status);
    for (std::size_t i = 0; i < c.recipe.items.size(); ++i) {
      os << ',' << (ok && i < r.lambda.size() ? num(r.lambda[i]) : "");
    }
    os << '\n';
  }
  return os.str();
}

void run_gain(const RunConfig& c, RunOutcome& out, bool sweep) {
  if (resolve(c) == Method::kFrequencyResponse) {
    throw Error(ErrorCode::kConfig, "method: gain analyses need lmi or sos");
  }
  bool any = false;
  const std::vector<double> taus = sweep ? c.sweep_taus : std::vector<double>{c.tau};
  const std::string body = gain_rows(c, taus, &any);
  out.files.emplace_back(sweep ? "sweep.csv" : "gain.csv", versioned_csv(sweep ? "sweep" : "gain", body));
  out.exit_code = any ? 0 : 2;
  out.status = any ? "feasible" : "infeasible";
}

void run_factorize(const RunConfig& c, RunOutcome& out) {
  std::ostringstream os;
  os << "name,kind,hardness,states,z_size,residual,are_residual\n";
  const FrequencyGrid grid = FrequencyGrid::log_spaced(1e-3 / c.tau, 1e3 / c.tau, c.grid_density, true, true);
  Json factors = Json::array();
  for (const RecipeItem& item : c.recipe.items) {
    const Multiplier pi = make_multiplier(item, c.tau);
    const Factorization f =
        item.policy == FactorPolicy::kJSpectral ? j_spectral(pi, item.regularization) : factorize(pi, item.policy);
    const double res = factorization_residual(f.psi, f.m, pi, grid);
    os << item.name << ',' << to_string(f.kind) << ',' << to_string(f.hardness) << ',' << f.psi.states() << ','
       << f.z_size() << ',' << num(res) << ',' << num(f.are_residual) << '\n';
    Json fj = factorization_to_json(f);
    fj["name"] = item.name;
    factors.push_back(fj);
  }
  out.files.emplace_back("factorize.csv", versioned_csv("factorize", os.str()));
  out.files.emplace_back("factors.json", factors.dump(2) + "\n");
  out.exit_code = 0;
  out.status = "ok";
}

void run_nyquist(const RunConfig& c, RunOutcome& out) {
  std::vector<Multiplier> parts;
  for (const RecipeItem& item : c.recipe.items) parts.push_back(make_multiplier(item, c.tau));
  std::vector<double> lambda = c.lambda;
  if (lambda.empty()) {
    if (!c.plant.lpv) throw Error(ErrorCode::kConfig, "lambda: required for polynomial plants");
    const std::vector<IqcTerm> terms = c.recipe.instantiate(c.tau);
    const AnalysisResult r = check_feasibility(build_extended(*c.plant.lpv, terms), terms, lmi_options(c));
    if (r.status != AnalysisStatus::kFeasible) {
      out.exit_code = 2;
      out.status = "infeasible";
      return;
    }
    lambda = r.lambda;
  }
  const Multiplier pi = conic_combine(parts, lambda);
  const FrequencyGrid grid = c.omegas.empty()
                                 ? FrequencyGrid::log_spaced(1e-3 / c.tau, 1e3 / c.tau, c.grid_density, false, false)
                                 : FrequencyGrid(c.omegas);
  out.files.emplace_back("circles.csv", versioned_csv("nyquist-circles", circle_csv(pi, grid)));
  if (c.plant.lpv) {
    std::ostringstream os;
    os << "vertex,omega,re,im\n";
    const LpvPlant& g = *c.plant.lpv;
    for (std::size_t k = 0; k < g.vertices.size(); ++k) {
      for (double w : grid) {
        const Complex h = freq_response(g.vertices[k], w)(0, 0);
        os << k << ',' << num(w) << ',' << num(h.real()) << ',' << num(h.imag()) << '\n';
      }
    }
    out.files.emplace_back("plant_nyquist.csv", versioned_csv("nyquist-plant", os.str()));
  }
  Json lj = Json::array();
  for (double l : lambda) lj.push_back(l);
  out.summary["lambda"] = lj;
  out.exit_code = 0;
  out.status = "ok";
}

void run_simulate(const RunConfig& c, RunOutcome& out) {
  const SimulateSpec& s = c.simulate;
  DelayTrajectory delay = s.delay == "constant"     ? DelayTrajectory::constant(s.tau)
                          : s.delay == "sinusoidal" ? DelayTrajectory::sinusoidal(s.tau, s.rate)
                                                    : DelayTrajectory::piecewise(s.times, s.taus);
  delay.validate(s.horizon);
  const DelayedModel model =
      c.plant.poly ? delayed_model(*c.plant.poly) : delayed_model(c.plant.lpv->vertices.front(), c.plant.lpv->nv);
  const int nd = model.nd;
  const SimulateSpec spec = s;
  const InputFn input = [spec, nd](double t) {
    Vector d = Vector::Zero(nd);
    if (nd == 0) return d;
    if (spec.input == "step") {
      d(0) = spec.amplitude;
    } else if (spec.input == "sine") {
      d(0) = spec.amplitude * std::sin(spec.omega * t);
    } else if (t < 1.0) {
      d(0) = spec.amplitude;
    }
    return d;
  };
  const SimResult r = simulate_delayed(model, delay, input, s.dt, s.horizon);
  std::ostringstream os;
  os << "t,tau";
  for (int i = 0; i < model.nv; ++i) os << ",v" << i + 1;
  for (int i = 0; i < model.nv; ++i) os << ",w" << i + 1;
  for (int i = 0; i < model.ne; ++i) os << ",e" << i + 1;
  for (int i = 0; i < model.nd; ++i) os << ",d" << i + 1;
  os << '\n';
  for (std::size_t k = 0; k < r.t.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    os << num(r.t[k]) << ',' << num(delay(r.t[k]));
    for (int i = 0; i < model.nv; ++i) os << ',' << num(r.v(row, i));
    for (int i = 0; i < model.nv; ++i) os << ',' << num(r.w(row, i));
    for (int i = 0; i < model.ne; ++i) os << ',' << num(r.e(row, i));
    for (int i = 0; i < model.nd; ++i) os << ',' << num(r.d(row, i));
    os << '\n';
  }
  out.files.emplace_back("simulate.csv", versioned_csv("simulate", os.str()));
  out.summary["energy_e"] = SimResult::energy(r.e, r.dt);
  out.summary["energy_d"] = SimResult::energy(r.d, r.dt);
  out.summary["integrator"] = r.integrator;
  out.exit_code = 0;
  out.status = "ok";
}

}  // namespace

std::string versioned_csv(const std::string& kind, const std::string& body) {
  return std::string("# ") + kCsvSchema + " " + kind + "\n" + body;
}

RunOutcome run(const RunConfig& config) {
  RunOutcome out;
  switch (config.analysis) {
    case AnalysisKind::kMargin: run_margin(config, out); break;
    case AnalysisKind::kGain: run_gain(config, out, false); break;
    case AnalysisKind::kSweep: run_gain(config, out, true); break;
    case AnalysisKind::kFactorize: run_factorize(config, out); break;
    case AnalysisKind::kNyquist: run_nyquist(config, out); break;
    case AnalysisKind::kSimulate: run_simulate(config, out); break;
  }
  return out;
}

}  // namespace delayiqc
