// Command-line driver: deterministic experiment runners emitting JSON
// verdicts and CSV series.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shrinklab/flow.hpp"
#include "shrinklab/gaussian.hpp"
#include "shrinklab/geometry.hpp"
#include "shrinklab/json_writer.hpp"
#include "shrinklab/shrinkers.hpp"
#include "shrinklab/smc.hpp"
#include "shrinklab/spectrum.hpp"
#include "shrinklab/topology.hpp"

namespace {

using namespace shrinklab;
namespace fs = std::filesystem;

constexpr double kPi = std::numbers::pi;

int checkFailures = 0;

void check(JsonWriter& w, const std::string& name, bool ok, double value, double expect,
           double tol) {
  w.beginObject();
  w.field("name", name);
  w.field("pass", ok);
  w.field("value", value);
  w.field("expect", expect);
  w.field("tol", tol);
  w.endObject();
  if (!ok) ++checkFailures;
}

SurfaceSampleSet load_surface(const std::string& path) {
  LoadedSurface s = read_surface_csv(path);
  if (s.profile) orient_outward(*s.profile);
  return s.sample();
}

CanonicalKind parse_canonical(const std::string& kind) {
  if (kind == "plane") return CanonicalKind::plane;
  if (kind == "sphere") return CanonicalKind::sphere;
  if (kind == "cylinder") return CanonicalKind::cylinder;
  if (kind == "line") return CanonicalKind::line;
  if (kind == "circle") return CanonicalKind::circle;
  throw CLI::ValidationError("--kind", "unknown canonical kind: " + kind);
}

int run_solve(const std::string& kind, double param, double rmax, double tol, int resolution,
              const std::string& out) {
  ShootResult shot;
  bool canonical = false;
  if (kind == "shoot-equator" || kind == "shoot-axis" || kind == "shoot-cone") {
    const ShootFamily family = kind == "shoot-equator" ? ShootFamily::equator
                               : kind == "shoot-axis"  ? ShootFamily::axis
                                                       : ShootFamily::coneInward;
    shot = shoot_rotsym_shrinker(param, rmax, tol, family);
  } else if (kind == "specimen") {
    shot = reference_specimen(rmax, tol);
  } else {
    canonical = true;
  }

  JsonWriter w;
  w.beginObject();
  w.field("kind", kind);
  if (canonical) {
    const CanonicalKind ck = parse_canonical(kind);
    const int n = (ck == CanonicalKind::line || ck == CanonicalKind::circle) ? 1 : 2;
    if (n == 1) {
      const PlanarCurve c = canonical_curve(ck, resolution, rmax);
      write_surface_csv(out, c);
      w.field("residual", shrinker_residual(canonical_shrinker(ck, n, resolution, rmax)).maxAbs);
    } else {
      const ProfileCurve p = canonical_profile(ck, resolution, rmax);
      write_surface_csv(out, p);
      w.field("residual", shrinker_residual(canonical_shrinker(ck, n, resolution, rmax)).maxAbs);
    }
    w.field("hasCone", false);
  } else {
    if (!shot.ok()) {
      w.field("status", "failed");
      w.field("diagnostic", shot.diagnostic);
      w.endObject();
      w.writeFile(out + ".json");
      std::fprintf(stderr, "solve failed: %s\n", shot.diagnostic.c_str());
      return 1;
    }
    write_surface_csv(out, shot.profile);
    w.field("status", "ok");
    w.field("param", shot.shootParam);
    w.field("residual", shot.residual);
    w.field("hasCone", shot.coneFit.hasCone);
    if (shot.coneFit.hasCone) {
      w.field("linkAngles", shot.coneFit.cone.linkAngles);
      w.field("coneFitError", shot.coneFit.fitError);
      w.field("coneFitErrorInner", shot.coneFit.fitErrorInner);
      w.field("coneFitErrorOuter", shot.coneFit.fitErrorOuter);
    }
  }
  w.endObject();
  w.writeFile(out + ".json");
  return 0;
}

int run_entropy(const std::string& surface, std::uint64_t seed, int budgetScale,
                const std::string& jsonOut) {
  const SurfaceSampleSet s = load_surface(surface);
  EntropyBudget budget;
  budget.seed = seed;
  budget.refineTop = std::max(1, budgetScale);
  const EntropyResult r = entropy(s, budget);
  JsonWriter w;
  w.beginObject();
  w.field("lambda", r.lambda);
  w.beginArray("argmaxCenter").element(r.center.x).element(r.center.y).element(r.center.z).endArray();
  w.field("argmaxT0", r.t0);
  w.field("status", r.status == EntropyResult::Status::converged ? "converged" : "lower-bound-only");
  w.field("tailAtArgmax", r.tailAtArgmax);
  w.beginArray("trace");
  for (const auto& [q, v] : r.trace) {
    w.beginObject();
    w.field("point", q);
    w.field("value", v);
    w.endObject();
  }
  w.endArray();
  w.endObject();
  if (jsonOut.empty()) std::printf("%s\n", w.str().c_str());
  else w.writeFile(jsonOut);
  return r.status == EntropyResult::Status::converged ? 0 : 1;
}

int run_gscan(const std::string& surface, const std::string& out) {
  const SurfaceSampleSet s = load_surface(surface);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + out);
  f << "logT0,axisOffset,G\n";
  char buf[96];
  for (int it = 0; it <= 40; ++it) {
    const double tau = -4.0 + 8.0 * it / 40.0;
    for (int ic = 0; ic <= 40; ++ic) {
      const double a = -4.0 + 8.0 * ic / 40.0;
      const double g = f_functional(s, {a, 0.0, 0.0}, std::exp(tau), false).value;
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", tau, a, g);
      f << buf;
    }
  }
  return 0;
}

int run_spectrum(const std::string& surface, std::vector<double> rs, const std::string& jsonOut) {
  const SurfaceSampleSet s = load_surface(surface);
  if (rs.empty()) rs = {10.0, 15.0, 20.0, 30.0};
  const SpectralResult r = lowest_eigenpair(s, rs);
  JsonWriter w;
  w.beginObject();
  w.field("mu", r.mu);
  w.beginArray("muByR");
  for (const auto& [R, m] : r.muByR) {
    w.beginObject().field("R", R).field("mu", m).endObject();
  }
  w.endArray();
  w.field("beta", r.beta);
  w.field("C0", r.C0);
  w.field("C1", r.C1);
  w.field("decayFitDone", r.decayFitDone);
  if (r.decayFitDone) {
    w.field("decaySlope", r.decaySlope);
    w.field("decaySlopeStderr", r.decaySlopeStderr);
    w.field("decayBracketLo", 1.0 + 2.0 * r.mu - 2.0 * r.beta);
    w.field("decayBracketHi", 1.0 + 2.0 * r.mu + 2.0 * r.beta);
  }
  w.endObject();
  if (jsonOut.empty()) std::printf("%s\n", w.str().c_str());
  else w.writeFile(jsonOut);
  return 0;
}

int run_perturb(const std::string& surface, double eps, const std::string& out) {
  const SurfaceSampleSet s = load_surface(surface);
  const SpectralResult spectral = lowest_eigenpair(s, {6.0, 7.0, 8.0, 9.0});
  const PerturbationSpec spec = build_perturbation(s, spectral, eps);
  if (s.n == 2) write_surface_csv(out, spec.profile);
  else write_surface_csv(out, spec.curve);
  JsonWriter w;
  w.beginObject();
  w.field("epsilon", spec.epsilon);
  w.field("maxAdmissibleEps", spec.maxAdmissibleEps);
  w.field("embeddedGraph", spec.embeddedGraph);
  w.field("smcSign", spec.smcSign);
  w.field("smcFloor", spec.smcFloor);
  w.field("smcFloorBound", spec.smcFloorBound);
  w.field("smcFloorOk", spec.smcFloorOk);
  w.field("localGraphGradient", spec.localGraphGradient);
  w.endObject();
  w.writeFile(out + ".json");
  return spec.smcFloorOk ? 0 : 1;
}

int run_flow(const std::string& in, double horizon, double dtMax, double saveInterval,
             const std::string& traceOut) {
  const SurfaceSampleSet s = load_surface(in);
  FlowController ctrl;
  if (dtMax > 0.0) ctrl.dtMax = dtMax;
  if (saveInterval > 0.0) ctrl.saveInterval = saveInterval;
  const FlowTrace trace = flow_run(s, horizon, ctrl);
  write_trace(traceOut, trace);
  std::printf("flow: %zu slices, status %s\n", trace.times.size(),
              trace.status == FlowTrace::Status::singular ? "singular" : "reached-horizon");
  return 0;
}

int run_diagnose(const std::string& what, const std::string& traceDir, double x0t, double c,
                 double alpha, double R, double c0, const std::string& jsonOut) {
  const FlowTrace trace = read_trace(traceDir);
  const SpaceTimePoint x0{{0.0, 0.0, 0.0}, x0t};
  JsonWriter w;
  w.beginObject();
  w.field("diagnostic", what);
  bool pass = true;
  if (what == "smc") {
    const SMCField f = smc(trace.surfaces.front(), x0, trace.times.front());
    double worst = 0.0;
    for (double v : f.value) worst = std::max(worst, std::abs(v));
    w.field("maxAbsInitial", worst);
  } else if (what == "evolution") {
    const EvolutionResidualReport rep = smc_evolution_residual(trace, x0);
    w.field("overallMax", rep.overallMax);
    w.field("times", rep.times);
    w.field("maxResidual", rep.maxResidual);
  } else if (what == "lowerbound") {
    const LowerBoundReport rep = lower_bound_audit(trace, x0, c, alpha);
    pass = rep.pass;
    w.field("pass", rep.pass);
    w.field("worstMargin", rep.worstMargin);
    w.field("perTimeMin", rep.perTimeMin);
  } else if (what == "ratio") {
    const RatioReport rep = curvature_ratio_audit(trace, x0, c, alpha, R);
    pass = rep.pass;
    w.field("pass", rep.pass);
    w.field("maxRatio", rep.maxRatio);
    w.field("mTilde", rep.mTilde);
    w.field("perTimeMax", rep.perTimeMax);
  } else if (what == "maxprinciple") {
    // Canonical audit field: u = S eta^alpha with its evolution coefficients.
    MaxPrincipleInput input;
    input.c0 = c0;
    input.R = R;
    for (std::size_t k = 0; k < trace.surfaces.size(); ++k) {
      const SurfaceSampleSet& s = trace.surfaces[k];
      const SMCField f = smc(s, x0, trace.times[k]);
      std::vector<double> u(s.size()), b(s.size()), aT(s.size());
      const auto logEta = [&](std::size_t i) {
        return std::log(f.eta[i]);
      };
      std::vector<double> le(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) le[i] = logEta(i);
      const FieldDerivatives dLe = field_derivatives(s, le);
      for (std::size_t i = 0; i < s.size(); ++i) {
        u[i] = f.value[i] * std::pow(f.eta[i], alpha);
        const double gradLog = dLe.d1[i];
        b[i] = s.normA[i] * s.normA[i] + alpha * (alpha + 1.0) * gradLog * gradLog;
        aT[i] = -2.0 * alpha * gradLog;
      }
      input.u.push_back(std::move(u));
      input.b.push_back(std::move(b));
      input.aTangent.push_back(std::move(aT));
    }
    const MaxPrincipleReport rep = max_principle_audit(trace, input);
    pass = rep.pass;
    w.field("pass", rep.pass);
    w.field("worstMargin", rep.worstMargin);
    w.field("M0", rep.m0);
    w.field("M1", rep.m1);
    w.field("hypothesisIWorst", rep.hypothesisIWorst);
    w.field("weightedIntegrals", rep.weightedIntegrals);
  } else {
    throw CLI::ValidationError("diagnose", "unknown diagnostic: " + what);
  }
  w.endObject();
  if (jsonOut.empty()) std::printf("%s\n", w.str().c_str());
  else w.writeFile(jsonOut);
  return pass ? 0 : 1;
}

int run_theorem1(const std::string& specimenPath, double rmax, double tol,
                 const std::string& reportOut, std::uint64_t seed) {
  ShootResult shot;
  if (specimenPath.empty() || specimenPath == "builtin") {
    shot = reference_specimen(rmax, tol);
  } else {
    LoadedSurface s = read_surface_csv(specimenPath);
    if (!s.profile) {
      std::fprintf(stderr, "theorem1 needs a profile surface\n");
      return 2;
    }
    orient_outward(*s.profile);
    shot.status = ShootResult::Status::ok;
    shot.profile = *s.profile;
    shot.residual = shrinker_residual(geometric_data(*s.profile)).maxAbs;
    if (s.profile->endA.kind == EndCondition::Kind::cone ||
        s.profile->endB.kind == EndCondition::Kind::cone) {
      shot.coneFit = asymptotic_cone(*s.profile, 0.2);
    }
  }
  PipelineConfig config;
  config.entropyBudget.seed = seed;
  const PipelineReport report = theorem_pipeline(shot, config);

  JsonWriter w;
  w.beginObject();
  w.field("pass", report.pass);
  w.field("failedStage", report.failedStage);
  w.beginArray("stages");
  for (const PipelineStage& s : report.stages) {
    w.beginObject();
    w.field("name", s.name);
    w.field("pass", s.pass);
    w.field("detail", s.detail);
    w.endObject();
  }
  w.endArray();
  w.field("residual", report.residual);
  w.field("lambdaSigma", report.lambdaSigma);
  w.field("lambdaCylinder", report.lambdaCylinder);
  w.field("mu", report.mu);
  w.field("epsilon", report.epsilon);
  w.endObject();
  if (reportOut.empty()) std::printf("%s\n", w.str().c_str());
  else w.writeFile(reportOut);

  for (const PipelineStage& s : report.stages) {
    std::printf("%-24s %s  %s\n", s.name.c_str(), s.pass ? "pass" : "FAIL", s.detail.c_str());
  }
  return report.pass ? 0 : 1;
}

int run_goldens(const std::string& outDir, std::uint64_t seed) {
  fs::path dir = outDir;
  if (const char* env = std::getenv("SHRINKLAB_GOLDEN_DIR")) dir = env;
  fs::create_directories(dir);

  const auto plane = canonical_shrinker(CanonicalKind::plane, 2, 2400, 14.0);
  const auto circle = canonical_shrinker(CanonicalKind::circle, 1, 512);
  const auto sphere = canonical_shrinker(CanonicalKind::sphere, 2, 512);
  const auto cylinder = canonical_shrinker(CanonicalKind::cylinder, 2, 2400, 16.0);

  const double fPlane = f_functional(plane, {}, 1.0).value;
  const double lambda1 = f_functional(cylinder, {}, 1.0).value;
  const double lambda1Circle = f_functional(circle, {}, 1.0).value;
  const double lambda2 = f_functional(sphere, {}, 1.0).value;

  JsonWriter w;
  w.beginObject();
  w.field("seed", static_cast<long long>(seed));
  w.beginArray("table");
  check(w, "F[plane] = 1", std::abs(fPlane - 1.0) <= 1e-6, fPlane, 1.0, 1e-6);
  check(w, "F[S^1_*] = sqrt(2 pi / e)", std::abs(lambda1Circle - std::sqrt(2.0 * kPi / std::exp(1.0))) <= 1e-4,
        lambda1Circle, std::sqrt(2.0 * kPi / std::exp(1.0)), 1e-4);
  check(w, "F[S^2_*] = 4/e", std::abs(lambda2 - 4.0 / std::exp(1.0)) <= 1e-4, lambda2,
        4.0 / std::exp(1.0), 1e-4);
  check(w, "lambda_1 < 2", lambda1 < 2.0, lambda1, 2.0, 0.0);
  check(w, "lambda_1 > 3/2", lambda1 > 1.5, lambda1, 1.5, 0.0);
  check(w, "lambda_2 < 3/2", lambda2 < 1.5, lambda2, 1.5, 0.0);
  check(w, "lambda_2 > sqrt(2)", lambda2 > std::sqrt(2.0), lambda2, std::sqrt(2.0), 0.0);
  check(w, "residual[plane] analytic", shrinker_residual(plane).maxAbs <= 1e-10,
        shrinker_residual(plane).maxAbs, 0.0, 1e-10);
  check(w, "residual[sphere] analytic", shrinker_residual(sphere).maxAbs <= 1e-10,
        shrinker_residual(sphere).maxAbs, 0.0, 1e-10);
  check(w, "residual[cylinder] analytic", shrinker_residual(cylinder).maxAbs <= 1e-10,
        shrinker_residual(cylinder).maxAbs, 0.0, 1e-10);
  check(w, "residual[circle] analytic", shrinker_residual(circle).maxAbs <= 1e-10,
        shrinker_residual(circle).maxAbs, 0.0, 1e-10);
  w.endArray();
  w.endObject();
  w.writeFile((dir / "goldens.json").string());
  std::printf("goldens written to %s (%d failures)\n", (dir / "goldens.json").string().c_str(),
              checkFailures);
  return checkFailures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical toolkit for self-shrinkers, Gaussian entropy, and mean curvature flow"};
  app.require_subcommand(1);
  std::uint64_t seed = 0x5eed5eedULL;
  app.add_option("--seed", seed, "seed for all randomized probes");

  // solve
  auto* solve = app.add_subcommand("solve", "produce a self-shrinker surface");
  std::string kind = "specimen", out = "profile.csv";
  double param = 0.0, rmax = 10.0, tol = 1e-6;
  int resolution = 1024;
  solve->add_option("--kind", kind,
                    "plane|sphere|cylinder|line|circle|shoot-equator|shoot-axis|shoot-cone|specimen");
  solve->add_option("--param", param, "shooting parameter");
  solve->add_option("--rmax", rmax, "domain radius");
  solve->add_option("--tol", tol, "residual tolerance");
  solve->add_option("--resolution", resolution, "node count for canonical kinds");
  solve->add_option("--out", out, "output surface CSV");

  // entropy
  auto* ent = app.add_subcommand("entropy", "Gaussian entropy of a surface");
  std::string entSurface, entJson;
  int entBudget = 3;
  ent->add_option("--surface", entSurface, "surface CSV")->required();
  ent->add_option("--budget", entBudget, "number of local refinements");
  ent->add_option("--json", entJson, "verdict JSON path (stdout when omitted)");

  // gscan
  auto* gscan = app.add_subcommand("gscan", "CSV grid of G over (log t0, axis offset)");
  std::string gsSurface, gsOut = "gscan.csv";
  gscan->add_option("--surface", gsSurface)->required();
  gscan->add_option("--out", gsOut);

  // spectrum
  auto* spec = app.add_subcommand("spectrum", "lowest eigenpair of the stability operator");
  std::string spSurface, spJson;
  std::vector<double> spR;
  spec->add_option("--surface", spSurface)->required();
  spec->add_option("--R", spR, "truncation radius schedule")->delimiter(',');
  spec->add_option("--json", spJson, "verdict JSON path (stdout when omitted)");

  // perturb
  auto* pert = app.add_subcommand("perturb", "eigenfunction normal graph");
  std::string ptSurface, ptOut = "gamma.csv";
  double ptEps = 0.01;
  pert->add_option("--surface", ptSurface)->required();
  pert->add_option("--eps", ptEps);
  pert->add_option("--out", ptOut);

  // flow run
  auto* flow = app.add_subcommand("flow", "mean curvature flow");
  auto* flowRun = flow->add_subcommand("run", "integrate a flow");
  std::string flIn, flOut = "trace";
  double flHorizon = 0.0, flDt = 0.0, flSave = 0.05;
  flowRun->add_option("--in", flIn)->required();
  flowRun->add_option("--horizon", flHorizon);
  flowRun->add_option("--dt", flDt, "maximum time step");
  flowRun->add_option("--save-interval", flSave);
  flowRun->add_option("--trace-out", flOut);

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "shrinker mean curvature audits");
  std::string dgWhat, dgTrace, dgJson;
  double dgT0 = 0.0, dgC = 0.0, dgAlpha = 0.0, dgR = 0.0, dgC0 = 0.0;
  diag->add_option("what", dgWhat, "smc|evolution|lowerbound|ratio|maxprinciple")->required();
  diag->add_option("--trace", dgTrace)->required();
  diag->add_option("--t0", dgT0, "reference time of the space-time point");
  diag->add_option("--c", dgC);
  diag->add_option("--alpha", dgAlpha);
  diag->add_option("--R", dgR);
  diag->add_option("--c0", dgC0);
  diag->add_option("--json", dgJson, "verdict JSON path (stdout when omitted)");

  // theorem1
  auto* thm = app.add_subcommand("theorem1", "end-to-end small-entropy topology experiment");
  std::string thSpecimen, thReport = "report.json";
  double thRmax = 10.0, thTol = 1e-5;
  thm->add_option("--specimen", thSpecimen, "specimen CSV (or 'builtin')");
  thm->add_option("--rmax", thRmax);
  thm->add_option("--tol", thTol);
  thm->add_option("--report", thReport);

  // goldens
  auto* gold = app.add_subcommand("goldens", "regression table of the closed-form values");
  std::string goldDir = ".";
  gold->add_option("--out-dir", goldDir);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return run_solve(kind, param, rmax, tol, resolution, out);
    if (*ent) return run_entropy(entSurface, seed, entBudget, entJson);
    if (*gscan) return run_gscan(gsSurface, gsOut);
    if (*spec) return run_spectrum(spSurface, spR, spJson);
    if (*pert) return run_perturb(ptSurface, ptEps, ptOut);
    if (*flowRun) return run_flow(flIn, flHorizon, flDt, flSave, flOut);
    if (*diag) return run_diagnose(dgWhat, dgTrace, dgT0, dgC, dgAlpha, dgR, dgC0, dgJson);
    if (*thm) return run_theorem1(thSpecimen, thRmax, thTol, thReport, seed);
    if (*gold) return run_goldens(goldDir, seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
