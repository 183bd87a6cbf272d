#include "bohmlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "bohmlab/diagnostics.hpp"
#include "bohmlab/equilibrium.hpp"
#include "bohmlab/io.hpp"
#include "bohmlab/measurement.hpp"
#include "bohmlab/scenario.hpp"
#include "bohmlab/stats.hpp"
#include "bohmlab/trajectories.hpp"
#include "bohmlab/velocity.hpp"

namespace bohmlab::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using scenario::ScenarioConfig;

std::string zero_pad(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", k);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// One run's working state: output directory, accumulated stats for the
// manifest, and the artifact list in creation order.
struct Session {
  const ScenarioConfig& cfg;
  const Options& opt;
  fs::path dir;
  json stats = json::object();
  std::vector<std::string> artifacts;
  bool check_failed = false;

  Session(const ScenarioConfig& c, const Options& o) : cfg(c), opt(o), dir(c.output_directory) {
    fs::create_directories(dir);
  }

  fs::path artifact(const std::string& name) {
    artifacts.push_back(name);
    return dir / name;
  }

  void note(const std::string& line) const {
    if (opt.verbose) std::fprintf(stderr, "[%s] %s\n", cfg.name.c_str(), line.c_str());
  }

  // The manifest goes last: its presence marks a completed run, and it lists
  // every artifact with size and checksum.
  void write_manifest() {
    json m;
    m["version"] = version;
    m["subcommand"] = opt.subcommand;
    m["scenario"] = cfg.name;
    m["seed"] = cfg.seed;
    m["config"] = json::parse(scenario::resolved_json(cfg));
    m["stats"] = stats;
    json arts = json::array();
    for (const std::string& name : artifacts) {
      const fs::path p = dir / name;
      arts.push_back(json{{"file", name},
                          {"bytes", static_cast<std::uint64_t>(fs::file_size(p))},
                          {"fnv1a64", hex64(io::fnv1a64_file(p))}});
    }
    m["artifacts"] = std::move(arts);
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    out << m.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write manifest");
  }
};

std::vector<WaveFunction> scenario_snapshots(const ScenarioConfig& cfg) {
  return evolve(scenario::initial_state(cfg), scenario::hamiltonian(cfg),
                PropagatorConfig{cfg.propagation.dt}, cfg.propagation.t_final,
                cfg.propagation.snapshot_stride);
}

// ---------------------------------------------------------------- evolve --

void run_evolve(Session& s) {
  const Hamiltonian h = scenario::hamiltonian(s.cfg);
  const auto snaps = scenario_snapshots(s.cfg);

  std::ofstream obs(s.artifact("observables.csv"), std::ios::binary | std::ios::trunc);
  const int nd = s.cfg.grid.dims();
  obs << (nd == 1 ? "t,norm,energy,mean_x,std_x" : "t,norm,energy,mean_x,std_x,mean_y,std_y") << "\n";

  const double e0 = total_energy(snaps.front(), h);
  double energy_drift = 0.0;
  double norm_error = 0.0;
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const WaveFunction& psi = snaps[k];
    io::write_wavefunction(s.artifact("state_" + zero_pad(k) + ".bwl"), psi);
    const DensityField rho = position_density(psi);
    io::write_density_csv(s.artifact("density_" + zero_pad(k) + ".csv"), rho);

    const double nrm = psi.norm();
    const double en = total_energy(psi, h);
    const auto mean = density_mean(rho);
    const auto sd = density_std(rho);
    energy_drift = std::max(energy_drift, std::abs(en - e0));
    norm_error = std::max(norm_error, std::abs(nrm - 1.0));
    obs << io::format_number(psi.time) << ',' << io::format_number(nrm) << ','
        << io::format_number(en);
    for (int a = 0; a < nd; ++a)
      obs << ',' << io::format_number(mean[static_cast<std::size_t>(a)]) << ','
          << io::format_number(sd[static_cast<std::size_t>(a)]);
    obs << "\n";
  }
  if (!obs) throw std::runtime_error("cannot write observables.csv");
  obs.close();

  s.stats["evolve"] = json{{"snapshots", snaps.size()},
                           {"energy_initial", e0},
                           {"energy_drift", energy_drift},
                           {"norm_error", norm_error}};
  s.note("evolve: " + std::to_string(snaps.size()) + " snapshots");
}

// ----------------------------------------------------------------- field --

void run_field(Session& s) {
  const Hamiltonian h = scenario::hamiltonian(s.cfg);
  const auto snaps = scenario_snapshots(s.cfg);
  double pos_masked = 0.0;
  double mom_masked = 0.0;
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const VelocityField vf = velocity_field(snaps[k], h);
    const VelocityField mf = momentum_velocity_field(snaps[k], h);
    io::write_field_csv(s.artifact("field_position_" + zero_pad(k) + ".csv"), vf);
    io::write_field_csv(s.artifact("field_momentum_" + zero_pad(k) + ".csv"), mf);
    for (std::uint8_t m : vf.mask) pos_masked += m;
    for (std::uint8_t m : mf.mask) mom_masked += m;
  }
  const double total = static_cast<double>(snaps.size() * s.cfg.grid.size());
  s.stats["field"] = json{{"snapshots", snaps.size()},
                          {"position_masked_fraction", pos_masked / total},
                          {"momentum_masked_fraction", mom_masked / total}};
  s.note("field: " + std::to_string(snaps.size()) + " snapshots, both representations");
}

// --------------------------------------------------------------- weaksim --

// Analytic value of the measured velocity at the coarse bin centers, linearly
// interpolated from the dense field. ref_mask flags centers flanked by a
// masked node, where no trustworthy reference exists.
std::vector<double> reference_at_bins(const VelocityEstimate& est, const VelocityField& dense,
                                      std::vector<std::uint8_t>& ref_mask) {
  const FieldStack one = FieldStack::from_fields({dense});
  std::vector<double> out(est.bin_centers.size(), 0.0);
  ref_mask.assign(est.bin_centers.size(), 0);
  for (std::size_t b = 0; b < est.bin_centers.size(); ++b) {
    double v = 0.0;
    const double x = est.bin_centers[b];
    if (one.sample(&x, dense.time, Interpolation::linear, &v))
      out[b] = v;
    else
      ref_mask[b] = 1;
  }
  return out;
}

struct EstimateComparison {
  double masked_rms = 0.0;   // over bins unmasked on both sides
  std::size_t bins = 0;
  double coverage_3se = 0.0;  // fraction of well-counted bins within 3 standard errors
  std::size_t coverage_bins = 0;
};

EstimateComparison compare_estimate(const VelocityEstimate& est, std::span<const double> ref,
                                    std::span<const std::uint8_t> ref_mask,
                                    std::size_t coverage_min_count) {
  EstimateComparison c;
  double ss = 0.0;
  std::size_t covered = 0;
  for (std::size_t b = 0; b < est.v_hat.size(); ++b) {
    if (est.mask[b] || ref_mask[b]) continue;
    const double d = est.v_hat[b] - ref[b];
    ss += d * d;
    ++c.bins;
    if (est.counts[b] >= coverage_min_count && est.std_error[b] > 0.0) {
      ++c.coverage_bins;
      if (std::abs(d) <= 3.0 * est.std_error[b]) ++covered;
    }
  }
  if (c.bins > 0) c.masked_rms = std::sqrt(ss / static_cast<double>(c.bins));
  if (c.coverage_bins > 0) c.coverage_3se = static_cast<double>(covered) / static_cast<double>(c.coverage_bins);
  return c;
}

json comparison_json(const EstimateComparison& c) {
  return json{{"masked_rms", c.masked_rms},
              {"bins", c.bins},
              {"coverage_3se", c.coverage_3se},
              {"coverage_bins", c.coverage_bins}};
}

void run_weaksim(Session& s) {
  if (!s.cfg.protocol) throw scenario::ConfigError("protocol: section required by weaksim");
  const scenario::ProtocolSpec& p = *s.cfg.protocol;
  const Hamiltonian h = scenario::hamiltonian(s.cfg);
  const PropagatorConfig pc{s.cfg.propagation.dt};
  WaveFunction psi = scenario::initial_state(s.cfg);
  if (p.t_measure > 0.0) psi = evolve(psi, h, pc, p.t_measure, 0).back();

  FieldEstimationConfig fec;
  fec.settings = p.settings;
  fec.coarsen = p.bin_coarsen;
  fec.min_count = p.min_count;
  fec.propagation = pc;
  fec.seed = s.cfg.seed;
  fec.threads = s.opt.threads;
  const FieldEstimationDetail detail = estimate_velocity_detail(psi, h, p.observable, fec, p.write_records);

  const VelocityField dense =
      p.observable == Representation::position ? velocity_field(psi, h) : momentum_velocity_field(psi, h);
  std::vector<std::uint8_t> ref_mask;
  const std::vector<double> ref = reference_at_bins(detail.settings.front().estimate, dense, ref_mask);

  {
    const VelocityEstimate& e0 = detail.settings.front().estimate;
    std::ofstream rf(s.artifact("reference.csv"), std::ios::binary | std::ios::trunc);
    rf << "center,v,mask\n";
    for (std::size_t b = 0; b < ref.size(); ++b)
      rf << io::format_number(e0.bin_centers[b]) << ',' << io::format_number(ref[b]) << ','
         << unsigned{ref_mask[b]} << "\n";
    if (!rf) throw std::runtime_error("cannot write reference.csv");
  }

  json settings_stats = json::array();
  double best_single_rms = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < detail.settings.size(); ++k) {
    const SettingOutcome& o = detail.settings[k];
    io::write_estimate_csv(s.artifact("estimate_s" + std::to_string(k) + ".csv"), o.estimate);
    if (p.write_records)
      io::write_records_csv(s.artifact("records_s" + std::to_string(k) + ".csv"), o.records);
    const EstimateComparison c = compare_estimate(o.estimate, ref, ref_mask, 500);
    best_single_rms = std::min(best_single_rms, c.masked_rms);
    json sj{{"tau", o.estimate.tau},
            {"sigma", o.estimate.sigma},
            {"runs", o.estimate.n_total},
            {"state_std", o.state_std},
            {"resampled", o.resampled},
            {"weak_regime_warning", o.weak_regime_warning}};
    sj["vs_analytic"] = comparison_json(c);
    settings_stats.push_back(std::move(sj));
  }

  json wj;
  wj["observable"] = to_string(p.observable);
  wj["t_measure"] = p.t_measure;
  wj["settings"] = std::move(settings_stats);
  if (detail.has_extrapolated) {
    io::write_extrapolated_csv(s.artifact("extrapolated.csv"), detail.extrapolated);
    const EstimateComparison c = compare_estimate(detail.extrapolated.estimate, ref, ref_mask, 500);
    json ej = comparison_json(c);
    ej["improves_on_best_single"] = c.masked_rms < best_single_rms;
    ej["best_single_masked_rms"] = best_single_rms;
    wj["extrapolated"] = std::move(ej);
  }
  io::write_field_csv(s.artifact("estimated_field.csv"), detail.field);
  s.stats["weaksim"] = std::move(wj);
  s.note("weaksim: " + std::to_string(detail.settings.size()) + " settings");
}

// ----------------------------------------------------------------- paths --

// Counts paths with any recorded position strictly on the other side of the
// axis-0 plane from where they started.
std::size_t axis_crossings(const TrajectorySet& set, double axis) {
  std::size_t crossings = 0;
  for (std::size_t i = 0; i < set.n_paths; ++i) {
    const double start = set.at(i, 0)[0] - axis;
    bool crossed = false;
    for (std::size_t r = 1; r < set.n_records && !crossed; ++r)
      crossed = (set.at(i, r)[0] - axis) * start < 0.0;
    crossings += crossed ? 1 : 0;
  }
  return crossings;
}

void run_reintegration(Session& s, json& pj, std::span<const double> x0, const TrajectorySet& ana) {
  const scenario::PathsSpec& p = *s.cfg.paths;
  const scenario::EstimatedPathsSpec& e = *p.estimated;
  const Hamiltonian h = scenario::hamiltonian(s.cfg);
  const PropagatorConfig pc{s.cfg.propagation.dt};

  const auto est_snaps = evolve(scenario::initial_state(s.cfg), h, pc, s.cfg.propagation.t_final,
                                e.stack_stride);
  FieldEstimationConfig fec;
  fec.settings = e.settings;
  fec.coarsen = e.bin_coarsen;
  fec.min_count = e.min_count;
  fec.propagation = pc;
  fec.seed = s.cfg.seed;
  fec.threads = s.opt.threads;
  const FieldStack est_stack = estimated_field_stack(est_snaps, h, Representation::position, fec);
  for (std::size_t k = 0; k < est_stack.fields.size(); ++k)
    io::write_field_csv(s.artifact("estimated_field_" + zero_pad(k) + ".csv"), est_stack.fields[k]);

  const int nd = est_stack.grid.dims();
  const std::size_t n_check = std::min<std::size_t>(e.n_check, ana.n_paths);
  const std::span<const double> x0_sub = x0.subspan(0, n_check * static_cast<std::size_t>(nd));

  IntegrateOptions eio;
  eio.dt_path = p.dt_path;
  eio.interpolation = p.interpolation;
  eio.max_escape_fraction = e.max_escape_fraction;
  eio.record_every = std::numeric_limits<std::size_t>::max() / 2;  // endpoints only
  eio.threads = s.opt.threads;
  const TrajectorySet est_set = integrate(x0_sub, est_stack, eio);

  std::ofstream rf(s.artifact("reintegrated.csv"), std::ios::binary | std::ios::trunc);
  rf << (nd == 1 ? "path_id,x_analytic,x_estimated,difference,propagated_std"
                 : "path_id,x_analytic,y_analytic,x_estimated,y_estimated,difference,propagated_std")
     << "\n";

  double ss_diff = 0.0;
  double ss_tube = 0.0;
  std::size_t compared = 0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < n_check; ++i) {
    if (ana.escaped[i] || est_set.escaped[i]) {
      ++skipped;
      continue;
    }
    const double* a = ana.at(i, ana.n_records - 1);
    const double* q = est_set.at(i, est_set.n_records - 1);
    double d2 = 0.0;
    double tube2 = 0.0;
    for (int ax = 0; ax < nd; ++ax) {
      const double d = q[ax] - a[ax];
      d2 += d * d;
      const double t = est_set.propagated_std[i * static_cast<std::size_t>(nd) + static_cast<std::size_t>(ax)];
      tube2 += t * t;
    }
    ss_diff += d2;
    ss_tube += tube2;
    ++compared;
    rf << i;
    for (int ax = 0; ax < nd; ++ax) rf << ',' << io::format_number(a[ax]);
    for (int ax = 0; ax < nd; ++ax) rf << ',' << io::format_number(q[ax]);
    rf << ',' << io::format_number(std::sqrt(d2)) << ',' << io::format_number(std::sqrt(tube2)) << "\n";
  }
  if (!rf) throw std::runtime_error("cannot write reintegrated.csv");
  rf.close();

  if (compared == 0) throw std::runtime_error("no surviving path pairs to compare");
  const double rms_diff = std::sqrt(ss_diff / static_cast<double>(compared));
  const double rms_tube = std::sqrt(ss_tube / static_cast<double>(compared));
  const double ratio = rms_tube > 0.0 ? rms_diff / rms_tube : std::numeric_limits<double>::infinity();
  pj["reintegration"] = json{{"stack_snapshots", est_stack.fields.size()},
                             {"paths_compared", compared},
                             {"paths_skipped_escaped", skipped},
                             {"estimated_escaped_fraction", est_set.escaped_fraction},
                             {"rms_difference", rms_diff},
                             {"rms_propagated_std", rms_tube},
                             {"ratio", ratio},
                             {"within_3x", ratio < 3.0}};
}

void run_paths(Session& s) {
  if (!s.cfg.paths) throw scenario::ConfigError("paths: section required by paths");
  const scenario::PathsSpec& p = *s.cfg.paths;
  const Hamiltonian h = scenario::hamiltonian(s.cfg);
  const auto snaps = scenario_snapshots(s.cfg);
  const FieldStack stack = analytic_field_stack(snaps, h, Representation::position);

  const DensityField rho0 = position_density(snaps.front());
  const std::vector<double> x0 = sample_density(rho0, p.n_paths, s.cfg.seed);

  IntegrateOptions iopt;
  iopt.dt_path = p.dt_path;
  iopt.interpolation = p.interpolation;
  iopt.max_escape_fraction = p.max_escape_fraction;
  iopt.record_every = p.record_every;
  iopt.threads = s.opt.threads;
  const TrajectorySet set = integrate(x0, stack, iopt);

  io::write_paths_binary(s.artifact("paths.bwp"), set);
  io::write_paths_csv(s.artifact("paths_sample.csv"), set, p.export_count);

  // Endpoint ensemble against the evolved density: a fringe histogram plus a
  // distribution distance on the axis-0 marginal.
  const int nd = set.dims;
  std::vector<double> endpoints;
  std::vector<double> axis0;
  endpoints.reserve(set.n_paths * static_cast<std::size_t>(nd));
  for (std::size_t i = 0; i < set.n_paths; ++i) {
    if (set.escaped[i]) continue;
    const double* e = set.at(i, set.n_records - 1);
    for (int a = 0; a < nd; ++a) endpoints.push_back(e[a]);
    axis0.push_back(e[0]);
  }
  if (axis0.empty()) throw std::runtime_error("every path escaped the resolved region");
  const DensityField emp = stats::empirical_density(endpoints, s.cfg.grid, stack.t_final());
  io::write_density_csv(s.artifact("endpoint_density.csv"), emp);

  const DensityField rho_final = position_density(snaps.back());
  const DensityField marginal =
      nd == 1 ? rho_final : stats::marginal_density(rho_final, 0);
  const double ks = stats::ks_distance(axis0, stats::density_cdf(marginal, 0));

  json pj{{"n_paths", set.n_paths},
          {"records_per_path", set.n_records},
          {"escaped_fraction", set.escaped_fraction},
          {"survivors", axis0.size()},
          {"ks_final", ks}};
  if (p.symmetry_axis) {
    pj["symmetry_axis"] = *p.symmetry_axis;
    pj["axis_crossings"] = axis_crossings(set, *p.symmetry_axis);
  }
  if (p.estimated) run_reintegration(s, pj, x0, set);
  s.stats["paths"] = std::move(pj);
  s.note("paths: " + std::to_string(set.n_paths) + " integrated, KS " + io::format_number(ks));
}

// -------------------------------------------------------------- diagnose --

json report_json(const DiagnosticsReport& r) {
  return json{{"representation", to_string(r.representation)},
              {"residual_rel", r.residual_rel},
              {"residual_l2", r.residual_l2},
              {"dpdt_l2", r.dpdt_l2},
              {"masked_fraction", r.masked_fraction},
              {"degenerate", r.degenerate},
              {"grid_spacing", r.grid_spacing},
              {"snapshot_dt", r.snapshot_dt}};
}

void write_residual_csv(Session& s, const std::string& name, const DiagnosticsReport& r) {
  DensityField f;
  f.grid = r.grid;
  f.representation = r.representation;
  f.time = 0.0;
  f.values = r.residual_field;
  io::write_density_csv(s.artifact(name), f);
}

void run_diagnose(Session& s) {
  if (!s.cfg.diagnostics) throw scenario::ConfigError("diagnostics: section required by diagnose");
  const scenario::DiagnosticsSpec& d = *s.cfg.diagnostics;

  const IncompatibilityResult r = incompatibility_score(scenario::diagnostics_frame(s.cfg));
  write_residual_csv(s, "residual_position.csv", r.position_report);
  if (!r.momentum_report.residual_field.empty())
    write_residual_csv(s, "residual_momentum.csv", r.momentum_report);

  const auto frame_at = [&s](int level) {
    return scenario::diagnostics_frame(scenario::refined(s.cfg, level));
  };
  const RefinementStudy pos_study = refinement_study(frame_at, d.refinements, Representation::position);
  const RefinementStudy mom_study = refinement_study(frame_at, d.refinements, Representation::momentum);

  json dj;
  dj["verdict"] = r.verdict;
  dj["score"] = r.score;
  dj["momentum_degenerate"] = r.momentum_degenerate;
  dj["position"] = report_json(r.position_report);
  dj["momentum"] = report_json(r.momentum_report);
  dj["refinement"] = json{{"position_residuals", pos_study.residuals},
                          {"position_resolution_limited", pos_study.resolution_limited},
                          {"momentum_residuals", mom_study.residuals},
                          {"momentum_resolution_limited", mom_study.resolution_limited}};
  const bool ok = r.position_report.residual_rel < 1e-3 && pos_study.resolution_limited;
  dj["check_passed"] = ok;

  {
    std::ofstream out(s.artifact("diagnose_report.json"), std::ios::binary | std::ios::trunc);
    out << dj.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write diagnose_report.json");
  }
  s.stats["diagnose"] = std::move(dj);
  if (s.opt.check && !ok) s.check_failed = true;
  s.note("diagnose: verdict '" + r.verdict + "', score " + io::format_number(r.score));
}

// ----------------------------------------------------------- equilibrium --

CovarianceReport covariance_at(const ScenarioConfig& cfg, const PriorCandidate& prior) {
  const ScenarioFrame frame = scenario::covariance_frame(cfg);
  const auto snaps = evolve(frame.psi0, frame.hamiltonian, frame.propagation,
                            frame.psi0.time + frame.t_window, frame.snapshot_stride);
  const FieldStack stack = analytic_field_stack(snaps, frame.hamiltonian, Representation::position);
  return covariance_residual(prior, snaps, stack);
}

bool ratios_resolution_limited(std::span<const double> residuals) {
  if (residuals.size() < 2) return false;
  for (std::size_t k = 0; k + 1 < residuals.size(); ++k) {
    if (!(residuals[k + 1] > 0.0)) return true;  // fell to zero: pure discretization
    if (residuals[k] / residuals[k + 1] < 2.0) return false;
  }
  return true;
}

void run_equilibrium(Session& s) {
  if (!s.cfg.equilibrium) throw scenario::ConfigError("equilibrium: section required by equilibrium");
  const scenario::EquilibriumSpec& q = *s.cfg.equilibrium;
  const Hamiltonian h = scenario::hamiltonian(s.cfg);

  std::ofstream cov(s.artifact("covariance.csv"), std::ios::binary | std::ios::trunc);
  cov << "rule,level,residual_rel\n";

  json priors_stats = json::array();
  for (const std::string& rule : q.priors) {
    const PriorCandidate prior = scenario::parse_prior(rule);
    CovarianceReport base{};
    std::vector<double> residuals;
    for (int level = 0; level < q.refinements; ++level) {
      const CovarianceReport r = covariance_at(scenario::refined(s.cfg, level), prior);
      if (level == 0) base = r;
      residuals.push_back(r.residual_rel);
      cov << rule << ',' << level << ',' << io::format_number(r.residual_rel) << "\n";
    }
    const bool limited = ratios_resolution_limited(residuals);
    json pj{{"rule", rule},
            {"residual_rel", base.residual_rel},
            {"residual_l2", base.residual_l2},
            {"dpdt_l2", base.dpdt_l2},
            {"div_l2", base.div_l2},
            {"masked_fraction", base.masked_fraction},
            {"refinement_residuals", residuals},
            {"resolution_limited", limited}};
    priors_stats.push_back(std::move(pj));
    if (s.opt.check && rule == "equilibrium" && !(base.residual_rel < 1e-3 && limited))
      s.check_failed = true;
    s.note("covariance '" + rule + "': rel " + io::format_number(base.residual_rel) +
           (limited ? " (resolution limited)" : " (persistent)"));
  }
  if (!cov) throw std::runtime_error("cannot write covariance.csv");
  cov.close();

  json qj;
  qj["priors"] = std::move(priors_stats);

  if (q.relaxation) {
    const scenario::RelaxationSpec& r = *q.relaxation;
    const auto snaps = scenario_snapshots(s.cfg);
    const DensityField rho0 = position_density(scenario::build_state(r.initial_state, s.cfg));
    RelaxationConfig rc;
    rc.particles = r.particles;
    rc.cells_per_axis = r.cells_per_axis;
    rc.integrate.dt_path = r.dt_path;
    rc.integrate.threads = s.opt.threads;
    rc.seed = s.cfg.seed;
    const HFunctionSeries series = relaxation_series(snaps, h, rho0, rc);
    io::write_hseries_csv(s.artifact("h_series.csv"), series);

    const double h0 = series.h_values.front();
    const double hn = series.h_values.back();
    const double hmax = *std::max_element(series.h_values.begin(), series.h_values.end());
    const double drop = h0 > 0.0 ? 1.0 - hn / h0 : 0.0;
    const bool ok = h0 > 0.0 && drop >= 0.5 && hmax <= 1.1 * h0;
    qj["relaxation"] = json{{"h_initial", h0},
                            {"h_final", hn},
                            {"h_max", hmax},
                            {"drop_fraction", drop},
                            {"cell_size", series.cell_size},
                            {"particles_surviving", series.n_particles},
                            {"check_passed", ok}};
    if (s.opt.check && !ok) s.check_failed = true;
    s.note("relaxation: H " + io::format_number(h0) + " -> " + io::format_number(hn));
  }
  s.stats["equilibrium"] = std::move(qj);
}

void run_all(Session& s) {
  run_evolve(s);
  run_field(s);
  if (s.cfg.protocol) run_weaksim(s);
  if (s.cfg.paths) run_paths(s);
  if (s.cfg.diagnostics) run_diagnose(s);
  if (s.cfg.equilibrium) run_equilibrium(s);
}

}  // namespace

int run(const Options& opt) {
  try {
    if (opt.threads < 1) throw scenario::ConfigError("--threads must be at least 1");
    ScenarioConfig cfg = scenario::load_config(opt.config);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.out_dir) cfg.output_directory = *opt.out_dir;

    // Refuse a step the splitting analysis does not cover, before any output.
    const StabilityReport sr =
        stability(cfg.grid, scenario::hamiltonian(cfg), PropagatorConfig{cfg.propagation.dt});
    if (!sr.within_guardrails())
      throw std::runtime_error("propagation step violates the stability guardrails (potential phase " +
                               io::format_number(sr.potential_phase) + ", kinetic phase " +
                               io::format_number(sr.kinetic_phase) + ")");

    Session s(cfg, opt);
    const std::string& c = opt.subcommand;
    if (c == "evolve")
      run_evolve(s);
    else if (c == "field")
      run_field(s);
    else if (c == "weaksim")
      run_weaksim(s);
    else if (c == "paths")
      run_paths(s);
    else if (c == "diagnose")
      run_diagnose(s);
    else if (c == "equilibrium")
      run_equilibrium(s);
    else if (c == "all")
      run_all(s);
    else
      throw scenario::ConfigError("unknown subcommand '" + c +
                                  "' (evolve|field|weaksim|paths|diagnose|equilibrium|all)");

    s.write_manifest();
    std::printf("%s\n", (s.dir / "manifest.json").string().c_str());
    if (s.check_failed) {
      std::fprintf(stderr, "check failed; see %s\n", (s.dir / "manifest.json").string().c_str());
      return 4;
    }
    return 0;
  } catch (const scenario::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}

}  // namespace bohmlab::cli
