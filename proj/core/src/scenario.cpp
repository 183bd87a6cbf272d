#include "bohmlab/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

#include "bohmlab/propagator.hpp"

namespace bohmlab::scenario {

namespace {

using json = nlohmann::ordered_json;

std::string joined(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(joined(path, item.key()), "unknown key");
  }
}

const json& need(const json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(joined(path, key), "required key is missing");
  return *it;
}

double need_num(const json& obj, const std::string& path, const char* key) {
  const json& v = need(obj, path, key);
  if (!v.is_number()) fail(joined(path, key), "expected a number");
  return v.get<double>();
}

double num_or(const json& obj, const std::string& path, const char* key, double dflt) {
  const auto it = obj.find(key);
  if (it == obj.end()) return dflt;
  if (!it->is_number()) fail(joined(path, key), "expected a number");
  return it->get<double>();
}

std::size_t need_uint(const json& obj, const std::string& path, const char* key) {
  const json& v = need(obj, path, key);
  if (!v.is_number_unsigned()) fail(joined(path, key), "expected a nonnegative integer");
  return v.get<std::size_t>();
}

std::size_t uint_or(const json& obj, const std::string& path, const char* key, std::size_t dflt) {
  const auto it = obj.find(key);
  if (it == obj.end()) return dflt;
  if (!it->is_number_unsigned()) fail(joined(path, key), "expected a nonnegative integer");
  return it->get<std::size_t>();
}

bool bool_or(const json& obj, const std::string& path, const char* key, bool dflt) {
  const auto it = obj.find(key);
  if (it == obj.end()) return dflt;
  if (!it->is_boolean()) fail(joined(path, key), "expected true or false");
  return it->get<bool>();
}

std::string need_str(const json& obj, const std::string& path, const char* key) {
  const json& v = need(obj, path, key);
  if (!v.is_string()) fail(joined(path, key), "expected a string");
  return v.get<std::string>();
}

std::vector<double> need_num_array(const json& obj, const std::string& path, const char* key,
                                   std::size_t expected) {
  const json& v = need(obj, path, key);
  if (!v.is_array() || (expected != 0 && v.size() != expected))
    fail(joined(path, key), "expected an array of " + std::to_string(expected) + " numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& e : v) {
    if (!e.is_number()) fail(joined(path, key), "expected numbers only");
    out.push_back(e.get<double>());
  }
  return out;
}

// t must be a positive whole number of dt steps (to relative tolerance);
// returns the count.
std::size_t steps_for(double t, double dt, const std::string& path) {
  if (!(t > 0.0)) fail(path, "expected a positive time span");
  const double kf = t / dt;
  const double kr = std::round(kf);
  if (!(kr >= 1.0) || std::abs(kf - kr) > 1e-9 * kr)
    fail(path, "must be a whole number of propagation steps");
  return static_cast<std::size_t>(kr);
}

void check_stride_divides(std::size_t steps, std::size_t stride, const std::string& path) {
  if (stride == 0) fail(path, "stride must be at least 1");
  if (steps % stride != 0) fail(path, "stride must evenly divide the window's step count");
}

states::GaussianSpec parse_gaussian(const json& obj, const std::string& path, int dims) {
  states::GaussianSpec g;
  g.center = need_num_array(obj, path, "center", static_cast<std::size_t>(dims));
  g.sigma = need_num_array(obj, path, "sigma", static_cast<std::size_t>(dims));
  for (double s : g.sigma)
    if (!(s > 0.0)) fail(joined(path, "sigma"), "widths must be positive");
  if (obj.contains("kick"))
    g.kick = need_num_array(obj, path, "kick", static_cast<std::size_t>(dims));
  else
    g.kick.assign(static_cast<std::size_t>(dims), 0.0);
  return g;
}

StateSpec parse_state(const json& s, const std::string& path, int dims) {
  if (!s.is_object()) fail(path, "expected an object");
  StateSpec spec;
  const std::string type = need_str(s, path, "type");
  if (type == "gaussian") {
    spec.type = StateSpec::Type::gaussian;
    check_keys(s, path, {"type", "center", "sigma", "kick"});
    spec.gaussian = parse_gaussian(s, path, dims);
  } else if (type == "superposition") {
    spec.type = StateSpec::Type::superposition;
    check_keys(s, path, {"type", "terms"});
    const json& terms = need(s, path, "terms");
    if (!terms.is_array() || terms.empty()) fail(joined(path, "terms"), "expected a nonempty array");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string tp = joined(path, "terms[" + std::to_string(i) + "]");
      const json& t = terms[i];
      if (!t.is_object()) fail(tp, "expected an object");
      check_keys(t, tp, {"center", "sigma", "kick", "amplitude", "phase"});
      states::SuperpositionTerm term;
      term.gaussian = parse_gaussian(t, tp, dims);
      term.amplitude = num_or(t, tp, "amplitude", 1.0);
      term.phase = num_or(t, tp, "phase", 0.0);
      spec.terms.push_back(std::move(term));
    }
  } else if (type == "modes") {
    spec.type = StateSpec::Type::modes;
    check_keys(s, path, {"type", "modes", "phases", "phase_seed"});
    const json& modes = need(s, path, "modes");
    if (!modes.is_array() || modes.empty()) fail(joined(path, "modes"), "expected a nonempty array");
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const json& m = modes[i];
      const std::string mp = joined(path, "modes[" + std::to_string(i) + "]");
      if (!m.is_array() || m.size() != static_cast<std::size_t>(dims))
        fail(mp, "expected " + std::to_string(dims) + " integer mode numbers");
      std::vector<int> mode;
      for (const json& e : m) {
        if (!e.is_number_integer() && !e.is_number_unsigned()) fail(mp, "mode numbers must be integers");
        mode.push_back(e.get<int>());
      }
      spec.modes.push_back(std::move(mode));
    }
    if (s.contains("phases")) spec.phases = need_num_array(s, path, "phases", spec.modes.size());
    spec.seeded_phases = bool_or(s, path, "phase_seed", false);
    if (spec.phases.empty() && !spec.seeded_phases)
      fail(path, "mode states need explicit phases or phase_seed: true");
    if (!spec.phases.empty() && spec.seeded_phases)
      fail(joined(path, "phase_seed"), "conflicts with explicit phases");
  } else {
    fail(joined(path, "type"), "unknown state type '" + type + "'");
  }
  return spec;
}

Potential parse_potential(const json& p, const std::string& path) {
  if (!p.is_object()) fail(path, "expected an object");
  const std::string type = need_str(p, path, "type");
  try {
    if (type == "free") {
      check_keys(p, path, {"type"});
      return Potential::free_space();
    }
    if (type == "harmonic") {
      check_keys(p, path, {"type", "omega"});
      return Potential::harmonic(need_num(p, path, "omega"));
    }
    if (type == "quartic") {
      check_keys(p, path, {"type", "lambda", "omega"});
      return Potential::quartic(need_num(p, path, "lambda"), num_or(p, path, "omega", 0.0));
    }
    if (type == "double_slit") {
      check_keys(p, path, {"type", "height", "separation", "width", "thickness"});
      Potential::SlitGeometry slits;
      slits.height = need_num(p, path, "height");
      slits.separation = need_num(p, path, "separation");
      slits.width = need_num(p, path, "width");
      slits.thickness = need_num(p, path, "thickness");
      return Potential::double_slit(slits);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  fail(joined(path, "type"), "unknown potential type '" + type + "'");
}

std::vector<ProtocolSetting> parse_settings(const json& obj, const std::string& path, double dt) {
  const json& arr = need(obj, path, "settings");
  if (!arr.is_array() || arr.empty()) fail(joined(path, "settings"), "expected a nonempty array");
  std::vector<ProtocolSetting> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string sp = joined(path, "settings[" + std::to_string(i) + "]");
    const json& s = arr[i];
    if (!s.is_object()) fail(sp, "expected an object");
    check_keys(s, sp, {"tau", "sigma", "runs"});
    ProtocolSetting setting;
    setting.tau = need_num(s, sp, "tau");
    setting.sigma = need_num(s, sp, "sigma");
    setting.runs = need_uint(s, sp, "runs");
    if (!(setting.sigma > 0.0)) fail(joined(sp, "sigma"), "pointer spread must be positive");
    if (setting.runs == 0) fail(joined(sp, "runs"), "ensemble needs at least one run");
    steps_for(setting.tau, dt, joined(sp, "tau"));
    out.push_back(setting);
  }
  return out;
}

Representation parse_observable(const json& obj, const std::string& path) {
  const auto it = obj.find("observable");
  if (it == obj.end()) return Representation::position;
  if (!it->is_string()) fail(joined(path, "observable"), "expected \"position\" or \"momentum\"");
  const std::string s = it->get<std::string>();
  if (s == "position") return Representation::position;
  if (s == "momentum") return Representation::momentum;
  fail(joined(path, "observable"), "expected \"position\" or \"momentum\"");
}

Interpolation parse_interpolation(const json& obj, const std::string& path) {
  const auto it = obj.find("interpolation");
  if (it == obj.end()) return Interpolation::linear;
  if (!it->is_string()) fail(joined(path, "interpolation"), "expected \"linear\" or \"nearest\"");
  const std::string s = it->get<std::string>();
  if (s == "linear") return Interpolation::linear;
  if (s == "nearest") return Interpolation::nearest;
  fail(joined(path, "interpolation"), "expected \"linear\" or \"nearest\"");
}

double escape_or(const json& obj, const std::string& path, double dflt) {
  const double f = num_or(obj, path, "max_escape_fraction", dflt);
  if (!(f >= 0.0) || f > 1.0) fail(joined(path, "max_escape_fraction"), "expected a fraction in [0, 1]");
  return f;
}

// dt_path = 0 delegates to the stack spacing; otherwise it must divide it.
double parse_dt_path(const json& obj, const std::string& path, double snapshot_dt) {
  const double dtp = num_or(obj, path, "dt_path", 0.0);
  if (dtp == 0.0) return 0.0;
  if (!(dtp > 0.0)) fail(joined(path, "dt_path"), "expected a positive step");
  const double kf = snapshot_dt / dtp;
  const double kr = std::round(kf);
  if (!(kr >= 1.0) || std::abs(kf - kr) > 1e-9 * kr)
    fail(joined(path, "dt_path"), "must evenly divide the snapshot spacing");
  return dtp;
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");
  check_keys(root, "", {"name", "seed", "grid", "units", "state", "potential", "propagation",
                        "protocol", "paths", "diagnostics", "equilibrium", "output"});

  ScenarioConfig cfg;
  cfg.name = need_str(root, "", "name");
  if (cfg.name.empty() || cfg.name.find_first_not_of(
                              "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-") !=
                              std::string::npos)
    fail("name", "expected [A-Za-z0-9_.-]+ (it names output files)");
  {
    const json& v = need(root, "", "seed");
    if (!v.is_number_unsigned()) fail("seed", "expected a nonnegative integer");
    cfg.seed = v.get<std::uint64_t>();
  }

  {
    const json& g = need(root, "", "grid");
    if (!g.is_object()) fail("grid", "expected an object");
    check_keys(g, "grid", {"extent", "points"});
    const json& ext = need(g, "grid", "extent");
    const json& pts = need(g, "grid", "points");
    if (!ext.is_array() || ext.empty() || ext.size() > 2)
      fail("grid.extent", "expected one or two [lo, hi] pairs");
    if (!pts.is_array() || pts.size() != ext.size())
      fail("grid.points", "expected one point count per axis");
    std::vector<AxisSpec> axes;
    for (std::size_t a = 0; a < ext.size(); ++a) {
      const json& pair = ext[a];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
        fail("grid.extent", "each axis is a [lo, hi] number pair");
      if (!pts[a].is_number_unsigned()) fail("grid.points", "point counts are positive integers");
      axes.push_back(AxisSpec{pair[0].get<double>(), pair[1].get<double>(), pts[a].get<std::size_t>()});
    }
    try {
      cfg.grid = Grid(axes);
    } catch (const std::exception& e) {
      fail("grid", e.what());
    }
  }
  const int dims = cfg.grid.dims();

  if (root.contains("units")) {
    const json& u = root["units"];
    if (!u.is_object()) fail("units", "expected an object");
    check_keys(u, "units", {"hbar", "mass"});
    cfg.hbar = num_or(u, "units", "hbar", 1.0);
    if (!(cfg.hbar > 0.0)) fail("units.hbar", "must be positive");
    if (u.contains("mass"))
      cfg.mass = need_num_array(u, "units", "mass", static_cast<std::size_t>(dims));
  }
  if (cfg.mass.empty()) cfg.mass.assign(static_cast<std::size_t>(dims), 1.0);
  for (double m : cfg.mass)
    if (!(m > 0.0)) fail("units.mass", "masses must be positive");

  cfg.state = parse_state(need(root, "", "state"), "state", dims);
  cfg.potential = parse_potential(need(root, "", "potential"), "potential");

  {
    const json& p = need(root, "", "propagation");
    if (!p.is_object()) fail("propagation", "expected an object");
    check_keys(p, "propagation", {"dt", "t_final", "snapshot_stride"});
    cfg.propagation.dt = need_num(p, "propagation", "dt");
    if (!(cfg.propagation.dt > 0.0)) fail("propagation.dt", "must be positive");
    cfg.propagation.t_final = need_num(p, "propagation", "t_final");
    const std::size_t steps =
        steps_for(cfg.propagation.t_final, cfg.propagation.dt, "propagation.t_final");
    cfg.propagation.snapshot_stride = uint_or(p, "propagation", "snapshot_stride", 1);
    check_stride_divides(steps, cfg.propagation.snapshot_stride, "propagation.snapshot_stride");
  }
  const double dt = cfg.propagation.dt;
  const std::size_t total_steps =
      static_cast<std::size_t>(std::round(cfg.propagation.t_final / dt));

  if (root.contains("protocol")) {
    const json& p = root["protocol"];
    if (!p.is_object()) fail("protocol", "expected an object");
    check_keys(p, "protocol",
               {"t_measure", "observable", "settings", "bin_coarsen", "min_count", "write_records"});
    ProtocolSpec spec;
    spec.t_measure = num_or(p, "protocol", "t_measure", 0.0);
    if (spec.t_measure < 0.0) fail("protocol.t_measure", "must be nonnegative");
    if (spec.t_measure > 0.0) steps_for(spec.t_measure, dt, "protocol.t_measure");
    spec.observable = parse_observable(p, "protocol");
    spec.settings = parse_settings(p, "protocol", dt);
    spec.bin_coarsen = uint_or(p, "protocol", "bin_coarsen", 4);
    if (spec.bin_coarsen == 0) fail("protocol.bin_coarsen", "must be at least 1");
    spec.min_count = uint_or(p, "protocol", "min_count", 100);
    spec.write_records = bool_or(p, "protocol", "write_records", false);
    cfg.protocol = std::move(spec);
  }

  if (root.contains("paths")) {
    const json& p = root["paths"];
    if (!p.is_object()) fail("paths", "expected an object");
    check_keys(p, "paths",
               {"n_paths", "dt_path", "record_every", "interpolation", "max_escape_fraction",
                "export_count", "symmetry_axis", "estimated"});
    PathsSpec spec;
    spec.n_paths = need_uint(p, "paths", "n_paths");
    if (spec.n_paths == 0) fail("paths.n_paths", "need at least one path");
    const double snapshot_dt = dt * static_cast<double>(cfg.propagation.snapshot_stride);
    spec.dt_path = parse_dt_path(p, "paths", snapshot_dt);
    spec.record_every = uint_or(p, "paths", "record_every", 1);
    if (spec.record_every == 0) fail("paths.record_every", "must be at least 1");
    spec.interpolation = parse_interpolation(p, "paths");
    spec.max_escape_fraction = escape_or(p, "paths", 0.01);
    spec.export_count = uint_or(p, "paths", "export_count", 200);
    if (p.contains("symmetry_axis")) spec.symmetry_axis = need_num(p, "paths", "symmetry_axis");
    if (p.contains("estimated")) {
      const json& e = p["estimated"];
      if (!e.is_object()) fail("paths.estimated", "expected an object");
      check_keys(e, "paths.estimated",
                 {"settings", "stack_stride", "bin_coarsen", "min_count", "n_check",
                  "max_escape_fraction"});
      EstimatedPathsSpec est;
      est.settings = parse_settings(e, "paths.estimated", dt);
      est.stack_stride = uint_or(e, "paths.estimated", "stack_stride", cfg.propagation.snapshot_stride);
      check_stride_divides(total_steps, est.stack_stride, "paths.estimated.stack_stride");
      if (spec.dt_path > 0.0) {
        const double est_dt = dt * static_cast<double>(est.stack_stride);
        const double kf = est_dt / spec.dt_path;
        const double kr = std::round(kf);
        if (!(kr >= 1.0) || std::abs(kf - kr) > 1e-9 * kr)
          fail("paths.dt_path", "must also evenly divide the estimated stack spacing");
      }
      est.bin_coarsen = uint_or(e, "paths.estimated", "bin_coarsen", 4);
      if (est.bin_coarsen == 0) fail("paths.estimated.bin_coarsen", "must be at least 1");
      est.min_count = uint_or(e, "paths.estimated", "min_count", 100);
      est.n_check = uint_or(e, "paths.estimated", "n_check", 1024);
      if (est.n_check == 0) fail("paths.estimated.n_check", "need at least one path");
      est.max_escape_fraction = escape_or(e, "paths.estimated", 0.05);
      spec.estimated = std::move(est);
    }
    cfg.paths = std::move(spec);
  }

  if (root.contains("diagnostics")) {
    const json& d = root["diagnostics"];
    if (!d.is_object()) fail("diagnostics", "expected an object");
    check_keys(d, "diagnostics", {"t_start", "t_window", "stride", "refinements"});
    DiagnosticsSpec spec;
    spec.t_start = num_or(d, "diagnostics", "t_start", 0.0);
    if (spec.t_start < 0.0) fail("diagnostics.t_start", "must be nonnegative");
    if (spec.t_start > 0.0) steps_for(spec.t_start, dt, "diagnostics.t_start");
    spec.t_window = need_num(d, "diagnostics", "t_window");
    const std::size_t wsteps = steps_for(spec.t_window, dt, "diagnostics.t_window");
    spec.stride = uint_or(d, "diagnostics", "stride", 1);
    check_stride_divides(wsteps, spec.stride, "diagnostics.stride");
    if (wsteps / spec.stride < 2)
      fail("diagnostics.t_window", "window too short for a centered time difference");
    spec.refinements = static_cast<int>(uint_or(d, "diagnostics", "refinements", 3));
    if (spec.refinements < 2 || spec.refinements > 8)
      fail("diagnostics.refinements", "expected between 2 and 8 levels");
    cfg.diagnostics = spec;
  }

  if (root.contains("equilibrium")) {
    const json& q = root["equilibrium"];
    if (!q.is_object()) fail("equilibrium", "expected an object");
    check_keys(q, "equilibrium",
               {"priors", "t_start", "t_window", "stride", "refinements", "relaxation"});
    EquilibriumSpec spec;
    const json& priors = need(q, "equilibrium", "priors");
    if (!priors.is_array() || priors.empty())
      fail("equilibrium.priors", "expected a nonempty array of rules");
    for (const json& p : priors) {
      if (!p.is_string()) fail("equilibrium.priors", "rules are strings");
      parse_prior(p.get<std::string>());  // reject bad rules at parse time
      spec.priors.push_back(p.get<std::string>());
    }
    spec.t_start = num_or(q, "equilibrium", "t_start", 0.0);
    if (spec.t_start < 0.0) fail("equilibrium.t_start", "must be nonnegative");
    if (spec.t_start > 0.0) steps_for(spec.t_start, dt, "equilibrium.t_start");
    spec.t_window = need_num(q, "equilibrium", "t_window");
    const std::size_t wsteps = steps_for(spec.t_window, dt, "equilibrium.t_window");
    spec.stride = uint_or(q, "equilibrium", "stride", 1);
    check_stride_divides(wsteps, spec.stride, "equilibrium.stride");
    if (wsteps / spec.stride < 2)
      fail("equilibrium.t_window", "window too short for a centered time difference");
    spec.refinements = static_cast<int>(uint_or(q, "equilibrium", "refinements", 3));
    if (spec.refinements < 2 || spec.refinements > 8)
      fail("equilibrium.refinements", "expected between 2 and 8 levels");
    if (q.contains("relaxation")) {
      const json& r = q["relaxation"];
      if (!r.is_object()) fail("equilibrium.relaxation", "expected an object");
      check_keys(r, "equilibrium.relaxation",
                 {"initial_state", "particles", "cells_per_axis", "dt_path"});
      RelaxationSpec relax;
      relax.initial_state =
          parse_state(need(r, "equilibrium.relaxation", "initial_state"),
                      "equilibrium.relaxation.initial_state", dims);
      relax.particles = uint_or(r, "equilibrium.relaxation", "particles", 100000);
      if (relax.particles == 0) fail("equilibrium.relaxation.particles", "need at least one particle");
      relax.cells_per_axis = uint_or(r, "equilibrium.relaxation", "cells_per_axis", 8);
      if (relax.cells_per_axis == 0) fail("equilibrium.relaxation.cells_per_axis", "must be at least 1");
      const double snapshot_dt = dt * static_cast<double>(cfg.propagation.snapshot_stride);
      relax.dt_path = parse_dt_path(r, "equilibrium.relaxation", snapshot_dt);
      spec.relaxation = std::move(relax);
    }
    cfg.equilibrium = std::move(spec);
  }

  if (root.contains("output")) {
    const json& o = root["output"];
    if (!o.is_object()) fail("output", "expected an object");
    check_keys(o, "output", {"directory"});
    if (o.contains("directory")) cfg.output_directory = need_str(o, "output", "directory");
  }
  if (cfg.output_directory.empty()) cfg.output_directory = "out/" + cfg.name;

  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

PriorCandidate parse_prior(const std::string& text) {
  try {
    if (text == "equilibrium") return PriorCandidate::equilibrium();
    if (text == "uniform") return PriorCandidate::uniform();
    if (text.rfind("power:", 0) == 0) {
      const std::string num = text.substr(6);
      std::size_t used = 0;
      const double p = std::stod(num, &used);
      if (used != num.size()) throw ConfigError("prior '" + text + "': trailing characters");
      return PriorCandidate::power(p);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("prior '" + text + "': " + e.what());
  }
  throw ConfigError("unknown prior rule '" + text + "' (equilibrium | power:<p> | uniform)");
}

namespace {

json gaussian_json(const states::GaussianSpec& g) {
  return json{{"center", g.center}, {"sigma", g.sigma}, {"kick", g.kick}};
}

json state_json(const StateSpec& s) {
  json j;
  switch (s.type) {
    case StateSpec::Type::gaussian:
      j = gaussian_json(s.gaussian);
      j["type"] = "gaussian";
      break;
    case StateSpec::Type::superposition: {
      j["type"] = "superposition";
      json terms = json::array();
      for (const auto& t : s.terms) {
        json tj = gaussian_json(t.gaussian);
        tj["amplitude"] = t.amplitude;
        tj["phase"] = t.phase;
        terms.push_back(std::move(tj));
      }
      j["terms"] = std::move(terms);
      break;
    }
    case StateSpec::Type::modes:
      j["type"] = "modes";
      j["modes"] = s.modes;
      if (s.seeded_phases)
        j["phase_seed"] = true;
      else
        j["phases"] = s.phases;
      break;
  }
  return j;
}

json potential_json(const Potential& p) {
  switch (p.kind()) {
    case Potential::Kind::free_space:
      return json{{"type", "free"}};
    case Potential::Kind::harmonic:
      return json{{"type", "harmonic"}, {"omega", p.omega()}};
    case Potential::Kind::quartic:
      return json{{"type", "quartic"}, {"lambda", p.lambda()}, {"omega", p.omega()}};
    case Potential::Kind::double_slit:
      return json{{"type", "double_slit"},
                  {"height", p.slits().height},
                  {"separation", p.slits().separation},
                  {"width", p.slits().width},
                  {"thickness", p.slits().thickness}};
    case Potential::Kind::tabulated:
      break;
  }
  return json{{"type", "tabulated"}};
}

json settings_json(const std::vector<ProtocolSetting>& settings) {
  json arr = json::array();
  for (const auto& s : settings)
    arr.push_back(json{{"tau", s.tau}, {"sigma", s.sigma}, {"runs", s.runs}});
  return arr;
}

}  // namespace

std::string resolved_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  {
    json ext = json::array();
    json pts = json::array();
    for (int a = 0; a < cfg.grid.dims(); ++a) {
      ext.push_back(json::array({cfg.grid.lo(a), cfg.grid.hi(a)}));
      pts.push_back(cfg.grid.points(a));
    }
    j["grid"] = json{{"extent", std::move(ext)}, {"points", std::move(pts)}};
  }
  j["units"] = json{{"hbar", cfg.hbar}, {"mass", cfg.mass}};
  j["state"] = state_json(cfg.state);
  j["potential"] = potential_json(cfg.potential);
  j["propagation"] = json{{"dt", cfg.propagation.dt},
                          {"t_final", cfg.propagation.t_final},
                          {"snapshot_stride", cfg.propagation.snapshot_stride}};
  if (cfg.protocol) {
    const ProtocolSpec& p = *cfg.protocol;
    j["protocol"] = json{{"t_measure", p.t_measure},
                         {"observable", to_string(p.observable)},
                         {"settings", settings_json(p.settings)},
                         {"bin_coarsen", p.bin_coarsen},
                         {"min_count", p.min_count},
                         {"write_records", p.write_records}};
  }
  if (cfg.paths) {
    const PathsSpec& p = *cfg.paths;
    json pj{{"n_paths", p.n_paths},
            {"dt_path", p.dt_path},
            {"record_every", p.record_every},
            {"interpolation", p.interpolation == Interpolation::linear ? "linear" : "nearest"},
            {"max_escape_fraction", p.max_escape_fraction},
            {"export_count", p.export_count}};
    if (p.symmetry_axis) pj["symmetry_axis"] = *p.symmetry_axis;
    if (p.estimated) {
      const EstimatedPathsSpec& e = *p.estimated;
      pj["estimated"] = json{{"settings", settings_json(e.settings)},
                             {"stack_stride", e.stack_stride},
                             {"bin_coarsen", e.bin_coarsen},
                             {"min_count", e.min_count},
                             {"n_check", e.n_check},
                             {"max_escape_fraction", e.max_escape_fraction}};
    }
    j["paths"] = std::move(pj);
  }
  if (cfg.diagnostics) {
    const DiagnosticsSpec& d = *cfg.diagnostics;
    j["diagnostics"] = json{{"t_start", d.t_start},
                            {"t_window", d.t_window},
                            {"stride", d.stride},
                            {"refinements", d.refinements}};
  }
  if (cfg.equilibrium) {
    const EquilibriumSpec& q = *cfg.equilibrium;
    json qj{{"priors", q.priors},
            {"t_start", q.t_start},
            {"t_window", q.t_window},
            {"stride", q.stride},
            {"refinements", q.refinements}};
    if (q.relaxation) {
      const RelaxationSpec& r = *q.relaxation;
      qj["relaxation"] = json{{"initial_state", state_json(r.initial_state)},
                              {"particles", r.particles},
                              {"cells_per_axis", r.cells_per_axis},
                              {"dt_path", r.dt_path}};
    }
    j["equilibrium"] = std::move(qj);
  }
  j["output"] = json{{"directory", cfg.output_directory}};
  return j.dump(2) + "\n";
}

WaveFunction build_state(const StateSpec& spec, const ScenarioConfig& cfg) {
  switch (spec.type) {
    case StateSpec::Type::gaussian:
      return states::gaussian(cfg.grid, spec.gaussian, cfg.hbar, cfg.mass);
    case StateSpec::Type::superposition:
      return states::gaussian_superposition(cfg.grid, spec.terms, cfg.hbar, cfg.mass);
    case StateSpec::Type::modes: {
      const std::vector<double> phases =
          spec.seeded_phases ? states::random_phases(spec.modes.size(), cfg.seed) : spec.phases;
      return states::mode_superposition(cfg.grid, spec.modes, phases, cfg.hbar, cfg.mass);
    }
  }
  throw ConfigError("state: unreachable state type");
}

WaveFunction initial_state(const ScenarioConfig& cfg) { return build_state(cfg.state, cfg); }

Hamiltonian hamiltonian(const ScenarioConfig& cfg) {
  return Hamiltonian{cfg.mass, cfg.hbar, cfg.potential};
}

ScenarioConfig refined(const ScenarioConfig& cfg, int level) {
  if (level < 0) throw std::invalid_argument("refinement level must be nonnegative");
  ScenarioConfig out = cfg;
  if (level == 0) return out;
  std::vector<AxisSpec> axes;
  for (int a = 0; a < cfg.grid.dims(); ++a)
    axes.push_back(AxisSpec{cfg.grid.lo(a), cfg.grid.hi(a), cfg.grid.points(a) << level});
  out.grid = Grid(axes);
  out.propagation.dt = cfg.propagation.dt / static_cast<double>(std::size_t{1} << level);
  return out;
}

namespace {

ScenarioFrame window_frame(const ScenarioConfig& cfg, double t_start, double t_window,
                           std::size_t stride) {
  WaveFunction psi = initial_state(cfg);
  Hamiltonian h = hamiltonian(cfg);
  const PropagatorConfig pc{cfg.propagation.dt};
  if (t_start > 0.0) psi = evolve(psi, h, pc, t_start, 0).back();
  return ScenarioFrame{std::move(psi), std::move(h), pc, t_window, stride};
}

}  // namespace

ScenarioFrame diagnostics_frame(const ScenarioConfig& cfg) {
  if (!cfg.diagnostics) throw ConfigError("diagnostics: section missing from the config");
  const DiagnosticsSpec& d = *cfg.diagnostics;
  return window_frame(cfg, d.t_start, d.t_window, d.stride);
}

ScenarioFrame covariance_frame(const ScenarioConfig& cfg) {
  if (!cfg.equilibrium) throw ConfigError("equilibrium: section missing from the config");
  const EquilibriumSpec& q = *cfg.equilibrium;
  return window_frame(cfg, q.t_start, q.t_window, q.stride);
}

}  // namespace bohmlab::scenario
