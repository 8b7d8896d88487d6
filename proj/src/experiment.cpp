#include "georabi/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <set>
#include <thread>

#include "georabi/deltawell.hpp"
#include "georabi/lambda_system.hpp"
#include "georabi/spectrum.hpp"

namespace georabi::experiment {

using json = nlohmann::ordered_json;

namespace {

// ---- strict object reader with config-path error reporting -------------------

struct ObjReader {
  const json& j;
  std::string path;
  std::set<std::string> seen;

  ObjReader(const json& node, std::string p) : j(node), path(std::move(p)) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "config must be an object" : path + ": expected an object");
  }
  bool has(const std::string& k) const { return j.contains(k); }
  const json& raw(const std::string& k) {
    seen.insert(k);
    if (!j.contains(k)) throw ConfigError(path + "/" + k + ": missing required field");
    return j.at(k);
  }
  double num(const std::string& k) {
    const json& v = raw(k);
    if (!v.is_number()) throw ConfigError(path + "/" + k + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path + "/" + k + ": value must be finite");
    return d;
  }
  double num_or(const std::string& k, double def) { return has(k) ? num(k) : def; }
  int integer(const std::string& k) {
    const json& v = raw(k);
    if (!v.is_number_integer()) throw ConfigError(path + "/" + k + ": expected an integer");
    return v.get<int>();
  }
  int integer_or(const std::string& k, int def) { return has(k) ? integer(k) : def; }
  std::string str(const std::string& k) {
    const json& v = raw(k);
    if (!v.is_string()) throw ConfigError(path + "/" + k + ": expected a string");
    return v.get<std::string>();
  }
  std::string str_or(const std::string& k, const std::string& def) {
    return has(k) ? str(k) : def;
  }
  std::vector<double> num_array(const std::string& k) {
    const json& v = raw(k);
    if (!v.is_array()) throw ConfigError(path + "/" + k + ": expected an array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(path + "/" + k + ": expected numbers");
      const double d = e.get<double>();
      if (!std::isfinite(d)) throw ConfigError(path + "/" + k + ": values must be finite");
      out.push_back(d);
    }
    return out;
  }
  void done() {
    for (const auto& item : j.items())
      if (!seen.count(item.key())) throw ConfigError(path + "/" + item.key() + ": unknown key");
  }
};

Mat parse_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected a non-empty array of rows");
  const std::size_t n = v.size();
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = v[i];
    if (!row.is_array() || row.size() != n)
      throw ConfigError(path + ": expected an " + std::to_string(n) + "x" + std::to_string(n) +
                        " table");
    for (std::size_t c = 0; c < n; ++c) {
      if (!row[c].is_number()) throw ConfigError(path + ": expected numbers");
      const double d = row[c].get<double>();
      if (!std::isfinite(d)) throw ConfigError(path + ": values must be finite");
      m(i, c) = d;
    }
  }
  return m;
}

ModelConfig parse_model(const json& node) {
  ObjReader r(node, "/model");
  ModelConfig m;
  const std::string kind = r.str("kind");
  if (kind == "deltawell") {
    m.kind = ModelKind::deltawell;
    m.a = r.num_or("a", 44.0);
    m.gamma_l = r.num_or("gamma_left", 1.0);
    m.gamma_r = r.num_or("gamma_right", 22.0 / m.a);
    m.beta = r.num_or("beta", 7.8 / m.a);
  } else if (kind == "lambda") {
    m.kind = ModelKind::lambda;
    m.e_g = r.num_or("E_g", 0.0);
    m.e_e = r.num_or("E_e", 25.0);
    m.dipole = r.num_or("d", 1.0);
  } else if (kind == "matrix") {
    m.kind = ModelKind::matrix;
    m.h0 = parse_matrix(r.raw("h0"), "/model/h0");
    m.drive = parse_matrix(r.raw("drive"), "/model/drive");
    ObjReader roles(r.raw("roles"), "/model/roles");
    m.roles.state0 = roles.integer("state0");
    m.roles.state2 = roles.integer("state2");
    m.roles.aux.clear();
    if (roles.has("aux"))
      for (double v : roles.num_array("aux")) m.roles.aux.push_back(static_cast<int>(v));
    roles.done();
  } else {
    throw ConfigError("/model/kind: must be one of deltawell|lambda|matrix");
  }
  r.done();
  return m;
}

PathConfig parse_path(const json& node, ModelKind model_kind) {
  PathConfig p;
  const std::string default_kind = model_kind == ModelKind::deltawell ? "ellipse"
                                   : model_kind == ModelKind::lambda  ? "circle"
                                                                      : "static";
  ObjReader r(node, "/path");
  const std::string kind = r.str_or("kind", default_kind);
  if (kind == "ellipse") {
    p.kind = PathKind::ellipse;
    p.lambda_r = r.num_or("lambda_r", 0.037);
    p.lambda_c = r.num_or("lambda_c", 0.024);
    const std::string units = r.str_or("units", "Eu");
    if (units != "Eu" && units != "absolute")
      throw ConfigError("/path/units: must be Eu or absolute");
    p.amplitudes_in_eu = units == "Eu";
    p.omega = r.num_or("omega", -9.338e-4);
  } else if (kind == "circle") {
    p.kind = PathKind::circle;
    p.radius = r.num_or("radius", 1.0);
    p.phi0 = r.num_or("phi0", 0.0);
    p.omega = r.num_or("omega", 0.05);
  } else if (kind == "waypoints") {
    p.kind = PathKind::waypoints;
    p.times = r.num_array("times");
    const json& pts = r.raw("points");
    if (!pts.is_array() || pts.size() != p.times.size())
      throw ConfigError("/path/points: need one point per time");
    for (const auto& e : pts) {
      if (!e.is_array()) throw ConfigError("/path/points: expected arrays");
      Vec v(e.size());
      for (std::size_t c = 0; c < e.size(); ++c) {
        if (!e[c].is_number()) throw ConfigError("/path/points: expected numbers");
        v[c] = e[c].get<double>();
        if (!std::isfinite(v[c])) throw ConfigError("/path/points: values must be finite");
      }
      p.points.push_back(std::move(v));
    }
  } else if (kind == "static") {
    p.kind = PathKind::static_point;
    p.duration = r.num_or("duration", 1.0);
    if (!(p.duration > 0)) throw ConfigError("/path/duration: must be positive");
  } else {
    throw ConfigError("/path/kind: must be one of ellipse|circle|waypoints|static");
  }
  r.done();
  return p;
}

DriveConfig parse_drive(const json& node) {
  ObjReader r(node, "/drive");
  DriveConfig d;
  d.amplitude = r.num_or("amplitude", 0.0);
  const std::string rule = r.str_or("omega_rule", "tracked");
  if (rule == "tracked") {
    d.tracked = true;
  } else if (rule == "fixed") {
    d.tracked = false;
    d.omega = r.num("omega");
    if (!(d.omega > 0)) throw ConfigError("/drive/omega: must be positive");
  } else {
    throw ConfigError("/drive/omega_rule: must be tracked or fixed");
  }
  r.done();
  return d;
}

RunConfig parse_run(const json& node) {
  ObjReader r(node, "/run");
  RunConfig c;
  const std::string mode = r.str_or("mode", "all");
  if (mode == "full")
    c.mode = RunMode::full;
  else if (mode == "rwa")
    c.mode = RunMode::rwa;
  else if (mode == "geometric")
    c.mode = RunMode::geometric;
  else if (mode == "all")
    c.mode = RunMode::all;
  else
    throw ConfigError("/run/mode: must be full|rwa|geometric|all");
  c.cycles = r.integer_or("cycles", 1);
  if (c.cycles < 1) throw ConfigError("/run/cycles: must be >= 1");
  c.steps_per_period = r.integer_or("steps_per_period", 48);
  if (c.steps_per_period < 40) throw ConfigError("/run/steps_per_period: must be >= 40");
  c.frames_per_cycle = r.integer_or("frames_per_cycle", 200);
  if (c.frames_per_cycle < 8) throw ConfigError("/run/frames_per_cycle: must be >= 8");
  c.geometric_segments = r.integer_or("geometric_segments", 2048);
  if (c.geometric_segments < 8) throw ConfigError("/run/geometric_segments: must be >= 8");
  c.truncation_threshold = r.num_or("truncation_threshold", 0.99);
  if (!(c.truncation_threshold > 0) || c.truncation_threshold > 1.0)
    throw ConfigError("/run/truncation_threshold: must lie in (0, 1]");
  c.gamma_radial_nodes = r.integer_or("gamma_radial_nodes", 16);
  c.gamma_angular_panels = r.integer_or("gamma_angular_panels", 32);
  r.done();
  return c;
}

SweepConfig parse_sweep(const json& node) {
  ObjReader r(node, "/sweep");
  SweepConfig s;
  const std::string kind = r.str("kind");
  if (kind == "path-scale") {
    s.kind = SweepKind::path_scale;
    s.values = r.num_array("values");
  } else if (kind == "radius") {
    s.kind = SweepKind::radius;
    s.values = r.num_array("values");
  } else if (kind == "amplitude-grid") {
    s.kind = SweepKind::amplitude_grid;
    s.lambda_r_range = r.num_array("lambda_r");
    s.lambda_c_range = r.num_array("lambda_c");
    for (const auto* v : {&s.lambda_r_range, &s.lambda_c_range})
      if (v->size() != 3 || (*v)[2] < 1)
        throw ConfigError("/sweep: amplitude-grid ranges are [lo, hi, count]");
  } else {
    throw ConfigError("/sweep/kind: must be path-scale|radius|amplitude-grid");
  }
  if (s.kind != SweepKind::amplitude_grid && s.values.empty())
    throw ConfigError("/sweep/values: must be non-empty");
  r.done();
  return s;
}

OutputConfig parse_output(const json& node) {
  ObjReader r(node, "/output");
  OutputConfig o;
  o.prefix = r.str_or("prefix", "georabi");
  o.sample_stride = r.integer_or("sample_stride", 1);
  if (o.sample_stride < 1) throw ConfigError("/output/sample_stride: must be >= 1");
  r.done();
  return o;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  ObjReader root(doc, "");
  ExperimentConfig cfg;
  cfg.model = parse_model(root.raw("model"));
  cfg.path = root.has("path") ? parse_path(root.raw("path"), cfg.model.kind)
                              : parse_path(json::object(), cfg.model.kind);
  cfg.drive = root.has("drive") ? parse_drive(root.raw("drive")) : DriveConfig{};
  cfg.run = root.has("run") ? parse_run(root.raw("run")) : parse_run(json::object());
  if (root.has("sweep")) cfg.sweep = parse_sweep(root.raw("sweep"));
  cfg.output = root.has("output") ? parse_output(root.raw("output")) : OutputConfig{};
  root.done();
  return cfg;
}

std::string ExperimentConfig::canonical_json() const {
  json doc;
  json m;
  switch (model.kind) {
    case ModelKind::deltawell:
      m["kind"] = "deltawell";
      m["a"] = model.a;
      m["gamma_left"] = model.gamma_l;
      m["gamma_right"] = model.gamma_r;
      m["beta"] = model.beta;
      break;
    case ModelKind::lambda:
      m["kind"] = "lambda";
      m["E_g"] = model.e_g;
      m["E_e"] = model.e_e;
      m["d"] = model.dipole;
      break;
    case ModelKind::matrix: {
      m["kind"] = "matrix";
      json h0 = json::array(), dr = json::array();
      for (Eigen::Index i = 0; i < model.h0.rows(); ++i) {
        json r0 = json::array(), r1 = json::array();
        for (Eigen::Index c = 0; c < model.h0.cols(); ++c) {
          r0.push_back(model.h0(i, c));
          r1.push_back(model.drive(i, c));
        }
        h0.push_back(r0);
        dr.push_back(r1);
      }
      m["h0"] = h0;
      m["drive"] = dr;
      m["roles"] = {{"state0", model.roles.state0},
                    {"state2", model.roles.state2},
                    {"aux", model.roles.aux}};
      break;
    }
  }
  doc["model"] = m;

  json p;
  switch (path.kind) {
    case PathKind::ellipse:
      p["kind"] = "ellipse";
      p["lambda_r"] = path.lambda_r;
      p["lambda_c"] = path.lambda_c;
      p["units"] = path.amplitudes_in_eu ? "Eu" : "absolute";
      p["omega"] = path.omega;
      break;
    case PathKind::circle:
      p["kind"] = "circle";
      p["radius"] = path.radius;
      p["phi0"] = path.phi0;
      p["omega"] = path.omega;
      break;
    case PathKind::waypoints: {
      p["kind"] = "waypoints";
      p["times"] = path.times;
      json pts = json::array();
      for (const auto& v : path.points) {
        json row = json::array();
        for (Eigen::Index c = 0; c < v.size(); ++c) row.push_back(v[c]);
        pts.push_back(row);
      }
      p["points"] = pts;
      break;
    }
    case PathKind::static_point:
      p["kind"] = "static";
      p["duration"] = path.duration;
      break;
  }
  doc["path"] = p;

  json d;
  d["amplitude"] = drive.amplitude;
  d["omega_rule"] = drive.tracked ? "tracked" : "fixed";
  if (!drive.tracked) d["omega"] = drive.omega;
  doc["drive"] = d;

  json r;
  r["mode"] = run.mode == RunMode::full        ? "full"
              : run.mode == RunMode::rwa       ? "rwa"
              : run.mode == RunMode::geometric ? "geometric"
                                               : "all";
  r["cycles"] = run.cycles;
  r["steps_per_period"] = run.steps_per_period;
  r["frames_per_cycle"] = run.frames_per_cycle;
  r["geometric_segments"] = run.geometric_segments;
  r["truncation_threshold"] = run.truncation_threshold;
  r["gamma_radial_nodes"] = run.gamma_radial_nodes;
  r["gamma_angular_panels"] = run.gamma_angular_panels;
  doc["run"] = r;

  if (sweep.kind != SweepKind::none) {
    json s;
    s["kind"] = sweep.kind == SweepKind::path_scale ? "path-scale"
                : sweep.kind == SweepKind::radius   ? "radius"
                                                    : "amplitude-grid";
    if (sweep.kind == SweepKind::amplitude_grid) {
      s["lambda_r"] = sweep.lambda_r_range;
      s["lambda_c"] = sweep.lambda_c_range;
    } else {
      s["values"] = sweep.values;
    }
    doc["sweep"] = s;
  }

  json o;
  o["prefix"] = output.prefix;
  o["sample_stride"] = output.sample_stride;
  doc["output"] = o;
  return doc.dump(2);
}

std::string ExperimentConfig::hash() const {
  const std::string text = canonical_json();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::override_value(const std::string& dotted, const std::string& value) {
  json doc = json::parse(canonical_json());
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;  // bare strings allowed
  }
  json* node = &doc;
  std::string rest = dotted;
  while (true) {
    const auto dot = rest.find('.');
    if (dot == std::string::npos) break;
    const std::string key = rest.substr(0, dot);
    rest = rest.substr(dot + 1);
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
  }
  if (rest.empty()) throw ConfigError("override: empty key path");
  (*node)[rest] = parsed;
  *this = parse(doc.dump());
}

std::vector<std::string> ExperimentConfig::preset_names() {
  return {"fig2", "lambda-circle", "lambda-transfer"};
}

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
  json doc;
  if (name == "fig2") {
    // Paper configuration: a = 44 zeta, gamma_r = 22/a, beta = 7.8/a and the
    // depth ellipse (0.037, 0.024) E_u. Drive rate and traversal rate are
    // engineering choices keeping the validity flags "ok".
    doc["model"] = {{"kind", "deltawell"},
                    {"a", 44.0},
                    {"gamma_left", 1.0},
                    {"gamma_right", 0.5},
                    {"beta", 7.8 / 44.0}};
    doc["path"] = {{"kind", "ellipse"},
                   {"lambda_r", 0.037},
                   {"lambda_c", 0.024},
                   {"units", "Eu"},
                   {"omega", -9.338e-4}};
    doc["drive"] = {{"amplitude", 2e-3}, {"omega_rule", "tracked"}};
    doc["run"] = {{"mode", "all"}, {"cycles", 1}};
    doc["output"] = {{"prefix", "fig2"}};
  } else if (name == "lambda-circle") {
    doc["model"] = {{"kind", "lambda"}, {"E_g", 0.0}, {"E_e", 25.0}, {"d", 1.0}};
    doc["path"] = {{"kind", "circle"}, {"radius", 1.0}, {"phi0", 0.0}, {"omega", 0.05}};
    doc["drive"] = {{"amplitude", 0.01}, {"omega_rule", "tracked"}};
    doc["run"] = {{"mode", "all"}, {"cycles", 1}};
    doc["output"] = {{"prefix", "lambda_circle"}};
  } else if (name == "lambda-transfer") {
    // Tuned full-transfer demonstration: 35 cycles bring N*Gamma near pi/2.
    doc["model"] = {{"kind", "lambda"}, {"E_g", 0.0}, {"E_e", 25.0}, {"d", 1.0}};
    doc["path"] = {{"kind", "circle"}, {"radius", 1.0}, {"phi0", 0.0}, {"omega", 0.096}};
    doc["drive"] = {{"amplitude", 0.0144}, {"omega_rule", "tracked"}};
    doc["run"] = {{"mode", "all"}, {"cycles", 35}};
    doc["output"] = {{"prefix", "lambda_transfer"}};
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return parse(doc.dump());
}

// ---- building physics objects -------------------------------------------------

BuiltSystem build_system(const ExperimentConfig& cfg) {
  BuiltSystem out;
  out.ctrl.steps_per_period = cfg.run.steps_per_period;
  out.ctrl.frames_per_cycle = cfg.run.frames_per_cycle;
  out.ctrl.geometric_segments = cfg.run.geometric_segments;
  out.drive = cfg.drive.tracked
                  ? dynamics::DriveSchedule::tracked(cfg.drive.amplitude)
                  : dynamics::DriveSchedule::fixed(cfg.drive.amplitude, cfg.drive.omega);

  switch (cfg.model.kind) {
    case ModelKind::deltawell: {
      deltawell::DeltaWellPotential pot{cfg.model.a, cfg.model.gamma_l, cfg.model.gamma_r,
                                        cfg.model.beta};
      pot.validate();
      out.eu = pot.eu();
      out.zeta = pot.zeta();
      std::shared_ptr<const ParamPath> path;
      if (cfg.path.kind == PathKind::ellipse) {
        const double unit = cfg.path.amplitudes_in_eu ? pot.eu() : 1.0;
        auto names = make_param_names({"eps_c", "eps_r"});
        Vec center(2), amps(2), phases(2);
        center << pot.vc(), pot.gamma_r * pot.gamma_r;
        amps << cfg.path.lambda_c * unit, cfg.path.lambda_r * unit;
        phases << -M_PI / 2.0, 0.0;
        path = std::make_shared<HarmonicLoopPath>(names, center, amps, phases, cfg.path.omega);
      } else if (cfg.path.kind == PathKind::waypoints) {
        auto names = make_param_names({"eps_c", "eps_r"});
        path = std::make_shared<SplinePath>(names, cfg.path.times, cfg.path.points);
      } else if (cfg.path.kind == PathKind::static_point) {
        auto names = make_param_names({"eps_c", "eps_r"});
        Vec base(2);
        base << pot.vc(), pot.gamma_r * pot.gamma_r;
        path = std::make_shared<StaticPath>(ParamVector(names, base), cfg.path.duration);
      } else {
        throw ConfigError("/path/kind: circle paths do not apply to the delta well");
      }
      out.model = deltawell::as_model(pot, *path, cfg.run.truncation_threshold);
      out.path = path;
      break;
    }
    case ModelKind::lambda: {
      lambda_sys::LambdaParams p;
      p.E_g = cfg.model.e_g;
      p.E_e = cfg.model.e_e;
      p.d = cfg.model.dipole;
      p.field = cfg.drive.amplitude;
      std::shared_ptr<const ParamPath> path;
      double scale = 1.0;
      if (cfg.path.kind == PathKind::circle) {
        path = lambda_sys::circle_schedule(cfg.path.radius, cfg.path.omega, cfg.path.phi0);
        scale = cfg.path.radius;
      } else if (cfg.path.kind == PathKind::static_point) {
        Vec v(3);
        v << cfg.path.radius * std::cos(cfg.path.phi0), cfg.path.radius * std::sin(cfg.path.phi0),
            0.5 * cfg.path.phi0;
        path = std::make_shared<StaticPath>(ParamVector(lambda_sys::lambda_param_names(), v),
                                            cfg.path.duration);
        scale = cfg.path.radius;
      } else {
        throw ConfigError("/path/kind: lambda models take circle or static paths");
      }
      out.model = lambda_sys::to_generic(p, scale);
      out.path = path;
      break;
    }
    case ModelKind::matrix: {
      if (cfg.path.kind != PathKind::static_point)
        throw ConfigError("/path/kind: matrix models take static paths");
      auto names = make_param_names({"p0"});
      const Mat h0 = cfg.model.h0, dr = cfg.model.drive;
      out.model = std::make_shared<MatrixModel>(
          static_cast<int>(h0.rows()), names, [h0](const ParamVector&) { return h0; },
          [dr](const ParamVector&) { return dr; }, cfg.model.roles);
      out.path = std::make_shared<StaticPath>(ParamVector(names, Vec::Zero(1)),
                                              cfg.path.duration);
      break;
    }
  }
  return out;
}

// ---- command implementations ---------------------------------------------------

const ResultTable* RunResult::table(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return &t;
  return nullptr;
}

std::optional<double> RunResult::scalar(const std::string& name) const {
  for (const auto& [k, v] : scalars)
    if (k == name) return v;
  return std::nullopt;
}

namespace {

void thin_rows(ResultTable& t, int stride) {
  if (stride <= 1 || t.rows.size() < 3) return;
  std::vector<std::vector<double>> kept;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (i % stride == 0 || i + 1 == t.rows.size()) kept.push_back(t.rows[i]);
  t.rows = std::move(kept);
}

double flag_value(dynamics::ValidityFlag f) { return static_cast<double>(static_cast<int>(f)); }

void run_spectrum(const ExperimentConfig& cfg, const BuiltSystem& sys, RunResult& out) {
  if (cfg.model.kind == ModelKind::deltawell) {
    deltawell::DeltaWellPotential pot{cfg.model.a, cfg.model.gamma_l, cfg.model.gamma_r,
                                      cfg.model.beta};
    const auto states = deltawell::bound_spectrum(pot);
    ResultTable t;
    t.name = "bound_states";
    t.columns = {"index",       "energy",       "energy_over_Eu", "kappa",
                 "oscillatory", "label",        "weight_left",    "weight_right",
                 "weight_center"};
    int localized = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
      const auto c = deltawell::classify(states[i], pot);
      if (c.label != deltawell::StateLabel::extended) ++localized;
      t.add_row({static_cast<double>(i), states[i].energy, states[i].energy / pot.eu(),
                 states[i].kappa,
                 states[i].interior == deltawell::BoundState::Character::oscillatory ? 1.0 : 0.0,
                 static_cast<double>(static_cast<int>(c.label)), c.weight_left, c.weight_right,
                 c.weight_center});
    }
    out.tables.push_back(std::move(t));
    out.scalars.emplace_back("n_bound", static_cast<double>(states.size()));
    out.scalars.emplace_back("n_localized", static_cast<double>(localized));
  } else {
    const Frame f = sys.model->frame_at(sys.path->at(0.0), nullptr);
    ResultTable t;
    t.name = "spectrum";
    t.columns = {"index", "energy"};
    for (int i = 0; i < f.dim(); ++i) t.add_row({static_cast<double>(i), f.energies[i]});
    out.tables.push_back(std::move(t));
    out.scalars.emplace_back("n_states", static_cast<double>(f.dim()));
  }
}

void add_population_table(RunResult& out, const std::string& name,
                          const dynamics::EvolutionRecord& rec, bool with_theta, int stride) {
  ResultTable t;
  t.name = name;
  t.columns = {"t", "p0", "p2", "p_aux", "norm_error", "gamma_acc"};
  if (with_theta) t.columns.push_back("theta");
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    const Vec& p = rec.populations[i];
    double p0 = p[rec.roles.state0], p2 = p[rec.roles.state2], paux = 0.0;
    for (int a : rec.roles.aux) paux += p[a];
    std::vector<double> row{rec.times[i], p0,
                            p2,           paux,
                            std::abs(rec.amplitudes[i].norm() - 1.0), rec.gamma_acc[i]};
    if (with_theta) row.push_back(rec.theta[i]);
    t.add_row(std::move(row));
  }
  thin_rows(t, stride);
  out.tables.push_back(std::move(t));
}

void run_evolve(const ExperimentConfig& cfg, const BuiltSystem& sys, RunResult& out) {
  const RoleMap roles = sys.model->roles();
  const int stride = cfg.output.sample_stride;
  const bool want_full = cfg.run.mode == RunMode::full || cfg.run.mode == RunMode::all;
  const bool want_rwa = cfg.run.mode == RunMode::rwa || cfg.run.mode == RunMode::all;
  const bool want_geo = cfg.run.mode == RunMode::geometric || cfg.run.mode == RunMode::all;

  if (want_full) {
    CVec psi0 = CVec::Zero(sys.model->dimension());
    psi0[roles.state0] = 1.0;
    const auto rec =
        dynamics::evolve_full(*sys.model, *sys.path, sys.drive, psi0, sys.ctrl, cfg.run.cycles);
    add_population_table(out, "populations_full", rec, true, stride);
    out.scalars.emplace_back("final_p0_full", rec.populations.back()[roles.state0]);
    out.scalars.emplace_back("final_p2_full", rec.populations.back()[roles.state2]);
    out.scalars.emplace_back("max_norm_error_full", rec.max_norm_error);
  }
  if (want_rwa) {
    const auto rec = dynamics::evolve_rwa(*sys.model, *sys.path, sys.drive,
                                          Eigen::Vector2cd(1.0, 0.0), sys.ctrl, cfg.run.cycles);
    add_population_table(out, "populations_rwa", rec, false, stride);
    out.scalars.emplace_back("final_p2_rwa", rec.populations.back()[1]);
  }
  if (want_geo) {
    const auto rec =
        dynamics::evolve_geometric(*sys.model, *sys.path, sys.drive.amplitude,
                                   Eigen::Vector2cd(1.0, 0.0), sys.ctrl, cfg.run.cycles);
    add_population_table(out, "populations_geometric", rec, false, stride);
    out.scalars.emplace_back("final_p2_geometric", rec.populations.back()[1]);
  }

  // kappa along the path, raw and (for the delta well) in the paper's
  // F zeta Omega / E_u unit.
  {
    dynamics::FrameTrack track(*sys.model, *sys.path, cfg.run.frames_per_cycle, cfg.run.cycles);
    const bool well = cfg.model.kind == ModelKind::deltawell;
    ResultTable t;
    t.name = "kappa_timeseries";
    t.columns = {"t"};
    const auto names = sys.path->names();
    for (const auto& n : *names) t.columns.push_back(n);
    t.columns.insert(t.columns.end(), {"kappa_re", "kappa_im"});
    if (well) t.columns.push_back("kappa_paper_units");
    double im_max = 0.0, abs_max = 0.0;
    const double omega_cycle = 2.0 * M_PI / sys.path->period();
    for (int i = 0; i < track.node_count(); ++i) {
      const double time = track.node_time(i);
      const cplx kap = track.kappa_at(time, sys.drive.amplitude);
      im_max = std::max(im_max, std::abs(kap.imag()));
      abs_max = std::max(abs_max, std::abs(kap));
      std::vector<double> row{time};
      const Vec lam = sys.path->at(time).values();
      for (Eigen::Index c = 0; c < lam.size(); ++c) row.push_back(lam[c]);
      row.push_back(kap.real());
      row.push_back(kap.imag());
      if (well)
        row.push_back(kap.real() * sys.eu /
                      (sys.drive.amplitude * sys.zeta * omega_cycle));
      t.add_row(std::move(row));
    }
    thin_rows(t, stride);
    out.tables.push_back(std::move(t));
    out.scalars.emplace_back("kappa_im_max_over_abs", abs_max > 0 ? im_max / abs_max : 0.0);
  }

  // Rotation angle per cycle (path-geometric, cycle-independent).
  {
    const auto g = dynamics::gamma_line(*sys.model, *sys.path, sys.drive.amplitude, sys.ctrl);
    ResultTable t;
    t.name = "gamma_per_cycle";
    t.columns = {"cycle", "gamma", "gamma_cumulative"};
    for (int k = 0; k < cfg.run.cycles; ++k)
      t.add_row({static_cast<double>(k + 1), g.value, g.value * (k + 1)});
    out.tables.push_back(std::move(t));
    out.scalars.emplace_back("gamma_per_cycle", g.value);
    out.scalars.emplace_back("gamma_well_defined", g.well_defined ? 1.0 : 0.0);
  }
}

void run_gamma(const ExperimentConfig& cfg, const BuiltSystem& sys, RunResult& out) {
  const auto g = dynamics::gamma_line(*sys.model, *sys.path, sys.drive.amplitude, sys.ctrl);
  out.scalars.emplace_back("gamma_line", g.value);
  out.scalars.emplace_back("gamma_im_residual", g.im_residual);
  out.scalars.emplace_back("gamma_well_defined", g.well_defined ? 1.0 : 0.0);

  ResultTable t;
  t.name = "gamma_summary";
  t.columns = {"gamma_line", "im_residual", "well_defined"};
  std::vector<double> row{g.value, g.im_residual, g.well_defined ? 1.0 : 0.0};
  if (sys.model->param_count() == 2 && sys.path->cyclic()) {
    try {
      const double gs =
          dynamics::gamma_surface(*sys.model, *sys.path, sys.drive.amplitude,
                                  cfg.run.gamma_radial_nodes, cfg.run.gamma_angular_panels);
      t.columns.insert(t.columns.end(), {"gamma_surface", "surface_line_rel_diff"});
      row.push_back(gs);
      row.push_back(std::abs(gs - g.value) / std::max(std::abs(g.value), 1e-300));
      out.scalars.emplace_back("gamma_surface", gs);
    } catch (const Error& e) {
      out.notes.push_back(std::string("gamma_surface unavailable: ") + e.what());
    }
  } else {
    out.notes.push_back("gamma_surface skipped: needs a cyclic two-parameter path");
  }
  t.add_row(std::move(row));
  out.tables.push_back(std::move(t));
}

struct SweepRow {
  std::vector<double> values;
  dynamics::ValidityFlag flag = dynamics::ValidityFlag::ok;
  bool failed = false;
};

int sweep_thread_cap(int points) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("GEORABI_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return std::max(1, std::min(n, points));
}

void run_sweep(const ExperimentConfig& cfg, RunResult& out) {
  if (cfg.sweep.kind == SweepKind::none)
    throw ConfigError("/sweep: sweep command requires a sweep section");

  struct Point {
    ExperimentConfig cfg;
    std::vector<double> id;  // leading identification columns
  };
  std::vector<Point> points;
  std::vector<std::string> id_cols;

  if (cfg.sweep.kind == SweepKind::path_scale) {
    if (cfg.model.kind != ModelKind::deltawell || cfg.path.kind != PathKind::ellipse)
      throw ConfigError("/sweep: path-scale applies to delta-well ellipse paths");
    id_cols = {"scale", "lambda_r", "lambda_c"};
    for (double s : cfg.sweep.values) {
      Point p{cfg, {s, cfg.path.lambda_r * s, cfg.path.lambda_c * s}};
      p.cfg.sweep.kind = SweepKind::none;
      p.cfg.path.lambda_r *= s;
      p.cfg.path.lambda_c *= s;
      points.push_back(std::move(p));
    }
  } else if (cfg.sweep.kind == SweepKind::radius) {
    if (cfg.model.kind != ModelKind::lambda || cfg.path.kind != PathKind::circle)
      throw ConfigError("/sweep: radius applies to lambda circle paths");
    id_cols = {"radius"};
    for (double r : cfg.sweep.values) {
      Point p{cfg, {r}};
      p.cfg.sweep.kind = SweepKind::none;
      p.cfg.path.radius = r;
      points.push_back(std::move(p));
    }
  } else {
    if (cfg.model.kind != ModelKind::deltawell || cfg.path.kind != PathKind::ellipse)
      throw ConfigError("/sweep: amplitude-grid applies to delta-well ellipse paths");
    id_cols = {"lambda_r", "lambda_c"};
    const auto& rr = cfg.sweep.lambda_r_range;
    const auto& cc = cfg.sweep.lambda_c_range;
    const int nr = static_cast<int>(rr[2]), nc = static_cast<int>(cc[2]);
    for (int i = 0; i < nr; ++i) {
      const double lr = nr == 1 ? rr[0] : rr[0] + (rr[1] - rr[0]) * i / (nr - 1.0);
      for (int j = 0; j < nc; ++j) {
        const double lc = nc == 1 ? cc[0] : cc[0] + (cc[1] - cc[0]) * j / (nc - 1.0);
        Point p{cfg, {lr, lc}};
        p.cfg.sweep.kind = SweepKind::none;
        p.cfg.path.lambda_r = lr;
        p.cfg.path.lambda_c = lc;
        points.push_back(std::move(p));
      }
    }
  }

  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      SweepRow& row = rows[i];
      row.values = points[i].id;
      try {
        const BuiltSystem sys = build_system(points[i].cfg);
        const auto rep = dynamics::adiabaticity_report(*sys.model, *sys.path, sys.drive,
                                                       sys.drive.amplitude, 32);
        const auto g =
            dynamics::gamma_line(*sys.model, *sys.path, sys.drive.amplitude, sys.ctrl);
        row.flag = rep.flag();
        row.values.insert(row.values.end(),
                          {g.value, rep.max_velocity_ratio, rep.max_drive_ratio,
                           flag_value(rep.flag()), 0.0});
      } catch (const std::exception&) {
        row.failed = true;
        row.values.insert(row.values.end(),
                          {std::nan(""), std::nan(""), std::nan(""), std::nan(""), 1.0});
      }
    }
  };
  const int nthreads = sweep_thread_cap(static_cast<int>(points.size()));
  std::vector<std::thread> pool;
  for (int k = 0; k < nthreads - 1; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ResultTable t;
  t.name = "sweep";
  t.columns = id_cols;
  t.columns.insert(t.columns.end(),
                   {"gamma_per_cycle", "max_velocity_ratio", "max_drive_ratio", "flag", "error"});
  dynamics::ValidityFlag worst = dynamics::ValidityFlag::ok;
  for (auto& r : rows) {
    if (!r.failed && static_cast<int>(r.flag) > static_cast<int>(worst)) worst = r.flag;
    t.add_row(std::move(r.values));
  }
  out.tables.push_back(std::move(t));
  out.validity = worst;
  out.scalars.emplace_back("sweep_points", static_cast<double>(points.size()));
}

void run_lambda(const ExperimentConfig& cfg, const BuiltSystem& sys, RunResult& out) {
  if (cfg.model.kind != ModelKind::lambda || cfg.path.kind != PathKind::circle)
    throw ConfigError("lambda command requires a lambda model with a circle path");
  const double de = cfg.model.dipole * cfg.drive.amplitude;

  // Closed form on the (epsilon, delta) projection of the same circle.
  const double span = cfg.path.omega > 0 ? 2.0 * M_PI : -2.0 * M_PI;
  ArcPath projection(lambda_sys::lambda_param_names_2(), Vec::Zero(2), cfg.path.radius,
                     cfg.path.phi0, cfg.path.phi0 + span, sys.path->period());
  const double g_analytic = lambda_sys::gamma_analytic(projection, de);
  const auto g_line = dynamics::gamma_line(*sys.model, *sys.path, sys.drive.amplitude, sys.ctrl);

  CVec psi0 = CVec::Zero(3);
  psi0[sys.model->roles().state0] = 1.0;
  const auto rec =
      dynamics::evolve_full(*sys.model, *sys.path, sys.drive, psi0, sys.ctrl, cfg.run.cycles);
  const double ae_full = std::sqrt(rec.populations.back()[sys.model->roles().state2]);
  const double ae_analytic = std::abs(std::sin(cfg.run.cycles * g_analytic));

  // Diagnostic per the tracking rule: Stark correction entering omega(t).
  dynamics::FrameTrack track(*sys.model, *sys.path, 16, 1);
  const double omega_tracked = track.omega_at(0.0, sys.drive);
  const Frame f0 = track.node(0);
  const double bare = f0.energies[sys.model->roles().state2] -
                      f0.energies[sys.model->roles().state0];

  ResultTable t;
  t.name = "lambda_summary";
  t.columns = {"radius",     "d_field",    "cycles",          "gamma_analytic",
               "gamma_line", "gamma_rel_diff", "ae_analytic", "ae_full",
               "ae_diff",    "stark_omega_shift"};
  t.add_row({cfg.path.radius, de, static_cast<double>(cfg.run.cycles), g_analytic, g_line.value,
             std::abs(g_line.value - g_analytic) / std::max(std::abs(g_analytic), 1e-300),
             ae_analytic, ae_full, std::abs(ae_full - ae_analytic), omega_tracked - bare});
  out.tables.push_back(std::move(t));
  out.scalars.emplace_back("gamma_analytic", g_analytic);
  out.scalars.emplace_back("gamma_line", g_line.value);
  out.scalars.emplace_back("ae_full", ae_full);
  out.scalars.emplace_back("ae_analytic", ae_analytic);
}

void run_check(const BuiltSystem& sys, RunResult& out) {
  const auto rep =
      dynamics::adiabaticity_report(*sys.model, *sys.path, sys.drive, sys.drive.amplitude, 64);
  ResultTable t;
  t.name = "adiabaticity";
  t.columns = {"t", "velocity_ratio", "drive_ratio"};
  for (const auto& p : rep.probes) t.add_row({p.t, p.velocity_ratio, p.drive_ratio});
  out.tables.push_back(std::move(t));
  out.scalars.emplace_back("flag", flag_value(rep.flag()));
  out.validity = rep.flag();
}

}  // namespace

RunResult run(const ExperimentConfig& cfg, const std::string& command) {
  RunResult out;
  if (command == "sweep") {
    run_sweep(cfg, out);
    return out;
  }
  const BuiltSystem sys = build_system(cfg);
  if (command == "spectrum") {
    run_spectrum(cfg, sys, out);
    return out;
  }
  const auto rep =
      dynamics::adiabaticity_report(*sys.model, *sys.path, sys.drive, sys.drive.amplitude, 48);
  out.validity = rep.flag();
  out.scalars.emplace_back("max_velocity_ratio", rep.max_velocity_ratio);
  out.scalars.emplace_back("max_drive_ratio", rep.max_drive_ratio);

  if (command == "evolve")
    run_evolve(cfg, sys, out);
  else if (command == "gamma")
    run_gamma(cfg, sys, out);
  else if (command == "lambda")
    run_lambda(cfg, sys, out);
  else if (command == "check")
    run_check(sys, out);
  else
    throw UsageError("unknown command '" + command +
                     "' (expected spectrum|evolve|gamma|sweep|lambda|check)");
  return out;
}

std::string table_csv(const ExperimentConfig& cfg, const std::string& command,
                      const RunResult& result, const ResultTable& table, bool stamped) {
  std::vector<std::string> prov;
  prov.push_back(std::string("georabi ") + kVersion);
  prov.push_back("command: " + command);
  prov.push_back("config-hash: " + cfg.hash());
  std::string units = "units: hbar = 1, 2m = 1";
  if (cfg.model.kind == ModelKind::deltawell) {
    const deltawell::DeltaWellPotential pot{cfg.model.a, cfg.model.gamma_l, cfg.model.gamma_r,
                                            cfg.model.beta};
    units += "; lengths in zeta = 1/gamma_left; energies in 1/length^2; E_u = " +
             format_double(pot.eu());
  }
  prov.push_back(units);
  for (const auto& n : result.notes) prov.push_back("note: " + n);
  if (stamped) {
    char buf[64];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    prov.push_back(std::string("generated: ") + buf);
  }
  return table.to_csv(prov);
}

}  // namespace georabi::experiment
