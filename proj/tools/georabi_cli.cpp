// Command-line runner over the georabi C API. Reads a config (file or
// preset), applies flag overrides, runs one command and writes the result
// tables as <prefix>_<table>.csv.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "georabi/georabi.h"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::string out_prefix;
  int cycles = 0;
  bool force = false;
  bool stamp = false;
  std::vector<std::string> sets;
  std::string sweep_spec;
};

std::string take_error(char* err) {
  std::string out = err ? err : "unknown error";
  grb_string_free(err);
  return out;
}

[[noreturn]] void fail(int code, const std::string& message) {
  std::cerr << "georabi: " << message << "\n";
  // Usage-level mistakes count as config errors for exit purposes.
  std::exit(code == GRB_ERR_USAGE ? GRB_ERR_CONFIG : code);
}

std::string sweep_json(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    fail(GRB_ERR_CONFIG, "--sweep spec must look like scale:0.25,0.5,1 or radius:0.5,1 or "
                         "grid:lr=lo:hi:n,lc=lo:hi:n");
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  auto parse_list = [](const std::string& s) {
    std::string out = "[";
    std::stringstream ss(s);
    std::string item;
    bool first = true;
    while (std::getline(ss, item, ',')) {
      if (!first) out += ",";
      out += item;
      first = false;
    }
    return out + "]";
  };
  if (kind == "scale") return R"({"kind":"path-scale","values":)" + parse_list(rest) + "}";
  if (kind == "radius") return R"({"kind":"radius","values":)" + parse_list(rest) + "}";
  if (kind == "grid") {
    // grid:lr=lo:hi:n,lc=lo:hi:n
    std::string lr, lc;
    std::stringstream ss(rest);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (part.rfind("lr=", 0) == 0) lr = part.substr(3);
      if (part.rfind("lc=", 0) == 0) lc = part.substr(3);
    }
    if (lr.empty() || lc.empty()) fail(GRB_ERR_CONFIG, "--sweep grid needs lr= and lc= ranges");
    auto triple = [](const std::string& s) {
      std::string out = "[";
      std::stringstream t(s);
      std::string item;
      bool first = true;
      while (std::getline(t, item, ':')) {
        if (!first) out += ",";
        out += item;
        first = false;
      }
      return out + "]";
    };
    return R"({"kind":"amplitude-grid","lambda_r":)" + triple(lr) + R"(,"lambda_c":)" + triple(lc) +
           "}";
  }
  fail(GRB_ERR_CONFIG, "unknown --sweep kind '" + kind + "'");
}

grb_experiment* load_experiment(const CommonArgs& args) {
  if (args.config_path.empty() == args.preset.empty())
    fail(GRB_ERR_CONFIG, "provide exactly one of --config or --preset");
  grb_experiment* exp = nullptr;
  char* err = nullptr;
  int rc;
  if (!args.preset.empty()) {
    rc = grb_experiment_from_preset(args.preset.c_str(), &exp, &err);
  } else {
    std::ifstream in(args.config_path, std::ios::binary);
    if (!in) fail(GRB_ERR_CONFIG, "cannot read config file " + args.config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    rc = grb_experiment_from_json(buf.str().c_str(), &exp, &err);
  }
  if (rc != GRB_OK) fail(rc, take_error(err));

  auto apply = [&](const std::string& key, const std::string& value) {
    char* oerr = nullptr;
    const int orc = grb_experiment_override(exp, key.c_str(), value.c_str(), &oerr);
    if (orc != GRB_OK) fail(orc, take_error(oerr));
  };
  if (args.cycles > 0) apply("run.cycles", std::to_string(args.cycles));
  if (!args.out_prefix.empty()) apply("output.prefix", "\"" + args.out_prefix + "\"");
  for (const auto& s : args.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(GRB_ERR_CONFIG, "--set expects key=value, got '" + s + "'");
    apply(s.substr(0, eq), s.substr(eq + 1));
  }
  if (!args.sweep_spec.empty()) apply("sweep", sweep_json(args.sweep_spec));
  return exp;
}

int run_command(const CommonArgs& args, const std::string& command) {
  grb_experiment* exp = load_experiment(args);
  char* err = nullptr;
  grb_results* res = nullptr;
  const int rc = grb_experiment_run(exp, command.c_str(), &res, &err);
  if (rc != GRB_OK) {
    grb_experiment_free(exp);
    fail(rc, take_error(err));
  }

  // Output prefix comes back through the canonical config.
  std::string prefix = "georabi";
  {
    char* cjson = nullptr;
    if (grb_experiment_canonical_json(exp, &cjson, nullptr) == GRB_OK && cjson) {
      const std::string doc(cjson);
      grb_string_free(cjson);
      const auto key = doc.find("\"prefix\": \"");
      if (key != std::string::npos) {
        const auto start = key + 11;
        const auto end = doc.find('"', start);
        if (end != std::string::npos) prefix = doc.substr(start, end - start);
      }
    }
  }

  for (int i = 0; i < grb_results_table_count(res); ++i) {
    const char* name = grb_results_table_name(res, i);
    char* csv = nullptr;
    char* cerr = nullptr;
    if (grb_results_table_csv(res, name, args.stamp ? 1 : 0, &csv, &cerr) != GRB_OK)
      fail(GRB_ERR_NUMERIC, take_error(cerr));
    const std::string path = prefix + "_" + name + ".csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(GRB_ERR_NUMERIC, "cannot write " + path);
    out << csv;
    grb_string_free(csv);
    std::cout << "wrote " << path << "\n";
  }
  for (int i = 0; i < grb_results_note_count(res); ++i)
    std::cout << "note: " << grb_results_note(res, i) << "\n";
  for (int i = 0; i < grb_results_scalar_count(res); ++i) {
    const char* name = grb_results_scalar_name(res, i);
    double v = 0;
    grb_results_scalar(res, name, &v);
    std::printf("%s = %.12g\n", name, v);
  }
  const int validity = grb_results_validity(res);
  std::cout << "validity: " << (validity == 0 ? "ok" : validity == 1 ? "marginal" : "violated")
            << "\n";
  grb_results_free(res);
  grb_experiment_free(exp);
  if (validity == 2 && !args.force) {
    std::cerr << "georabi: validity flags violated (rerun with --force to ignore)\n";
    return GRB_ERR_VALIDITY;
  }
  return 0;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON experiment config file");
  cmd->add_option("--preset", args.preset, "built-in preset: fig2 | lambda-circle | lambda-transfer");
  cmd->add_option("--out", args.out_prefix, "output file prefix");
  cmd->add_option("--cycles", args.cycles, "number of parameter cycles");
  cmd->add_flag("--force", args.force, "exit 0 even when validity flags are violated");
  cmd->add_flag("--stamp", args.stamp, "add a generation timestamp header to CSV files");
  cmd->add_option("--set", args.sets, "override a config value, e.g. --set drive.amplitude=1e-3")
      ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("georabi ") + grb_version() +
               " -- geometrical Rabi transition simulator"};
  app.require_subcommand(1);

  CommonArgs args;

  auto* spectrum = app.add_subcommand(
      "spectrum",
      "Bound-state table.\nCSV bound_states: index, energy, energy_over_Eu, kappa, oscillatory, "
      "label (0=left,1=right,2=extended), weight_left, weight_right, weight_center");
  add_common(spectrum, args);

  auto* evolve = app.add_subcommand(
      "evolve",
      "Time evolution (--set run.mode=full|rwa|geometric|all).\n"
      "CSV populations_*: t, p0, p2, p_aux, norm_error, gamma_acc [, theta].\n"
      "CSV kappa_timeseries: t, <path components>, kappa_re, kappa_im [, kappa_paper_units].\n"
      "CSV gamma_per_cycle: cycle, gamma, gamma_cumulative");
  add_common(evolve, args);

  auto* gamma = app.add_subcommand(
      "gamma",
      "Rotation angle per cycle; with --sweep, one row per grid point.\n"
      "CSV gamma_summary: gamma_line, im_residual, well_defined [, gamma_surface, "
      "surface_line_rel_diff].\n"
      "CSV sweep: <grid columns>, gamma_per_cycle, max_velocity_ratio, max_drive_ratio, flag, "
      "error");
  add_common(gamma, args);
  gamma->add_option("--sweep", args.sweep_spec,
                    "grid spec: scale:s1,s2,... | radius:r1,r2,... | grid:lr=lo:hi:n,lc=lo:hi:n");

  auto* lambda_cmd = app.add_subcommand(
      "lambda",
      "Analytic vs simulated comparison for the lambda system.\n"
      "CSV lambda_summary: radius, d_field, cycles, gamma_analytic, gamma_line, gamma_rel_diff, "
      "ae_analytic, ae_full, ae_diff, stark_omega_shift");
  add_common(lambda_cmd, args);

  auto* check = app.add_subcommand(
      "check", "Adiabaticity report only.\nCSV adiabaticity: t, velocity_ratio, drive_ratio");
  add_common(check, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (spectrum->parsed()) return run_command(args, "spectrum");
    if (evolve->parsed()) return run_command(args, "evolve");
    if (gamma->parsed()) return run_command(args, args.sweep_spec.empty() ? "gamma" : "sweep");
    if (lambda_cmd->parsed()) return run_command(args, "lambda");
    if (check->parsed()) return run_command(args, "check");
  } catch (const std::exception& e) {
    std::cerr << "georabi: " << e.what() << "\n";
    return GRB_ERR_NUMERIC;
  }
  return 0;
}
