#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "delayiqc/builtins.hpp"
#include "delayiqc/error.hpp"
#include "delayiqc/run.hpp"

namespace fs = std::filesystem;
using namespace delayiqc;

namespace {

struct Args {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> grid_density;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::kInvalidArgument, "cannot write " + p.string());
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kConfig, "cannot read config '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Json versions() {
  return {{"delayiqc", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"csv_schema", kCsvSchema}};
}

// Quick end-to-end checks on the shipped examples.
RunOutcome selftest(std::uint64_t seed) {
  RunOutcome out;
  std::ostringstream os;
  os << "check,value,expected,pass\n";
  bool all = true;
  auto row = [&](const std::string& name, double value, double lo, double hi) {
    const bool ok = value >= lo && value <= hi;
    all = all && ok;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%.10g,[%g;%g],%d\n", name.c_str(), value, lo, hi, ok ? 1 : 0);
    os << buf;
  };
  const FrMargin fr = fr_delay_margin(classical_loop_open());
  row("fr_margin", fr.tau, 2.04, 2.06);
  const Factorization f = factorize(make_pi3_bar(1.0));
  row("pi3bar_factor_residual", factorization_residual(f.psi, f.m, make_pi3_bar(1.0), verification_grid(1.0)), 0.0,
      1e-6);
  Recipe r;
  r.items = {RecipeItem{"pi1"}, RecipeItem{"pi3bar"}};
  const std::vector<IqcTerm> terms = r.instantiate(0.5);
  const AnalysisResult g = solve_gain(build_extended(classical_loop_lin(), terms), terms);
  row("lin_gain_tau_0.5", g.gamma, 4.5, 6.0);
  ProbeOptions po;
  po.seed = seed;
  po.sines = 8;
  po.multisines = 2;
  const GainEstimate e = empirical_l2_gain(classical_loop_lin().vertices.front(), 1, DelayTrajectory::constant(0.5), po);
  row("empirical_below_certified", g.gamma - e.gamma_lb, 0.0, 1e9);
  out.files.emplace_back("selftest.csv", versioned_csv("selftest", os.str()));
  out.exit_code = all ? 0 : 1;
  out.status = all ? "pass" : "fail";
  return out;
}

int execute(const std::string& sub, const Args& args) {
  const auto start = std::chrono::steady_clock::now();
  Json manifest = {{"tool", "delayiqc"}, {"subcommand", sub}, {"versions", versions()}};
  std::string out_dir = args.out.empty() ? "out" : args.out;
  RunOutcome outcome;
  int code = 1;
  try {
    std::uint64_t seed = args.seed.value_or(1);
    if (sub == "selftest") {
      if (!args.config.empty()) manifest["config_hash"] = config_hash(read_file(args.config));
      outcome = selftest(seed);
    } else {
      if (args.config.empty()) throw Error(ErrorCode::kConfig, "--config is required");
      const std::string text = read_file(args.config);
      manifest["config"] = args.config;
      manifest["config_hash"] = config_hash(text);
      Json j;
      try {
        j = Json::parse(text);
      } catch (const Json::parse_error&) {
        parse_run_config(text);  // reports the line
      }
      if (!j.is_object()) throw Error(ErrorCode::kConfig, "config: expected an object");
      if (j.contains("analysis") && j["analysis"] != sub) {
        throw Error(ErrorCode::kConfig, "analysis: config says '" + j["analysis"].dump() + "' but the subcommand is " + sub);
      }
      j["analysis"] = sub;
      RunConfig cfg = parse_run_config(j.dump());
      if (args.out.empty()) out_dir = cfg.out_dir;
      if (args.seed) cfg.seed = *args.seed;
      if (args.grid_density) {
        if (*args.grid_density < 2) throw Error(ErrorCode::kConfig, "--grid-density must be at least 2");
        cfg.grid_density = *args.grid_density;
      }
      seed = cfg.seed;
      manifest["grid_density"] = cfg.grid_density;
      outcome = run(cfg);
    }
    manifest["seed"] = seed;
    fs::create_directories(out_dir);
    Json files = Json::array();
    for (const auto& [name, body] : outcome.files) {
      write_file(fs::path(out_dir) / name, body);
      files.push_back(name);
    }
    manifest["outputs"] = files;
    manifest["summary"] = outcome.summary;
    manifest["status"] = outcome.status;
    code = outcome.exit_code;
  } catch (const Error& e) {
    manifest["status"] = "error";
    manifest["error"] = e.what();
    std::cerr << "error: " << e.what() << '\n';
    code = 1;
  } catch (const std::exception& e) {
    manifest["status"] = "error";
    manifest["error"] = e.what();
    std::cerr << "error: " << e.what() << '\n';
    code = 1;
  }
  manifest["exit_code"] = code;
  manifest["timings"] = {
      {"total_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
  try {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write manifest: " << e.what() << '\n';
    return 1;
  }
  if (code != 1) std::cout << outcome.status << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay robustness analysis with integral quadratic constraints"};
  app.require_subcommand(1);
  Args args;
  std::uint64_t seed = 0;
  int density = 0;
  const char* subs[][2] = {{"margin", "Bisect for the largest certified delay"},
                           {"gain", "Gain bound at one delay"},
                           {"sweep", "Gain bounds over a delay grid"},
                           {"factorize", "Factorize the recipe multipliers"},
                           {"nyquist", "Plant frequency response and multiplier circles"},
                           {"simulate", "Simulate the delayed loop"},
                           {"selftest", "Quick checks on the built-in examples"}};
  std::vector<CLI::App*> commands;
  std::vector<CLI::Option*> seed_opts, density_opts;
  for (const auto& s : subs) {
    CLI::App* c = app.add_subcommand(s[0], s[1]);
    c->add_option("--config", args.config, "JSON run configuration");
    c->add_option("--out", args.out, "Output directory");
    seed_opts.push_back(c->add_option("--seed", seed, "Random seed"));
    density_opts.push_back(c->add_option("--grid-density", density, "Frequency grid points"));
    commands.push_back(c);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!commands[i]->parsed()) continue;
    if (seed_opts[i]->count() > 0) args.seed = seed;
    if (density_opts[i]->count() > 0) args.grid_density = density;
    return execute(commands[i]->get_name(), args);
  }
  return 1;
}
