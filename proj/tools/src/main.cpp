// Command line front end: `fit` estimates one dataset, `study` runs a
// simulation grid, `elbo` compares the two bounds on simulated data.
//
// Exit codes: 0 success, 2 usage error, 3 input/data error, 4 numeric
// failure during estimation.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "iwgvem/csv.hpp"
#include "iwgvem/errors.hpp"
#include "iwgvem/parallel.hpp"
#include "iwgvem/pipeline.hpp"
#include "iwgvem/simstudy.hpp"
#include "iwgvem/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace iwgvem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(ss.str())));
  return buf;
}

std::string iso_utc_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Options shared by the subcommands, with JSON config fallback: a value
// given on the command line wins, then the config file, then the default.
struct ConfigFile {
  json data = json::object();

  static ConfigFile load(const std::string& path) {
    ConfigFile cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path);
    try {
      in >> cfg.data;
    } catch (const json::exception& e) {
      throw DataError("config " + path + " is not valid JSON: " + e.what());
    }
    if (!cfg.data.is_object())
      throw DataError("config " + path + " must hold a JSON object");
    return cfg;
  }

  template <typename T>
  void fill(const char* key, T& target, const CLI::Option* opt) const {
    if (opt != nullptr && opt->count() > 0) return;
    if (!data.contains(key)) return;
    try {
      target = data.at(key).get<T>();
    } catch (const json::exception& e) {
      throw DataError(std::string("config key '") + key + "': " + e.what());
    }
  }
};

struct HyperOpts {
  double gvem_tol = 1e-4;
  int gvem_max_iter = 500;
  double iw_tol = 1e-4;
  int iw_max_iter = 200;
  int outer = 10;
  int inner = 10;
  std::vector<double> lr_grid = {0.01, 0.05, 0.1, 0.5};
  int selection_steps = 30;
  int promax_power = 4;

  struct Opts {
    CLI::Option* gvem_tol = nullptr;
    CLI::Option* gvem_max_iter = nullptr;
    CLI::Option* iw_tol = nullptr;
    CLI::Option* iw_max_iter = nullptr;
    CLI::Option* outer = nullptr;
    CLI::Option* inner = nullptr;
    CLI::Option* lr_grid = nullptr;
    CLI::Option* selection_steps = nullptr;
    CLI::Option* promax_power = nullptr;
  } opt;

  void attach(CLI::App* cmd) {
    opt.gvem_tol = cmd->add_option("--gvem-tol", gvem_tol,
                                   "First-phase convergence tolerance");
    opt.gvem_max_iter = cmd->add_option("--gvem-max-iter", gvem_max_iter,
                                        "First-phase iteration cap");
    opt.iw_tol = cmd->add_option("--iw-tol", iw_tol,
                                 "Second-phase convergence tolerance");
    opt.iw_max_iter =
        cmd->add_option("--iw-max-iter", iw_max_iter,
                        "Second-phase iteration cap (0 disables the phase)");
    opt.outer = cmd->add_option("--outer", outer,
                                "Outer importance-sampling replicates");
    opt.inner = cmd->add_option("--inner", inner,
                                "Inner importance samples per replicate");
    opt.lr_grid = cmd->add_option("--lr-grid", lr_grid,
                                  "Learning rate candidates")
                      ->expected(-1);
    opt.selection_steps = cmd->add_option("--selection-steps", selection_steps,
                                          "Steps per learning rate candidate");
    opt.promax_power = cmd->add_option("--promax-power", promax_power,
                                       "Oblique rotation target power");
  }

  void merge(const ConfigFile& cfg) {
    cfg.fill("gvem_tol", gvem_tol, opt.gvem_tol);
    cfg.fill("gvem_max_iter", gvem_max_iter, opt.gvem_max_iter);
    cfg.fill("iw_tol", iw_tol, opt.iw_tol);
    cfg.fill("iw_max_iter", iw_max_iter, opt.iw_max_iter);
    cfg.fill("outer", outer, opt.outer);
    cfg.fill("inner", inner, opt.inner);
    cfg.fill("lr_grid", lr_grid, opt.lr_grid);
    cfg.fill("selection_steps", selection_steps, opt.selection_steps);
    cfg.fill("promax_power", promax_power, opt.promax_power);
  }

  FitConfig to_fit_config(std::uint64_t seed, bool exploratory) const {
    FitConfig fc;
    fc.gvem.tol = gvem_tol;
    fc.gvem.max_iter = gvem_max_iter;
    fc.iw_tol = iw_tol;
    fc.iw_max_iter = iw_max_iter;
    fc.iw.s = outer;
    fc.iw.m = inner;
    fc.adam.lr_grid = lr_grid;
    fc.adam.selection_steps = selection_steps;
    fc.promax_power = promax_power;
    fc.exploratory = exploratory;
    fc.seed = seed;
    return fc;
  }

  json to_json() const {
    return json{{"gvem_tol", gvem_tol},
                {"gvem_max_iter", gvem_max_iter},
                {"iw_tol", iw_tol},
                {"iw_max_iter", iw_max_iter},
                {"outer", outer},
                {"inner", inner},
                {"lr_grid", lr_grid},
                {"selection_steps", selection_steps},
                {"promax_power", promax_power}};
  }
};

void write_json(const fs::path& path, const json& j) {
  write_text_file(path.string(), j.dump(2) + "\n");
}

void write_manifest(const fs::path& out_dir, const std::string& command_line,
                    const std::string& subcommand, const json& resolved,
                    const json& inputs, const std::string& started,
                    double seconds) {
  json m{{"tool", "iwgvem"},
         {"version", kVersion},
         {"subcommand", subcommand},
         {"command", command_line},
         {"config", resolved},
         {"inputs", inputs},
         {"started", started},
         {"finished", iso_utc_now()},
         {"wall_seconds", seconds}};
  write_json(out_dir / "manifest.json", m);
}

std::vector<std::string> factor_names(int k) {
  std::vector<std::string> names;
  for (int c = 1; c <= k; ++c) names.push_back("f" + std::to_string(c));
  return names;
}

StructureKind parse_kind(const std::string& s) {
  if (s == "between") return StructureKind::between;
  if (s == "within") return StructureKind::within;
  throw DataError("structure kind must be 'between' or 'within', got '" + s +
                  "'");
}

std::string kind_name(StructureKind k) {
  return k == StructureKind::between ? "between" : "within";
}

StudyDesign apply_corr(StudyDesign d, const std::string& corr) {
  if (corr == "low") return with_low_correlation(d);
  if (corr == "high") return with_high_correlation(d);
  throw DataError("correlation band must be 'low' or 'high', got '" + corr +
                  "'");
}

json design_json(const StudyDesign& d) {
  return json{{"n", d.n_persons},
              {"k", d.n_factors},
              {"j", d.n_items},
              {"structure", kind_name(d.structure)},
              {"correlation", d.corr_label},
              {"mode", d.exploratory ? "exploratory" : "confirmatory"},
              {"replications", d.n_replications}};
}

StudyDesign design_from_json(const json& j) {
  StudyDesign d;
  d.n_persons = j.value("n", d.n_persons);
  d.n_factors = j.value("k", d.n_factors);
  d.n_items = j.value("j", d.n_items);
  if (j.contains("structure")) d.structure = parse_kind(j.at("structure"));
  d = apply_corr(d, j.value("correlation", "low"));
  d.exploratory = j.value("mode", "confirmatory") == "exploratory";
  d.n_replications = j.value("replications", d.n_replications);
  return d;
}

std::vector<StudyDesign> preset_cells(const std::string& name) {
  std::vector<StudyDesign> cells;
  auto push_grid = [&](int n, int k, int j, int reps, bool exploratory) {
    for (StructureKind kind : {StructureKind::between, StructureKind::within})
      for (const char* corr : {"low", "high"}) {
        StudyDesign d;
        d.n_persons = n;
        d.n_factors = k;
        d.n_items = j;
        d.structure = kind;
        d.exploratory = exploratory;
        d.n_replications = reps;
        cells.push_back(apply_corr(d, corr));
      }
  };
  if (name == "quick") {
    StudyDesign d;
    d.n_persons = 80;
    d.n_items = 10;
    d.n_replications = 2;
    cells.push_back(apply_corr(d, "low"));
  } else if (name == "desk") {
    push_grid(200, 2, 30, 25, false);
    push_grid(500, 2, 30, 25, false);
  } else if (name == "desk-exploratory") {
    push_grid(200, 2, 30, 25, true);
    push_grid(500, 2, 30, 25, true);
  } else if (name == "k5") {
    push_grid(500, 5, 55, 10, false);
  } else if (name == "full") {
    push_grid(200, 2, 30, 100, false);
    push_grid(500, 2, 30, 100, false);
  } else {
    throw DataError("unknown preset '" + name + "'");
  }
  return cells;
}

void summarize_study(const StudyResult& result, const fs::path& out_dir) {
  const auto aggs = aggregate(result);
  json cells = json::array();
  json timing_cells = json::array();
  for (const auto& agg : aggs) {
    json rows = json::array();
    for (const auto& row : agg.rows)
      rows.push_back(json{{"method", row.method},
                          {"block", row.block},
                          {"mean_bias", row.mean_bias},
                          {"mean_rmse", row.mean_rmse},
                          {"n", row.n}});
    json cell = design_json(agg.design);
    cell["converged"] =
        json{{"gvem", agg.converged_gvem}, {"iwgvem", agg.converged_iwgvem}};
    cell["metrics"] = rows;
    cells.push_back(cell);

    json tcell = design_json(agg.design);
    tcell["mean_seconds_gvem"] = agg.mean_seconds_gvem;
    tcell["mean_seconds_iwgvem"] = agg.mean_seconds_iwgvem;
    timing_cells.push_back(tcell);
  }
  write_json(out_dir / "summary.json", json{{"cells", cells}});
  write_json(out_dir / "timing_summary.json", json{{"cells", timing_cells}});
}

struct FitArgs {
  std::string data_path;
  std::string structure_arg;
  std::string out_dir = "fit_out";
  std::string config_path;
  std::uint64_t seed = 0;
  HyperOpts hyper;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

int run_fit(const FitArgs& args, const std::string& command_line) {
  const std::string started = iso_utc_now();
  const auto t0 = std::chrono::steady_clock::now();

  const ResponseMatrix responses = read_responses(args.data_path);
  json inputs = json::array();
  inputs.push_back(json{{"path", args.data_path},
                        {"checksum", file_checksum(args.data_path)}});

  LoadingStructure structure;
  bool exploratory = false;
  if (args.structure_arg.rfind("exploratory:", 0) == 0) {
    exploratory = true;
    int k = 0;
    try {
      k = std::stoi(args.structure_arg.substr(12));
    } catch (const std::exception&) {
      throw DataError("expected exploratory:<factors>, got '" +
                      args.structure_arg + "'");
    }
    if (k < 1) throw DataError("factor count must be positive");
    structure.mask = Eigen::MatrixXd::Ones(responses.n_items(), k);
  } else {
    structure = read_mask(args.structure_arg);
    inputs.push_back(json{{"path", args.structure_arg},
                          {"checksum", file_checksum(args.structure_arg)}});
  }

  const FitConfig cfg = args.hyper.to_fit_config(args.seed, exploratory);
  const FitResult res = fit(responses, structure, cfg);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  const auto names = factor_names(structure.n_factors());
  write_matrix_csv((out / "a.csv").string(), res.params.a, names);
  write_matrix_csv((out / "b.csv").string(), res.params.b, {"b"});
  write_matrix_csv((out / "sigma.csv").string(), res.params.sigma_theta,
                   names);
  write_matrix_csv((out / "gvem_a.csv").string(), res.gvem_params.a, names);
  write_matrix_csv((out / "gvem_b.csv").string(), res.gvem_params.b, {"b"});
  write_matrix_csv((out / "gvem_sigma.csv").string(),
                   res.gvem_params.sigma_theta, names);
  write_matrix_csv((out / "scores.csv").string(),
                   score_persons(responses, res.params), names);
  if (res.rotation) {
    write_matrix_csv((out / "rotated_a.csv").string(), res.rotation->loadings,
                     names);
    write_matrix_csv((out / "rotated_phi.csv").string(), res.rotation->phi,
                     names);
  }

  json meta{{"mode", exploratory ? "exploratory" : "confirmatory"},
            {"n_persons", responses.n_persons()},
            {"n_items", responses.n_items()},
            {"n_factors", structure.n_factors()},
            {"gvem",
             json{{"elbo", res.gvem_elbo},
                  {"iterations", res.gvem_iters},
                  {"converged", res.gvem_converged},
                  {"elbo_trace", res.gvem_elbo_trace}}},
            {"iw",
             json{{"chosen_lr", res.chosen_lr},
                  {"lr_grid", args.hyper.lr_grid},
                  {"lr_scores", res.lr_scores},
                  {"iterations", res.iw_iters},
                  {"converged", res.iw_converged}}},
            {"seconds",
             json{{"gvem", res.seconds_gvem}, {"iw", res.seconds_iw}}}};
  write_json(out / "fit.json", meta);

  json resolved = args.hyper.to_json();
  resolved["seed"] = args.seed;
  resolved["data"] = args.data_path;
  resolved["structure"] = args.structure_arg;
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_manifest(out, command_line, "fit", resolved, inputs, started, seconds);
  std::cout << "fit written to " << out.string() << "\n";
  return 0;
}

struct StudyArgs {
  std::string preset;
  std::string out_dir = "study_out";
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  int reps_override = 0;
  // Single-cell fallback when no preset or config cells are given.
  int n = 200, k = 2, j = 30;
  std::string kind = "between";
  std::string corr = "low";
  bool exploratory = false;
  int reps = 25;
  HyperOpts hyper;
};

int run_study(const StudyArgs& args, const ConfigFile& cfg_file,
              const std::string& command_line) {
  const std::string started = iso_utc_now();
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<StudyDesign> cells;
  if (!args.preset.empty()) {
    cells = preset_cells(args.preset);
  } else if (cfg_file.data.contains("cells")) {
    for (const auto& c : cfg_file.data.at("cells"))
      cells.push_back(design_from_json(c));
  } else {
    StudyDesign d;
    d.n_persons = args.n;
    d.n_factors = args.k;
    d.n_items = args.j;
    d.structure = parse_kind(args.kind);
    d.exploratory = args.exploratory;
    d.n_replications = args.reps;
    cells.push_back(apply_corr(d, args.corr));
  }
  if (args.reps_override > 0)
    for (auto& c : cells) c.n_replications = args.reps_override;

  const FitConfig fit_cfg = args.hyper.to_fit_config(args.seed, false);
  const int threads =
      args.threads > 0 ? args.threads : default_thread_count();
  const StudyResult result = run_study(cells, fit_cfg, args.seed, threads);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  write_text_file((out / "results.csv").string(), results_csv(result));
  write_text_file((out / "timings.csv").string(), timings_csv(result));
  summarize_study(result, out);

  json resolved = args.hyper.to_json();
  resolved["seed"] = args.seed;
  resolved["threads"] = threads;
  resolved["cells"] = json::array();
  for (const auto& c : cells) resolved["cells"].push_back(design_json(c));
  json inputs = json::array();
  if (!args.config_path.empty())
    inputs.push_back(json{{"path", args.config_path},
                          {"checksum", file_checksum(args.config_path)}});
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_manifest(out, command_line, "study", resolved, inputs, started,
                 seconds);
  std::cout << "study written to " << out.string() << "\n";
  return 0;
}

struct ElboArgs {
  std::string out_dir = "elbo_out";
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  int n = 200, k = 2, j = 30;
  std::string kind = "between";
  std::string corr = "low";
  int reps = 20;
  int outer = 10;
  std::vector<int> m_grid = {1, 5, 10, 50, 100};
};

int run_elbo(const ElboArgs& args, const std::string& command_line) {
  const std::string started = iso_utc_now();
  const auto t0 = std::chrono::steady_clock::now();

  StudyDesign d;
  d.n_persons = args.n;
  d.n_factors = args.k;
  d.n_items = args.j;
  d.structure = parse_kind(args.kind);
  d.n_replications = args.reps;
  d = apply_corr(d, args.corr);

  const int threads =
      args.threads > 0 ? args.threads : default_thread_count();
  const ElboExperimentResult result =
      elbo_experiment(d, args.m_grid, args.outer, args.seed, threads);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  write_text_file((out / "elbo.csv").string(), elbo_csv(result));

  // Deterministic per-grid means for quick inspection.
  json means = json::array();
  for (std::size_t gi = 0; gi < args.m_grid.size(); ++gi) {
    double acc = 0.0;
    for (const auto& row : result.rows) acc += row.iw_elbo[gi];
    means.push_back(json{{"m", args.m_grid[gi]},
                         {"mean_elbo", acc / result.rows.size()}});
  }
  double gvem_mean = 0.0;
  for (const auto& row : result.rows) gvem_mean += row.gvem_elbo;
  gvem_mean /= result.rows.size();
  write_json(out / "summary.json",
             json{{"design", design_json(d)},
                  {"outer", args.outer},
                  {"mean_elbo_gvem", gvem_mean},
                  {"reweighted", means}});

  json resolved{{"seed", args.seed}, {"threads", threads},
                {"outer", args.outer}, {"m_grid", args.m_grid},
                {"design", design_json(d)}};
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_manifest(out, command_line, "elbo", resolved, json::array(), started,
                 seconds);
  std::cout << "bound comparison written to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::string command_line;
  for (int i = 0; i < argc; ++i) {
    if (i) command_line += ' ';
    command_line += argv[i];
  }

  CLI::App app{
      "Two-phase variational estimation for multidimensional logistic item "
      "response models"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Estimate one dataset");
  fit_cmd->add_option("--data", fit_args.data_path,
                      "Response matrix CSV (persons x items, 0/1)")
      ->required();
  fit_cmd
      ->add_option("--structure", fit_args.structure_arg,
                   "Loading mask CSV, or exploratory:<factors>")
      ->required();
  fit_args.out_opt =
      fit_cmd->add_option("--out", fit_args.out_dir, "Output directory");
  fit_args.seed_opt = fit_cmd->add_option("--seed", fit_args.seed, "RNG seed");
  fit_cmd->add_option("--config", fit_args.config_path,
                      "JSON config file (flags override)");
  fit_args.hyper.attach(fit_cmd);

  StudyArgs study_args;
  CLI::App* study_cmd =
      app.add_subcommand("study", "Run a simulation grid");
  study_cmd->add_option("--preset", study_args.preset,
                        "Cell preset: quick, desk, desk-exploratory, k5, full");
  CLI::Option* study_out =
      study_cmd->add_option("--out", study_args.out_dir, "Output directory");
  CLI::Option* study_seed =
      study_cmd->add_option("--seed", study_args.seed, "RNG base seed");
  CLI::Option* study_threads = study_cmd->add_option(
      "--threads", study_args.threads, "Worker threads (0 = auto)");
  study_cmd->add_option("--reps", study_args.reps_override,
                        "Override replications in every cell");
  study_cmd->add_option("--config", study_args.config_path,
                        "JSON config file; may define a 'cells' array");
  study_cmd->add_option("--n", study_args.n, "Single cell: persons");
  study_cmd->add_option("--factors", study_args.k, "Single cell: factors");
  study_cmd->add_option("--items", study_args.j, "Single cell: items");
  study_cmd->add_option("--kind", study_args.kind,
                        "Single cell: between or within");
  study_cmd->add_option("--corr", study_args.corr,
                        "Single cell: low or high");
  study_cmd->add_flag("--exploratory", study_args.exploratory,
                      "Single cell: exploratory mode");
  study_cmd->add_option("--cell-reps", study_args.reps,
                        "Single cell: replications");
  study_args.hyper.attach(study_cmd);

  ElboArgs elbo_args;
  CLI::App* elbo_cmd = app.add_subcommand(
      "elbo", "Compare the two bounds over inner sample counts");
  CLI::Option* elbo_out =
      elbo_cmd->add_option("--out", elbo_args.out_dir, "Output directory");
  CLI::Option* elbo_seed =
      elbo_cmd->add_option("--seed", elbo_args.seed, "RNG base seed");
  CLI::Option* elbo_threads = elbo_cmd->add_option(
      "--threads", elbo_args.threads, "Worker threads (0 = auto)");
  elbo_cmd->add_option("--config", elbo_args.config_path, "JSON config file");
  elbo_cmd->add_option("--n", elbo_args.n, "Persons");
  elbo_cmd->add_option("--factors", elbo_args.k, "Factors");
  elbo_cmd->add_option("--items", elbo_args.j, "Items");
  elbo_cmd->add_option("--kind", elbo_args.kind, "between or within");
  elbo_cmd->add_option("--corr", elbo_args.corr, "low or high");
  elbo_cmd->add_option("--reps", elbo_args.reps, "Replications");
  elbo_cmd->add_option("--outer", elbo_args.outer, "Outer replicates");
  elbo_cmd->add_option("--m-grid", elbo_args.m_grid,
                       "Inner sample counts to compare")
      ->expected(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) {
      const ConfigFile cfg = ConfigFile::load(fit_args.config_path);
      fit_args.hyper.merge(cfg);
      cfg.fill("seed", fit_args.seed, fit_args.seed_opt);
      cfg.fill("out", fit_args.out_dir, fit_args.out_opt);
      return run_fit(fit_args, command_line);
    }
    if (study_cmd->parsed()) {
      const ConfigFile cfg = ConfigFile::load(study_args.config_path);
      study_args.hyper.merge(cfg);
      cfg.fill("seed", study_args.seed, study_seed);
      cfg.fill("out", study_args.out_dir, study_out);
      cfg.fill("threads", study_args.threads, study_threads);
      return run_study(study_args, cfg, command_line);
    }
    const ConfigFile cfg = ConfigFile::load(elbo_args.config_path);
    cfg.fill("seed", elbo_args.seed, elbo_seed);
    cfg.fill("out", elbo_args.out_dir, elbo_out);
    cfg.fill("threads", elbo_args.threads, elbo_threads);
    return run_elbo(elbo_args, command_line);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DomainError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitData;
  } catch (const DesignError& e) {
    std::cerr << "design error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "estimation failed: " << e.what() << "\n";
    return kExitNumeric;
  }
}
