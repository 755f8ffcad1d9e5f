// Command-line front end: fit / predict / simulate / evaluate over CSV and
// JSON files, fully reproducible from the echoed configuration.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lmr/baselines.hpp"
#include "lmr/errors.hpp"
#include "lmr/io.hpp"
#include "lmr/mcem.hpp"
#include "lmr/predict.hpp"
#include "lmr/select.hpp"
#include "lmr/simulate.hpp"

namespace {

using namespace lmr;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitNonConvergence = 4;

std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

struct CommonFitOptions {
  int k = 0;
  int k_max = 0;
  std::string criterion = "bic";
  std::string mixing = "static";
  std::string family = "gaussian";
  std::uint64_t seed = 0;
  int gibbs_l = 500;
  int burn_in = 100;
  int ml_draws = 10000;
  int starts = 5;
  int max_iter = 500;
  int threads = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--k", k, "fixed number of components (K >= 1)");
    cmd->add_option("--k-max", k_max, "sweep K = 1..k-max and select by the criterion");
    cmd->add_option("--criterion", criterion, "selection criterion: aic|bic")
        ->check(CLI::IsMember({"aic", "bic"}));
    cmd->add_option("--mixing", mixing, "mixing model: static|cd")
        ->check(CLI::IsMember({"static", "cd"}));
    cmd->add_option("--family", family, "expert family: gaussian|poisson")
        ->check(CLI::IsMember({"gaussian", "poisson"}));
    cmd->add_option("--seed", seed, "master RNG seed");
    cmd->add_option("--gibbs-l", gibbs_l, "retained Gibbs sweeps per E-step");
    cmd->add_option("--burn-in", burn_in, "discarded Gibbs sweeps");
    cmd->add_option("--ml-draws", ml_draws, "Monte Carlo draws for the marginal likelihood");
    cmd->add_option("--starts", starts, "multi-start count");
    cmd->add_option("--max-iter", max_iter, "EM iteration cap");
    cmd->add_option("--threads", threads, "worker threads (0 = logical cores)");
  }

  McemConfig mcem() const {
    McemConfig c;
    c.gibbs_samples = gibbs_l;
    c.burn_in = burn_in;
    c.starts = starts;
    c.max_iter = max_iter;
    c.seed = seed;
    c.threads = threads;
    return c;
  }
  ExpertFamily family_enum() const {
    return family == "poisson" ? ExpertFamily::PoissonLog : ExpertFamily::GaussianLinear;
  }
  MixingModel::Kind kind_enum() const {
    return mixing == "cd" ? MixingModel::Kind::CovariateDependent : MixingModel::Kind::Static;
  }
  select::Criterion criterion_enum() const {
    return criterion == "aic" ? select::Criterion::AIC : select::Criterion::BIC;
  }
};

std::string echo_command(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

int run_fit(const std::string& data_path, const std::string& out_path,
            const CommonFitOptions& opt, const std::string& command) {
  ClusteredDataset dataset = io::read_dataset_csv(data_path);

  FitResult fit;
  if (opt.k_max > 0) {
    select::SelectConfig sel;
    sel.k_range.clear();
    for (int k = 1; k <= opt.k_max; ++k) sel.k_range.push_back(k);
    sel.criterion = opt.criterion_enum();
    sel.ml_draws = opt.ml_draws;
    auto result = select::select_k(dataset, sel, opt.family_enum(), opt.kind_enum(), opt.mcem());
    fit = std::move(result.best);
    std::cout << "selected K = " << result.selected_K << " by " << opt.criterion << "\n";
    for (const auto& row : result.table) {
      if (row.ok)
        std::printf("  K=%d  AIC=%.4f  BIC=%.4f\n", row.K, row.aic, row.bic);
      else
        std::printf("  K=%d  failed: %s\n", row.K, row.error.c_str());
    }
  } else {
    const int k = opt.k > 0 ? opt.k : 2;
    fit = k == 1 ? select::fit_single_expert(dataset, opt.family_enum())
                 : mcem::fit(dataset, k, opt.family_enum(), opt.kind_enum(), opt.mcem(),
                             std::nullopt, opt.ml_draws);
  }

  io::ConfigEcho echo;
  echo.seed = opt.seed;
  echo.gibbs_samples = opt.gibbs_l;
  echo.burn_in = opt.burn_in;
  echo.ml_draws = opt.ml_draws;
  echo.starts = opt.starts;
  echo.criterion = opt.criterion;
  echo.command = command;
  io::write_artifact(fit, echo, out_path);

  std::printf("K=%d  converged=%s  iterations=%d  parameters=%d\n", fit.K,
              fit.converged ? "yes" : "no", fit.iterations, select::parameter_count(fit));
  std::printf("log-ml=%.6f  AIC=%.6f  BIC=%.6f\n", fit.total_log_ml(), fit.aic, fit.bic);
  for (int k = 0; k < fit.K; ++k) {
    std::ostringstream b;
    b << fit.experts[k].beta.transpose();
    if (fit.family == ExpertFamily::GaussianLinear)
      std::printf("expert %d: beta=[%s]  sigma2=%.6f\n", k + 1, b.str().c_str(),
                  fit.experts[k].sigma2);
    else
      std::printf("expert %d: beta=[%s]\n", k + 1, b.str().c_str());
  }
  std::printf("artifact written to %s\n", out_path.c_str());
  return 0;
}

int run_predict(const std::string& artifact_path, const std::string& out_path,
                const std::string& x_str, const std::string& w_str, double grid_min,
                double grid_max, int grid_points, bool have_grid) {
  FitResult fit = io::read_artifact(artifact_path);

  const std::vector<double> xs = parse_number_list(x_str);
  if (static_cast<Eigen::Index>(xs.size()) != fit.p)
    throw ValidationError("--x must supply " + std::to_string(fit.p) + " values, got " +
                          std::to_string(xs.size()));
  VectorXd x = Eigen::Map<const VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));

  VectorXd w;
  const VectorXd* wptr = nullptr;
  if (!w_str.empty()) {
    const std::vector<double> ws = parse_number_list(w_str);
    w = Eigen::Map<const VectorXd>(ws.data(), static_cast<Eigen::Index>(ws.size()));
    wptr = &w;
  }
  if (fit.mixing.kind == MixingModel::Kind::CovariateDependent && wptr == nullptr)
    throw ValidationError("covariate-dependent mixing requires --w");

  VectorXd grid = have_grid ? VectorXd(VectorXd::LinSpaced(grid_points, grid_min, grid_max))
                            : predict::default_grid(fit, x, grid_points);

  std::ofstream out(out_path);
  if (!out) throw ValidationError("cannot write density file: " + out_path);
  out << "cluster_id,t,density\n";
  char buf[64];
  auto emit = [&](const std::string& id, const VectorXd& dens) {
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g", grid[g], dens[g]);
      out << id << "," << buf << "\n";
    }
  };
  for (const auto& id : fit.cluster_ids)
    emit(id, predict::cluster_density(fit, id, x, grid));
  emit("MARGINAL", predict::marginal_density(fit, x, grid, wptr));
  std::printf("densities for %zu clusters + MARGINAL written to %s\n", fit.cluster_ids.size(),
              out_path.c_str());
  return 0;
}

simulate::ScenarioSpec make_spec(const std::string& scenario, int m, int n, bool n_index, int r,
                                 std::uint64_t seed, const std::string& x_eval) {
  simulate::ScenarioSpec spec;
  spec.scenario = simulate::scenario_from_string(scenario);
  spec.m = m;
  spec.n = n;
  spec.n_equals_index = n_index || spec.scenario == simulate::Scenario::III;
  spec.replications = r;
  spec.seed = seed;
  if (!x_eval.empty()) spec.x_eval = parse_number_list(x_eval);
  return spec;
}

int run_simulate(const simulate::ScenarioSpec& spec, const std::string& out_prefix) {
  for (int rep = 0; rep < spec.replications; ++rep) {
    auto [dataset, truth] = simulate::generate(spec, rep);
    const std::string path = out_prefix + "_rep" + std::to_string(rep) + ".csv";
    io::write_dataset_csv(dataset, path);
    std::printf("replication %d: %td clusters, %td observations -> %s\n", rep,
                dataset.num_clusters(), dataset.num_obs(), path.c_str());
  }
  return 0;
}

int run_evaluate(const simulate::ScenarioSpec& spec, const std::string& methods_str,
                 const std::string& out_path, const CommonFitOptions& opt) {
  std::vector<simulate::Method> methods;
  std::stringstream ss(methods_str);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) methods.push_back(simulate::method_from_string(item));
  if (methods.empty()) throw ValidationError("--methods must name at least one method");

  simulate::ExperimentConfig config;
  config.k_range.clear();
  const int k_max = opt.k_max > 0 ? opt.k_max : 3;
  for (int k = 1; k <= k_max; ++k) config.k_range.push_back(k);
  config.criterion = opt.criterion_enum();
  config.mcem = opt.mcem();
  config.ml_draws = opt.ml_draws;

  auto result = simulate::run_experiment(spec, methods, config);
  io::write_mise_csv(result.rows, out_path);
  std::printf("%zu MISE rows written to %s\n", result.rows.size(), out_path.c_str());
  if (!result.failures.empty()) {
    std::printf("%zu method runs failed and were excluded:\n", result.failures.size());
    for (const auto& f : result.failures) std::printf("  %s\n", f.c_str());
  }
  return 0;
}

int fail(int code, const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  j["code"] = code;
  std::cerr << j.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent mixture regression for clustered data"};
  app.require_subcommand(1);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit the latent mixture model to a dataset CSV");
  std::string data_path, out_path = "fit.json";
  CommonFitOptions fit_opt;
  fit_cmd->add_option("--data", data_path, "input dataset CSV")->required();
  fit_cmd->add_option("--out", out_path, "output fit artifact (JSON)");
  fit_opt.add_to(fit_cmd);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "evaluate fitted densities on a grid");
  std::string artifact_path, density_out = "density.csv", x_str, w_str;
  double grid_min = 0.0, grid_max = 0.0;
  int grid_points = 512;
  predict_cmd->add_option("--artifact", artifact_path, "fit artifact JSON")->required();
  predict_cmd->add_option("--out", density_out, "output density CSV");
  predict_cmd->add_option("--x", x_str, "covariate vector, comma separated")->required();
  predict_cmd->add_option("--w", w_str, "cluster covariates for the marginal density (cd mixing)");
  auto* gmin = predict_cmd->add_option("--grid-min", grid_min, "grid lower bound");
  auto* gmax = predict_cmd->add_option("--grid-max", grid_max, "grid upper bound");
  predict_cmd->add_option("--grid-points", grid_points, "number of grid points");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "generate scenario datasets");
  std::string scenario = "I", out_prefix = "sim";
  int sim_m = 50, sim_n = 30, sim_r = 1;
  bool n_index = false;
  std::uint64_t sim_seed = 0;
  std::string x_eval;
  sim_cmd->add_option("--scenario", scenario, "scenario: I|II|III")->required();
  sim_cmd->add_option("--m", sim_m, "number of clusters");
  sim_cmd->add_option("--n", sim_n, "within-cluster sample size");
  sim_cmd->add_flag("--n-index", n_index, "use n_i = i instead of constant n");
  sim_cmd->add_option("--r", sim_r, "number of replications");
  sim_cmd->add_option("--seed", sim_seed, "master RNG seed");
  sim_cmd->add_option("--out", out_prefix, "output file prefix");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "end-to-end MISE experiment");
  std::string methods_str = "lmr,gm", mise_out = "mise.csv";
  CommonFitOptions eval_opt;
  eval_cmd->add_option("--scenario", scenario, "scenario: I|II|III")->required();
  eval_cmd->add_option("--m", sim_m, "number of clusters");
  eval_cmd->add_option("--n", sim_n, "within-cluster sample size");
  eval_cmd->add_flag("--n-index", n_index, "use n_i = i instead of constant n");
  eval_cmd->add_option("--r", sim_r, "number of replications");
  eval_cmd->add_option("--methods", methods_str, "comma list of lmr,lmr-cd,gm,lm,ri");
  eval_cmd->add_option("--x-eval", x_eval, "evaluation covariate values, comma separated");
  eval_cmd->add_option("--out", mise_out, "output MISE CSV");
  eval_opt.add_to(eval_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    return fail(kExitValidation, "argument_error", e.what());
  }

  try {
    if (fit_cmd->parsed()) return run_fit(data_path, out_path, fit_opt, echo_command(argc, argv));
    if (predict_cmd->parsed()) {
      const bool have_grid = gmin->count() > 0 && gmax->count() > 0;
      return run_predict(artifact_path, density_out, x_str, w_str, grid_min, grid_max,
                         grid_points, have_grid);
    }
    if (sim_cmd->parsed())
      return run_simulate(make_spec(scenario, sim_m, sim_n, n_index, sim_r, sim_seed, x_eval),
                          out_prefix);
    if (eval_cmd->parsed())
      return run_evaluate(make_spec(scenario, sim_m, sim_n, n_index, sim_r, eval_opt.seed, x_eval),
                          methods_str, mise_out, eval_opt);
  } catch (const ValidationError& e) {
    return fail(kExitValidation, "validation_error", e.what());
  } catch (const NumericalError& e) {
    return fail(kExitNumerical, "numerical_error", e.what());
  } catch (const NonConvergenceError& e) {
    return fail(kExitNonConvergence, "non_convergence", e.what());
  } catch (const std::exception& e) {
    return fail(kExitNumerical, "error", e.what());
  }
  return 0;
}
