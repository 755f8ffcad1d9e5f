#include "lmr/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "lmr/errors.hpp"

namespace lmr {
namespace io {

namespace {

using Json = nlohmann::ordered_json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse number '" + s + "' in " + context);
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json vector_to_json(const VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VectorXd vector_from_json(const Json& a) {
  VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

Json matrix_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

MatrixXd matrix_from_json(const Json& rows, Eigen::Index cols_hint = 0) {
  const auto nrows = static_cast<Eigen::Index>(rows.size());
  if (nrows == 0) return MatrixXd(0, cols_hint);
  MatrixXd m(nrows, static_cast<Eigen::Index>(rows[0].size()));
  for (Eigen::Index i = 0; i < nrows; ++i)
    m.row(i) = vector_from_json(rows[static_cast<std::size_t>(i)]).transpose();
  return m;
}

}  // namespace

ClusteredDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty dataset file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "cluster_id" || header[1] != "y")
    throw ValidationError("dataset header must start with cluster_id,y,x_1,... got: " + line);

  Eigen::Index p = 0, q = 0;
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c] == "x_" + std::to_string(p + 1) && q == 0) {
      ++p;
    } else if (header[c] == "w_" + std::to_string(q + 1)) {
      ++q;
    } else {
      throw ValidationError("unexpected dataset column '" + header[c] +
                            "' (expected x_1..x_p then w_1..w_q)");
    }
  }
  if (p == 0) throw ValidationError("dataset has no covariate columns x_1..x_p");

  struct Rows {
    std::vector<double> y;
    std::vector<VectorXd> x;
    VectorXd w;
    bool has_w = false;
  };
  std::vector<std::string> order;
  std::map<std::string, Rows> by_cluster;

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != 2 + p + q)
      throw ValidationError("line " + std::to_string(lineno) + ": expected " +
                            std::to_string(2 + p + q) + " fields, got " +
                            std::to_string(fields.size()));
    const std::string& id = fields[0];
    const std::string ctx = "line " + std::to_string(lineno);
    if (by_cluster.find(id) == by_cluster.end()) order.push_back(id);
    Rows& rows = by_cluster[id];
    rows.y.push_back(parse_double(fields[1], ctx));
    VectorXd x(p);
    for (Eigen::Index c = 0; c < p; ++c) x[c] = parse_double(fields[2 + c], ctx);
    rows.x.push_back(std::move(x));
    if (q > 0) {
      VectorXd w(q);
      for (Eigen::Index c = 0; c < q; ++c) w[c] = parse_double(fields[2 + p + c], ctx);
      if (!rows.has_w) {
        rows.w = w;
        rows.has_w = true;
      } else {
        for (Eigen::Index c = 0; c < q; ++c)
          if (rows.w[c] != w[c])
            throw ValidationError("cluster '" + id + "': column w_" + std::to_string(c + 1) +
                                  " is not constant within the cluster");
      }
    }
  }
  if (order.empty()) throw ValidationError("dataset has no data rows: " + path);

  ClusteredDataset dataset;
  dataset.p = p;
  dataset.q = q;
  for (const auto& id : order) {
    const Rows& rows = by_cluster[id];
    Cluster cluster;
    cluster.id = id;
    const auto n = static_cast<Eigen::Index>(rows.y.size());
    cluster.y.resize(n);
    cluster.X.resize(n, p);
    for (Eigen::Index j = 0; j < n; ++j) {
      cluster.y[j] = rows.y[static_cast<std::size_t>(j)];
      cluster.X.row(j) = rows.x[static_cast<std::size_t>(j)].transpose();
    }
    if (rows.has_w) cluster.w = rows.w;
    dataset.clusters.push_back(std::move(cluster));
  }
  return validate_dataset(std::move(dataset));
}

void write_dataset_csv(const ClusteredDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write dataset file: " + path);
  out << "cluster_id,y";
  for (Eigen::Index c = 0; c < dataset.p; ++c) out << ",x_" << (c + 1);
  for (Eigen::Index c = 0; c < dataset.q; ++c) out << ",w_" << (c + 1);
  out << "\n";
  for (const auto& cluster : dataset.clusters) {
    for (Eigen::Index j = 0; j < cluster.size(); ++j) {
      out << cluster.id << "," << format_double(cluster.y[j]);
      for (Eigen::Index c = 0; c < dataset.p; ++c) out << "," << format_double(cluster.X(j, c));
      for (Eigen::Index c = 0; c < dataset.q; ++c) out << "," << format_double(cluster.w[c]);
      out << "\n";
    }
  }
}

std::string artifact_to_json(const FitResult& fit, const ConfigEcho& echo) {
  Json j;
  j["format_version"] = 1;
  j["family"] = fit.family == ExpertFamily::GaussianLinear ? "gaussian" : "poisson";
  j["K"] = fit.K;
  j["p"] = fit.p;
  j["q"] = fit.q;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["ridged"] = fit.ridged;

  Json experts = Json::array();
  for (const auto& e : fit.experts) {
    Json je;
    je["beta"] = vector_to_json(e.beta);
    if (e.family == ExpertFamily::GaussianLinear) je["sigma2"] = e.sigma2;
    experts.push_back(std::move(je));
  }
  j["experts"] = std::move(experts);

  Json mixing;
  if (fit.mixing.kind == MixingModel::Kind::Static) {
    mixing["kind"] = "static";
    mixing["alpha"] = vector_to_json(fit.mixing.alpha);
  } else {
    mixing["kind"] = "cd";
    mixing["gamma"] = matrix_to_json(fit.mixing.gamma);
  }
  j["mixing"] = std::move(mixing);

  j["cluster_ids"] = fit.cluster_ids;
  j["pi_hat"] = matrix_to_json(fit.summaries.pi_hat);
  j["log_ml"] = vector_to_json(fit.log_ml);
  j["aic"] = fit.aic;
  j["bic"] = fit.bic;

  Json config;
  config["seed"] = echo.seed;
  config["gibbs_samples"] = echo.gibbs_samples;
  config["burn_in"] = echo.burn_in;
  config["ml_draws"] = echo.ml_draws;
  config["starts"] = echo.starts;
  config["criterion"] = echo.criterion;
  config["command"] = echo.command;
  config["seed_streams"] = "all randomness derives from seed via named sub-streams "
                           "(start-s, estep-t, final-estep, ml, init-s, cluster-id)";
  j["config"] = std::move(config);
  return j.dump(2) + "\n";
}

void write_artifact(const FitResult& fit, const ConfigEcho& echo, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write artifact file: " + path);
  out << artifact_to_json(fit, echo);
}

FitResult read_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open artifact file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError("cannot parse artifact JSON: " + std::string(e.what()));
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
    throw ValidationError("unsupported artifact format_version");

  FitResult fit;
  fit.family = j["family"].get<std::string>() == "poisson" ? ExpertFamily::PoissonLog
                                                           : ExpertFamily::GaussianLinear;
  fit.K = j["K"].get<int>();
  fit.p = j["p"].get<Eigen::Index>();
  fit.q = j["q"].get<Eigen::Index>();
  fit.converged = j["converged"].get<bool>();
  fit.iterations = j["iterations"].get<int>();
  fit.ridged = j.value("ridged", false);

  for (const auto& je : j["experts"]) {
    ExpertParams e;
    e.family = fit.family;
    e.beta = vector_from_json(je["beta"]);
    if (je.contains("sigma2")) e.sigma2 = je["sigma2"].get<double>();
    fit.experts.push_back(std::move(e));
  }

  const auto& mixing = j["mixing"];
  if (mixing["kind"].get<std::string>() == "static") {
    fit.mixing.kind = MixingModel::Kind::Static;
    fit.mixing.alpha = vector_from_json(mixing["alpha"]);
  } else {
    fit.mixing.kind = MixingModel::Kind::CovariateDependent;
    fit.mixing.gamma = matrix_from_json(mixing["gamma"]);
  }

  fit.cluster_ids = j["cluster_ids"].get<std::vector<std::string>>();
  fit.summaries.pi_hat = matrix_from_json(j["pi_hat"], fit.K);
  fit.log_ml = vector_from_json(j["log_ml"]);
  fit.aic = j["aic"].get<double>();
  fit.bic = j["bic"].get<double>();
  return fit;
}

void write_mise_csv(const std::vector<simulate::MiseRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write MISE file: " + path);
  out << "replication,method,scenario,x,cluster_id,n_i,mise\n";
  for (const auto& r : rows) {
    out << r.replication << "," << r.method << "," << r.scenario << "," << format_double(r.x)
        << "," << r.cluster_id << "," << r.n_i << "," << format_double(r.mise) << "\n";
  }
}

}  // namespace io
}  // namespace lmr
