#include "lmr/types.hpp"

#include <cmath>

#include "lmr/errors.hpp"

namespace lmr {

VectorXd MixingModel::alpha_for(const VectorXd& w) const {
  if (kind == Kind::Static) return alpha;
  if (w.size() != gamma.cols())
    throw ValidationError("covariate-dependent mixing: cluster covariate length " +
                          std::to_string(w.size()) + " does not match gamma columns " +
                          std::to_string(gamma.cols()));
  return (gamma * w).array().exp();
}

Eigen::Index FitResult::cluster_index(const std::string& id) const {
  for (std::size_t i = 0; i < cluster_ids.size(); ++i)
    if (cluster_ids[i] == id) return static_cast<Eigen::Index>(i);
  throw ValidationError("unknown cluster id: " + id);
}

ClusteredDataset validate_dataset(ClusteredDataset raw) {
  if (raw.clusters.empty()) throw ValidationError("dataset has no clusters");

  // Infer p from the first cluster with observations, q from the first with
  // cluster covariates.
  Eigen::Index p = raw.p;
  Eigen::Index q = raw.q;
  for (const auto& c : raw.clusters) {
    if (p == 0 && c.X.rows() > 0) p = c.X.cols();
    if (q == 0 && c.w.size() > 0) q = c.w.size();
  }

  for (const auto& c : raw.clusters) {
    if (c.X.rows() != c.y.size())
      throw ValidationError("cluster '" + c.id + "': X has " + std::to_string(c.X.rows()) +
                            " rows but y has " + std::to_string(c.y.size()) + " entries");
    if (c.size() > 0 && c.X.cols() != p)
      throw ValidationError("cluster '" + c.id + "': covariate rows have length " +
                            std::to_string(c.X.cols()) + ", expected " + std::to_string(p));
    if (c.w.size() != 0 && c.w.size() != q)
      throw ValidationError("cluster '" + c.id + "': cluster covariates have length " +
                            std::to_string(c.w.size()) + ", expected " + std::to_string(q));
    if (q > 0 && c.w.size() == 0 && c.size() > 0)
      throw ValidationError("cluster '" + c.id + "': missing cluster covariates (q=" +
                            std::to_string(q) + ")");
    if (!c.y.allFinite() || !c.X.allFinite() || !c.w.allFinite())
      throw ValidationError("cluster '" + c.id + "': non-finite value in data");
  }

  raw.p = p;
  raw.q = q;
  return raw;
}

}  // namespace lmr
