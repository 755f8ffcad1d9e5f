#ifndef LMR_IO_HPP
#define LMR_IO_HPP

#include <string>
#include <vector>

#include "lmr/simulate.hpp"
#include "lmr/types.hpp"

namespace lmr {
namespace io {

// Input CSV schema: cluster_id, y, x_1..x_p [, w_1..w_q]. Cluster-level
// columns must be constant within a cluster.
ClusteredDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const ClusteredDataset& dataset, const std::string& path);

// Fit artifact (JSON, schema-versioned with "format_version"). echo holds the
// run configuration the CLI writes back for reproducibility.
struct ConfigEcho {
  std::uint64_t seed = 0;
  int gibbs_samples = 0;
  int burn_in = 0;
  int ml_draws = 0;
  int starts = 0;
  std::string criterion;
  std::string command;
};

std::string artifact_to_json(const FitResult& fit, const ConfigEcho& echo);
void write_artifact(const FitResult& fit, const ConfigEcho& echo, const std::string& path);
FitResult read_artifact(const std::string& path);

void write_mise_csv(const std::vector<simulate::MiseRow>& rows, const std::string& path);

}  // namespace io
}  // namespace lmr

#endif
