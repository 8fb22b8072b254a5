#pragma once

#include <string>
#include <vector>

#include "csl/matcore.hpp"

namespace csl {

// {"layout": [["R",2],["A",2]], "matrix": [[[re,im],...],...]} or
// {"layout": ..., "vector": [[re,im],...]}.
SampledState parse_state_json(const std::string& text);
SampledState read_state_file(const std::string& path);
std::string state_to_json(const DensityOperator& rho);
std::string state_to_json(const PureStateVector& psi);

// {"input_dim": d, "output_dim": k, "kraus": [matrix, ...]} with matrices in
// the same [[[re,im],...],...] encoding; each Kraus operator is k x d.
struct KrausData {
  int input_dim = 0;
  int output_dim = 0;
  std::vector<Matrix> kraus;
};
KrausData parse_kraus_json(const std::string& text);
KrausData read_kraus_file(const std::string& path);

std::string read_text_file(const std::string& path);

}  // namespace csl
