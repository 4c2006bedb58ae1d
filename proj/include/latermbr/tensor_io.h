#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "latermbr/approx.h"
#include "latermbr/policy.h"

namespace latermbr {

// "tensor-dump v1": a text checkpoint of named matrices. Vectors are n x 1,
// scalars 1 x 1; values are written with enough digits to round-trip.
struct NamedTensor {
  std::string name;
  Eigen::MatrixXd value;
};

void write_tensors(std::ostream& out, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensors(std::istream& in);

void save_tensor_file(const std::string& path,
                      const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensor_file(const std::string& path);

void save_approx_checkpoint(const std::string& path,
                            const ApproxParams& params);
ApproxParams load_approx_checkpoint(const std::string& path);

void save_policy_checkpoint(const std::string& path,
                            const PolicyParams& params);
PolicyParams load_policy_checkpoint(const std::string& path);

}  // namespace latermbr
