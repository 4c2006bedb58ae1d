#include "latermbr/tensor_io.h"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "latermbr/io_util.h"
#include "latermbr/types.h"

namespace latermbr {

void write_tensors(std::ostream& out, const std::vector<NamedTensor>& tensors) {
  out << "tensor-dump v1\n";
  out << "tensors " << tensors.size() << "\n";
  for (const NamedTensor& t : tensors) {
    out << "tensor " << t.name << " " << t.value.rows() << " "
        << t.value.cols() << "\n";
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
        if (c > 0) out << " ";
        out << fmt_double(t.value(r, c));
      }
      out << "\n";
    }
  }
  out << "end\n";
}

namespace {

class Lines {
 public:
  explicit Lines(std::istream& in) : in_(in) {}

  std::string require(const char* what) {
    std::string line;
    if (!std::getline(in_, line)) {
      throw ParseError(std::string("unexpected end of file, expected ") + what,
                       line_no_);
    }
    ++line_no_;
    return line;
  }

  size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  size_t line_no_ = 0;
};

}  // namespace

std::vector<NamedTensor> read_tensors(std::istream& in) {
  Lines lines(in);
  if (lines.require("header") != "tensor-dump v1") {
    throw ParseError("not a tensor-dump v1 file", lines.line_no());
  }
  std::istringstream count_line(lines.require("tensor count"));
  std::string key;
  size_t count = 0;
  if (!(count_line >> key >> count) || key != "tensors") {
    throw ParseError("malformed tensor count line", lines.line_no());
  }

  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (size_t k = 0; k < count; ++k) {
    std::istringstream header(lines.require("tensor header"));
    NamedTensor t;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    if (!(header >> key >> t.name >> rows >> cols) || key != "tensor" ||
        rows < 0 || cols < 0) {
      throw ParseError("malformed tensor header", lines.line_no());
    }
    t.value.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      std::istringstream row(lines.require("tensor row"));
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!(row >> t.value(r, c))) {
          throw ParseError("short tensor row", lines.line_no());
        }
      }
      double extra;
      if (row >> extra) {
        throw ParseError("long tensor row", lines.line_no());
      }
    }
    tensors.push_back(std::move(t));
  }
  if (lines.require("end marker") != "end") {
    throw ParseError("missing end marker", lines.line_no());
  }
  return tensors;
}

void save_tensor_file(const std::string& path,
                      const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path);
  if (!out) {
    throw ParseError("cannot open checkpoint for writing: " + path, 0);
  }
  write_tensors(out, tensors);
}

std::vector<NamedTensor> load_tensor_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open checkpoint: " + path, 0);
  }
  return read_tensors(in);
}

namespace {

Eigen::MatrixXd scalar(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return m;
}

class TensorMap {
 public:
  explicit TensorMap(std::vector<NamedTensor> tensors) {
    for (NamedTensor& t : tensors) {
      if (!map_.emplace(t.name, std::move(t.value)).second) {
        throw ParseError("duplicate tensor: " + t.name, 0);
      }
    }
  }

  const Eigen::MatrixXd& get(const std::string& name, Eigen::Index rows,
                             Eigen::Index cols) const {
    auto it = map_.find(name);
    if (it == map_.end()) {
      throw ParseError("missing tensor: " + name, 0);
    }
    if (it->second.rows() != rows || it->second.cols() != cols) {
      throw ParseError("tensor " + name + " has wrong shape", 0);
    }
    return it->second;
  }

  double get_scalar(const std::string& name) const {
    return get(name, 1, 1)(0, 0);
  }

  int get_int(const std::string& name) const {
    const double v = get_scalar(name);
    const double rounded = std::round(v);
    if (v != rounded) {
      throw ParseError("tensor " + name + " is not an integer", 0);
    }
    return static_cast<int>(rounded);
  }

 private:
  std::map<std::string, Eigen::MatrixXd> map_;
};

}  // namespace

void save_approx_checkpoint(const std::string& path,
                            const ApproxParams& params) {
  params.validate();
  save_tensor_file(path, {
      {"vocab", scalar(params.vocab)},
      {"hidden", scalar(params.hidden)},
      {"w_x", params.w_x},
      {"w_h", params.w_h},
      {"bias", params.bias},
      {"v", params.v},
      {"b", scalar(params.b)},
  });
}

ApproxParams load_approx_checkpoint(const std::string& path) {
  const TensorMap map(load_tensor_file(path));
  ApproxParams p;
  p.vocab = map.get_int("vocab");
  p.hidden = map.get_int("hidden");
  if (p.vocab < 1 || p.hidden < 1) {
    throw ParseError("approx checkpoint with bad dimensions", 0);
  }
  p.w_x = map.get("w_x", 4 * p.hidden, p.vocab);
  p.w_h = map.get("w_h", 4 * p.hidden, p.hidden);
  p.bias = map.get("bias", 4 * p.hidden, 1);
  p.v = map.get("v", p.hidden, 1);
  p.b = map.get_scalar("b");
  p.validate();
  return p;
}

void save_policy_checkpoint(const std::string& path,
                            const PolicyParams& params) {
  params.validate();
  save_tensor_file(path, {
      {"input_dim", scalar(params.input_dim)},
      {"w1", params.w1},
      {"b1", params.b1},
      {"w_mu", params.w_mu},
      {"b_mu", params.b_mu},
      {"w_sigma", params.w_sigma},
      {"b_sigma", params.b_sigma},
      {"bw1", params.bw1},
      {"bb1", params.bb1},
      {"bw2", params.bw2.transpose()},
      {"bb2", scalar(params.bb2)},
  });
}

PolicyParams load_policy_checkpoint(const std::string& path) {
  const TensorMap map(load_tensor_file(path));
  const int input_dim = map.get_int("input_dim");
  if (input_dim < 1) {
    throw ParseError("policy checkpoint with bad input_dim", 0);
  }
  PolicyParams p = PolicyParams::zeros(input_dim);
  p.w1 = map.get("w1", kPolicyHidden, input_dim);
  p.b1 = map.get("b1", kPolicyHidden, 1);
  p.w_mu = map.get("w_mu", kNumActions, kPolicyHidden);
  p.b_mu = map.get("b_mu", kNumActions, 1);
  p.w_sigma = map.get("w_sigma", kNumActions, kPolicyHidden);
  p.b_sigma = map.get("b_sigma", kNumActions, 1);
  p.bw1 = map.get("bw1", kPolicyHidden, input_dim);
  p.bb1 = map.get("bb1", kPolicyHidden, 1);
  p.bw2 = map.get("bw2", kPolicyHidden, 1).transpose();
  p.bb2 = map.get_scalar("bb2");
  p.validate();
  return p;
}

}  // namespace latermbr
