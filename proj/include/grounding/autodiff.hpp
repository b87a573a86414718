#ifndef GROUNDING_AUTODIFF_HPP
#define GROUNDING_AUTODIFF_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace grounding::ad {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Named parameter tensors with gradient and Adam moment buffers.
class ParamStore {
 public:
  struct Tensor {
    std::string name;
    Mat value;
    Mat grad;
    Mat m;
    Mat v;
  };

  int add(const std::string& name, long rows, long cols);
  int find(const std::string& name) const;  // -1 if absent

  Tensor& at(int id) { return tensors_[static_cast<size_t>(id)]; }
  const Tensor& at(int id) const { return tensors_[static_cast<size_t>(id)]; }
  size_t size() const { return tensors_.size(); }

  void zero_grad();
  // One Adam update over all tensors from their accumulated grads.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  int64_t steps() const { return step_; }
  void reset_moments();

  bool all_finite() const;

 private:
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, int> index_;
  int64_t step_ = 0;
};

enum class Op : uint8_t {
  Const,
  Param,
  Add,
  Sub,
  ScaleShift,   // a*k + c elementwise
  MatVec,       // A*x
  MatTVec,      // A^T*x
  Sigmoid,
  Tanh,
  Relu,
  Hadamard,
  Concat2,
  Segment,      // rows [off, off+len) of a vector
  Dot,
  Cosine,       // zero-norm pairs score 0 and carry no gradient
  Softmax,
  StackScalars,
  MeanVecs,     // inputs averaged in the order given
  ReduceMax,    // lowest index wins ties
  EmbedRow,     // row of an embedding parameter, as a column vector
};

using Var = int32_t;

// Reverse-mode tape over Eigen matrices. Forward values are computed eagerly
// at node creation; backward() accumulates into the bound ParamStore.
class Tape {
 public:
  explicit Tape(ParamStore* store = nullptr) : store_(store) {}

  Var constant(Mat m);
  Var scalar(double v);
  Var param(int param_id);  // one node per parameter per tape
  Var embed_row(Var embedding_param_node, long row);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale_shift(Var a, double k, double c);
  Var matvec(Var a, Var x);
  Var mat_t_vec(Var a, Var x);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var hadamard(Var a, Var b);
  Var concat(Var a, Var b);
  Var segment(Var v, long off, long len);
  Var dot(Var a, Var b);
  Var cosine(Var a, Var b);
  Var softmax(Var v);
  Var stack(const std::vector<Var>& scalars);
  Var mean(const std::vector<Var>& vecs);
  Var reduce_max(Var v);

  const Mat& val(Var v) const { return nodes_[static_cast<size_t>(v)].val; }
  double scalar_val(Var v) const { return nodes_[static_cast<size_t>(v)].val(0, 0); }
  const Mat& grad(Var v) const { return nodes_[static_cast<size_t>(v)].grad; }

  // Backprop d(loss)/d(everything); loss must be 1x1. Parameter gradients are
  // accumulated into the store (+=, callers own zero_grad).
  void backward(Var loss);

  size_t size() const { return nodes_.size(); }
  long zero_norm_count() const { return zero_norm_count_; }

 private:
  struct Node {
    Op op;
    Var in0 = -1, in1 = -1;
    std::vector<Var> in_many;
    Mat val;
    Mat grad;
    long ia = 0, ib = 0;     // segment offset/len, embed row, argmax index
    double ka = 0, kb = 0;   // scale/shift payload
    int param = -1;
  };

  Var push(Node n);
  Node& node(Var v) { return nodes_[static_cast<size_t>(v)]; }

  std::vector<Node> nodes_;
  std::unordered_map<int, Var> param_nodes_;
  ParamStore* store_;
  long zero_norm_count_ = 0;
};

}  // namespace grounding::ad

#endif
