#include "grounding/autodiff.hpp"

#include <cmath>

#include "grounding/error.hpp"

namespace grounding::ad {

int ParamStore::add(const std::string& name, long rows, long cols) {
  if (index_.count(name)) throw Error(ErrorKind::InvalidArgument, "duplicate parameter name: " + name);
  Tensor t;
  t.name = name;
  t.value = Mat::Zero(rows, cols);
  t.grad = Mat::Zero(rows, cols);
  t.m = Mat::Zero(rows, cols);
  t.v = Mat::Zero(rows, cols);
  tensors_.push_back(std::move(t));
  const int id = static_cast<int>(tensors_.size()) - 1;
  index_[name] = id;
  return id;
}

int ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

void ParamStore::zero_grad() {
  for (auto& t : tensors_) t.grad.setZero();
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (auto& t : tensors_) {
    t.m = beta1 * t.m + (1.0 - beta1) * t.grad;
    t.v = beta2 * t.v + (1.0 - beta2) * t.grad.cwiseProduct(t.grad);
    const Mat mhat = t.m / bc1;
    const Mat vhat = t.v / bc2;
    t.value.array() -= lr * mhat.array() / (vhat.array().sqrt() + eps);
  }
}

void ParamStore::reset_moments() {
  for (auto& t : tensors_) {
    t.m.setZero();
    t.v.setZero();
  }
  step_ = 0;
}

bool ParamStore::all_finite() const {
  for (const auto& t : tensors_)
    if (!t.value.allFinite()) return false;
  return true;
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size()) - 1;
}

Var Tape::constant(Mat m) {
  Node n;
  n.op = Op::Const;
  n.val = std::move(m);
  return push(std::move(n));
}

Var Tape::scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Var Tape::param(int param_id) {
  auto it = param_nodes_.find(param_id);
  if (it != param_nodes_.end()) return it->second;
  if (store_ == nullptr) throw Error(ErrorKind::Internal, "tape has no parameter store");
  Node n;
  n.op = Op::Param;
  n.param = param_id;
  n.val = store_->at(param_id).value;
  const Var v = push(std::move(n));
  param_nodes_[param_id] = v;
  return v;
}

Var Tape::embed_row(Var embedding_param_node, long row) {
  const Node& e = node(embedding_param_node);
  if (row < 0 || row >= e.val.rows()) throw Error(ErrorKind::InvalidArgument, "embedding row out of range");
  Node n;
  n.op = Op::EmbedRow;
  n.in0 = embedding_param_node;
  n.ia = row;
  n.val = e.val.row(row).transpose();
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  Node n;
  n.op = Op::Add;
  n.in0 = a;
  n.in1 = b;
  n.val = node(a).val + node(b).val;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  Node n;
  n.op = Op::Sub;
  n.in0 = a;
  n.in1 = b;
  n.val = node(a).val - node(b).val;
  return push(std::move(n));
}

Var Tape::scale_shift(Var a, double k, double c) {
  Node n;
  n.op = Op::ScaleShift;
  n.in0 = a;
  n.ka = k;
  n.kb = c;
  n.val = (node(a).val.array() * k + c).matrix();
  return push(std::move(n));
}

Var Tape::matvec(Var a, Var x) {
  Node n;
  n.op = Op::MatVec;
  n.in0 = a;
  n.in1 = x;
  n.val = node(a).val * node(x).val;
  return push(std::move(n));
}

Var Tape::mat_t_vec(Var a, Var x) {
  Node n;
  n.op = Op::MatTVec;
  n.in0 = a;
  n.in1 = x;
  n.val = node(a).val.transpose() * node(x).val;
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n;
  n.op = Op::Sigmoid;
  n.in0 = a;
  n.val = (1.0 / (1.0 + (-node(a).val.array()).exp())).matrix();
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::Tanh;
  n.in0 = a;
  n.val = node(a).val.array().tanh().matrix();
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n;
  n.op = Op::Relu;
  n.in0 = a;
  n.val = node(a).val.cwiseMax(0.0);
  return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
  Node n;
  n.op = Op::Hadamard;
  n.in0 = a;
  n.in1 = b;
  n.val = node(a).val.cwiseProduct(node(b).val);
  return push(std::move(n));
}

Var Tape::concat(Var a, Var b) {
  Node n;
  n.op = Op::Concat2;
  n.in0 = a;
  n.in1 = b;
  const Mat& va = node(a).val;
  const Mat& vb = node(b).val;
  Mat out(va.rows() + vb.rows(), 1);
  out.topRows(va.rows()) = va;
  out.bottomRows(vb.rows()) = vb;
  n.val = std::move(out);
  return push(std::move(n));
}

Var Tape::segment(Var v, long off, long len) {
  Node n;
  n.op = Op::Segment;
  n.in0 = v;
  n.ia = off;
  n.ib = len;
  n.val = node(v).val.middleRows(off, len);
  return push(std::move(n));
}

Var Tape::dot(Var a, Var b) {
  Node n;
  n.op = Op::Dot;
  n.in0 = a;
  n.in1 = b;
  Mat out(1, 1);
  out(0, 0) = (node(a).val.transpose() * node(b).val)(0, 0);
  n.val = std::move(out);
  return push(std::move(n));
}

Var Tape::cosine(Var a, Var b) {
  Node n;
  n.op = Op::Cosine;
  n.in0 = a;
  n.in1 = b;
  const Mat& u = node(a).val;
  const Mat& v = node(b).val;
  const double nu = u.norm();
  const double nv = v.norm();
  Mat out(1, 1);
  if (nu == 0.0 || nv == 0.0) {
    out(0, 0) = 0.0;  // dead feature: score 0, no gradient
    ++zero_norm_count_;
    Node z = std::move(n);
    z.ka = 0.0;
    z.val = std::move(out);
    return push(std::move(z));
  }
  out(0, 0) = (u.transpose() * v)(0, 0) / (nu * nv);
  n.ka = 1.0;  // marks live gradient
  n.val = std::move(out);
  return push(std::move(n));
}

Var Tape::softmax(Var v) {
  Node n;
  n.op = Op::Softmax;
  n.in0 = v;
  const Mat& x = node(v).val;
  const double mx = x.maxCoeff();
  Eigen::ArrayXd e = (x.array() - mx).exp();
  n.val = (e / e.sum()).matrix();
  return push(std::move(n));
}

Var Tape::stack(const std::vector<Var>& scalars) {
  if (scalars.empty()) throw Error(ErrorKind::InvalidArgument, "stack of zero scalars");
  Node n;
  n.op = Op::StackScalars;
  n.in_many = scalars;
  Mat out(static_cast<long>(scalars.size()), 1);
  for (size_t i = 0; i < scalars.size(); ++i) out(static_cast<long>(i), 0) = node(scalars[i]).val(0, 0);
  n.val = std::move(out);
  return push(std::move(n));
}

Var Tape::mean(const std::vector<Var>& vecs) {
  if (vecs.empty()) throw Error(ErrorKind::InvalidArgument, "mean of zero vectors");
  Node n;
  n.op = Op::MeanVecs;
  n.in_many = vecs;
  Mat acc = node(vecs[0]).val;
  for (size_t i = 1; i < vecs.size(); ++i) acc += node(vecs[i]).val;
  n.val = acc / static_cast<double>(vecs.size());
  return push(std::move(n));
}

Var Tape::reduce_max(Var v) {
  Node n;
  n.op = Op::ReduceMax;
  n.in0 = v;
  const Mat& x = node(v).val;
  if (x.rows() == 0) throw Error(ErrorKind::InvalidArgument, "reduce_max of empty vector");
  long best = 0;
  for (long i = 1; i < x.rows(); ++i)
    if (x(i, 0) > x(best, 0)) best = i;
  n.ia = best;
  Mat out(1, 1);
  out(0, 0) = x(best, 0);
  n.val = std::move(out);
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  Node& top = node(loss);
  if (top.val.rows() != 1 || top.val.cols() != 1)
    throw Error(ErrorKind::InvalidArgument, "backward() needs a scalar loss");
  for (auto& n : nodes_) {
    n.grad.resize(n.val.rows(), n.val.cols());
    n.grad.setZero();
  }
  top.grad(0, 0) = 1.0;

  for (Var i = static_cast<Var>(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = node(i);
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::Const:
        break;
      case Op::Param:
        if (store_) store_->at(n.param).grad += g;
        break;
      case Op::Add:
        node(n.in0).grad += g;
        node(n.in1).grad += g;
        break;
      case Op::Sub:
        node(n.in0).grad += g;
        node(n.in1).grad -= g;
        break;
      case Op::ScaleShift:
        node(n.in0).grad += g * n.ka;
        break;
      case Op::MatVec:
        node(n.in0).grad += g * node(n.in1).val.transpose();
        node(n.in1).grad += node(n.in0).val.transpose() * g;
        break;
      case Op::MatTVec:
        node(n.in0).grad += node(n.in1).val * g.transpose();
        node(n.in1).grad += node(n.in0).val * g;
        break;
      case Op::Sigmoid:
        node(n.in0).grad.array() += g.array() * n.val.array() * (1.0 - n.val.array());
        break;
      case Op::Tanh:
        node(n.in0).grad.array() += g.array() * (1.0 - n.val.array().square());
        break;
      case Op::Relu:
        node(n.in0).grad.array() += g.array() * (n.val.array() > 0.0).cast<double>();
        break;
      case Op::Hadamard:
        node(n.in0).grad += g.cwiseProduct(node(n.in1).val);
        node(n.in1).grad += g.cwiseProduct(node(n.in0).val);
        break;
      case Op::Concat2: {
        const long ra = node(n.in0).val.rows();
        node(n.in0).grad += g.topRows(ra);
        node(n.in1).grad += g.bottomRows(g.rows() - ra);
        break;
      }
      case Op::Segment:
        node(n.in0).grad.middleRows(n.ia, n.ib) += g;
        break;
      case Op::Dot:
        node(n.in0).grad += g(0, 0) * node(n.in1).val;
        node(n.in1).grad += g(0, 0) * node(n.in0).val;
        break;
      case Op::Cosine: {
        if (n.ka == 0.0) break;  // zero-norm pair
        const Mat& u = node(n.in0).val;
        const Mat& v = node(n.in1).val;
        const double nu = u.norm();
        const double nv = v.norm();
        const double c = n.val(0, 0);
        const double gs = g(0, 0);
        node(n.in0).grad += gs * (v / (nu * nv) - c * u / (nu * nu));
        node(n.in1).grad += gs * (u / (nu * nv) - c * v / (nv * nv));
        break;
      }
      case Op::Softmax: {
        const double dots = (n.val.array() * g.array()).sum();
        node(n.in0).grad.array() += n.val.array() * (g.array() - dots);
        break;
      }
      case Op::StackScalars:
        for (size_t k = 0; k < n.in_many.size(); ++k)
          node(n.in_many[k]).grad(0, 0) += g(static_cast<long>(k), 0);
        break;
      case Op::MeanVecs: {
        const Mat share = g / static_cast<double>(n.in_many.size());
        for (Var m : n.in_many) node(m).grad += share;
        break;
      }
      case Op::ReduceMax:
        node(n.in0).grad(n.ia, 0) += g(0, 0);
        break;
      case Op::EmbedRow: {
        node(n.in0).grad.row(n.ia) += g.transpose();
        break;
      }
    }
  }
}

}  // namespace grounding::ad
