#pragma once

// Reverse-mode automatic differentiation over matrix-valued computation
// graphs. Nodes hold dense Eigen matrices; scalars are 1x1. One Tape per
// forward pass, replayed in reverse creation order.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace nmm::ad {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Mat& val() const;
  double scalar() const;
  Eigen::Index rows() const;
  Eigen::Index cols() const;
};

class Tape {
public:
  struct Node {
    Mat value;
    Mat grad;
    bool has_grad = false;
    std::string name;
    // Pulls this node's accumulated gradient into its parents.
    std::function<void(Tape&, const Mat&)> pull;
  };

  Var leaf(Mat value, std::string name = "leaf");
  Var constant(Mat value);
  Var constant(double value);

  Var push(Mat value, std::string name,
           std::function<void(Tape&, const Mat&)> pull);

  const Mat& value(int id) const { return nodes_[id].value; }
  const Mat& grad(const Var& v) const;
  bool has_grad(const Var& v) const { return nodes_[v.id].has_grad; }

  // Seeds d(loss)=1 and replays the tape in reverse. loss must be a finite
  // 1x1 node. Throws std::runtime_error naming the first node whose value
  // or gradient is non-finite.
  void backward(const Var& loss);

  void accumulate(int id, const Mat& g);
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  std::vector<Node> nodes_;
};

// ---- arithmetic ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var neg(const Var& a);
Var cmul(const Var& a, const Var& b);   // elementwise
Var cdiv(const Var& a, const Var& b);   // elementwise
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);

// ---- elementwise functions ----
Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var square(const Var& a);
Var recip(const Var& a);
Var sigmoid(const Var& a);
Var gelu(const Var& a);
Var softplus(const Var& a);
Var abs(const Var& a);

// Generic elementwise op: f(x) -> {value, dvalue/dx}.
Var unary(const Var& a, std::string name,
          std::function<std::pair<double, double>(double)> fdf);

// ---- reductions / shape ----
Var sum(const Var& a);                         // 1x1
Var colwise_sum(const Var& a);                 // 1xC, sums each column
Var gather_rows(const Var& a, std::vector<int> idx);
Var vcat(const Var& a, const Var& b);
Var hcat(const std::vector<Var>& parts);
Var block(const Var& a, int r0, int c0, int nrows, int ncols);

// ---- broadcasts (b is 1xC row vector, c is Rx1 column vector) ----
Var add_rowvec(const Var& x, const Var& b);
Var mul_colvec(const Var& x, const Var& c);
Var div_colvec(const Var& x, const Var& c);
Var add_colvec(const Var& x, const Var& c);
Var scalar_mul(const Var& s, const Var& x);    // s is 1x1

// ---- neural-net primitives ----
Var softmax_rows(const Var& x);
Var layernorm_rows(const Var& x, const Var& gain, const Var& bias,
                   double eps = 1e-5);

// ---- sequence ops (time runs along columns) ----
// u[n] = alpha*e[n-d] - b1*u[n-1] - b2*u[n-2], zero initial state, applied
// independently to each row. alpha/b1/b2 are 1x1 nodes.
Var iir2(const Var& e, const Var& alpha, const Var& b1, const Var& b2,
         int delay);
// Central differences along columns, one-sided at the ends.
Var central_diff_cols(const Var& x, double dt);

// a = (exp(A_r * u) - 1) / (exp(A_r) - 1) applied rowwise; A is Rx1.
Var activation_rows(const Var& u, const Var& A);

// ---- gradient checking ----
// Builds the graph via f on a fresh tape, compares the analytic gradient
// against central finite differences. Returns the max relative error
// |analytic - numeric| / max(1, |analytic|) over coordinates.
double grad_check(const std::function<Var(Tape&, const Var&)>& f,
                  const Vec& x, double eps);

}  // namespace nmm::ad
