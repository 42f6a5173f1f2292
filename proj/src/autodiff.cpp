#include "nmm/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace nmm::ad {

const Mat& Var::val() const { return tape->value(id); }
double Var::scalar() const {
  const Mat& m = val();
  if (m.size() != 1) throw std::logic_error("Var::scalar on non-scalar node");
  return m(0, 0);
}
Eigen::Index Var::rows() const { return val().rows(); }
Eigen::Index Var::cols() const { return val().cols(); }

Var Tape::push(Mat value, std::string name,
               std::function<void(Tape&, const Mat&)> pull) {
  Node n;
  n.value = std::move(value);
  n.name = std::move(name);
  n.pull = std::move(pull);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Mat value, std::string name) {
  return push(std::move(value), std::move(name), nullptr);
}
Var Tape::constant(Mat value) { return push(std::move(value), "const", nullptr); }
Var Tape::constant(double value) {
  Mat m(1, 1);
  m(0, 0) = value;
  return constant(m);
}

const Mat& Tape::grad(const Var& v) const {
  if (!nodes_[v.id].has_grad)
    throw std::logic_error("gradient not computed for node " + nodes_[v.id].name);
  return nodes_[v.id].grad;
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Tape::backward(const Var& loss) {
  if (loss.val().size() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  double lv = loss.scalar();
  if (!std::isfinite(lv))
    throw std::runtime_error("backward: loss is non-finite at node '" +
                             nodes_[loss.id].name + "'");
  Mat seed(1, 1);
  seed(0, 0) = 1.0;
  accumulate(loss.id, seed);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.pull) continue;
    if (!n.value.allFinite())
      throw std::runtime_error("backward: non-finite value at node '" + n.name + "'");
    if (!n.grad.allFinite())
      throw std::runtime_error("backward: non-finite gradient at node '" + n.name + "'");
    n.pull(*this, n.grad);
  }
}

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  return t.push(a.val() + b.val(), "add", [ia, ib](Tape& t, const Mat& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  return t.push(a.val() - b.val(), "sub", [ia, ib](Tape& t, const Mat& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

Var neg(const Var& a) {
  Tape& t = *a.tape;
  int ia = a.id;
  return t.push(-a.val(), "neg",
                [ia](Tape& t, const Mat& g) { t.accumulate(ia, -g); });
}

Var cmul(const Var& a, const Var& b) {
  check_same_shape(a, b, "cmul");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  return t.push(a.val().cwiseProduct(b.val()), "cmul",
                [ia, ib](Tape& t, const Mat& g) {
                  t.accumulate(ia, g.cwiseProduct(t.value(ib)));
                  t.accumulate(ib, g.cwiseProduct(t.value(ia)));
                });
}

Var cdiv(const Var& a, const Var& b) {
  check_same_shape(a, b, "cdiv");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  return t.push(a.val().cwiseQuotient(b.val()), "cdiv",
                [ia, ib](Tape& t, const Mat& g) {
                  const Mat& bv = t.value(ib);
                  t.accumulate(ia, g.cwiseQuotient(bv));
                  Mat gb = -g.cwiseProduct(t.value(ia)).cwiseQuotient(bv.cwiseProduct(bv));
                  t.accumulate(ib, gb);
                });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dims");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  return t.push(a.val() * b.val(), "matmul", [ia, ib](Tape& t, const Mat& g) {
    t.accumulate(ia, g * t.value(ib).transpose());
    t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var transpose(const Var& a) {
  Tape& t = *a.tape;
  int ia = a.id;
  return t.push(a.val().transpose(), "transpose",
                [ia](Tape& t, const Mat& g) { t.accumulate(ia, g.transpose()); });
}

Var scale(const Var& a, double s) {
  Tape& t = *a.tape;
  int ia = a.id;
  return t.push(a.val() * s, "scale",
                [ia, s](Tape& t, const Mat& g) { t.accumulate(ia, g * s); });
}

Var add_scalar(const Var& a, double s) {
  Tape& t = *a.tape;
  int ia = a.id;
  return t.push(a.val().array() + s, "add_scalar",
                [ia](Tape& t, const Mat& g) { t.accumulate(ia, g); });
}

Var exp(const Var& a) {
  Tape& t = *a.tape;
  int ia = a.id;
  Mat v = a.val().array().exp();
  int self = static_cast<int>(t.size());
  return t.push(std::move(v), "exp", [ia, self](Tape& t, const Mat& g) {
    t.accumulate(ia, g.cwiseProduct(t.value(self)));
  });
}

Var log(const Var& a) {
  Tape& t = *a.tape;
  int ia = a.id;
  return t.push(a.val().array().log(), "log", [ia](Tape& t, const Mat& g) {
    t.accumulate(ia, g.cwiseQuotient(t.value(ia)));
  });
}

Var sqrt(const Var& a) {
  Tape& t = *a.tape;
  int ia = a.id;
  Mat v = a.val().array().sqrt();
  int self = static_cast<int>(t.size());
  return t.push(std::move(v), "sqrt", [ia, self](Tape& t, const Mat& g) {
    t.accumulate(ia, (g.array() * 0.5 / t.value(self).array()).matrix());
  });
}

Var square(const Var& a) {
  Tape& t = *a.tape;
  int ia = a.id;
  return t.push(a.val().array().square(), "square",
                [ia](Tape& t, const Mat& g) {
                  t.accumulate(ia, (2.0 * g.array() * t.value(ia).array()).matrix());
                });
}

Var recip(const Var& a) {
  Tape& t = *a.tape;
  int ia = a.id;
  Mat v = a.val().array().inverse();
  int self = static_cast<int>(t.size());
  return t.push(std::move(v), "recip", [ia, self](Tape& t, const Mat& g) {
    const auto& y = t.value(self).array();
    t.accumulate(ia, (-g.array() * y * y).matrix());
  });
}

Var sigmoid(const Var& a) {
  Tape& t = *a.tape;
  int ia = a.id;
  Mat v = (1.0 / (1.0 + (-a.val().array()).exp()));
  int self = static_cast<int>(t.size());
  return t.push(std::move(v), "sigmoid", [ia, self](Tape& t, const Mat& g) {
    const auto& y = t.value(self).array();
    t.accumulate(ia, (g.array() * y * (1.0 - y)).matrix());
  });
}

Var gelu(const Var& a) {
  return unary(a, "gelu", [](double x) {
    const double inv_sqrt2 = 0.7071067811865475244;
    const double inv_sqrt2pi = 0.3989422804014326779;
    double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
    double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
    return std::make_pair(x * cdf, cdf + x * pdf);
  });
}

Var softplus(const Var& a) {
  return unary(a, "softplus", [](double x) {
    double v = x > 30.0 ? x : std::log1p(std::exp(x));
    double d = 1.0 / (1.0 + std::exp(-x));
    return std::make_pair(v, d);
  });
}

Var abs(const Var& a) {
  return unary(a, "abs", [](double x) {
    return std::make_pair(std::abs(x), x < 0.0 ? -1.0 : 1.0);
  });
}

Var unary(const Var& a, std::string name,
          std::function<std::pair<double, double>(double)> fdf) {
  Tape& t = *a.tape;
  int ia = a.id;
  const Mat& x = a.val();
  Mat v(x.rows(), x.cols());
  Mat d(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      auto [fv, fd] = fdf(x(i, j));
      v(i, j) = fv;
      d(i, j) = fd;
    }
  return t.push(std::move(v), std::move(name),
                [ia, d = std::move(d)](Tape& t, const Mat& g) {
                  t.accumulate(ia, g.cwiseProduct(d));
                });
}

Var sum(const Var& a) {
  Tape& t = *a.tape;
  int ia = a.id;
  Mat v(1, 1);
  v(0, 0) = a.val().sum();
  Eigen::Index r = a.rows(), c = a.cols();
  return t.push(std::move(v), "sum", [ia, r, c](Tape& t, const Mat& g) {
    t.accumulate(ia, Mat::Constant(r, c, g(0, 0)));
  });
}

Var colwise_sum(const Var& a) {
  Tape& t = *a.tape;
  int ia = a.id;
  Mat v = a.val().colwise().sum();
  Eigen::Index r = a.rows();
  return t.push(std::move(v), "colwise_sum", [ia, r](Tape& t, const Mat& g) {
    t.accumulate(ia, g.replicate(r, 1));
  });
}

Var gather_rows(const Var& a, std::vector<int> idx) {
  Tape& t = *a.tape;
  int ia = a.id;
  Mat v(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= a.rows())
      throw std::out_of_range("gather_rows: index out of range");
    v.row(static_cast<Eigen::Index>(k)) = a.val().row(idx[k]);
  }
  Eigen::Index r = a.rows(), c = a.cols();
  return t.push(std::move(v), "gather_rows",
                [ia, idx = std::move(idx), r, c](Tape& t, const Mat& g) {
                  Mat ga = Mat::Zero(r, c);
                  for (std::size_t k = 0; k < idx.size(); ++k)
                    ga.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
                  t.accumulate(ia, ga);
                });
}

Var vcat(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("vcat: column mismatch");
  Tape& t = *a.tape;
  int ia = a.id, ib = b.id;
  Mat v(a.rows() + b.rows(), a.cols());
  v.topRows(a.rows()) = a.val();
  v.bottomRows(b.rows()) = b.val();
  Eigen::Index ra = a.rows(), rb = b.rows();
  return t.push(std::move(v), "vcat", [ia, ib, ra, rb](Tape& t, const Mat& g) {
    t.accumulate(ia, g.topRows(ra));
    t.accumulate(ib, g.bottomRows(rb));
  });
}

Var hcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("hcat: empty");
  Tape& t = *parts[0].tape;
  Eigen::Index rows = parts[0].rows(), cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("hcat: row mismatch");
    cols += p.cols();
  }
  Mat v(rows, cols);
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    v.middleCols(off, p.cols()) = p.val();
    ids.push_back(p.id);
    widths.push_back(p.cols());
    off += p.cols();
  }
  return t.push(std::move(v), "hcat",
                [ids = std::move(ids), widths = std::move(widths)](Tape& t, const Mat& g) {
                  Eigen::Index off = 0;
                  for (std::size_t k = 0; k < ids.size(); ++k) {
                    t.accumulate(ids[k], g.middleCols(off, widths[k]));
                    off += widths[k];
                  }
                });
}

Var block(const Var& a, int r0, int c0, int nrows, int ncols) {
  Tape& t = *a.tape;
  int ia = a.id;
  Mat v = a.val().block(r0, c0, nrows, ncols);
  Eigen::Index R = a.rows(), C = a.cols();
  return t.push(std::move(v), "block",
                [ia, r0, c0, nrows, ncols, R, C](Tape& t, const Mat& g) {
                  Mat ga = Mat::Zero(R, C);
                  ga.block(r0, c0, nrows, ncols) = g;
                  t.accumulate(ia, ga);
                });
}

Var add_rowvec(const Var& x, const Var& b) {
  if (b.rows() != 1 || b.cols() != x.cols())
    throw std::invalid_argument("add_rowvec: shape");
  Tape& t = *x.tape;
  int ix = x.id, ib = b.id;
  Mat v = x.val().rowwise() + b.val().row(0);
  return t.push(std::move(v), "add_rowvec", [ix, ib](Tape& t, const Mat& g) {
    t.accumulate(ix, g);
    t.accumulate(ib, g.colwise().sum());
  });
}

Var mul_colvec(const Var& x, const Var& c) {
  if (c.cols() != 1 || c.rows() != x.rows())
    throw std::invalid_argument("mul_colvec: shape");
  Tape& t = *x.tape;
  int ix = x.id, ic = c.id;
  Mat v = x.val().array().colwise() * c.val().col(0).array();
  return t.push(std::move(v), "mul_colvec", [ix, ic](Tape& t, const Mat& g) {
    t.accumulate(ix, (g.array().colwise() * t.value(ic).col(0).array()).matrix());
    t.accumulate(ic, g.cwiseProduct(t.value(ix)).rowwise().sum());
  });
}

Var div_colvec(const Var& x, const Var& c) {
  if (c.cols() != 1 || c.rows() != x.rows())
    throw std::invalid_argument("div_colvec: shape");
  Tape& t = *x.tape;
  int ix = x.id, ic = c.id;
  Mat v = x.val().array().colwise() / c.val().col(0).array();
  int self = static_cast<int>(t.size());
  return t.push(std::move(v), "div_colvec", [ix, ic, self](Tape& t, const Mat& g) {
    auto cv = t.value(ic).col(0).array();
    t.accumulate(ix, (g.array().colwise() / cv).matrix());
    Mat gy = g.cwiseProduct(t.value(self));  // g * (x/c)
    t.accumulate(ic, (-(gy.rowwise().sum().array()) / cv).matrix());
  });
}

Var add_colvec(const Var& x, const Var& c) {
  if (c.cols() != 1 || c.rows() != x.rows())
    throw std::invalid_argument("add_colvec: shape");
  Tape& t = *x.tape;
  int ix = x.id, ic = c.id;
  Mat v = x.val().array().colwise() + c.val().col(0).array();
  return t.push(std::move(v), "add_colvec", [ix, ic](Tape& t, const Mat& g) {
    t.accumulate(ix, g);
    t.accumulate(ic, g.rowwise().sum());
  });
}

Var scalar_mul(const Var& s, const Var& x) {
  if (s.val().size() != 1) throw std::invalid_argument("scalar_mul: s not 1x1");
  Tape& t = *x.tape;
  int is = s.id, ix = x.id;
  Mat v = x.val() * s.scalar();
  return t.push(std::move(v), "scalar_mul", [is, ix](Tape& t, const Mat& g) {
    t.accumulate(ix, g * t.value(is)(0, 0));
    Mat gs(1, 1);
    gs(0, 0) = g.cwiseProduct(t.value(ix)).sum();
    t.accumulate(is, gs);
  });
}

Var softmax_rows(const Var& x) {
  Tape& t = *x.tape;
  int ix = x.id;
  Mat v = x.val();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    Eigen::ArrayXd row = v.row(i).array();
    row -= row.maxCoeff();
    row = row.exp();
    v.row(i) = (row / row.sum()).matrix();
  }
  int self = static_cast<int>(t.size());
  return t.push(std::move(v), "softmax_rows", [ix, self](Tape& t, const Mat& g) {
    const Mat& y = t.value(self);
    Mat gx(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      double dot = g.row(i).dot(y.row(i));
      gx.row(i) = (y.row(i).array() * (g.row(i).array() - dot)).matrix();
    }
    t.accumulate(ix, gx);
  });
}

Var layernorm_rows(const Var& x, const Var& gain, const Var& bias, double eps) {
  Eigen::Index d = x.cols();
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d)
    throw std::invalid_argument("layernorm_rows: gain/bias shape");
  Tape& t = *x.tape;
  int ix = x.id, ig = gain.id, ib = bias.id;
  const Mat& xv = x.val();
  Mat xhat(xv.rows(), d);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) {
    double mu = xv.row(i).mean();
    double var = (xv.row(i).array() - mu).square().mean();
    double is = 1.0 / std::sqrt(var + eps);
    inv_std(i) = is;
    xhat.row(i) = ((xv.row(i).array() - mu) * is).matrix();
  }
  Mat v = (xhat.array().rowwise() * gain.val().row(0).array()).rowwise() +
          bias.val().row(0).array();
  return t.push(std::move(v), "layernorm_rows",
                [ix, ig, ib, xhat = std::move(xhat),
                 inv_std = std::move(inv_std), d](Tape& t, const Mat& g) {
                  const Mat& gv = t.value(ig);
                  Mat dxhat = g.array().rowwise() * gv.row(0).array();
                  Mat gx(g.rows(), d);
                  for (Eigen::Index i = 0; i < g.rows(); ++i) {
                    double m1 = dxhat.row(i).mean();
                    double m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
                    gx.row(i) = (inv_std(i) *
                                 (dxhat.row(i).array() - m1 -
                                  xhat.row(i).array() * m2)).matrix();
                  }
                  t.accumulate(ix, gx);
                  t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
                  t.accumulate(ib, g.colwise().sum());
                });
}

Var iir2(const Var& e, const Var& alpha, const Var& b1, const Var& b2,
         int delay) {
  if (delay < 0) throw std::invalid_argument("iir2: negative delay");
  Tape& t = *e.tape;
  int ie = e.id, ia = alpha.id, i1 = b1.id, i2 = b2.id;
  const Mat& ev = e.val();
  double a = alpha.scalar(), be1 = b1.scalar(), be2 = b2.scalar();
  Eigen::Index R = ev.rows(), T = ev.cols();
  Mat u = Mat::Zero(R, T);
  for (Eigen::Index r = 0; r < R; ++r)
    for (Eigen::Index n = 0; n < T; ++n) {
      double ein = (n >= delay) ? ev(r, n - delay) : 0.0;
      double u1 = (n >= 1) ? u(r, n - 1) : 0.0;
      double u2 = (n >= 2) ? u(r, n - 2) : 0.0;
      u(r, n) = a * ein - be1 * u1 - be2 * u2;
    }
  int self = static_cast<int>(t.size());
  return t.push(std::move(u), "iir2",
                [ie, ia, i1, i2, self, delay, a, be1, be2](Tape& t, const Mat& g) {
                  const Mat& ev = t.value(ie);
                  const Mat& uv = t.value(self);
                  Eigen::Index R = ev.rows(), T = ev.cols();
                  Mat ge = Mat::Zero(R, T);
                  double ga = 0.0, g1 = 0.0, g2 = 0.0;
                  for (Eigen::Index r = 0; r < R; ++r) {
                    // Adjoint recursion, reversed in time.
                    Eigen::VectorXd ubar = Eigen::VectorXd::Zero(T);
                    for (Eigen::Index n = T - 1; n >= 0; --n) {
                      double un1 = (n + 1 < T) ? ubar(n + 1) : 0.0;
                      double un2 = (n + 2 < T) ? ubar(n + 2) : 0.0;
                      ubar(n) = g(r, n) - be1 * un1 - be2 * un2;
                    }
                    for (Eigen::Index n = 0; n < T; ++n) {
                      double ein = (n >= delay) ? ev(r, n - delay) : 0.0;
                      if (n >= delay) ge(r, n - delay) += a * ubar(n);
                      ga += ubar(n) * ein;
                      if (n >= 1) g1 -= ubar(n) * uv(r, n - 1);
                      if (n >= 2) g2 -= ubar(n) * uv(r, n - 2);
                    }
                  }
                  t.accumulate(ie, ge);
                  Mat m(1, 1);
                  m(0, 0) = ga;
                  t.accumulate(ia, m);
                  m(0, 0) = g1;
                  t.accumulate(i1, m);
                  m(0, 0) = g2;
                  t.accumulate(i2, m);
                });
}

Var central_diff_cols(const Var& x, double dt) {
  if (x.cols() < 2) throw std::invalid_argument("central_diff_cols: needs >= 2 cols");
  Tape& t = *x.tape;
  int ix = x.id;
  const Mat& xv = x.val();
  Eigen::Index T = xv.cols();
  Mat v(xv.rows(), T);
  v.col(0) = (xv.col(1) - xv.col(0)) / dt;
  for (Eigen::Index n = 1; n + 1 < T; ++n)
    v.col(n) = (xv.col(n + 1) - xv.col(n - 1)) / (2.0 * dt);
  v.col(T - 1) = (xv.col(T - 1) - xv.col(T - 2)) / dt;
  return t.push(std::move(v), "central_diff_cols",
                [ix, dt, T](Tape& t, const Mat& g) {
                  Mat gx = Mat::Zero(g.rows(), T);
                  gx.col(1) += g.col(0) / dt;
                  gx.col(0) -= g.col(0) / dt;
                  for (Eigen::Index n = 1; n + 1 < T; ++n) {
                    gx.col(n + 1) += g.col(n) / (2.0 * dt);
                    gx.col(n - 1) -= g.col(n) / (2.0 * dt);
                  }
                  gx.col(T - 1) += g.col(T - 1) / dt;
                  gx.col(T - 2) -= g.col(T - 1) / dt;
                  t.accumulate(ix, gx);
                });
}

Var activation_rows(const Var& u, const Var& A) {
  if (A.cols() != 1 || A.rows() != u.rows())
    throw std::invalid_argument("activation_rows: A shape");
  Tape& t = *u.tape;
  int iu = u.id, iA = A.id;
  const Mat& uv = u.val();
  Eigen::Index R = uv.rows(), T = uv.cols();
  Mat v(R, T), du(R, T), dA(R, T);
  for (Eigen::Index r = 0; r < R; ++r) {
    double Ar = A.val()(r, 0);
    double denom = std::expm1(Ar);
    for (Eigen::Index n = 0; n < T; ++n) {
      double x = uv(r, n);
      if (std::abs(Ar) < 1e-6) {
        // Analytic limit A -> 0: a = u.
        v(r, n) = x;
        du(r, n) = 1.0;
        dA(r, n) = 0.5 * x * (x - 1.0);
      } else {
        double eAu = std::exp(Ar * x);
        v(r, n) = std::expm1(Ar * x) / denom;
        du(r, n) = Ar * eAu / denom;
        double eA = std::exp(Ar);
        dA(r, n) = (x * eAu * denom - std::expm1(Ar * x) * eA) / (denom * denom);
      }
    }
  }
  return t.push(std::move(v), "activation_rows",
                [iu, iA, du = std::move(du), dA = std::move(dA)](Tape& t, const Mat& g) {
                  t.accumulate(iu, g.cwiseProduct(du));
                  t.accumulate(iA, g.cwiseProduct(dA).rowwise().sum());
                });
}

double grad_check(const std::function<Var(Tape&, const Var&)>& f,
                  const Vec& x, double eps) {
  Tape tape;
  Var xv = tape.leaf(x, "x");
  Var loss = f(tape, xv);
  tape.backward(loss);
  Vec analytic = tape.grad(xv).col(0);

  double max_err = 0.0;
  std::string bad;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += eps;
    xm(i) -= eps;
    Tape tp, tm;
    double fp = f(tp, tp.leaf(xp, "x")).scalar();
    double fm = f(tm, tm.leaf(xm, "x")).scalar();
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      bad += " coordinate " + std::to_string(i) + " non-finite at probe;";
      continue;
    }
    double numeric = (fp - fm) / (2.0 * eps);
    double err = std::abs(analytic(i) - numeric) /
                 std::max(1.0, std::abs(analytic(i)));
    max_err = std::max(max_err, err);
  }
  if (!bad.empty()) throw std::runtime_error("grad_check:" + bad);
  return max_err;
}

}  // namespace nmm::ad
