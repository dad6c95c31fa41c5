#include "zpt/ad/ops.hpp"

#include "zpt/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace zpt::ad {
namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
}

void require_scalar(const Var& s, const char* op) {
  if (s.rows() != 1 || s.cols() != 1) throw ContractError(std::string(op) + ": expected 1x1");
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw ContractError("matmul: inner dimensions differ");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.record(a.value() * b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.needs_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  if (a.cols() != b.cols()) throw ContractError("matmul_nt: column counts differ");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.record(a.value() * b.value().transpose(), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib));
    if (t.needs_grad(ib)) t.accumulate(ib, g.transpose() * t.value(ia));
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.record(a.value().transpose(), {a},
                  [ia](Tape& t, int self) { t.accumulate(ia, t.grad(self).transpose()); });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, -t.grad(self));
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.record(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.needs_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.record(a.value() * s, {a},
                  [ia, s](Tape& t, int self) { t.accumulate(ia, t.grad(self) * s); });
}

Var scale(Var a, Var s) {
  require_scalar(s, "scale");
  Tape& t = *a.tape();
  const int ia = a.id(), is = s.id();
  return t.record(a.value() * s.scalar(), {a, s}, [ia, is](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(is)(0, 0));
    if (t.needs_grad(is)) {
      Matrix d(1, 1);
      d(0, 0) = g.cwiseProduct(t.value(ia)).sum();
      t.accumulate(is, d);
    }
  });
}

Var add_row(Var a, Var bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) throw ContractError("add_row: bias shape");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = bias.id();
  Matrix out = a.value();
  out.rowwise() += bias.value().row(0);
  return t.record(std::move(out), {a, bias}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    t.accumulate(ia, g);
    if (t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum());
  });
}

Var relu(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.record(a.value().cwiseMax(0.0), {a}, [ia](Tape& t, int self) {
    const Matrix& x = t.value(ia);
    t.accumulate(ia, t.grad(self).cwiseProduct((x.array() > 0.0).cast<double>().matrix()));
  });
}

Var leaky_relu(Var a, double slope) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  return t.record(std::move(out), {a}, [ia, slope](Tape& t, int self) {
    const Matrix& x = t.value(ia);
    Matrix d = x.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
    t.accumulate(ia, t.grad(self).cwiseProduct(d));
  });
}

Var exp(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.record(a.value().array().exp().matrix(), {a}, [ia](Tape& t, int self) {
    t.accumulate(ia, t.grad(self).cwiseProduct(t.value(self)));
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d) {
    throw ContractError("layer_norm: gamma/beta shape");
  }
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  Matrix xhat(n, d);
  Vector inv_std(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = xv.row(i).mean();
    const double var = (xv.row(i).array() - mu).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (xv.row(i).array() - mu) * inv_std(i);
  }
  Matrix out = xhat;
  out.array().rowwise() *= gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return t.record(std::move(out), {x, gamma, beta},
                  [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t,
                                                                                     int self) {
                    const Matrix& g = t.grad(self);
                    if (t.needs_grad(ig)) t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
                    if (t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum());
                    if (t.needs_grad(ix)) {
                      Matrix dxhat = g;
                      dxhat.array().rowwise() *= t.value(ig).row(0).array();
                      const Eigen::Index dd = dxhat.cols();
                      Matrix dx(dxhat.rows(), dd);
                      for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
                        const double m1 = dxhat.row(i).sum() / static_cast<double>(dd);
                        const double m2 = dxhat.row(i).dot(xhat.row(i)) / static_cast<double>(dd);
                        dx.row(i) =
                            (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2) * inv_std(i);
                      }
                      t.accumulate(ix, dx);
                    }
                  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const Eigen::Index n = parts.front().rows();
  Eigen::Index total = 0;
  for (const Var& p : parts) {
    if (p.rows() != n) throw ContractError("concat_cols: row counts differ");
    total += p.cols();
  }
  Matrix out(n, total);
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(off);
    off += p.cols();
  }
  Tape& t = *parts.front().tape();
  return t.record(std::move(out), parts, [ids, offsets](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.needs_grad(ids[k])) t.accumulate(ids[k], g.middleCols(offsets[k], t.value(ids[k]).cols()));
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const Eigen::Index d = parts.front().cols();
  Eigen::Index total = 0;
  for (const Var& p : parts) {
    if (p.cols() != d) throw ContractError("concat_rows: column counts differ");
    total += p.rows();
  }
  Matrix out(total, d);
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(off);
    off += p.rows();
  }
  Tape& t = *parts.front().tape();
  return t.record(std::move(out), parts, [ids, offsets](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.needs_grad(ids[k])) t.accumulate(ids[k], g.middleRows(offsets[k], t.value(ids[k]).rows()));
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw ContractError("slice_cols: range");
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.record(a.value().middleCols(start, count), {a}, [ia, start, count](Tape& t, int self) {
    Matrix d = Matrix::Zero(t.value(ia).rows(), t.value(ia).cols());
    d.middleCols(start, count) = t.grad(self);
    t.accumulate(ia, d);
  });
}

Var gather_rows(Var a, std::span<const int> rows) {
  const Matrix& av = a.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= av.rows()) throw ContractError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = av.row(rows[i]);
  }
  Tape& t = *a.tape();
  const int ia = a.id();
  std::vector<int> idx(rows.begin(), rows.end());
  return t.record(std::move(out), {a}, [ia, idx = std::move(idx)](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix d = Matrix::Zero(t.value(ia).rows(), t.value(ia).cols());
    for (std::size_t i = 0; i < idx.size(); ++i) d.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    t.accumulate(ia, d);
  });
}

Var sparse_matmul(std::shared_ptr<const SparseMatrix> s, Var a) {
  if (s->cols() != a.rows()) throw ContractError("sparse_matmul: inner dimensions differ");
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = (*s) * a.value();
  return t.record(std::move(out), {a}, [ia, s = std::move(s)](Tape& t, int self) {
    t.accumulate(ia, s->transpose() * t.grad(self));
  });
}

Var l2_normalize_rows(Var a) {
  const Matrix& av = a.value();
  Vector norms = av.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > 0.0)) {
      throw NumericalDomainError("l2_normalize_rows: row " + std::to_string(i) + " has zero norm");
    }
  }
  Matrix out = norms.cwiseInverse().asDiagonal() * av;
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.record(std::move(out), {a}, [ia, norms = std::move(norms)](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    Vector dots = g.cwiseProduct(y).rowwise().sum();
    Matrix d = g - dots.asDiagonal() * y;
    t.accumulate(ia, norms.cwiseInverse().asDiagonal() * d);
  });
}

namespace {
Matrix softmax_rows_value(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    p.row(i) = (z.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}
}  // namespace

Var softmax_rows(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.record(softmax_rows_value(a.value()), {a}, [ia](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const Matrix& p = t.value(self);
    Vector dots = g.cwiseProduct(p).rowwise().sum();
    Matrix d = p.cwiseProduct(g - dots.replicate(1, g.cols()));
    t.accumulate(ia, d);
  });
}

Var cross_entropy_rows(Var logits, std::span<const int> targets) {
  const Matrix& z = logits.value();
  const Eigen::Index n = z.rows();
  if (static_cast<Eigen::Index>(targets.size()) != n) {
    throw ContractError("cross_entropy_rows: one target per row required");
  }
  if (n == 0) throw ContractError("cross_entropy_rows: empty batch");
  Matrix p = softmax_rows_value(z);
  double loss = 0.0;
  std::vector<int> tg(targets.begin(), targets.end());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (tg[i] < 0 || tg[i] >= z.cols()) throw ContractError("cross_entropy_rows: target range");
    const double m = z.row(i).maxCoeff();
    const double lse = m + std::log((z.row(i).array() - m).exp().sum());
    loss += lse - z(i, tg[i]);
  }
  Matrix out(1, 1);
  out(0, 0) = loss / static_cast<double>(n);
  Tape& t = *logits.tape();
  const int il = logits.id();
  return t.record(std::move(out), {logits},
                  [il, p = std::move(p), tg = std::move(tg)](Tape& t, int self) {
                    Matrix d = p;
                    for (std::size_t i = 0; i < tg.size(); ++i) d(static_cast<Eigen::Index>(i), tg[i]) -= 1.0;
                    d *= t.grad(self)(0, 0) / static_cast<double>(tg.size());
                    t.accumulate(il, d);
                  });
}

Var nll_rows(Var probs, std::span<const int> targets) {
  const Matrix& p = probs.value();
  const Eigen::Index n = p.rows();
  if (static_cast<Eigen::Index>(targets.size()) != n) {
    throw ContractError("nll_rows: one target per row required");
  }
  if (n == 0) throw ContractError("nll_rows: empty batch");
  std::vector<int> tg(targets.begin(), targets.end());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (tg[i] < 0 || tg[i] >= p.cols()) throw ContractError("nll_rows: target range");
    loss -= std::log(p(i, tg[i]));
  }
  Matrix out(1, 1);
  out(0, 0) = loss / static_cast<double>(n);
  Tape& t = *probs.tape();
  const int ip = probs.id();
  return t.record(std::move(out), {probs}, [ip, tg = std::move(tg)](Tape& t, int self) {
    const Matrix& pv = t.value(ip);
    Matrix d = Matrix::Zero(pv.rows(), pv.cols());
    const double g = t.grad(self)(0, 0) / static_cast<double>(tg.size());
    for (std::size_t i = 0; i < tg.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      d(r, tg[i]) = -g / pv(r, tg[i]);
    }
    t.accumulate(ip, d);
  });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record(std::move(out), {a}, [ia](Tape& t, int self) {
    const Matrix& av = t.value(ia);
    t.accumulate(ia, Matrix::Constant(av.rows(), av.cols(), t.grad(self)(0, 0)));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var row_sums(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = a.value().rowwise().sum();
  return t.record(std::move(out), {a}, [ia](Tape& t, int self) {
    t.accumulate(ia, t.grad(self).replicate(1, t.value(ia).cols()));
  });
}

Var square(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.record(a.value().array().square().matrix(), {a}, [ia](Tape& t, int self) {
    t.accumulate(ia, 2.0 * t.grad(self).cwiseProduct(t.value(ia)));
  });
}

Var linear(Var x, Var w, Var b) {
  if (x.cols() != w.rows()) throw ContractError("linear: inner dimensions differ");
  if (b.rows() != 1 || b.cols() != w.cols()) throw ContractError("linear: bias shape");
  Tape& t = *x.tape();
  Matrix out(x.rows(), w.cols());
  out.noalias() = x.value() * w.value();
  out.rowwise() += b.value().row(0);
  const int ix = x.id(), iw = w.id(), ib = b.id();
  return t.record(std::move(out), {x, w, b}, [ix, iw, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ix)) t.accumulate(ix, g * t.value(iw).transpose());
    if (t.needs_grad(iw)) t.accumulate(iw, t.value(ix).transpose() * g);
    if (t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum());
  });
}

Var attention(Var qkv, int batch, int seq_len, int heads, std::span<const int> lengths) {
  if (qkv.cols() % 3 != 0) throw ContractError("attention: qkv width must be a multiple of 3");
  const Eigen::Index width = qkv.cols() / 3;
  if (qkv.rows() != static_cast<Eigen::Index>(batch) * seq_len) {
    throw ContractError("attention: qkv rows must equal batch * seq_len");
  }
  if (heads <= 0 || width % heads != 0) throw ContractError("attention: width not divisible by heads");
  if (static_cast<int>(lengths.size()) != batch) throw ContractError("attention: one length per sequence");
  const Eigen::Index hd = width / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(hd));
  const Matrix& x = qkv.value();

  std::vector<int> lens(lengths.begin(), lengths.end());
  std::vector<Matrix> probs(static_cast<std::size_t>(batch) * heads);
  Matrix out(x.rows(), width);
  Matrix q, k, v, o;
  for (int b = 0; b < batch; ++b) {
    const int len = lens[b];
    if (len < 1 || len > seq_len) throw ContractError("attention: sequence length out of range");
    const Eigen::Index r0 = static_cast<Eigen::Index>(b) * seq_len;
    for (int h = 0; h < heads; ++h) {
      const Eigen::Index c0 = h * hd;
      q = x.block(r0, c0, seq_len, hd);
      k = x.block(r0, width + c0, len, hd);
      v = x.block(r0, 2 * width + c0, len, hd);
      Matrix p(seq_len, len);
      p.noalias() = q * k.transpose();
      p *= sc;
      // seq_len x len: keys past the sequence length are never scored.
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        p.row(i).array() = (p.row(i).array() - p.row(i).maxCoeff()).exp();
        p.row(i) /= p.row(i).sum();
      }
      o.noalias() = p * v;
      out.block(r0, c0, seq_len, hd) = o;
      probs[static_cast<std::size_t>(b) * heads + h] = std::move(p);
    }
  }
  Tape& t = *qkv.tape();
  const int ix = qkv.id();
  return t.record(
      std::move(out), {qkv},
      [ix, batch, seq_len, heads, hd, width, sc, lens = std::move(lens),
       probs = std::move(probs)](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        const Matrix& x = t.value(ix);
        Matrix dx = Matrix::Zero(x.rows(), x.cols());
        Matrix go, q, k, v, ds, tmp;
        for (int b = 0; b < batch; ++b) {
          const int len = lens[b];
          const Eigen::Index r0 = static_cast<Eigen::Index>(b) * seq_len;
          for (int h = 0; h < heads; ++h) {
            const Eigen::Index c0 = h * hd;
            const Matrix& p = probs[static_cast<std::size_t>(b) * heads + h];
            go = g.block(r0, c0, seq_len, hd);
            q = x.block(r0, c0, seq_len, hd);
            k = x.block(r0, width + c0, len, hd);
            v = x.block(r0, 2 * width + c0, len, hd);
            tmp.noalias() = p.transpose() * go;
            dx.block(r0, 2 * width + c0, len, hd) += tmp;
            ds.noalias() = go * v.transpose();
            for (Eigen::Index i = 0; i < ds.rows(); ++i) {
              const double dot = ds.row(i).dot(p.row(i));
              ds.row(i).array() = p.row(i).array() * (ds.row(i).array() - dot) * sc;
            }
            tmp.noalias() = ds * k;
            dx.block(r0, c0, seq_len, hd) += tmp;
            tmp.noalias() = ds.transpose() * q;
            dx.block(r0, width + c0, len, hd) += tmp;
          }
        }
        t.accumulate(ix, dx);
      });
}

}  // namespace zpt::ad
