// Copyright (c) 2026 The ecapa-cpp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Differentiable operations over Graph variables: exactly the set the
// network needs, nothing more. All feature maps are [B,C,T], vector
// activations are [B,F]; see tensor.hpp for the layout conventions.

#ifndef ECAPA_OPS_HPP_
#define ECAPA_OPS_HPP_

#include <cmath>
#include <vector>

#include "ecapa/graph.hpp"
#include "ecapa/tensor.hpp"

#if defined(_OPENMP)
#define ECAPA_OMP_FOR _Pragma("omp parallel for schedule(static)")
#else
#define ECAPA_OMP_FOR
#endif

namespace ecapa {

namespace detail {

// Tap j of a [Cout,Cin,k] conv weight as a strided [Cout,Cin] matrix view.
template <typename Scalar>
using TapMap =
    Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>,
               0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

template <typename Scalar>
TapMap<Scalar> weight_tap(const Tensor<Scalar>& w, Index j) {
  const Index cout = w.dim(0), cin = w.dim(1), k = w.dim(2);
  return TapMap<Scalar>(w.data() + j, cout, cin,
                        Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(cin * k, k));
}

}  // namespace detail

// 1-d convolution over time, cross-correlation convention with symmetric
// "same" zero padding of (k-1)*dilation/2 on each side:
//   y[b,co,t] = sum_{ci,j} w[co,ci,j] * x[b,ci,t + (j - k/2)*dilation] + bias[co]
// Out-of-range samples read as zero, so the temporal length is preserved.
// Implemented as one GEMM per (item, tap) on shifted column blocks.
template <typename Scalar>
Var<Scalar> conv1d(Var<Scalar> x, Var<Scalar> w, Var<Scalar> b, int dilation) {
  Graph<Scalar>& g = *x.graph;
  const Tensor<Scalar>& xv = x.value();
  const Tensor<Scalar>& wv = w.value();
  const Tensor<Scalar>& bv = b.value();
  ECAPA_CHECK(xv.ndim() == 3, "conv1d: input must be [B,Cin,T], got " << shape_str(xv.shape()));
  ECAPA_CHECK(wv.ndim() == 3, "conv1d: weight must be [Cout,Cin,k], got " << shape_str(wv.shape()));
  const Index B = xv.dim(0), cin = xv.dim(1), T = xv.dim(2);
  const Index cout = wv.dim(0), k = wv.dim(2);
  ECAPA_CHECK(wv.dim(1) == cin,
              "conv1d: Cin mismatch, input " << shape_str(xv.shape()) << " weight " << shape_str(wv.shape()));
  ECAPA_CHECK(k % 2 == 1, "conv1d: kernel size must be odd, got " << k);
  ECAPA_CHECK(dilation >= 1, "conv1d: dilation must be positive, got " << dilation);
  ECAPA_CHECK(bv.ndim() == 1 && bv.dim(0) == cout,
              "conv1d: bias must be [Cout], got " << shape_str(bv.shape()));

  Tensor<Scalar> y({B, cout, T});
  const Index half = k / 2;
  ECAPA_OMP_FOR
  for (Index bi = 0; bi < B; ++bi) {
    auto yb = y.item(bi);
    auto xb = xv.item(bi);
    yb.colwise() = bv.vec();
    for (Index j = 0; j < k; ++j) {
      const Index o = (j - half) * dilation;
      const Index t0 = std::max<Index>(0, -o);
      const Index t1 = std::min<Index>(T, T - o);
      if (t1 <= t0) continue;
      const Index len = t1 - t0;
      yb.block(0, t0, cout, len).noalias() +=
          detail::weight_tap(wv, j) * xb.block(0, t0 + o, cin, len);
    }
  }

  const int xid = x.id, wid = w.id, bid = b.id;
  return g.make_node(std::move(y), {xid, wid, bid},
                     [xid, wid, bid, dilation](Graph<Scalar>& gr, int self) {
    const Tensor<Scalar>& dy = gr.grad(self);
    const Tensor<Scalar>& xv = gr.value(xid);
    const Tensor<Scalar>& wv = gr.value(wid);
    const Index B = xv.dim(0), cin = xv.dim(1), T = xv.dim(2);
    const Index cout = wv.dim(0), k = wv.dim(2);
    const Index half = k / 2;
    if (gr.requires_grad(xid)) {
      Tensor<Scalar>& dx = gr.grad_mut(xid);
      ECAPA_OMP_FOR
      for (Index bi = 0; bi < B; ++bi) {
        auto dxb = dx.item(bi);
        auto dyb = dy.item(bi);
        for (Index j = 0; j < k; ++j) {
          const Index o = (j - half) * dilation;
          const Index t0 = std::max<Index>(0, -o);
          const Index t1 = std::min<Index>(T, T - o);
          if (t1 <= t0) continue;
          const Index len = t1 - t0;
          dxb.block(0, t0 + o, cin, len).noalias() +=
              detail::weight_tap(wv, j).transpose() * dyb.block(0, t0, cout, len);
        }
      }
    }
    if (gr.requires_grad(wid)) {
      Tensor<Scalar>& dw = gr.grad_mut(wid);
      // Taps write disjoint weight slices, so the tap loop parallelizes
      // while the item accumulation stays ordered (deterministic sums).
      ECAPA_OMP_FOR
      for (Index j = 0; j < k; ++j) {
        const Index o = (j - half) * dilation;
        const Index t0 = std::max<Index>(0, -o);
        const Index t1 = std::min<Index>(T, T - o);
        if (t1 <= t0) continue;
        const Index len = t1 - t0;
        typename Tensor<Scalar>::MatrixRM acc =
            Tensor<Scalar>::MatrixRM::Zero(cout, cin);
        for (Index bi = 0; bi < B; ++bi) {
          acc.noalias() += dy.item(bi).block(0, t0, cout, len) *
                           xv.item(bi).block(0, t0 + o, cin, len).transpose();
        }
        for (Index co = 0; co < cout; ++co)
          for (Index ci = 0; ci < cin; ++ci)
            dw(co, ci, j) += acc(co, ci);
      }
    }
    if (gr.requires_grad(bid)) {
      Tensor<Scalar>& db = gr.grad_mut(bid);
      for (Index bi = 0; bi < B; ++bi) db.vec() += dy.item(bi).rowwise().sum();
    }
  });
}

// Fully-connected layer on per-item vectors: [B,Fin] -> [B,Fout].
// Frame-wise dense layers in the trunk are conv1d with k=1.
template <typename Scalar>
Var<Scalar> dense(Var<Scalar> x, Var<Scalar> w, Var<Scalar> b) {
  Graph<Scalar>& g = *x.graph;
  const Tensor<Scalar>& xv = x.value();
  const Tensor<Scalar>& wv = w.value();
  const Tensor<Scalar>& bv = b.value();
  ECAPA_CHECK(xv.ndim() == 2, "dense: input must be [B,Fin], got " << shape_str(xv.shape()));
  ECAPA_CHECK(wv.ndim() == 2, "dense: weight must be [Fout,Fin], got " << shape_str(wv.shape()));
  const Index B = xv.dim(0), fin = xv.dim(1), fout = wv.dim(0);
  ECAPA_CHECK(wv.dim(1) == fin,
              "dense: Fin mismatch, input " << shape_str(xv.shape()) << " weight " << shape_str(wv.shape()));
  ECAPA_CHECK(bv.ndim() == 1 && bv.dim(0) == fout,
              "dense: bias must be [Fout], got " << shape_str(bv.shape()));

  Tensor<Scalar> y({B, fout});
  y.mat().noalias() = xv.mat() * wv.mat().transpose();
  y.mat().rowwise() += bv.vec().transpose();

  const int xid = x.id, wid = w.id, bid = b.id;
  return g.make_node(std::move(y), {xid, wid, bid},
                     [xid, wid, bid](Graph<Scalar>& gr, int self) {
    const Tensor<Scalar>& dy = gr.grad(self);
    if (gr.requires_grad(xid))
      gr.grad_mut(xid).mat().noalias() += dy.mat() * gr.value(wid).mat();
    if (gr.requires_grad(wid))
      gr.grad_mut(wid).mat().noalias() += dy.mat().transpose() * gr.value(xid).mat();
    if (gr.requires_grad(bid))
      gr.grad_mut(bid).vec() += dy.mat().colwise().sum().transpose();
  });
}

// Persistent batchnorm statistics; owned by the layer, not the graph.
template <typename Scalar>
struct BatchNormStats {
  Tensor<Scalar> mean;
  Tensor<Scalar> var;

  explicit BatchNormStats(Index channels) {
    mean = Tensor<Scalar>::zeros({channels});
    var = Tensor<Scalar>::constant({channels}, Scalar(1));
  }
  BatchNormStats() = default;
};

// Batch normalization over every axis except the channel axis:
//   [B,C,T] inputs normalize per channel over batch x time,
//   [B,F]   inputs normalize per feature over the batch.
// Train mode uses batch statistics (population variance, floored by eps) and,
// when `stats` is given, folds them into the running estimates with
// new = (1-momentum)*old + momentum*batch. Eval mode applies the running
// statistics as a fixed affine map. The running update is a value-level side
// effect and never differentiated.
template <typename Scalar>
Var<Scalar> batchnorm1d(Var<Scalar> x, Var<Scalar> gamma, Var<Scalar> beta,
                        bool train, BatchNormStats<Scalar>* stats,
                        double eps = 1e-5, double momentum = 0.1) {
  Graph<Scalar>& g = *x.graph;
  const Tensor<Scalar>& xv = x.value();
  ECAPA_CHECK(xv.ndim() == 2 || xv.ndim() == 3,
              "batchnorm1d: input must be [B,C,T] or [B,F], got " << shape_str(xv.shape()));
  const bool framewise = xv.ndim() == 3;
  const Index B = xv.dim(0);
  const Index C = xv.dim(1);
  const Index T = framewise ? xv.dim(2) : 1;
  const Index N = B * T;
  const Tensor<Scalar>& gv = gamma.value();
  const Tensor<Scalar>& bv = beta.value();
  ECAPA_CHECK(gv.ndim() == 1 && gv.dim(0) == C && bv.ndim() == 1 && bv.dim(0) == C,
              "batchnorm1d: gamma/beta must be [C]=" << C);
  ECAPA_CHECK(train || stats != nullptr, "batchnorm1d: eval mode needs running stats");

  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vec mu(C), rstd(C);
  if (train) {
    mu.setZero();
    Vec ss = Vec::Zero(C);
    if (framewise) {
      for (Index bi = 0; bi < B; ++bi) mu += xv.item(bi).rowwise().sum();
      mu /= Scalar(N);
      for (Index bi = 0; bi < B; ++bi)
        ss += (xv.item(bi).colwise() - mu).rowwise().squaredNorm();
    } else {
      mu = xv.mat().colwise().sum().transpose() / Scalar(N);
      ss = (xv.mat().rowwise() - mu.transpose()).colwise().squaredNorm().transpose();
    }
    const Vec var = ss / Scalar(N);
    rstd = (var.array() + Scalar(eps)).rsqrt();
    if (stats != nullptr) {
      stats->mean.vec() = (1 - momentum) * stats->mean.vec() + Scalar(momentum) * mu;
      stats->var.vec() = (1 - momentum) * stats->var.vec() + Scalar(momentum) * var;
    }
  } else {
    mu = stats->mean.vec();
    rstd = (stats->var.vec().array() + Scalar(eps)).rsqrt();
  }

  // y = scale * x + shift with scale = gamma*rstd, shift = beta - mu*scale.
  const Vec scale = gv.vec().cwiseProduct(rstd);
  const Vec shift = bv.vec() - mu.cwiseProduct(scale);
  Tensor<Scalar> y(xv.shape());
  if (framewise) {
    for (Index bi = 0; bi < B; ++bi)
      y.item(bi) = ((xv.item(bi).array().colwise() * scale.array()).colwise() +
                    shift.array()).matrix();
  } else {
    y.mat() = ((xv.mat().array().rowwise() * scale.transpose().array()).rowwise() +
               shift.transpose().array()).matrix();
  }

  Tensor<Scalar> mu_t({C}), rstd_t({C});
  mu_t.vec() = mu;
  rstd_t.vec() = rstd;
  const int xid = x.id, gid = gamma.id, bid = beta.id;
  return g.make_node(std::move(y), {xid, gid, bid},
                     [xid, gid, bid, train, framewise, mu_t, rstd_t](
                         Graph<Scalar>& gr, int self) {
    const Tensor<Scalar>& dy = gr.grad(self);
    const Tensor<Scalar>& xv = gr.value(xid);
    const Tensor<Scalar>& gv = gr.value(gid);
    const Index B = xv.dim(0), C = xv.dim(1);
    const Index T = framewise ? xv.dim(2) : 1;
    const Index N = B * T;
    const Vec mu = mu_t.vec();
    const Vec rstd = rstd_t.vec();

    using Mat = typename Tensor<Scalar>::MatrixRM;
    // Per-channel reductions over batch x time.
    Vec sum_dy = Vec::Zero(C), sum_dy_xhat = Vec::Zero(C);
    auto xhat_item = [&](Index bi) -> Mat {
      return ((xv.item(bi).colwise() - mu).array().colwise() * rstd.array())
          .matrix();
    };
    if (framewise) {
      for (Index bi = 0; bi < B; ++bi) {
        sum_dy += dy.item(bi).rowwise().sum();
        sum_dy_xhat +=
            (dy.item(bi).array() * xhat_item(bi).array()).rowwise().sum().matrix();
      }
    } else {
      sum_dy = dy.mat().colwise().sum().transpose();
      const Mat xhat = ((xv.mat().rowwise() - mu.transpose()).array().rowwise() *
                        rstd.transpose().array()).matrix();
      sum_dy_xhat = (dy.mat().array() * xhat.array()).colwise().sum().transpose();
    }
    if (gr.requires_grad(gid)) gr.grad_mut(gid).vec() += sum_dy_xhat;
    if (gr.requires_grad(bid)) gr.grad_mut(bid).vec() += sum_dy;
    if (gr.requires_grad(xid)) {
      Tensor<Scalar>& dx = gr.grad_mut(xid);
      const Vec grstd = gv.vec().cwiseProduct(rstd);
      if (train) {
        const Vec m1 = sum_dy / Scalar(N);
        const Vec m2 = sum_dy_xhat / Scalar(N);
        if (framewise) {
          for (Index bi = 0; bi < B; ++bi) {
            dx.item(bi).array() +=
                (((dy.item(bi).colwise() - m1).array() -
                  xhat_item(bi).array().colwise() * m2.array()).colwise() *
                 grstd.array());
          }
        } else {
          const Mat xhat =
              ((xv.mat().rowwise() - mu.transpose()).array().rowwise() *
               rstd.transpose().array()).matrix();
          dx.mat().array() +=
              (((dy.mat().rowwise() - m1.transpose()).array() -
                xhat.array().rowwise() * m2.transpose().array()).rowwise() *
               grstd.transpose().array());
        }
      } else {
        if (framewise) {
          for (Index bi = 0; bi < B; ++bi)
            dx.item(bi).array() += dy.item(bi).array().colwise() * grstd.array();
        } else {
          dx.mat().array() +=
              dy.mat().array().rowwise() * grstd.transpose().array();
        }
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) {
  Graph<Scalar>& g = *x.graph;
  Tensor<Scalar> y(x.value().shape());
  y.array() = x.value().array().max(Scalar(0));
  const int xid = x.id;
  return g.make_node(std::move(y), {xid}, [xid](Graph<Scalar>& gr, int self) {
    if (!gr.requires_grad(xid)) return;
    const auto& dy = gr.grad(self);
    gr.grad_mut(xid).array() +=
        dy.array() * (gr.value(xid).array() > Scalar(0)).template cast<Scalar>();
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> x) {
  Graph<Scalar>& g = *x.graph;
  Tensor<Scalar> y(x.value().shape());
  // logistic(x) = (1 + tanh(x/2)) / 2, stable for large |x|
  y.array() = (Scalar(1) + (x.value().array() * Scalar(0.5)).tanh()) * Scalar(0.5);
  const int xid = x.id;
  return g.make_node(std::move(y), {xid}, [xid](Graph<Scalar>& gr, int self) {
    if (!gr.requires_grad(xid)) return;
    const auto yv = gr.value(self).array();
    gr.grad_mut(xid).array() += gr.grad(self).array() * yv * (Scalar(1) - yv);
  });
}

// Softmax across the time axis, separately for every (item, channel) row,
// with the per-row max subtracted before exponentiation.
template <typename Scalar>
Var<Scalar> softmax_over_time(Var<Scalar> x) {
  Graph<Scalar>& g = *x.graph;
  const Tensor<Scalar>& xv = x.value();
  ECAPA_CHECK(xv.ndim() == 3, "softmax_over_time: input must be [B,C,T], got "
                                  << shape_str(xv.shape()));
  const Index B = xv.dim(0), C = xv.dim(1);
  Tensor<Scalar> y(xv.shape());
  for (Index bi = 0; bi < B; ++bi) {
    auto xb = xv.item(bi);
    auto yb = y.item(bi);
    for (Index c = 0; c < C; ++c) {
      const Scalar m = xb.row(c).maxCoeff();
      yb.row(c) = (xb.row(c).array() - m).exp();
      yb.row(c) /= yb.row(c).sum();
    }
  }
  const int xid = x.id;
  return g.make_node(std::move(y), {xid}, [xid](Graph<Scalar>& gr, int self) {
    if (!gr.requires_grad(xid)) return;
    const Tensor<Scalar>& alpha = gr.value(self);
    const Tensor<Scalar>& dy = gr.grad(self);
    Tensor<Scalar>& dx = gr.grad_mut(xid);
    const Index B = alpha.dim(0), C = alpha.dim(1);
    for (Index bi = 0; bi < B; ++bi) {
      auto ab = alpha.item(bi);
      auto dyb = dy.item(bi);
      auto dxb = dx.item(bi);
      for (Index c = 0; c < C; ++c) {
        const Scalar dot = (dyb.row(c).array() * ab.row(c).array()).sum();
        dxb.row(c).array() += ab.row(c).array() * (dyb.row(c).array() - dot);
      }
    }
  });
}

// [B,C,T] -> [B,C] mean over the time axis.
template <typename Scalar>
Var<Scalar> mean_over_time(Var<Scalar> x) {
  Graph<Scalar>& g = *x.graph;
  const Tensor<Scalar>& xv = x.value();
  ECAPA_CHECK(xv.ndim() == 3, "mean_over_time: input must be [B,C,T], got "
                                  << shape_str(xv.shape()));
  const Index B = xv.dim(0), T = xv.dim(2);
  Tensor<Scalar> y({B, xv.dim(1)});
  for (Index bi = 0; bi < B; ++bi)
    y.mat().row(bi) = xv.item(bi).rowwise().mean().transpose();
  const int xid = x.id;
  return g.make_node(std::move(y), {xid}, [xid, T](Graph<Scalar>& gr, int self) {
    if (!gr.requires_grad(xid)) return;
    const Tensor<Scalar>& dy = gr.grad(self);
    Tensor<Scalar>& dx = gr.grad_mut(xid);
    for (Index bi = 0; bi < dy.dim(0); ++bi)
      dx.item(bi).colwise() += (dy.mat().row(bi).transpose() / Scalar(T)).eval();
  });
}

// [B,C,T] -> [B,C] sum over the time axis.
template <typename Scalar>
Var<Scalar> sum_over_time(Var<Scalar> x) {
  Graph<Scalar>& g = *x.graph;
  const Tensor<Scalar>& xv = x.value();
  ECAPA_CHECK(xv.ndim() == 3, "sum_over_time: input must be [B,C,T], got "
                                  << shape_str(xv.shape()));
  const Index B = xv.dim(0);
  Tensor<Scalar> y({B, xv.dim(1)});
  for (Index bi = 0; bi < B; ++bi)
    y.mat().row(bi) = xv.item(bi).rowwise().sum().transpose();
  const int xid = x.id;
  return g.make_node(std::move(y), {xid}, [xid](Graph<Scalar>& gr, int self) {
    if (!gr.requires_grad(xid)) return;
    const Tensor<Scalar>& dy = gr.grad(self);
    Tensor<Scalar>& dx = gr.grad_mut(xid);
    for (Index bi = 0; bi < dy.dim(0); ++bi)
      dx.item(bi).colwise() += dy.mat().row(bi).transpose().eval();
  });
}

// [B,C] -> [B,C,T], every frame a copy of the input vector.
template <typename Scalar>
Var<Scalar> broadcast_over_time(Var<Scalar> x, Index T) {
  Graph<Scalar>& g = *x.graph;
  const Tensor<Scalar>& xv = x.value();
  ECAPA_CHECK(xv.ndim() == 2, "broadcast_over_time: input must be [B,C], got "
                                  << shape_str(xv.shape()));
  ECAPA_CHECK(T >= 1, "broadcast_over_time: T must be positive");
  const Index B = xv.dim(0);
  Tensor<Scalar> y({B, xv.dim(1), T});
  for (Index bi = 0; bi < B; ++bi)
    y.item(bi).colwise() = xv.mat().row(bi).transpose();
  const int xid = x.id;
  return g.make_node(std::move(y), {xid}, [xid](Graph<Scalar>& gr, int self) {
    if (!gr.requires_grad(xid)) return;
    const Tensor<Scalar>& dy = gr.grad(self);
    Tensor<Scalar>& dx = gr.grad_mut(xid);
    for (Index bi = 0; bi < dy.dim(0); ++bi)
      dx.mat().row(bi) += dy.item(bi).rowwise().sum().transpose();
  });
}

// y[b,c,t] = x[b,c,t] * s[b,c]; the channel-wise rescaling of the SE block.
template <typename Scalar>
Var<Scalar> scale_channels(Var<Scalar> x, Var<Scalar> s) {
  Graph<Scalar>& g = *x.graph;
  const Tensor<Scalar>& xv = x.value();
  const Tensor<Scalar>& sv = s.value();
  ECAPA_CHECK(xv.ndim() == 3 && sv.ndim() == 2 && xv.dim(0) == sv.dim(0) &&
                  xv.dim(1) == sv.dim(1),
              "scale_channels: shapes " << shape_str(xv.shape()) << " and "
                                        << shape_str(sv.shape()) << " do not agree");
  const Index B = xv.dim(0);
  Tensor<Scalar> y(xv.shape());
  for (Index bi = 0; bi < B; ++bi)
    y.item(bi) = (xv.item(bi).array().colwise() *
                  sv.mat().row(bi).transpose().array()).matrix();
  const int xid = x.id, sid = s.id;
  return g.make_node(std::move(y), {xid, sid}, [xid, sid](Graph<Scalar>& gr, int self) {
    const Tensor<Scalar>& dy = gr.grad(self);
    const Tensor<Scalar>& xv = gr.value(xid);
    const Tensor<Scalar>& sv = gr.value(sid);
    for (Index bi = 0; bi < dy.dim(0); ++bi) {
      if (gr.requires_grad(xid))
        gr.grad_mut(xid).item(bi).array() +=
            dy.item(bi).array().colwise() * sv.mat().row(bi).transpose().array();
      if (gr.requires_grad(sid))
        gr.grad_mut(sid).mat().row(bi) +=
            (dy.item(bi).array() * xv.item(bi).array()).rowwise().sum().matrix().transpose();
    }
  });
}

namespace detail {

template <typename Scalar>
void check_same_shape(const Var<Scalar>& x, const Var<Scalar>& y, const char* name) {
  ECAPA_CHECK(x.value().same_shape(y.value()),
              name << ": shape mismatch " << shape_str(x.value().shape()) << " vs "
                   << shape_str(y.value().shape()));
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> add(Var<Scalar> x, Var<Scalar> y) {
  detail::check_same_shape(x, y, "add");
  Graph<Scalar>& g = *x.graph;
  Tensor<Scalar> out(x.value().shape());
  out.array() = x.value().array() + y.value().array();
  const int xid = x.id, yid = y.id;
  return g.make_node(std::move(out), {xid, yid},
                     [xid, yid](Graph<Scalar>& gr, int self) {
    const Tensor<Scalar>& dy = gr.grad(self);
    if (gr.requires_grad(xid)) gr.grad_mut(xid).array() += dy.array();
    if (gr.requires_grad(yid)) gr.grad_mut(yid).array() += dy.array();
  });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> x, Var<Scalar> y) {
  detail::check_same_shape(x, y, "sub");
  Graph<Scalar>& g = *x.graph;
  Tensor<Scalar> out(x.value().shape());
  out.array() = x.value().array() - y.value().array();
  const int xid = x.id, yid = y.id;
  return g.make_node(std::move(out), {xid, yid},
                     [xid, yid](Graph<Scalar>& gr, int self) {
    const Tensor<Scalar>& dy = gr.grad(self);
    if (gr.requires_grad(xid)) gr.grad_mut(xid).array() += dy.array();
    if (gr.requires_grad(yid)) gr.grad_mut(yid).array() -= dy.array();
  });
}

template <typename Scalar>
Var<Scalar> mul(Var<Scalar> x, Var<Scalar> y) {
  detail::check_same_shape(x, y, "mul");
  Graph<Scalar>& g = *x.graph;
  Tensor<Scalar> out(x.value().shape());
  out.array() = x.value().array() * y.value().array();
  const int xid = x.id, yid = y.id;
  return g.make_node(std::move(out), {xid, yid},
                     [xid, yid](Graph<Scalar>& gr, int self) {
    const Tensor<Scalar>& dy = gr.grad(self);
    if (gr.requires_grad(xid))
      gr.grad_mut(xid).array() += dy.array() * gr.value(yid).array();
    if (gr.requires_grad(yid))
      gr.grad_mut(yid).array() += dy.array() * gr.value(xid).array();
  });
}

// y = sqrt(max(x, eps)); gradient is zero where the clamp is active.
template <typename Scalar>
Var<Scalar> sqrt_clamped(Var<Scalar> x, double eps) {
  Graph<Scalar>& g = *x.graph;
  Tensor<Scalar> y(x.value().shape());
  y.array() = x.value().array().max(Scalar(eps)).sqrt();
  const int xid = x.id;
  return g.make_node(std::move(y), {xid}, [xid, eps](Graph<Scalar>& gr, int self) {
    if (!gr.requires_grad(xid)) return;
    gr.grad_mut(xid).array() +=
        gr.grad(self).array() *
        (gr.value(xid).array() > Scalar(eps)).template cast<Scalar>() /
        (Scalar(2) * gr.value(self).array());
  });
}

// Concatenation along the channel/feature axis (axis 1 of [B,C,T] or [B,F]).
template <typename Scalar>
Var<Scalar> concat_channels(const std::vector<Var<Scalar>>& parts) {
  ECAPA_CHECK(!parts.empty(), "concat_channels: no inputs");
  Graph<Scalar>& g = *parts[0].graph;
  const int nd = parts[0].value().ndim();
  ECAPA_CHECK(nd == 2 || nd == 3, "concat_channels: inputs must be [B,C,T] or [B,F]");
  const Index B = parts[0].value().dim(0);
  const Index T = nd == 3 ? parts[0].value().dim(2) : 1;
  Index ctotal = 0;
  std::vector<int> ids;
  for (const auto& p : parts) {
    const auto& v = p.value();
    ECAPA_CHECK(v.ndim() == nd && v.dim(0) == B && (nd == 2 || v.dim(2) == T),
                "concat_channels: incompatible input " << shape_str(v.shape()));
    ctotal += v.dim(1);
    ids.push_back(p.id);
  }
  Tensor<Scalar> y(nd == 3 ? Shape{B, ctotal, T} : Shape{B, ctotal});
  Index off = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    const Index c = v.dim(1);
    if (nd == 3) {
      for (Index bi = 0; bi < B; ++bi)
        y.item(bi).middleRows(off, c) = v.item(bi);
    } else {
      y.mat().middleCols(off, c) = v.mat();
    }
    off += c;
  }
  return g.make_node(std::move(y), ids, [ids, nd](Graph<Scalar>& gr, int self) {
    const Tensor<Scalar>& dy = gr.grad(self);
    const Index B = dy.dim(0);
    Index off = 0;
    for (int id : ids) {
      const Index c = gr.value(id).dim(1);
      if (gr.requires_grad(id)) {
        Tensor<Scalar>& dx = gr.grad_mut(id);
        if (nd == 3) {
          for (Index bi = 0; bi < B; ++bi)
            dx.item(bi) += dy.item(bi).middleRows(off, c);
        } else {
          dx.mat() += dy.mat().middleCols(off, c);
        }
      }
      off += c;
    }
  });
}

// Channel slice [c0, c0+len) of a [B,C,T] map.
template <typename Scalar>
Var<Scalar> slice_channels(Var<Scalar> x, Index c0, Index len) {
  Graph<Scalar>& g = *x.graph;
  const Tensor<Scalar>& xv = x.value();
  ECAPA_CHECK(xv.ndim() == 3, "slice_channels: input must be [B,C,T], got "
                                  << shape_str(xv.shape()));
  ECAPA_CHECK(c0 >= 0 && len >= 1 && c0 + len <= xv.dim(1),
              "slice_channels: range [" << c0 << "," << c0 + len << ") out of "
                                        << xv.dim(1) << " channels");
  const Index B = xv.dim(0);
  Tensor<Scalar> y({B, len, xv.dim(2)});
  for (Index bi = 0; bi < B; ++bi) y.item(bi) = xv.item(bi).middleRows(c0, len);
  const int xid = x.id;
  return g.make_node(std::move(y), {xid}, [xid, c0, len](Graph<Scalar>& gr, int self) {
    if (!gr.requires_grad(xid)) return;
    const Tensor<Scalar>& dy = gr.grad(self);
    Tensor<Scalar>& dx = gr.grad_mut(xid);
    for (Index bi = 0; bi < dy.dim(0); ++bi)
      dx.item(bi).middleRows(c0, len) += dy.item(bi);
  });
}

// [B,1,T] -> [B,C,T] by repeating the single channel (shared temporal
// attention applied to every channel).
template <typename Scalar>
Var<Scalar> tile_channels(Var<Scalar> x, Index channels) {
  Graph<Scalar>& g = *x.graph;
  const Tensor<Scalar>& xv = x.value();
  ECAPA_CHECK(xv.ndim() == 3 && xv.dim(1) == 1,
              "tile_channels: input must be [B,1,T], got " << shape_str(xv.shape()));
  const Index B = xv.dim(0);
  Tensor<Scalar> y({B, channels, xv.dim(2)});
  for (Index bi = 0; bi < B; ++bi)
    y.item(bi).rowwise() = xv.item(bi).row(0);
  const int xid = x.id;
  return g.make_node(std::move(y), {xid}, [xid](Graph<Scalar>& gr, int self) {
    if (!gr.requires_grad(xid)) return;
    const Tensor<Scalar>& dy = gr.grad(self);
    Tensor<Scalar>& dx = gr.grad_mut(xid);
    for (Index bi = 0; bi < dy.dim(0); ++bi)
      dx.item(bi).row(0) += dy.item(bi).colwise().sum();
  });
}

// Sum of all entries, as a [1] scalar.
template <typename Scalar>
Var<Scalar> sum(Var<Scalar> x) {
  Graph<Scalar>& g = *x.graph;
  Tensor<Scalar> y({1});
  y(0) = x.value().array().sum();
  const int xid = x.id;
  return g.make_node(std::move(y), {xid}, [xid](Graph<Scalar>& gr, int self) {
    if (!gr.requires_grad(xid)) return;
    gr.grad_mut(xid).array() += gr.grad(self)(0);
  });
}

// <x, w> against a fixed weighting tensor; handy for building test losses.
template <typename Scalar>
Var<Scalar> dot_const(Var<Scalar> x, const Tensor<Scalar>& w) {
  Graph<Scalar>& g = *x.graph;
  ECAPA_CHECK(x.value().same_shape(w), "dot_const: shape mismatch");
  Tensor<Scalar> y({1});
  y(0) = (x.value().array() * w.array()).sum();
  const int xid = x.id;
  return g.make_node(std::move(y), {xid}, [xid, w](Graph<Scalar>& gr, int self) {
    if (!gr.requires_grad(xid)) return;
    gr.grad_mut(xid).array() += gr.grad(self)(0) * w.array();
  });
}

// y = c * x for a fixed scalar c.
template <typename Scalar>
Var<Scalar> scale(Var<Scalar> x, double c) {
  Graph<Scalar>& g = *x.graph;
  Tensor<Scalar> y(x.value().shape());
  y.array() = x.value().array() * Scalar(c);
  const int xid = x.id;
  return g.make_node(std::move(y), {xid}, [xid, c](Graph<Scalar>& gr, int self) {
    if (!gr.requires_grad(xid)) return;
    gr.grad_mut(xid).array() += gr.grad(self).array() * Scalar(c);
  });
}

}  // namespace ecapa

#endif  // ECAPA_OPS_HPP_
