/**
 * Copyright 2026 The bandflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "bandflow/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "bandflow/kernels.hpp"

namespace bandflow {
namespace {

constexpr double kLnEps = 1e-6;
constexpr double kGrnEps = 1e-6;

Var finish(std::vector<Var> parents, Tensor value,
           std::function<void(Node&)> backfn) {
  auto out = std::make_shared<Node>();
  out->value = std::move(value);
  if (grad_enabled()) {
    bool need = false;
    for (const auto& p : parents) need = need || p->requires_grad;
    if (need) {
      out->requires_grad = true;
      out->parents = std::move(parents);
      out->backfn = std::move(backfn);
    }
  }
  return out;
}

// Accumulation helper: adds src into the parent's gradient buffer.
void acc_into(Node& parent, const double* src, long n) {
  double* g = parent.ensure_grad().data();
  for (long i = 0; i < n; ++i) g[i] += src[i];
}

int last_dim(const Tensor& t) { return t.shape().back(); }

void expect_rank(const Var& v, int rank, const char* op) {
  if (v->value.rank() != rank) {
    throw std::invalid_argument(std::string(op) + ": expected rank " +
                                std::to_string(rank) + " input, got " +
                                v->value.shape_str());
  }
}

}  // namespace

bool& grad_enabled() {
  thread_local bool enabled = true;
  return enabled;
}

Tensor& Node::ensure_grad() {
  if (!has_grad()) grad = Tensor(value.shape());
  return grad;
}

Var constant(Tensor value) {
  auto out = std::make_shared<Node>();
  out->value = std::move(value);
  return out;
}

Var param(Tensor value) {
  auto out = std::make_shared<Node>();
  out->value = std::move(value);
  out->requires_grad = true;
  return out;
}

void backward(const Var& loss) {
  if (loss->value.numel() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar node");
  }
  // Post-order DFS over parent edges gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  visited.insert(loss.get());
  while (!stack.empty()) {
    Node* n = stack.back().first;
    size_t i = stack.back().second;
    if (i < n->parents.size()) {
      ++stack.back().second;
      Node* p = n->parents[i].get();
      if (p->requires_grad && visited.insert(p).second && !p->parents.empty()) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  loss->ensure_grad().fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backfn && n->has_grad()) n->backfn(*n);
  }
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "add");
  Tensor out(a->value.shape());
  const long n = out.numel();
  const double* pa = a->value.data();
  const double* pb = b->value.data();
  double* po = out.data();
  for (long i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
  return finish({a, b}, std::move(out), [](Node& o) {
    const long n = o.value.numel();
    if (o.parents[0]->requires_grad) acc_into(*o.parents[0], o.grad.data(), n);
    if (o.parents[1]->requires_grad) acc_into(*o.parents[1], o.grad.data(), n);
  });
}

Var scale(const Var& a, double s) {
  Tensor out(a->value.shape());
  const long n = out.numel();
  const double* pa = a->value.data();
  double* po = out.data();
  for (long i = 0; i < n; ++i) po[i] = pa[i] * s;
  return finish({a}, std::move(out), [s](Node& o) {
    if (!o.parents[0]->requires_grad) return;
    double* g = o.parents[0]->ensure_grad().data();
    const double* go = o.grad.data();
    const long n = o.value.numel();
    for (long i = 0; i < n; ++i) g[i] += s * go[i];
  });
}

Var concat_c(const Var& a, const Var& b) {
  expect_rank(a, 3, "concat_c");
  expect_rank(b, 3, "concat_c");
  const auto& sa = a->value.shape();
  const auto& sb = b->value.shape();
  if (sa[0] != sb[0] || sa[1] != sb[1]) {
    throw std::invalid_argument("concat_c: spatial shape mismatch");
  }
  const int f = sa[0], t = sa[1], ca = sa[2], cb = sb[2];
  Tensor out({f, t, ca + cb});
  const long pos = static_cast<long>(f) * t;
  for (long p = 0; p < pos; ++p) {
    std::memcpy(out.data() + p * (ca + cb), a->value.data() + p * ca,
                sizeof(double) * ca);
    std::memcpy(out.data() + p * (ca + cb) + ca, b->value.data() + p * cb,
                sizeof(double) * cb);
  }
  return finish({a, b}, std::move(out), [f, t, ca, cb](Node& o) {
    const long pos = static_cast<long>(f) * t;
    const double* go = o.grad.data();
    if (o.parents[0]->requires_grad) {
      double* ga = o.parents[0]->ensure_grad().data();
      for (long p = 0; p < pos; ++p) {
        const double* src = go + p * (ca + cb);
        for (int c = 0; c < ca; ++c) ga[p * ca + c] += src[c];
      }
    }
    if (o.parents[1]->requires_grad) {
      double* gb = o.parents[1]->ensure_grad().data();
      for (long p = 0; p < pos; ++p) {
        const double* src = go + p * (ca + cb) + ca;
        for (int c = 0; c < cb; ++c) gb[p * cb + c] += src[c];
      }
    }
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, int sf, int st, int pf,
           int pt) {
  expect_rank(x, 3, "conv2d");
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  if (w->value.rank() != 4 || ws[2] != xs[2]) {
    throw std::invalid_argument("conv2d: weight shape mismatch");
  }
  const int f = xs[0], t = xs[1], cin = xs[2];
  const int kf = ws[0], kt = ws[1], cout = ws[3];
  const int of = conv_out_dim(f, kf, sf, pf);
  const int ot = conv_out_dim(t, kt, st, pt);
  const long rows = static_cast<long>(of) * ot;
  const long patch = static_cast<long>(kf) * kt * cin;

  Tensor col({static_cast<int>(rows), static_cast<int>(patch)});
  im2col(x->value.data(), f, t, cin, kf, kt, sf, st, pf, pt, of, ot,
         col.data());
  Tensor out({of, ot, cout});
  gemm_nn(col.data(), w->value.data(), out.data(), static_cast<int>(rows),
          static_cast<int>(patch), cout, false);
  {
    const double* bias = b->value.data();
    double* po = out.data();
    for (long r = 0; r < rows; ++r) {
      for (int c = 0; c < cout; ++c) po[r * cout + c] += bias[c];
    }
  }
  return finish(
      {x, w, b}, std::move(out),
      [f, t, cin, kf, kt, cout, sf, st, pf, pt, of, ot](Node& o) {
        const long rows = static_cast<long>(of) * ot;
        const long patch = static_cast<long>(kf) * kt * cin;
        const Tensor& xv = o.parents[0]->value;
        const Tensor& wv = o.parents[1]->value;
        const double* gy = o.grad.data();
        if (o.parents[1]->requires_grad || o.parents[0]->requires_grad) {
          // The unrolled patch matrix is cheap to rebuild; do not retain it.
          Tensor col({static_cast<int>(rows), static_cast<int>(patch)});
          if (o.parents[1]->requires_grad) {
            im2col(xv.data(), f, t, cin, kf, kt, sf, st, pf, pt, of, ot,
                   col.data());
            gemm_tn(col.data(), gy, o.parents[1]->ensure_grad().data(),
                    static_cast<int>(patch), static_cast<int>(rows), cout,
                    true);
          }
          if (o.parents[0]->requires_grad) {
            Tensor dcol({static_cast<int>(rows), static_cast<int>(patch)});
            gemm_nt(gy, wv.data(), dcol.data(), static_cast<int>(rows), cout,
                    static_cast<int>(patch), false);
            col2im_acc(dcol.data(), f, t, cin, kf, kt, sf, st, pf, pt, of, ot,
                       o.parents[0]->ensure_grad().data());
          }
        }
        if (o.parents[2]->requires_grad) {
          double* gb = o.parents[2]->ensure_grad().data();
          for (long r = 0; r < rows; ++r) {
            for (int c = 0; c < cout; ++c) gb[c] += gy[r * cout + c];
          }
        }
      });
}

Var tconv2x2(const Var& x, const Var& w, const Var& b) {
  expect_rank(x, 3, "tconv2x2");
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  if (w->value.rank() != 4 || ws[0] != xs[2] || ws[1] != 2 || ws[2] != 2) {
    throw std::invalid_argument("tconv2x2: weight must be [Cin,2,2,Cout]");
  }
  const int f = xs[0], t = xs[1], cin = xs[2], cout = ws[3];
  const long rows = static_cast<long>(f) * t;
  Tensor tmp({static_cast<int>(rows), 4 * cout});
  gemm_nn(x->value.data(), w->value.data(), tmp.data(), static_cast<int>(rows),
          cin, 4 * cout, false);
  Tensor out({2 * f, 2 * t, cout});
  const double* bias = b->value.data();
  for (int i = 0; i < f; ++i) {
    for (int j = 0; j < t; ++j) {
      const double* src = tmp.data() + (static_cast<long>(i) * t + j) * 4 * cout;
      for (int df = 0; df < 2; ++df) {
        for (int dt = 0; dt < 2; ++dt) {
          double* dst = out.data() +
                        ((static_cast<long>(2 * i + df)) * (2 * t) +
                         (2 * j + dt)) *
                            cout;
          const double* s = src + (df * 2 + dt) * cout;
          for (int c = 0; c < cout; ++c) dst[c] = s[c] + bias[c];
        }
      }
    }
  }
  return finish({x, w, b}, std::move(out), [f, t, cin, cout](Node& o) {
    const long rows = static_cast<long>(f) * t;
    Tensor dtmp({static_cast<int>(rows), 4 * cout});
    const double* gy = o.grad.data();
    for (int i = 0; i < f; ++i) {
      for (int j = 0; j < t; ++j) {
        double* dst = dtmp.data() + (static_cast<long>(i) * t + j) * 4 * cout;
        for (int df = 0; df < 2; ++df) {
          for (int dt = 0; dt < 2; ++dt) {
            const double* src = gy + ((static_cast<long>(2 * i + df)) *
                                          (2 * t) +
                                      (2 * j + dt)) *
                                         cout;
            std::memcpy(dst + (df * 2 + dt) * cout, src,
                        sizeof(double) * cout);
          }
        }
      }
    }
    if (o.parents[0]->requires_grad) {
      gemm_nt(dtmp.data(), o.parents[1]->value.data(),
              o.parents[0]->ensure_grad().data(), static_cast<int>(rows),
              4 * cout, cin, true);
    }
    if (o.parents[1]->requires_grad) {
      gemm_tn(o.parents[0]->value.data(), dtmp.data(),
              o.parents[1]->ensure_grad().data(), cin,
              static_cast<int>(rows), 4 * cout, true);
    }
    if (o.parents[2]->requires_grad) {
      double* gb = o.parents[2]->ensure_grad().data();
      const long n = o.value.numel();
      for (long i = 0; i < n; ++i) gb[i % cout] += gy[i];
    }
  });
}

Var dwconv7(const Var& x, const Var& w, const Var& b) {
  expect_rank(x, 3, "dwconv7");
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  if (w->value.rank() != 3 || ws[0] != 7 || ws[1] != 7 || ws[2] != xs[2]) {
    throw std::invalid_argument("dwconv7: weight must be [7,7,C]");
  }
  const int f = xs[0], t = xs[1], c = xs[2];
  Tensor out({f, t, c});
  const double* bias = b->value.data();
  double* po = out.data();
  const long n = out.numel();
  for (long i = 0; i < n; ++i) po[i] = bias[i % c];
  const double* px = x->value.data();
  const double* pw = w->value.data();
  for (int df = 0; df < 7; ++df) {
    const int f0 = std::max(0, 3 - df), f1 = std::min(f, f + 3 - df);
    for (int dt = 0; dt < 7; ++dt) {
      const int t0 = std::max(0, 3 - dt), t1 = std::min(t, t + 3 - dt);
      const double* wk = pw + (static_cast<long>(df) * 7 + dt) * c;
      for (int i = f0; i < f1; ++i) {
        const long orow = (static_cast<long>(i) * t) * c;
        const long xrow = (static_cast<long>(i + df - 3) * t) * c;
        for (int j = t0; j < t1; ++j) {
          double* dst = po + orow + static_cast<long>(j) * c;
          const double* src = px + xrow + static_cast<long>(j + dt - 3) * c;
          for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch] * wk[ch];
        }
      }
    }
  }
  return finish({x, w, b}, std::move(out), [f, t, c](Node& o) {
    const double* gy = o.grad.data();
    const double* px = o.parents[0]->value.data();
    const double* pw = o.parents[1]->value.data();
    double* gx = o.parents[0]->requires_grad
                     ? o.parents[0]->ensure_grad().data()
                     : nullptr;
    double* gw = o.parents[1]->requires_grad
                     ? o.parents[1]->ensure_grad().data()
                     : nullptr;
    for (int df = 0; df < 7; ++df) {
      const int f0 = std::max(0, 3 - df), f1 = std::min(f, f + 3 - df);
      for (int dt = 0; dt < 7; ++dt) {
        const int t0 = std::max(0, 3 - dt), t1 = std::min(t, t + 3 - dt);
        const long koff = (static_cast<long>(df) * 7 + dt) * c;
        for (int i = f0; i < f1; ++i) {
          const long orow = (static_cast<long>(i) * t) * c;
          const long xrow = (static_cast<long>(i + df - 3) * t) * c;
          for (int j = t0; j < t1; ++j) {
            const double* g = gy + orow + static_cast<long>(j) * c;
            const long xoff = xrow + static_cast<long>(j + dt - 3) * c;
            if (gx != nullptr) {
              for (int ch = 0; ch < c; ++ch) {
                gx[xoff + ch] += g[ch] * pw[koff + ch];
              }
            }
            if (gw != nullptr) {
              for (int ch = 0; ch < c; ++ch) {
                gw[koff + ch] += g[ch] * px[xoff + ch];
              }
            }
          }
        }
      }
    }
    if (o.parents[2]->requires_grad) {
      double* gb = o.parents[2]->ensure_grad().data();
      const long n = o.value.numel();
      for (long i = 0; i < n; ++i) gb[i % c] += gy[i];
    }
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  const auto& ws = w->value.shape();
  if (w->value.rank() != 2) {
    throw std::invalid_argument("linear: weight must be rank-2");
  }
  const int din = ws[0], dout = ws[1];
  if (last_dim(x->value) != din) {
    throw std::invalid_argument("linear: input last dim " +
                                std::to_string(last_dim(x->value)) +
                                " != " + std::to_string(din));
  }
  const long rows = x->value.numel() / din;
  std::vector<int> oshape = x->value.shape();
  oshape.back() = dout;
  Tensor out(oshape);
  gemm_nn(x->value.data(), w->value.data(), out.data(),
          static_cast<int>(rows), din, dout, false);
  const double* bias = b->value.data();
  double* po = out.data();
  for (long r = 0; r < rows; ++r) {
    for (int c = 0; c < dout; ++c) po[r * dout + c] += bias[c];
  }
  return finish({x, w, b}, std::move(out), [din, dout](Node& o) {
    const long rows = o.value.numel() / dout;
    const double* gy = o.grad.data();
    if (o.parents[0]->requires_grad) {
      gemm_nt(gy, o.parents[1]->value.data(),
              o.parents[0]->ensure_grad().data(), static_cast<int>(rows),
              dout, din, true);
    }
    if (o.parents[1]->requires_grad) {
      gemm_tn(o.parents[0]->value.data(), gy,
              o.parents[1]->ensure_grad().data(), din,
              static_cast<int>(rows), dout, true);
    }
    if (o.parents[2]->requires_grad) {
      double* gb = o.parents[2]->ensure_grad().data();
      for (long r = 0; r < rows; ++r) {
        for (int c = 0; c < dout; ++c) gb[c] += gy[r * dout + c];
      }
    }
  });
}

Var layernorm(const Var& x, const Var& gamma, const Var& beta) {
  const int c = last_dim(x->value);
  if (gamma->value.numel() != c || beta->value.numel() != c) {
    throw std::invalid_argument("layernorm: affine params must have C elems");
  }
  const long rows = x->value.numel() / c;
  Tensor out(x->value.shape());
  Tensor xhat(x->value.shape());
  Tensor inv({static_cast<int>(rows)});
  const double* px = x->value.data();
  const double* pg = gamma->value.data();
  const double* pb = beta->value.data();
  for (long r = 0; r < rows; ++r) {
    const double* xr = px + r * c;
    double mean = 0.0;
    for (int i = 0; i < c; ++i) mean += xr[i];
    mean /= c;
    double var = 0.0;
    for (int i = 0; i < c; ++i) {
      const double d = xr[i] - mean;
      var += d * d;
    }
    var /= c;
    const double is = 1.0 / std::sqrt(var + kLnEps);
    inv.data()[r] = is;
    double* hr = xhat.data() + r * c;
    double* orow = out.data() + r * c;
    for (int i = 0; i < c; ++i) {
      hr[i] = (xr[i] - mean) * is;
      orow[i] = pg[i] * hr[i] + pb[i];
    }
  }
  return finish({x, gamma, beta}, std::move(out),
                [c, xhat = std::move(xhat), inv = std::move(inv)](Node& o) {
                  const long rows = o.value.numel() / c;
                  const double* gy = o.grad.data();
                  const double* pg = o.parents[1]->value.data();
                  if (o.parents[0]->requires_grad) {
                    double* gx = o.parents[0]->ensure_grad().data();
                    for (long r = 0; r < rows; ++r) {
                      const double* g = gy + r * c;
                      const double* h = xhat.data() + r * c;
                      const double is = inv.data()[r];
                      double s1 = 0.0, s2 = 0.0;
                      for (int i = 0; i < c; ++i) {
                        const double dh = g[i] * pg[i];
                        s1 += dh;
                        s2 += dh * h[i];
                      }
                      s1 /= c;
                      s2 /= c;
                      for (int i = 0; i < c; ++i) {
                        const double dh = g[i] * pg[i];
                        gx[r * c + i] += is * (dh - s1 - h[i] * s2);
                      }
                    }
                  }
                  if (o.parents[1]->requires_grad) {
                    double* gg = o.parents[1]->ensure_grad().data();
                    for (long r = 0; r < rows; ++r) {
                      for (int i = 0; i < c; ++i) {
                        gg[i] += gy[r * c + i] * xhat.data()[r * c + i];
                      }
                    }
                  }
                  if (o.parents[2]->requires_grad) {
                    double* gb = o.parents[2]->ensure_grad().data();
                    for (long r = 0; r < rows; ++r) {
                      for (int i = 0; i < c; ++i) gb[i] += gy[r * c + i];
                    }
                  }
                });
}

Var gelu(const Var& x) {
  const long n = x->value.numel();
  Tensor out(x->value.shape());
  Tensor slope(x->value.shape());  // dy/dx, saved for backward
  const double* px = x->value.data();
  double* po = out.data();
  double* ps = slope.data();
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  for (long i = 0; i < n; ++i) {
    const double v = px[i];
    const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
    po[i] = v * cdf;
    ps[i] = cdf + v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
  }
  return finish({x}, std::move(out), [slope = std::move(slope)](Node& o) {
    if (!o.parents[0]->requires_grad) return;
    double* gx = o.parents[0]->ensure_grad().data();
    const double* gy = o.grad.data();
    const double* ps = slope.data();
    const long n = o.value.numel();
    for (long i = 0; i < n; ++i) gx[i] += gy[i] * ps[i];
  });
}

Var grn(const Var& x, const Var& gamma, const Var& beta) {
  expect_rank(x, 3, "grn");
  const auto& xs = x->value.shape();
  const int f = xs[0], t = xs[1], c = xs[2];
  if (gamma->value.numel() != c || beta->value.numel() != c) {
    throw std::invalid_argument("grn: affine params must have C elems");
  }
  const long pos = static_cast<long>(f) * t;
  Tensor gx_norm({c});  // per-channel spatial L2 norm
  const double* px = x->value.data();
  for (int ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (long p = 0; p < pos; ++p) {
      const double v = px[p * c + ch];
      acc += v * v;
    }
    gx_norm.data()[ch] = std::sqrt(acc);
  }
  double mean = 0.0;
  for (int ch = 0; ch < c; ++ch) mean += gx_norm.data()[ch];
  mean = mean / c + kGrnEps;
  Tensor nx({c});
  for (int ch = 0; ch < c; ++ch) nx.data()[ch] = gx_norm.data()[ch] / mean;

  Tensor out(x->value.shape());
  const double* pg = gamma->value.data();
  const double* pb = beta->value.data();
  double* po = out.data();
  for (long p = 0; p < pos; ++p) {
    const double* xr = px + p * c;
    double* orow = po + p * c;
    for (int ch = 0; ch < c; ++ch) {
      orow[ch] = pg[ch] * xr[ch] * nx.data()[ch] + pb[ch] + xr[ch];
    }
  }
  return finish(
      {x, gamma, beta}, std::move(out),
      [f, t, c, gx_norm = std::move(gx_norm), nx = std::move(nx),
       mean](Node& o) {
        const long pos = static_cast<long>(f) * t;
        const double* gy = o.grad.data();
        const double* px = o.parents[0]->value.data();
        const double* pg = o.parents[1]->value.data();
        // P[ch] = sum over positions of g*gamma*x (sensitivity to nx).
        std::vector<double> pch(static_cast<size_t>(c), 0.0);
        for (long p = 0; p < pos; ++p) {
          for (int ch = 0; ch < c; ++ch) {
            pch[ch] += gy[p * c + ch] * pg[ch] * px[p * c + ch];
          }
        }
        if (o.parents[0]->requires_grad) {
          double dot = 0.0;
          for (int ch = 0; ch < c; ++ch) dot += pch[ch] * gx_norm.data()[ch];
          std::vector<double> qch(static_cast<size_t>(c));
          for (int ch = 0; ch < c; ++ch) {
            qch[ch] = pch[ch] / mean - dot / (mean * mean * c);
            const double norm = gx_norm.data()[ch];
            qch[ch] = norm > 0.0 ? qch[ch] / norm : 0.0;
          }
          double* gx = o.parents[0]->ensure_grad().data();
          for (long p = 0; p < pos; ++p) {
            for (int ch = 0; ch < c; ++ch) {
              gx[p * c + ch] += gy[p * c + ch] * (pg[ch] * nx.data()[ch] + 1.0) +
                                qch[ch] * px[p * c + ch];
            }
          }
        }
        if (o.parents[1]->requires_grad) {
          double* gg = o.parents[1]->ensure_grad().data();
          for (long p = 0; p < pos; ++p) {
            for (int ch = 0; ch < c; ++ch) {
              gg[ch] += gy[p * c + ch] * px[p * c + ch] * nx.data()[ch];
            }
          }
        }
        if (o.parents[2]->requires_grad) {
          double* gb = o.parents[2]->ensure_grad().data();
          for (long p = 0; p < pos; ++p) {
            for (int ch = 0; ch < c; ++ch) gb[ch] += gy[p * c + ch];
          }
        }
      });
}

Var add_vec_c(const Var& x, const Var& v) {
  const int c = last_dim(x->value);
  if (v->value.numel() != c) {
    throw std::invalid_argument("add_vec_c: vector must match channel dim");
  }
  const long rows = x->value.numel() / c;
  Tensor out(x->value.shape());
  const double* px = x->value.data();
  const double* pv = v->value.data();
  double* po = out.data();
  for (long r = 0; r < rows; ++r) {
    for (int i = 0; i < c; ++i) po[r * c + i] = px[r * c + i] + pv[i];
  }
  return finish({x, v}, std::move(out), [c](Node& o) {
    const long rows = o.value.numel() / c;
    const double* gy = o.grad.data();
    if (o.parents[0]->requires_grad) {
      acc_into(*o.parents[0], gy, o.value.numel());
    }
    if (o.parents[1]->requires_grad) {
      double* gv = o.parents[1]->ensure_grad().data();
      for (long r = 0; r < rows; ++r) {
        for (int i = 0; i < c; ++i) gv[i] += gy[r * c + i];
      }
    }
  });
}

Var add_rows_fc(const Var& x, const Var& r) {
  expect_rank(x, 3, "add_rows_fc");
  expect_rank(r, 2, "add_rows_fc");
  const auto& xs = x->value.shape();
  const int f = xs[0], t = xs[1], c = xs[2];
  if (r->value.shape()[0] != f || r->value.shape()[1] != c) {
    throw std::invalid_argument("add_rows_fc: rows must be [F,C]");
  }
  Tensor out(x->value.shape());
  const double* px = x->value.data();
  const double* pr = r->value.data();
  double* po = out.data();
  for (int i = 0; i < f; ++i) {
    const double* row = pr + static_cast<long>(i) * c;
    for (int j = 0; j < t; ++j) {
      const long off = (static_cast<long>(i) * t + j) * c;
      for (int ch = 0; ch < c; ++ch) po[off + ch] = px[off + ch] + row[ch];
    }
  }
  return finish({x, r}, std::move(out), [f, t, c](Node& o) {
    const double* gy = o.grad.data();
    if (o.parents[0]->requires_grad) {
      acc_into(*o.parents[0], gy, o.value.numel());
    }
    if (o.parents[1]->requires_grad) {
      double* gr = o.parents[1]->ensure_grad().data();
      for (int i = 0; i < f; ++i) {
        for (int j = 0; j < t; ++j) {
          const long off = (static_cast<long>(i) * t + j) * c;
          for (int ch = 0; ch < c; ++ch) {
            gr[static_cast<long>(i) * c + ch] += gy[off + ch];
          }
        }
      }
    }
  });
}

Var film_freq(const Var& c, const Var& gb) {
  expect_rank(c, 2, "film_freq");
  expect_rank(gb, 2, "film_freq");
  const int t = c->value.shape()[0];
  const int d = c->value.shape()[1];
  const int f = gb->value.shape()[0];
  if (gb->value.shape()[1] != 2 * d) {
    throw std::invalid_argument("film_freq: expected [F,2D] scale/shift rows");
  }
  Tensor out({f, t, d});
  const double* pc = c->value.data();
  const double* pgb = gb->value.data();
  double* po = out.data();
  for (int i = 0; i < f; ++i) {
    const double* g = pgb + static_cast<long>(i) * 2 * d;
    const double* s = g + d;
    for (int j = 0; j < t; ++j) {
      const double* cr = pc + static_cast<long>(j) * d;
      double* orow = po + (static_cast<long>(i) * t + j) * d;
      for (int k = 0; k < d; ++k) orow[k] = cr[k] * (1.0 + g[k]) + s[k];
    }
  }
  return finish({c, gb}, std::move(out), [f, t, d](Node& o) {
    const double* gy = o.grad.data();
    const double* pc = o.parents[0]->value.data();
    const double* pgb = o.parents[1]->value.data();
    if (o.parents[0]->requires_grad) {
      double* gc = o.parents[0]->ensure_grad().data();
      for (int i = 0; i < f; ++i) {
        const double* g = pgb + static_cast<long>(i) * 2 * d;
        for (int j = 0; j < t; ++j) {
          const double* grow = gy + (static_cast<long>(i) * t + j) * d;
          double* crow = gc + static_cast<long>(j) * d;
          for (int k = 0; k < d; ++k) crow[k] += grow[k] * (1.0 + g[k]);
        }
      }
    }
    if (o.parents[1]->requires_grad) {
      double* ggb = o.parents[1]->ensure_grad().data();
      for (int i = 0; i < f; ++i) {
        double* grow = ggb + static_cast<long>(i) * 2 * d;
        double* srow = grow + d;
        for (int j = 0; j < t; ++j) {
          const double* g = gy + (static_cast<long>(i) * t + j) * d;
          const double* cr = pc + static_cast<long>(j) * d;
          for (int k = 0; k < d; ++k) {
            grow[k] += g[k] * cr[k];
            srow[k] += g[k];
          }
        }
      }
    }
  });
}

Var avgpool_freq(const Var& x, int out_f) {
  expect_rank(x, 3, "avgpool_freq");
  const auto& xs = x->value.shape();
  const int f = xs[0], t = xs[1], c = xs[2];
  if (out_f <= 0 || out_f > f) {
    throw std::invalid_argument("avgpool_freq: invalid target bins");
  }
  Tensor out({out_f, t, c});
  const double* px = x->value.data();
  double* po = out.data();
  for (int i = 0; i < out_f; ++i) {
    const int s = (i * f) / out_f;
    const int e = ((i + 1) * f + out_f - 1) / out_f;
    const double scale = 1.0 / (e - s);
    for (int j = 0; j < t; ++j) {
      double* orow = po + (static_cast<long>(i) * t + j) * c;
      for (int ch = 0; ch < c; ++ch) orow[ch] = 0.0;
      for (int srcf = s; srcf < e; ++srcf) {
        const double* xr = px + (static_cast<long>(srcf) * t + j) * c;
        for (int ch = 0; ch < c; ++ch) orow[ch] += xr[ch];
      }
      for (int ch = 0; ch < c; ++ch) orow[ch] *= scale;
    }
  }
  return finish({x}, std::move(out), [f, t, c, out_f](Node& o) {
    if (!o.parents[0]->requires_grad) return;
    double* gx = o.parents[0]->ensure_grad().data();
    const double* gy = o.grad.data();
    for (int i = 0; i < out_f; ++i) {
      const int s = (i * f) / out_f;
      const int e = ((i + 1) * f + out_f - 1) / out_f;
      const double scale = 1.0 / (e - s);
      for (int j = 0; j < t; ++j) {
        const double* grow = gy + (static_cast<long>(i) * t + j) * c;
        for (int srcf = s; srcf < e; ++srcf) {
          double* xr = gx + (static_cast<long>(srcf) * t + j) * c;
          for (int ch = 0; ch < c; ++ch) xr[ch] += grow[ch] * scale;
        }
      }
    }
  });
}

Var flatten_freq(const Var& x) {
  expect_rank(x, 3, "flatten_freq");
  const auto& xs = x->value.shape();
  const int p = xs[0], t = xs[1], c = xs[2];
  Tensor out({t, p * c});
  const double* px = x->value.data();
  double* po = out.data();
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < t; ++j) {
      std::memcpy(po + (static_cast<long>(j) * p + i) * c,
                  px + (static_cast<long>(i) * t + j) * c,
                  sizeof(double) * c);
    }
  }
  return finish({x}, std::move(out), [p, t, c](Node& o) {
    if (!o.parents[0]->requires_grad) return;
    double* gx = o.parents[0]->ensure_grad().data();
    const double* gy = o.grad.data();
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < t; ++j) {
        const double* src = gy + (static_cast<long>(j) * p + i) * c;
        double* dst = gx + (static_cast<long>(i) * t + j) * c;
        for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch];
      }
    }
  });
}

Var broadcast_row(const Var& v, int n) {
  if (v->value.rank() != 1) {
    throw std::invalid_argument("broadcast_row: expected rank-1 vector");
  }
  const int d = v->value.shape()[0];
  Tensor out({n, d});
  const double* pv = v->value.data();
  for (int i = 0; i < n; ++i) {
    std::memcpy(out.data() + static_cast<long>(i) * d, pv,
                sizeof(double) * d);
  }
  return finish({v}, std::move(out), [n, d](Node& o) {
    if (!o.parents[0]->requires_grad) return;
    double* gv = o.parents[0]->ensure_grad().data();
    const double* gy = o.grad.data();
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < d; ++k) gv[k] += gy[static_cast<long>(i) * d + k];
    }
  });
}

Var select_row(const Var& table, int row) {
  expect_rank(table, 2, "select_row");
  const auto& ts = table->value.shape();
  if (row < 0 || row >= ts[0]) {
    throw std::invalid_argument("select_row: row index out of range");
  }
  const int d = ts[1];
  Tensor out({d});
  std::memcpy(out.data(), table->value.data() + static_cast<long>(row) * d,
              sizeof(double) * d);
  return finish({table}, std::move(out), [row, d](Node& o) {
    if (!o.parents[0]->requires_grad) return;
    double* gt = o.parents[0]->ensure_grad().data();
    const double* gy = o.grad.data();
    for (int k = 0; k < d; ++k) gt[static_cast<long>(row) * d + k] += gy[k];
  });
}

Var pad_t(const Var& x, int new_t) {
  expect_rank(x, 3, "pad_t");
  const auto& xs = x->value.shape();
  const int f = xs[0], t = xs[1], c = xs[2];
  if (new_t < t) throw std::invalid_argument("pad_t: new_t smaller than T");
  if (new_t == t) return x;
  Tensor out({f, new_t, c});
  out.fill(0.0);
  const double* px = x->value.data();
  for (int i = 0; i < f; ++i) {
    std::memcpy(out.data() + static_cast<long>(i) * new_t * c,
                px + static_cast<long>(i) * t * c,
                sizeof(double) * static_cast<long>(t) * c);
  }
  return finish({x}, std::move(out), [f, t, c, new_t](Node& o) {
    if (!o.parents[0]->requires_grad) return;
    double* gx = o.parents[0]->ensure_grad().data();
    const double* gy = o.grad.data();
    for (int i = 0; i < f; ++i) {
      const double* src = gy + static_cast<long>(i) * new_t * c;
      double* dst = gx + static_cast<long>(i) * t * c;
      for (long k = 0; k < static_cast<long>(t) * c; ++k) dst[k] += src[k];
    }
  });
}

Var crop_t(const Var& x, int new_t) {
  expect_rank(x, 3, "crop_t");
  const auto& xs = x->value.shape();
  const int f = xs[0], t = xs[1], c = xs[2];
  if (new_t > t) throw std::invalid_argument("crop_t: new_t larger than T");
  if (new_t == t) return x;
  Tensor out({f, new_t, c});
  const double* px = x->value.data();
  for (int i = 0; i < f; ++i) {
    std::memcpy(out.data() + static_cast<long>(i) * new_t * c,
                px + static_cast<long>(i) * t * c,
                sizeof(double) * static_cast<long>(new_t) * c);
  }
  return finish({x}, std::move(out), [f, t, c, new_t](Node& o) {
    if (!o.parents[0]->requires_grad) return;
    double* gx = o.parents[0]->ensure_grad().data();
    const double* gy = o.grad.data();
    for (int i = 0; i < f; ++i) {
      const double* src = gy + static_cast<long>(i) * new_t * c;
      double* dst = gx + static_cast<long>(i) * t * c;
      for (long k = 0; k < static_cast<long>(new_t) * c; ++k) dst[k] += src[k];
    }
  });
}

Var mse_to(const Var& x, const Tensor& target) {
  check_same_shape(x->value, target, "mse_to");
  const long n = x->value.numel();
  const double* px = x->value.data();
  const double* pt = target.data();
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    const double d = px[i] - pt[i];
    acc += d * d;
  }
  Tensor out({1});
  out.data()[0] = acc / static_cast<double>(n);
  return finish({x}, std::move(out), [target](Node& o) {
    if (!o.parents[0]->requires_grad) return;
    const long n = o.parents[0]->value.numel();
    const double g = o.grad.data()[0] * 2.0 / static_cast<double>(n);
    double* gx = o.parents[0]->ensure_grad().data();
    const double* px = o.parents[0]->value.data();
    const double* pt = target.data();
    for (long i = 0; i < n; ++i) gx[i] += g * (px[i] - pt[i]);
  });
}

}  // namespace bandflow
