#pragma once

// Convolutions used by the embedding and classifier networks. All of them
// are narrow (valid) convolutions over small dense tensors.

#include "mann/nn/tensor.hpp"

namespace mann::nn {

// chars:[len, m] row per character; filters:[w*m, nf], one column per filter
// spanning a full window of w characters. Output [len-w+1, nf]. No bias.
template <typename T>
Tensor<T> conv_over_chars(const Tensor<T>& chars, const Tensor<T>& filters, int window) {
  detail::require(chars.rank() == 2 && filters.rank() == 2, "conv_over_chars: rank mismatch");
  int len = chars.dim(0), m = chars.dim(1);
  int nf = filters.dim(1);
  detail::require(filters.dim(0) == window * m, "conv_over_chars: filter height != window * m");
  detail::require(len >= window, "conv_over_chars: sequence shorter than window");
  int out_len = len - window + 1;

  std::vector<T> val(static_cast<std::size_t>(out_len) * nf, T{0});
  const T* cv = chars.values().data();
  const T* fv = filters.values().data();
  for (int p = 0; p < out_len; ++p) {
    T* o = val.data() + static_cast<std::size_t>(p) * nf;
    const T* win = cv + static_cast<std::size_t>(p) * m;
    for (int k = 0; k < window * m; ++k) {
      T x = win[k];
      const T* fr = fv + static_cast<std::size_t>(k) * nf;
      for (int f = 0; f < nf; ++f) o[f] += x * fr[f];
    }
  }
  return detail::make_op<T>(
      {out_len, nf}, std::move(val), {chars, filters},
      [out_len, m, nf, window](typename Tensor<T>::Node& self) {
        const auto& cv = self.parents[0]->val;
        const auto& fv = self.parents[1]->val;
        auto* gc = detail::grad_of<T>(self, 0);
        auto* gf = detail::grad_of<T>(self, 1);
        for (int p = 0; p < out_len; ++p) {
          const T* go = self.grad.data() + static_cast<std::size_t>(p) * nf;
          const T* win = cv.data() + static_cast<std::size_t>(p) * m;
          for (int k = 0; k < window * m; ++k) {
            const T* fr = fv.data() + static_cast<std::size_t>(k) * nf;
            if (gc) {
              T acc{0};
              for (int f = 0; f < nf; ++f) acc += go[f] * fr[f];
              (*gc)[static_cast<std::size_t>(p) * m + k] += acc;
            }
            if (gf) {
              T x = win[k];
              T* gfr = gf->data() + static_cast<std::size_t>(k) * nf;
              for (int f = 0; f < nf; ++f) gfr[f] += x * go[f];
            }
          }
        }
      });
}

// column-wise max of [len, nf]; gradient goes to the first maximal position
template <typename T>
Tensor<T> max_over_time(const Tensor<T>& a) {
  detail::require(a.rank() == 2, "max_over_time: rank-2 tensor only");
  int len = a.dim(0), nf = a.dim(1);
  std::vector<T> val(static_cast<std::size_t>(nf));
  std::vector<int> arg(static_cast<std::size_t>(nf), 0);
  for (int f = 0; f < nf; ++f) {
    T best = a.values()[static_cast<std::size_t>(f)];
    for (int p = 1; p < len; ++p) {
      T v = a.values()[static_cast<std::size_t>(p) * nf + f];
      if (v > best) {
        best = v;
        arg[static_cast<std::size_t>(f)] = p;
      }
    }
    val[static_cast<std::size_t>(f)] = best;
  }
  return detail::make_op<T>({nf}, std::move(val), {a},
                            [arg, nf](typename Tensor<T>::Node& self) {
                              if (auto* g = detail::grad_of<T>(self, 0))
                                for (int f = 0; f < nf; ++f)
                                  (*g)[static_cast<std::size_t>(arg[static_cast<std::size_t>(f)]) * nf +
                                       f] += self.grad[static_cast<std::size_t>(f)];
                            });
}

// Stage one of the classifier: each 1x2 filter (2 weights) is applied per
// embedding component i to the pair (a_i, b_i) and to (c_i, d_i), the two
// column pairs of the n x 4 quadruple matrix, with no overlap between pairs.
// Output [nf, n, 2] flattened, laid out as (f * n + i) * 2 + pair.
template <typename T>
Tensor<T> pair_conv(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& c,
                    const Tensor<T>& d, const Tensor<T>& w, const Tensor<T>& bias) {
  int n = a.dim(0);
  detail::require(a.rank() == 1 && b.shape() == a.shape() && c.shape() == a.shape() &&
                      d.shape() == a.shape(),
                  "pair_conv: embeddings must be equal rank-1 shapes");
  detail::require(w.rank() == 2 && w.dim(1) == 2, "pair_conv: weights must be [nf, 2]");
  int nf = w.dim(0);
  detail::require(bias.rank() == 1 && bias.dim(0) == nf, "pair_conv: bias shape mismatch");

  std::vector<T> val(static_cast<std::size_t>(nf) * n * 2);
  const T *av = a.values().data(), *bv = b.values().data();
  const T *cv = c.values().data(), *dv = d.values().data();
  for (int f = 0; f < nf; ++f) {
    T w0 = w.values()[static_cast<std::size_t>(f) * 2];
    T w1 = w.values()[static_cast<std::size_t>(f) * 2 + 1];
    T bf = bias.values()[static_cast<std::size_t>(f)];
    T* o = val.data() + static_cast<std::size_t>(f) * n * 2;
    for (int i = 0; i < n; ++i) {
      o[i * 2] = w0 * av[i] + w1 * bv[i] + bf;
      o[i * 2 + 1] = w0 * cv[i] + w1 * dv[i] + bf;
    }
  }
  return detail::make_op<T>(
      {nf, n, 2}, std::move(val), {a, b, c, d, w, bias},
      [n, nf](typename Tensor<T>::Node& self) {
        const auto& wv = self.parents[4]->val;
        std::vector<T>* gin[4];
        for (int p = 0; p < 4; ++p) gin[p] = detail::grad_of<T>(self, static_cast<std::size_t>(p));
        auto* gw = detail::grad_of<T>(self, 4);
        auto* gb = detail::grad_of<T>(self, 5);
        for (int f = 0; f < nf; ++f) {
          T w0 = wv[static_cast<std::size_t>(f) * 2];
          T w1 = wv[static_cast<std::size_t>(f) * 2 + 1];
          const T* go = self.grad.data() + static_cast<std::size_t>(f) * n * 2;
          T gw0{0}, gw1{0}, gbf{0};
          const auto& av = self.parents[0]->val;
          const auto& bv = self.parents[1]->val;
          const auto& cv = self.parents[2]->val;
          const auto& dv = self.parents[3]->val;
          for (int i = 0; i < n; ++i) {
            T g0 = go[i * 2], g1 = go[i * 2 + 1];
            if (gin[0]) (*gin[0])[static_cast<std::size_t>(i)] += g0 * w0;
            if (gin[1]) (*gin[1])[static_cast<std::size_t>(i)] += g0 * w1;
            if (gin[2]) (*gin[2])[static_cast<std::size_t>(i)] += g1 * w0;
            if (gin[3]) (*gin[3])[static_cast<std::size_t>(i)] += g1 * w1;
            gw0 += g0 * av[static_cast<std::size_t>(i)] + g1 * cv[static_cast<std::size_t>(i)];
            gw1 += g0 * bv[static_cast<std::size_t>(i)] + g1 * dv[static_cast<std::size_t>(i)];
            gbf += g0 + g1;
          }
          if (gw) {
            (*gw)[static_cast<std::size_t>(f) * 2] += gw0;
            (*gw)[static_cast<std::size_t>(f) * 2 + 1] += gw1;
          }
          if (gb) (*gb)[static_cast<std::size_t>(f)] += gbf;
        }
      });
}

// Stage two: 2x2 filters over all input channels, sliding one embedding
// component at a time. Input [cin, n, 2] flattened as above; weights
// [cout, cin*2*2] with inner layout (ch * 2 + di) * 2 + pair; output
// [cout, n-1].
template <typename T>
Tensor<T> window_conv(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& bias) {
  detail::require(in.rank() == 3 && in.dim(2) == 2, "window_conv: input must be [cin, n, 2]");
  int cin = in.dim(0), n = in.dim(1);
  detail::require(n >= 2, "window_conv: need n >= 2");
  detail::require(w.rank() == 2 && w.dim(1) == cin * 4, "window_conv: weights must be [cout, cin*4]");
  int cout = w.dim(0);
  detail::require(bias.rank() == 1 && bias.dim(0) == cout, "window_conv: bias shape mismatch");
  int on = n - 1;

  std::vector<T> val(static_cast<std::size_t>(cout) * on);
  const T* iv = in.values().data();
  const T* wv = w.values().data();
  for (int o = 0; o < cout; ++o) {
    const T* wo = wv + static_cast<std::size_t>(o) * cin * 4;
    T bo = bias.values()[static_cast<std::size_t>(o)];
    T* ov = val.data() + static_cast<std::size_t>(o) * on;
    for (int j = 0; j < on; ++j) {
      T acc = bo;
      for (int ch = 0; ch < cin; ++ch) {
        const T* cell = iv + (static_cast<std::size_t>(ch) * n + j) * 2;
        const T* wc = wo + static_cast<std::size_t>(ch) * 4;
        acc += wc[0] * cell[0] + wc[1] * cell[1] + wc[2] * cell[2] + wc[3] * cell[3];
      }
      ov[j] = acc;
    }
  }
  return detail::make_op<T>(
      {cout, on}, std::move(val), {in, w, bias},
      [cin, n, cout, on](typename Tensor<T>::Node& self) {
        const auto& iv = self.parents[0]->val;
        const auto& wv = self.parents[1]->val;
        auto* gi = detail::grad_of<T>(self, 0);
        auto* gw = detail::grad_of<T>(self, 1);
        auto* gb = detail::grad_of<T>(self, 2);
        for (int o = 0; o < cout; ++o) {
          const T* wo = wv.data() + static_cast<std::size_t>(o) * cin * 4;
          T* gwo = gw ? gw->data() + static_cast<std::size_t>(o) * cin * 4 : nullptr;
          const T* go = self.grad.data() + static_cast<std::size_t>(o) * on;
          for (int j = 0; j < on; ++j) {
            T g = go[j];
            if (g == T{0}) continue;
            if (gb) (*gb)[static_cast<std::size_t>(o)] += g;
            for (int ch = 0; ch < cin; ++ch) {
              std::size_t base = (static_cast<std::size_t>(ch) * n + j) * 2;
              const T* wc = wo + static_cast<std::size_t>(ch) * 4;
              if (gi) {
                (*gi)[base] += g * wc[0];
                (*gi)[base + 1] += g * wc[1];
                (*gi)[base + 2] += g * wc[2];
                (*gi)[base + 3] += g * wc[3];
              }
              if (gwo) {
                gwo[ch * 4] += g * iv[base];
                gwo[ch * 4 + 1] += g * iv[base + 1];
                gwo[ch * 4 + 2] += g * iv[base + 2];
                gwo[ch * 4 + 3] += g * iv[base + 3];
              }
            }
          }
        }
      });
}

}  // namespace mann::nn
