#pragma once

// LSTM cell and bidirectional encoder pass, composed from the primitive ops
// so gradients come from the existing backward kernels. Gate order inside
// the packed weights is input, forget, candidate, output.

#include <vector>

#include "mann/nn/tensor.hpp"

namespace mann::nn {

template <typename T>
struct LstmParams {
  Parameter<T> w_ih;  // [in, 4h]
  Parameter<T> w_hh;  // [h, 4h]
  Parameter<T> bias;  // [4h]

  int hidden() const { return w_hh.value.dim(0); }

  std::vector<Parameter<T>*> params() { return {&w_ih, &w_hh, &bias}; }
};

template <typename T>
struct LstmState {
  Tensor<T> h, c;
};

namespace detail {

template <typename T>
LstmState<T> lstm_gates(const Tensor<T>& gates, const Tensor<T>& c, int h) {
  Tensor<T> gi = sigmoid(slice(gates, 0, h));
  Tensor<T> gf = sigmoid(slice(gates, h, h));
  Tensor<T> gc = tanh(slice(gates, 2 * h, h));
  Tensor<T> go = sigmoid(slice(gates, 3 * h, h));
  Tensor<T> c_next = add(mul(gf, c), mul(gi, gc));
  Tensor<T> h_next = mul(go, tanh(c_next));
  return {h_next, c_next};
}

}  // namespace detail

template <typename T>
LstmState<T> lstm_cell(const Tensor<T>& x, const LstmState<T>& state, LstmParams<T>& p) {
  int h = p.hidden();
  Tensor<T> gates = add(matmul(x, p.w_ih.value), affine(state.h, p.w_hh.value, p.bias.value));
  return detail::lstm_gates(gates, state.c, h);
}

// input step given as a row index into w_ih (a one-hot input)
template <typename T>
LstmState<T> lstm_cell_onehot(int index, const LstmState<T>& state, LstmParams<T>& p) {
  int h = p.hidden();
  Tensor<T> gates = add(row(p.w_ih.value, index), affine(state.h, p.w_hh.value, p.bias.value));
  return detail::lstm_gates(gates, state.c, h);
}

template <typename T>
LstmState<T> lstm_zero_state(int h) {
  return {Tensor<T>::zeros({h}), Tensor<T>::zeros({h})};
}

struct BilstmEncoding {
  // final states of the two directions
  template <typename T>
  struct Of {
    Tensor<T> h_fwd, c_fwd, h_bwd, c_bwd;
  };
};

// one-hot input sequence, encoded by a forward and a backward pass
template <typename T>
BilstmEncoding::Of<T> bilstm_encode(const std::vector<int>& indices, LstmParams<T>& fwd,
                                    LstmParams<T>& bwd) {
  int h = fwd.hidden();
  LstmState<T> f = lstm_zero_state<T>(h);
  for (std::size_t t = 0; t < indices.size(); ++t) f = lstm_cell_onehot(indices[t], f, fwd);
  LstmState<T> b = lstm_zero_state<T>(h);
  for (std::size_t t = indices.size(); t > 0; --t) b = lstm_cell_onehot(indices[t - 1], b, bwd);
  return {f.h, f.c, b.h, b.c};
}

}  // namespace mann::nn
