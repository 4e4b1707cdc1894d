#pragma once

#include <functional>

#include "grip/common.hpp"
#include "grip/rng.hpp"

namespace grip {

// All learnable state is 64-bit float. Row-major, no strides, no views:
// shapes at this scale never justify the bookkeeping.
struct Matrix {
  int rows = 0;
  int cols = 0;
  Vec data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
    require(r >= 0 && c >= 0, "Matrix: negative shape");
  }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return data.size(); }
};

enum class Activation { identity, relu, sigmoid, tanh };

struct DenseLayer {
  Matrix w;  // out x in
  Vec b;     // out
  Activation act = Activation::identity;

  int in() const { return w.cols; }
  int out() const { return w.rows; }
  size_t param_count() const { return w.size() + b.size(); }
};

// Uniform +-sqrt(6/(in+out)) weights, zero bias.
DenseLayer dense_init(int in, int out, Activation act, SeededRng& rng);

Vec dense_forward(const DenseLayer& layer, const Vec& input);

struct DenseGrads {
  Matrix dw;
  Vec db;
  Vec dinput;
};

// Recomputes the forward pass internally; callers that cache activations use
// dense_backward_cached instead.
DenseGrads dense_backward(const DenseLayer& layer, const Vec& input, const Vec& upstream);

// `output` must be the value dense_forward produced for `input`. Gradients
// are accumulated into dw/db (callers zero them per batch); returns dinput.
Vec dense_backward_cached(const DenseLayer& layer, const Vec& input, const Vec& output,
                          const Vec& upstream, Matrix& dw, Vec& db);

double sigmoid(double x);
Vec softmax(const Vec& logits);
Vec log_softmax(const Vec& logits);
double cross_entropy(const Vec& logits, int label);
// KL(softmax(teacher) || softmax(student)).
double kl_from_logits(const Vec& teacher_logits, const Vec& student_logits);
// Per-sample z-score (population variance). A constant vector maps to zeros.
Vec zscore(const Vec& values);

struct AdamState {
  Vec m;
  Vec v;
  int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(size_t size, double lr);
};

// In-place descent step with bias correction.
void adam_step(Vec& params, const Vec& grads, AdamState& state);

// Scales grads so the global L2 norm is at most max_norm; returns the
// pre-clip norm.
double clip_global_norm(Vec& grads, double max_norm);

// f(params, grad_out): returns the loss; fills *grad_out with the analytic
// gradient when grad_out is non-null.
using GradFn = std::function<double(const Vec&, Vec*)>;

// Central finite differences against the analytic gradient. Returns the
// maximum relative error max_i |a_i - n_i| / max(1e-8, |n_i|, |a_i|).
// Throws if the loss is non-finite anywhere.
double finite_diff_check(const GradFn& f, Vec params, double step);

}  // namespace grip
