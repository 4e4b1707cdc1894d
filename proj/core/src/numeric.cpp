#include "grip/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace grip {

namespace {

double apply_act(Activation act, double z) {
  switch (act) {
    case Activation::identity: return z;
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return sigmoid(z);
    case Activation::tanh: return std::tanh(z);
  }
  fail("apply_act: bad activation");
}

// Derivative expressed through the activation output; exact for all four.
double act_grad_from_output(Activation act, double y) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::tanh: return 1.0 - y * y;
  }
  fail("act_grad_from_output: bad activation");
}

}  // namespace

DenseLayer dense_init(int in, int out, Activation act, SeededRng& rng) {
  require(in > 0 && out > 0, "dense_init: dimensions must be positive");
  DenseLayer layer;
  layer.w = Matrix(out, in);
  layer.b.assign(out, 0.0);
  layer.act = act;
  double limit = std::sqrt(6.0 / (in + out));
  for (double& w : layer.w.data) w = rng.uniform(-limit, limit);
  return layer;
}

Vec dense_forward(const DenseLayer& layer, const Vec& input) {
  require(static_cast<int>(input.size()) == layer.in(),
          "dense_forward: input size != layer input dimension");
  Vec out(layer.out());
  for (int r = 0; r < layer.out(); ++r) {
    double z = layer.b[r];
    const double* wrow = &layer.w.data[static_cast<size_t>(r) * layer.in()];
    for (int c = 0; c < layer.in(); ++c) z += wrow[c] * input[c];
    out[r] = apply_act(layer.act, z);
  }
  return out;
}

Vec dense_backward_cached(const DenseLayer& layer, const Vec& input, const Vec& output,
                          const Vec& upstream, Matrix& dw, Vec& db) {
  require(static_cast<int>(upstream.size()) == layer.out(),
          "dense_backward: upstream size != layer output dimension");
  Vec dinput(layer.in(), 0.0);
  for (int r = 0; r < layer.out(); ++r) {
    double dz = upstream[r] * act_grad_from_output(layer.act, output[r]);
    db[r] += dz;
    double* dwrow = &dw.data[static_cast<size_t>(r) * layer.in()];
    const double* wrow = &layer.w.data[static_cast<size_t>(r) * layer.in()];
    for (int c = 0; c < layer.in(); ++c) {
      dwrow[c] += dz * input[c];
      dinput[c] += wrow[c] * dz;
    }
  }
  return dinput;
}

DenseGrads dense_backward(const DenseLayer& layer, const Vec& input, const Vec& upstream) {
  DenseGrads g;
  g.dw = Matrix(layer.out(), layer.in());
  g.db.assign(layer.out(), 0.0);
  Vec output = dense_forward(layer, input);
  g.dinput = dense_backward_cached(layer, input, output, upstream, g.dw, g.db);
  return g;
}

double sigmoid(double x) {
  // Split by sign to avoid overflow in exp.
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

Vec softmax(const Vec& logits) {
  require(!logits.empty(), "softmax: empty logits");
  double mx = *std::max_element(logits.begin(), logits.end());
  Vec out(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Vec log_softmax(const Vec& logits) {
  require(!logits.empty(), "log_softmax: empty logits");
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  double lse = mx + std::log(sum);
  Vec out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

double cross_entropy(const Vec& logits, int label) {
  require(label >= 0 && label < static_cast<int>(logits.size()),
          "cross_entropy: label out of range");
  return -log_softmax(logits)[label];
}

double kl_from_logits(const Vec& teacher_logits, const Vec& student_logits) {
  require(teacher_logits.size() == student_logits.size(),
          "kl_from_logits: size mismatch");
  Vec lt = log_softmax(teacher_logits);
  Vec ls = log_softmax(student_logits);
  double kl = 0.0;
  for (size_t i = 0; i < lt.size(); ++i) kl += std::exp(lt[i]) * (lt[i] - ls[i]);
  return kl;
}

Vec zscore(const Vec& values) {
  require(!values.empty(), "zscore: empty input");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  Vec out(values.size(), 0.0);
  if (var < 1e-24) return out;  // constant input carries no ranking signal
  double inv = 1.0 / std::sqrt(var);
  for (size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) * inv;
  return out;
}

AdamState AdamState::init(size_t size, double lr) {
  AdamState st;
  st.m.assign(size, 0.0);
  st.v.assign(size, 0.0);
  st.lr = lr;
  return st;
}

void adam_step(Vec& params, const Vec& grads, AdamState& state) {
  require(params.size() == grads.size(), "adam_step: params/grads size mismatch");
  require(params.size() == state.m.size(), "adam_step: state size mismatch");
  state.step += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

double clip_global_norm(Vec& grads, double max_norm) {
  require(max_norm > 0.0, "clip_global_norm: max_norm must be positive");
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  double norm = std::sqrt(sq);
  if (norm > max_norm) {
    double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

double finite_diff_check(const GradFn& f, Vec params, double step) {
  require(step > 0.0, "finite_diff_check: step must be positive");
  Vec analytic(params.size(), 0.0);
  double loss = f(params, &analytic);
  if (!std::isfinite(loss)) fail("finite_diff_check: non-finite loss");
  require(analytic.size() == params.size(), "finite_diff_check: bad gradient size");

  double max_rel = 0.0;
  for (size_t i = 0; i < params.size(); ++i) {
    double saved = params[i];
    params[i] = saved + step;
    double up = f(params, nullptr);
    params[i] = saved - step;
    double down = f(params, nullptr);
    params[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      fail("finite_diff_check: non-finite loss during perturbation");
    double numeric = (up - down) / (2.0 * step);
    double denom = std::max({1e-8, std::abs(numeric), std::abs(analytic[i])});
    max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
  }
  return max_rel;
}

}  // namespace grip
