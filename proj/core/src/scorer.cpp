#include "grip/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace grip {

namespace {

constexpr double kProbFloor = 1e-12;

enum LayerIdx { kExt1 = 0, kExt2, kFilm1, kFilm2, kFus1, kFus2, kLayerCount };

void check_params(const ScorerParams& p) {
  require(p.feature_dim >= 1 && p.hidden >= 1, "scorer: bad dimensions");
  require(static_cast<int>(p.layers.size()) == kLayerCount,
          "scorer: expected six dense layers");
  int d = p.feature_dim, h = p.hidden;
  auto expect = [&](int idx, int in, int out) {
    require(p.layers[idx].in() == in && p.layers[idx].out() == out,
            "scorer: layer dimension mismatch");
  };
  expect(kExt1, d, h);
  expect(kExt2, h, h);
  expect(kFilm1, 2 + h, h);
  expect(kFilm2, h, 2 * h);
  expect(kFus1, 2 * h, h);
  expect(kFus2, h, 2);
}

double clamp_prob(double p) {
  return std::min(1.0 - kProbFloor, std::max(kProbFloor, p));
}

}  // namespace

ScorerParams ScorerParams::init(int feature_dim, int hidden, SeededRng& rng) {
  require(feature_dim >= 1, "ScorerParams: feature_dim must be >= 1");
  require(hidden >= 1, "ScorerParams: hidden must be >= 1");
  ScorerParams p;
  p.feature_dim = feature_dim;
  p.hidden = hidden;
  int d = feature_dim, h = hidden;
  p.layers.resize(kLayerCount);
  auto make = [&](int idx, int in, int out, Activation act) {
    p.layers[idx] = dense_init(in, out, act, rng);
  };
  make(kExt1, d, h, Activation::tanh);
  make(kExt2, h, h, Activation::tanh);
  make(kFilm1, 2 + h, h, Activation::tanh);
  make(kFilm2, h, 2 * h, Activation::identity);
  make(kFus1, 2 * h, h, Activation::tanh);
  make(kFus2, h, 2, Activation::identity);
  return p;
}

int ScorerParams::param_count() const {
  int n = 0;
  for (const DenseLayer& l : layers) n += l.param_count();
  return n;
}

Vec ScorerParams::flatten() const {
  Vec flat;
  flat.reserve(param_count());
  for (const DenseLayer& l : layers) {
    flat.insert(flat.end(), l.w.data.begin(), l.w.data.end());
    flat.insert(flat.end(), l.b.begin(), l.b.end());
  }
  return flat;
}

void ScorerParams::unflatten(const Vec& flat) {
  require(static_cast<int>(flat.size()) == param_count(),
          "ScorerParams::unflatten: size mismatch");
  size_t at = 0;
  for (DenseLayer& l : layers) {
    std::copy(flat.begin() + at, flat.begin() + at + l.w.data.size(), l.w.data.begin());
    at += l.w.data.size();
    std::copy(flat.begin() + at, flat.begin() + at + l.b.size(), l.b.begin());
    at += l.b.size();
  }
}

std::vector<Vec> extract_local(const ScorerParams& params, const TokenGrid& grid) {
  check_params(params);
  require(grid.feature_dim == params.feature_dim,
          "extract_local: grid feature dim != extractor input dim");
  int n = grid.tokens();
  require(static_cast<int>(grid.features.size()) == n,
          "extract_local: feature row count mismatch");
  std::vector<Vec> f_local(n);
  for (int i = 0; i < n; ++i) {
    Vec a1 = dense_forward(params.layers[kExt1], grid.features[i]);
    f_local[i] = dense_forward(params.layers[kExt2], a1);
  }
  return f_local;
}

Vec global_context(const std::vector<Vec>& f_local, const RetentionMask& retained) {
  require(!f_local.empty(), "global_context: no tokens");
  require(retained.size() == static_cast<int>(f_local.size()),
          "global_context: mask size mismatch");
  require(retained.kept >= 1, "global_context: empty retention mask");
  Vec c(f_local[0].size(), 0.0);
  for (size_t i = 0; i < f_local.size(); ++i) {
    if (!retained.get(static_cast<int>(i))) continue;
    for (size_t k = 0; k < c.size(); ++k) c[k] += f_local[i][k];
  }
  for (double& v : c) v /= retained.kept;
  return c;
}

FilmResult film_modulate(const ScorerParams& params, const std::vector<Vec>& f_local,
                         double rho_target, double rho_now, const Vec& c_global) {
  check_params(params);
  require(rho_target >= 0.0 && rho_target <= rho_now && rho_now <= 1.0,
          "film_modulate: need 0 <= rho_target <= rho_now <= 1");
  int h = params.hidden;
  require(static_cast<int>(c_global.size()) == h, "film_modulate: context size != hidden");

  Vec u(2 + h);
  u[0] = rho_target - rho_now;
  u[1] = rho_target;
  std::copy(c_global.begin(), c_global.end(), u.begin() + 2);
  Vec g1 = dense_forward(params.layers[kFilm1], u);
  Vec g2 = dense_forward(params.layers[kFilm2], g1);

  FilmResult res;
  res.gamma.assign(g2.begin(), g2.begin() + h);
  res.beta.assign(g2.begin() + h, g2.end());
  res.f_tilde.resize(f_local.size());
  for (size_t i = 0; i < f_local.size(); ++i) {
    require(static_cast<int>(f_local[i].size()) == h, "film_modulate: feature size != hidden");
    Vec& t = res.f_tilde[i];
    t.resize(h);
    for (int k = 0; k < h; ++k) t[k] = f_local[i][k] * (1.0 + res.gamma[k]) + res.beta[k];
  }
  return res;
}

ScoreOutput fuse_scores(const ScorerParams& params, const std::vector<Vec>& f_tilde,
                        const std::vector<Vec>& f_unique, const Vec& heuristic_z) {
  check_params(params);
  int n = static_cast<int>(f_tilde.size());
  require(static_cast<int>(f_unique.size()) == n && static_cast<int>(heuristic_z.size()) == n,
          "fuse_scores: per-token input sizes disagree");
  int h = params.hidden;

  ScoreOutput out;
  out.probs.resize(n);
  out.s_final.resize(n);
  out.s_ours.resize(n);
  out.alpha_gate.resize(n);
  for (int i = 0; i < n; ++i) {
    Vec y(2 * h);
    std::copy(f_tilde[i].begin(), f_tilde[i].end(), y.begin());
    std::copy(f_unique[i].begin(), f_unique[i].end(), y.begin() + h);
    Vec z1 = dense_forward(params.layers[kFus1], y);
    Vec z2 = dense_forward(params.layers[kFus2], z1);
    double alpha = sigmoid(z2[1]);
    out.s_ours[i] = z2[0];
    out.alpha_gate[i] = alpha;
    out.s_final[i] = alpha * z2[0] + (1.0 - alpha) * heuristic_z[i];
    out.probs[i] = clamp_prob(sigmoid(out.s_final[i]));
  }
  return out;
}

ScoreOutput score(const ScorerParams& params, const TokenGrid& grid,
                  const RetentionMask& retained, const BudgetSpec& budget,
                  const ScorerOptions& options, ScoreTrace* trace) {
  check_params(params);
  budget.validate();
  int n = grid.tokens();
  require(n >= 1, "score: empty grid");
  require(retained.size() == n, "score: mask size mismatch");
  require(retained.kept >= 1, "score: empty retention mask");
  require(static_cast<int>(grid.heuristic_scores.size()) == n,
          "score: heuristic score count mismatch");
  int h = params.hidden;

  std::vector<Vec> ext1(n), f_local(n);
  for (int i = 0; i < n; ++i) {
    require(static_cast<int>(grid.features[i].size()) == params.feature_dim,
            "score: feature row width mismatch");
    ext1[i] = dense_forward(params.layers[kExt1], grid.features[i]);
    f_local[i] = dense_forward(params.layers[kExt2], ext1[i]);
  }
  Vec c = global_context(f_local, retained);

  Vec film_in, g1, g2;
  Vec gamma(h, 0.0), beta(h, 0.0);
  if (!options.disable_film_modulator) {
    film_in.resize(2 + h);
    film_in[0] = budget.rho_target - budget.rho_now;
    film_in[1] = budget.rho_target;
    std::copy(c.begin(), c.end(), film_in.begin() + 2);
    g1 = dense_forward(params.layers[kFilm1], film_in);
    g2 = dense_forward(params.layers[kFilm2], g1);
    gamma.assign(g2.begin(), g2.begin() + h);
    beta.assign(g2.begin() + h, g2.end());
  }

  std::vector<Vec> f_tilde(n), f_unique(n), fus1(n), fus2(n);
  Vec heur_z = zscore(grid.heuristic_scores);
  ScoreOutput out;
  out.probs.resize(n);
  out.s_final.resize(n);
  out.s_ours.resize(n);
  out.alpha_gate.resize(n);
  out.film_gamma = gamma;
  out.film_beta = beta;
  for (int i = 0; i < n; ++i) {
    f_tilde[i].resize(h);
    f_unique[i].resize(h);
    for (int k = 0; k < h; ++k) {
      f_tilde[i][k] = f_local[i][k] * (1.0 + gamma[k]) + beta[k];
      f_unique[i][k] = f_local[i][k] - c[k];
    }
    Vec y(2 * h);
    std::copy(f_tilde[i].begin(), f_tilde[i].end(), y.begin());
    std::copy(f_unique[i].begin(), f_unique[i].end(), y.begin() + h);
    fus1[i] = dense_forward(params.layers[kFus1], y);
    fus2[i] = dense_forward(params.layers[kFus2], fus1[i]);
    double alpha = sigmoid(fus2[i][1]);
    out.s_ours[i] = fus2[i][0];
    out.alpha_gate[i] = alpha;
    out.s_final[i] = options.disable_heuristic_fusion
                         ? fus2[i][0]
                         : alpha * fus2[i][0] + (1.0 - alpha) * heur_z[i];
    out.probs[i] = clamp_prob(sigmoid(out.s_final[i]));
  }

  if (trace) {
    trace->ext1_out = std::move(ext1);
    trace->f_local = std::move(f_local);
    trace->f_tilde = std::move(f_tilde);
    trace->f_unique = std::move(f_unique);
    trace->fus1_out = std::move(fus1);
    trace->fus2_out = std::move(fus2);
    trace->film_in = std::move(film_in);
    trace->film1_out = std::move(g1);
    trace->film2_out = std::move(g2);
    trace->c_global = std::move(c);
    trace->heuristic_z = std::move(heur_z);
    trace->retained = retained;
    trace->out = out;
  }
  return out;
}

Vec score_backward(const ScorerParams& params, const TokenGrid& grid,
                   const ScoreTrace& trace, const Vec& d_s_final,
                   const ScorerOptions& options) {
  check_params(params);
  int n = grid.tokens();
  int h = params.hidden;
  require(static_cast<int>(d_s_final.size()) == n, "score_backward: upstream size mismatch");
  require(static_cast<int>(trace.f_local.size()) == n, "score_backward: stale trace");

  std::vector<Matrix> dw(kLayerCount);
  std::vector<Vec> db(kLayerCount);
  for (int l = 0; l < kLayerCount; ++l) {
    dw[l] = Matrix(params.layers[l].out(), params.layers[l].in());
    db[l].assign(params.layers[l].out(), 0.0);
  }

  std::vector<Vec> d_f(n, Vec(h, 0.0));
  Vec d_c(h, 0.0);
  Vec d_gamma(h, 0.0), d_beta(h, 0.0);

  for (int i = 0; i < n; ++i) {
    double ds = d_s_final[i];
    double s_ours = trace.out.s_ours[i];
    double alpha = trace.out.alpha_gate[i];
    double ds_ours, d_gate;
    if (options.disable_heuristic_fusion) {
      ds_ours = ds;
      d_gate = 0.0;
    } else {
      ds_ours = ds * alpha;
      double d_alpha = ds * (s_ours - trace.heuristic_z[i]);
      d_gate = d_alpha * alpha * (1.0 - alpha);
    }

    Vec y(2 * h);
    std::copy(trace.f_tilde[i].begin(), trace.f_tilde[i].end(), y.begin());
    std::copy(trace.f_unique[i].begin(), trace.f_unique[i].end(), y.begin() + h);
    Vec dz2{ds_ours, d_gate};
    Vec dz1 = dense_backward_cached(params.layers[kFus2], trace.fus1_out[i],
                                    trace.fus2_out[i], dz2, dw[kFus2], db[kFus2]);
    Vec dy = dense_backward_cached(params.layers[kFus1], y, trace.fus1_out[i], dz1,
                                   dw[kFus1], db[kFus1]);
    for (int k = 0; k < h; ++k) {
      double dft = dy[k], dfu = dy[h + k];
      double gamma_k = trace.out.film_gamma[k];
      d_f[i][k] += dft * (1.0 + gamma_k) + dfu;
      d_c[k] -= dfu;
      d_gamma[k] += dft * trace.f_local[i][k];
      d_beta[k] += dft;
    }
  }

  if (!options.disable_film_modulator) {
    Vec dg2(2 * h);
    std::copy(d_gamma.begin(), d_gamma.end(), dg2.begin());
    std::copy(d_beta.begin(), d_beta.end(), dg2.begin() + h);
    Vec dg1 = dense_backward_cached(params.layers[kFilm2], trace.film1_out,
                                    trace.film2_out, dg2, dw[kFilm2], db[kFilm2]);
    Vec du = dense_backward_cached(params.layers[kFilm1], trace.film_in,
                                   trace.film1_out, dg1, dw[kFilm1], db[kFilm1]);
    for (int k = 0; k < h; ++k) d_c[k] += du[2 + k];
  }

  for (int i = 0; i < n; ++i) {
    if (!trace.retained.get(i)) continue;
    for (int k = 0; k < h; ++k) d_f[i][k] += d_c[k] / trace.retained.kept;
  }

  for (int i = 0; i < n; ++i) {
    Vec da1 = dense_backward_cached(params.layers[kExt2], trace.ext1_out[i],
                                    trace.f_local[i], d_f[i], dw[kExt2], db[kExt2]);
    dense_backward_cached(params.layers[kExt1], grid.features[i], trace.ext1_out[i],
                          da1, dw[kExt1], db[kExt1]);
  }

  Vec flat;
  flat.reserve(params.param_count());
  for (int l = 0; l < kLayerCount; ++l) {
    flat.insert(flat.end(), dw[l].data.begin(), dw[l].data.end());
    flat.insert(flat.end(), db[l].begin(), db[l].end());
  }
  return flat;
}

RetentionMask select_topk(const ScoreOutput& output, int k) {
  int n = static_cast<int>(output.s_final.size());
  require(k >= 1 && k <= n, "select_topk: k out of range");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return output.s_final[a] > output.s_final[b]; });
  RetentionMask mask = RetentionMask::zeros(n);
  for (int i = 0; i < k; ++i) mask.set(order[i], true);
  return mask;
}

SampleResult sample_bernoulli(const ScoreOutput& output, SeededRng& rng) {
  int n = static_cast<int>(output.probs.size());
  require(n >= 1, "sample_bernoulli: no tokens");
  SampleResult res;
  res.mask = RetentionMask::zeros(n);
  for (int i = 0; i < n; ++i) {
    double p = output.probs[i];
    require(p > 0.0 && p < 1.0, "sample_bernoulli: probabilities must be in (0,1)");
    if (rng.next_double() < p) res.mask.set(i, true);
  }
  if (res.mask.kept == 0) {
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (output.probs[i] > output.probs[best]) best = i;
    res.mask.set(best, true);
    res.forced_keep = true;
  }
  res.log_prob = mask_log_prob(output, res.mask);
  return res;
}

double mask_log_prob(const ScoreOutput& output, const RetentionMask& mask) {
  int n = static_cast<int>(output.probs.size());
  require(mask.size() == n, "mask_log_prob: mask size mismatch");
  double lp = 0.0;
  for (int i = 0; i < n; ++i) {
    double p = output.probs[i];
    lp += mask.get(i) ? std::log(p) : std::log1p(-p);
  }
  return lp;
}

}  // namespace grip
