#include "transtte/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

#include "transtte/error.hpp"

namespace transtte {

// ---------------------------------------------------------------------------
// configuration and layout

ModelConfig ModelConfig::toy(std::uint32_t feature_dim, std::uint64_t seed) {
  ModelConfig c;
  c.layers = 2;
  c.width = 16;
  c.heads = 4;
  c.ffn_mult = 2;
  c.feature_dim = feature_dim;
  c.seed = seed;
  return c;
}

ModelConfig ModelConfig::slim(std::uint32_t feature_dim, std::uint64_t seed) {
  ModelConfig c;
  c.layers = 12;
  c.width = 80;
  c.heads = 8;
  c.ffn_mult = 1;
  c.feature_dim = feature_dim;
  c.seed = seed;
  return c;
}

void ModelConfig::validate() const {
  if (width == 0 || heads == 0 || ffn_mult == 0 || feature_dim == 0) {
    throw Error(ErrorKind::InvalidConfig, "width, heads, ffn_mult and feature_dim must be positive");
  }
  if (width % heads != 0) {
    throw Error(ErrorKind::InvalidConfig,
                "width " + std::to_string(width) + " is not divisible by heads " + std::to_string(heads));
  }
  if (max_degree < 1 || max_hops < 1) {
    throw Error(ErrorKind::InvalidConfig, "max_degree and max_hops must be >= 1");
  }
}

ParamLayout ParamLayout::build(const ModelConfig& cfg) {
  cfg.validate();
  ParamLayout p;
  std::size_t offset = 0;
  auto take = [&](std::size_t rows, std::size_t cols) {
    Slot s{offset, rows, cols};
    offset += rows * cols;
    return s;
  };
  const std::size_t d = cfg.width;
  p.in_proj_w = take(cfg.feature_dim, d);
  p.in_proj_b = take(1, d);
  p.z_in = take(cfg.degree_buckets(), d);
  p.z_out = take(cfg.degree_buckets(), d);
  p.spatial_bias = take(cfg.heads, cfg.hop_buckets());
  for (std::uint32_t l = 0; l < cfg.layers; ++l) {
    LayerSlots ls;
    ls.ln1_gain = take(1, d);
    ls.ln1_shift = take(1, d);
    ls.wq = take(d, d);
    ls.wk = take(d, d);
    ls.wv = take(d, d);
    ls.wo = take(d, d);
    ls.ln2_gain = take(1, d);
    ls.ln2_shift = take(1, d);
    ls.ffn_w1 = take(d, cfg.ffn_width());
    ls.ffn_b1 = take(1, cfg.ffn_width());
    ls.ffn_w2 = take(cfg.ffn_width(), d);
    ls.ffn_b2 = take(1, d);
    p.layers.push_back(ls);
  }
  p.readout_w1 = take(cfg.readout_in(), d);
  p.readout_b1 = take(1, d);
  p.readout_w2 = take(d, 1);
  p.readout_b2 = take(1, 1);
  p.total = offset;
  return p;
}

std::vector<std::pair<std::string, Slot>> ParamLayout::named() const {
  std::vector<std::pair<std::string, Slot>> out{
      {"in_proj_w", in_proj_w}, {"in_proj_b", in_proj_b}, {"z_in", z_in},
      {"z_out", z_out},         {"spatial_bias", spatial_bias}};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& ls = layers[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    out.insert(out.end(), {{p + "ln1_gain", ls.ln1_gain}, {p + "ln1_shift", ls.ln1_shift},
                           {p + "wq", ls.wq},             {p + "wk", ls.wk},
                           {p + "wv", ls.wv},             {p + "wo", ls.wo},
                           {p + "ln2_gain", ls.ln2_gain}, {p + "ln2_shift", ls.ln2_shift},
                           {p + "ffn_w1", ls.ffn_w1},     {p + "ffn_b1", ls.ffn_b1},
                           {p + "ffn_w2", ls.ffn_w2},     {p + "ffn_b2", ls.ffn_b2}});
  }
  out.insert(out.end(), {{"readout_w1", readout_w1}, {"readout_b1", readout_b1},
                         {"readout_w2", readout_w2}, {"readout_b2", readout_b2}});
  return out;
}

ModelParams init_params(const ModelConfig& cfg) {
  ModelParams p;
  p.config = cfg;
  p.layout = ParamLayout::build(cfg);
  p.values.assign(p.layout.total, 0.0);

  std::mt19937_64 rng(cfg.seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.width));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  std::normal_distribution<double> normal(0.0, 0.02);
  auto fill_uniform = [&](const Slot& s) {
    for (std::size_t i = 0; i < s.size(); ++i) p.values[s.offset + i] = uniform(rng);
  };
  auto fill_normal = [&](const Slot& s) {
    for (std::size_t i = 0; i < s.size(); ++i) p.values[s.offset + i] = normal(rng);
  };
  auto fill_const = [&](const Slot& s, double v) {
    std::fill_n(p.values.begin() + static_cast<std::ptrdiff_t>(s.offset), s.size(), v);
  };

  const ParamLayout& L = p.layout;
  fill_uniform(L.in_proj_w);
  fill_normal(L.z_in);
  fill_normal(L.z_out);
  for (const auto& ls : L.layers) {
    fill_const(ls.ln1_gain, 1.0);
    fill_uniform(ls.wq);
    fill_uniform(ls.wk);
    fill_uniform(ls.wv);
    fill_uniform(ls.wo);
    fill_const(ls.ln2_gain, 1.0);
    fill_uniform(ls.ffn_w1);
    fill_uniform(ls.ffn_w2);
  }
  fill_uniform(L.readout_w1);
  fill_uniform(L.readout_w2);
  return p;
}

// ---------------------------------------------------------------------------
// forward

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.79788456080286535588;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

double gelu(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_grad(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  const double t = std::tanh(u);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

void layer_norm(const Matrix& x, ConstMatView gain, ConstMatView shift, Matrix& xhat,
                std::vector<double>& rstd, Matrix& y) {
  const std::size_t n = x.rows, d = x.cols;
  xhat = Matrix(n, d);
  y = Matrix(n, d);
  rstd.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.row(i);
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += row[c];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<double>(d);
    rstd[i] = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t c = 0; c < d; ++c) {
      xhat(i, c) = (row[c] - mean) * rstd[i];
      y(i, c) = xhat(i, c) * gain(0, c) + shift(0, c);
    }
  }
}

// dx += d(layer_norm)/dx applied to dy; parameter grads accumulate.
void layer_norm_backward(const Matrix& dy, const Matrix& xhat, const std::vector<double>& rstd,
                         ConstMatView gain, MatView dgain, MatView dshift, Matrix& dx) {
  const std::size_t n = dy.rows, d = dy.cols;
  std::vector<double> dxhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      dgain(0, c) += dy(i, c) * xhat(i, c);
      dshift(0, c) += dy(i, c);
      dxhat[c] = dy(i, c) * gain(0, c);
      mean_dxhat += dxhat[c];
      mean_dxhat_xhat += dxhat[c] * xhat(i, c);
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    for (std::size_t c = 0; c < d; ++c) {
      dx(i, c) += rstd[i] * (dxhat[c] - mean_dxhat - xhat(i, c) * mean_dxhat_xhat);
    }
  }
}

struct AttentionTrace {
  Matrix q, k, v;
  std::vector<Matrix> probs;  // per head, n x n
  Matrix concat;              // n x width
};

struct LayerTrace {
  Matrix input;
  Matrix xhat1;
  std::vector<double> rstd1;
  Matrix u1;
  AttentionTrace attn;
  Matrix mid;
  Matrix xhat2;
  std::vector<double> rstd2;
  Matrix u2;
  Matrix ffn_pre;
  Matrix ffn_act;
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  Matrix out;
  std::vector<double> z;      // pooled width ++ time features
  std::vector<double> r_pre;  // readout hidden pre-activation
  std::vector<double> r_act;
  double y = 0.0;
};

void check_route(const ModelParams& params, const EncodedRoute& route) {
  const ModelConfig& cfg = params.config;
  const std::size_t n = route.node_count();
  if (n == 0) throw Error(ErrorKind::ShapeMismatch, "route has no nodes");
  if (route.features.cols != cfg.feature_dim) {
    throw Error(ErrorKind::ShapeMismatch, "feature width " + std::to_string(route.features.cols) +
                                              " != model feature_dim " + std::to_string(cfg.feature_dim));
  }
  if (route.centrality.in_bucket.size() != n || route.centrality.out_bucket.size() != n) {
    throw Error(ErrorKind::ShapeMismatch, "centrality indices do not match node count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (route.centrality.in_bucket[i] > cfg.max_degree || route.centrality.out_bucket[i] > cfg.max_degree) {
      throw Error(ErrorKind::ShapeMismatch, "degree bucket exceeds max_degree");
    }
  }
  if (!route.spatial || route.spatial->n != n) {
    throw Error(ErrorKind::ShapeMismatch, "spatial encoding does not match node count");
  }
  if (route.spatial->max_hops != cfg.max_hops) {
    throw Error(ErrorKind::ShapeMismatch, "spatial encoding max_hops differs from model");
  }
}

void check_phi(const ModelParams& params, const Matrix& x, const SpatialEncodingTable& phi) {
  if (x.cols != params.config.width) throw Error(ErrorKind::ShapeMismatch, "attention input width");
  if (phi.n != x.rows) throw Error(ErrorKind::ShapeMismatch, "phi size differs from node count");
  if (phi.bucket_count() != params.config.hop_buckets()) {
    throw Error(ErrorKind::ShapeMismatch, "phi bucket count differs from model");
  }
}

Matrix attention_impl(const ModelParams& params, std::size_t layer, const Matrix& x,
                      const SpatialEncodingTable& phi, AttentionTrace& tr) {
  const ModelConfig& cfg = params.config;
  const LayerSlots& ls = params.layout.layers[layer];
  const std::size_t n = x.rows, d = cfg.width, dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const ConstMatView bias = params.view(params.layout.spatial_bias);

  tr.q = Matrix(n, d);
  tr.k = Matrix(n, d);
  tr.v = Matrix(n, d);
  kernels::gemm_nn(x.cview(), params.view(ls.wq), tr.q.view());
  kernels::gemm_nn(x.cview(), params.view(ls.wk), tr.k.view());
  kernels::gemm_nn(x.cview(), params.view(ls.wv), tr.v.view());

  tr.probs.assign(cfg.heads, Matrix(n, n));
  tr.concat = Matrix(n, d);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const std::size_t c0 = h * dh;
    Matrix& p = tr.probs[h];
    for (std::size_t i = 0; i < n; ++i) {
      double row_max = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += tr.q(i, c0 + c) * tr.k(j, c0 + c);
        s = s * scale + bias(h, phi(i, j));
        p(i, j) = s;
        row_max = std::max(row_max, s);
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        p(i, j) = std::exp(p(i, j) - row_max);
        sum += p(i, j);
      }
      for (std::size_t j = 0; j < n; ++j) p(i, j) /= sum;
      for (std::size_t j = 0; j < n; ++j) {
        const double w = p(i, j);
        for (std::size_t c = 0; c < dh; ++c) tr.concat(i, c0 + c) += w * tr.v(j, c0 + c);
      }
    }
  }
  Matrix out(n, d);
  kernels::gemm_nn(tr.concat.cview(), params.view(ls.wo), out.view());
  return out;
}

double run_forward(const ModelParams& params, const EncodedRoute& route, ForwardTrace& tr) {
  check_route(params, route);
  const ModelConfig& cfg = params.config;
  const ParamLayout& L = params.layout;
  const std::size_t n = route.node_count(), d = cfg.width, f = cfg.ffn_width();

  Matrix h = input_embedding(params, route);
  tr.layers.resize(cfg.layers);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const LayerSlots& ls = L.layers[l];
    LayerTrace& t = tr.layers[l];
    t.input = std::move(h);
    layer_norm(t.input, params.view(ls.ln1_gain), params.view(ls.ln1_shift), t.xhat1, t.rstd1, t.u1);
    Matrix attn = attention_impl(params, l, t.u1, *route.spatial, t.attn);
    t.mid = t.input;
    for (std::size_t i = 0; i < t.mid.data.size(); ++i) t.mid.data[i] += attn.data[i];

    layer_norm(t.mid, params.view(ls.ln2_gain), params.view(ls.ln2_shift), t.xhat2, t.rstd2, t.u2);
    t.ffn_pre = Matrix(n, f);
    kernels::gemm_nn(t.u2.cview(), params.view(ls.ffn_w1), t.ffn_pre.view());
    const ConstMatView b1 = params.view(ls.ffn_b1);
    t.ffn_act = Matrix(n, f);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < f; ++c) {
        t.ffn_pre(i, c) += b1(0, c);
        t.ffn_act(i, c) = gelu(t.ffn_pre(i, c));
      }
    }
    h = t.mid;
    kernels::gemm_nn(t.ffn_act.cview(), params.view(ls.ffn_w2), h.view(), /*accumulate=*/true);
    const ConstMatView b2 = params.view(ls.ffn_b2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < d; ++c) h(i, c) += b2(0, c);
    }
  }
  tr.out = std::move(h);

  tr.z.assign(cfg.readout_in(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) tr.z[c] += tr.out(i, c);
  }
  for (std::size_t c = 0; c < d; ++c) tr.z[c] /= static_cast<double>(n);
  std::copy(route.time.begin(), route.time.end(), tr.z.begin() + static_cast<std::ptrdiff_t>(d));

  const ConstMatView w1 = params.view(L.readout_w1);
  const ConstMatView rb1 = params.view(L.readout_b1);
  const ConstMatView w2 = params.view(L.readout_w2);
  tr.r_pre.assign(d, 0.0);
  tr.r_act.assign(d, 0.0);
  double y = params.view(L.readout_b2)(0, 0);
  for (std::size_t c = 0; c < d; ++c) {
    double s = rb1(0, c);
    for (std::size_t a = 0; a < tr.z.size(); ++a) s += tr.z[a] * w1(a, c);
    tr.r_pre[c] = s;
    tr.r_act[c] = gelu(s);
    y += tr.r_act[c] * w2(c, 0);
  }
  if (!std::isfinite(y)) throw Error(ErrorKind::NonFiniteActivation, "readout produced a non-finite value");
  tr.y = y;
  return y;
}

// ---------------------------------------------------------------------------
// backward

void run_backward(const ModelParams& params, const EncodedRoute& route, const ForwardTrace& tr,
                  double dy, std::span<double> grad) {
  const ModelConfig& cfg = params.config;
  const ParamLayout& L = params.layout;
  const std::size_t n = route.node_count(), d = cfg.width, f = cfg.ffn_width(), dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  auto G = [&](const Slot& s) { return MatView{grad.data() + s.offset, s.rows, s.cols}; };

  // readout
  const ConstMatView w1 = params.view(L.readout_w1);
  const ConstMatView w2 = params.view(L.readout_w2);
  G(L.readout_b2)(0, 0) += dy;
  std::vector<double> dr_pre(d);
  for (std::size_t c = 0; c < d; ++c) {
    G(L.readout_w2)(c, 0) += tr.r_act[c] * dy;
    dr_pre[c] = w2(c, 0) * dy * gelu_grad(tr.r_pre[c]);
  }
  const MatView gw1 = G(L.readout_w1);
  const MatView gb1 = G(L.readout_b1);
  std::vector<double> dz(cfg.readout_in(), 0.0);
  for (std::size_t a = 0; a < dz.size(); ++a) {
    for (std::size_t c = 0; c < d; ++c) {
      gw1(a, c) += tr.z[a] * dr_pre[c];
      dz[a] += w1(a, c) * dr_pre[c];
    }
  }
  for (std::size_t c = 0; c < d; ++c) gb1(0, c) += dr_pre[c];

  // mean pooling
  Matrix dh_mat(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) dh_mat(i, c) = dz[c] / static_cast<double>(n);
  }

  const MatView gbias = G(L.spatial_bias);
  const SpatialEncodingTable& phi = *route.spatial;
  for (std::size_t l = cfg.layers; l-- > 0;) {
    const LayerSlots& ls = L.layers[l];
    const LayerTrace& t = tr.layers[l];

    // feed-forward branch: out = mid + gelu(u2 W1 + b1) W2 + b2
    const MatView gb2 = G(ls.ffn_b2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < d; ++c) gb2(0, c) += dh_mat(i, c);
    }
    kernels::gemm_tn(t.ffn_act.cview(), dh_mat.cview(), G(ls.ffn_w2), true);
    Matrix dpre(n, f);
    kernels::gemm_nt(dh_mat.cview(), params.view(ls.ffn_w2), dpre.view());
    const MatView gfb1 = G(ls.ffn_b1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < f; ++c) {
        dpre(i, c) *= gelu_grad(t.ffn_pre(i, c));
        gfb1(0, c) += dpre(i, c);
      }
    }
    kernels::gemm_tn(t.u2.cview(), dpre.cview(), G(ls.ffn_w1), true);
    Matrix du2(n, d);
    kernels::gemm_nt(dpre.cview(), params.view(ls.ffn_w1), du2.view());
    Matrix dmid = dh_mat;
    layer_norm_backward(du2, t.xhat2, t.rstd2, params.view(ls.ln2_gain), G(ls.ln2_gain), G(ls.ln2_shift),
                        dmid);

    // attention branch: mid = input + concat Wo
    const AttentionTrace& at = t.attn;
    kernels::gemm_tn(at.concat.cview(), dmid.cview(), G(ls.wo), true);
    Matrix dconcat(n, d);
    kernels::gemm_nt(dmid.cview(), params.view(ls.wo), dconcat.view());
    Matrix dq(n, d), dk(n, d), dv(n, d);
    std::vector<double> dp(n);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const std::size_t c0 = h * dh;
      const Matrix& p = at.probs[h];
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) {
            s += dconcat(i, c0 + c) * at.v(j, c0 + c);
            dv(j, c0 + c) += p(i, j) * dconcat(i, c0 + c);
          }
          dp[j] = s;
          dot += p(i, j) * s;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double ds = p(i, j) * (dp[j] - dot);
          gbias(h, phi(i, j)) += ds;
          for (std::size_t c = 0; c < dh; ++c) {
            dq(i, c0 + c) += ds * at.k(j, c0 + c) * scale;
            dk(j, c0 + c) += ds * at.q(i, c0 + c) * scale;
          }
        }
      }
    }
    kernels::gemm_tn(t.u1.cview(), dq.cview(), G(ls.wq), true);
    kernels::gemm_tn(t.u1.cview(), dk.cview(), G(ls.wk), true);
    kernels::gemm_tn(t.u1.cview(), dv.cview(), G(ls.wv), true);
    Matrix du1(n, d);
    kernels::gemm_nt(dq.cview(), params.view(ls.wq), du1.view());
    kernels::gemm_nt(dk.cview(), params.view(ls.wk), du1.view(), true);
    kernels::gemm_nt(dv.cview(), params.view(ls.wv), du1.view(), true);
    Matrix din = dmid;
    layer_norm_backward(du1, t.xhat1, t.rstd1, params.view(ls.ln1_gain), G(ls.ln1_gain), G(ls.ln1_shift),
                        din);
    dh_mat = std::move(din);
  }

  // input embedding
  kernels::gemm_tn(route.features.cview(), dh_mat.cview(), G(L.in_proj_w), true);
  const MatView gin_b = G(L.in_proj_b);
  const MatView gz_in = G(L.z_in);
  const MatView gz_out = G(L.z_out);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bi = route.centrality.in_bucket[i];
    const std::size_t bo = route.centrality.out_bucket[i];
    for (std::size_t c = 0; c < d; ++c) {
      gin_b(0, c) += dh_mat(i, c);
      gz_in(bi, c) += dh_mat(i, c);
      gz_out(bo, c) += dh_mat(i, c);
    }
  }
}

double sample_gradient(const ModelParams& params, const LabeledRoute& sample, double batch_size,
                       std::span<double> grad) {
  ForwardTrace tr;
  const double y = run_forward(params, sample.route, tr);
  const double truth = (sample.travel_time_s - params.target_mean) / params.target_std;
  const double r = y - truth;
  run_backward(params, sample.route, tr, huber_derivative(r) / batch_size, grad);
  return huber(r);
}

void check_batch(const ModelParams& params, std::span<const LabeledRoute> batch, std::span<double> grad) {
  if (batch.empty()) throw Error(ErrorKind::EmptyDataset, "empty batch");
  if (grad.size() != params.values.size()) {
    throw Error(ErrorKind::ShapeMismatch, "gradient buffer size differs from parameter count");
  }
}

double reduce(std::span<const std::vector<double>> per_sample, std::span<const double> losses,
              std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (std::size_t b = 0; b < per_sample.size(); ++b) {
    const auto& g = per_sample[b];
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
    total += losses[b];
  }
  return total / static_cast<double>(losses.size());
}

}  // namespace

Matrix input_embedding(const ModelParams& params, const EncodedRoute& route) {
  check_route(params, route);
  const ParamLayout& L = params.layout;
  const std::size_t n = route.node_count(), d = params.config.width;
  Matrix h(n, d);
  kernels::gemm_nn(route.features.cview(), params.view(L.in_proj_w), h.view());
  const ConstMatView b = params.view(L.in_proj_b);
  const ConstMatView zi = params.view(L.z_in);
  const ConstMatView zo = params.view(L.z_out);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bi = route.centrality.in_bucket[i];
    const std::size_t bo = route.centrality.out_bucket[i];
    for (std::size_t c = 0; c < d; ++c) h(i, c) += b(0, c) + zi(bi, c) + zo(bo, c);
  }
  return h;
}

Matrix attention_bias(const ModelParams& params, std::size_t head, const SpatialEncodingTable& phi) {
  const ConstMatView bias = params.view(params.layout.spatial_bias);
  Matrix out(phi.n, phi.n);
  for (std::size_t i = 0; i < phi.n; ++i) {
    for (std::size_t j = 0; j < phi.n; ++j) out(i, j) = bias(head, phi(i, j));
  }
  return out;
}

Matrix attention(const ModelParams& params, std::size_t layer, const Matrix& x,
                 const SpatialEncodingTable& phi, std::vector<Matrix>* probs) {
  if (layer >= params.config.layers) throw Error(ErrorKind::ShapeMismatch, "layer index out of range");
  check_phi(params, x, phi);
  AttentionTrace tr;
  Matrix out = attention_impl(params, layer, x, phi, tr);
  if (probs) *probs = std::move(tr.probs);
  return out;
}

double forward_normalized(const ModelParams& params, const EncodedRoute& route) {
  ForwardTrace tr;
  return run_forward(params, route, tr);
}

double forward(const ModelParams& params, const EncodedRoute& route) {
  const double pred = forward_normalized(params, route) * params.target_std + params.target_mean;
  if (!std::isfinite(pred)) throw Error(ErrorKind::NonFiniteActivation, "prediction is not finite");
  return pred;
}

double huber(double residual) {
  const double a = std::abs(residual);
  return a <= kHuberDelta ? 0.5 * residual * residual / kHuberDelta : a - 0.5 * kHuberDelta;
}

double huber_derivative(double residual) {
  if (std::abs(residual) <= kHuberDelta) return residual / kHuberDelta;
  return residual > 0.0 ? 1.0 : -1.0;
}

double loss(double pred_s, double truth_s, double target_std) {
  if (!std::isfinite(pred_s) || !std::isfinite(truth_s) || !std::isfinite(target_std) ||
      !(target_std > 0.0)) {
    throw Error(ErrorKind::NonFinite, "loss inputs must be finite with a positive target scale");
  }
  return huber((pred_s - truth_s) / target_std);
}

double batch_gradient(const ModelParams& params, std::span<const LabeledRoute> batch,
                      std::span<double> grad) {
  check_batch(params, batch, grad);
  const std::size_t bsz = batch.size();
  std::vector<std::vector<double>> per_sample(bsz);
  std::vector<double> losses(bsz, 0.0);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(bsz); ++b) {
    try {
      auto& g = per_sample[static_cast<std::size_t>(b)];
      g.assign(params.values.size(), 0.0);
      losses[static_cast<std::size_t>(b)] =
          sample_gradient(params, batch[static_cast<std::size_t>(b)], static_cast<double>(bsz), g);
    } catch (...) {
#pragma omp critical(transtte_batch_gradient_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return reduce(per_sample, losses, grad);
}

namespace serial {

double batch_gradient(const ModelParams& params, std::span<const LabeledRoute> batch,
                      std::span<double> grad) {
  check_batch(params, batch, grad);
  const std::size_t bsz = batch.size();
  std::vector<std::vector<double>> per_sample(bsz);
  std::vector<double> losses(bsz, 0.0);
  for (std::size_t b = 0; b < bsz; ++b) {
    per_sample[b].assign(params.values.size(), 0.0);
    losses[b] = sample_gradient(params, batch[b], static_cast<double>(bsz), per_sample[b]);
  }
  return reduce(per_sample, losses, grad);
}

}  // namespace serial
}  // namespace transtte
