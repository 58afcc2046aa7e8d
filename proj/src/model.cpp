#include "subseg/model.hpp"

#include <cmath>

#include "subseg/linalg.hpp"

namespace subseg {

const char* mode_name(ModelMode m) {
  switch (m) {
    case ModelMode::Textual: return "textual";
    case ModelMode::Multimodal: return "multimodal";
    case ModelMode::SpeechOnly: return "speech_only";
  }
  return "?";
}

ModelMode mode_from_name(const std::string& name) {
  if (name == "textual") return ModelMode::Textual;
  if (name == "multimodal") return ModelMode::Multimodal;
  if (name == "speech_only") return ModelMode::SpeechOnly;
  fail(Err::ConfigMismatch, "unknown model mode \"" + name + "\"");
}

void ModelConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0)
    fail(Err::ConfigMismatch, "d_model must be a positive multiple of n_heads");
  if (d_model % 2 != 0) fail(Err::ConfigMismatch, "d_model must be even (sinusoidal encoding)");
  if (dec_layers == 0) fail(Err::ConfigMismatch, "decoder needs at least one layer");
  if (mode == ModelMode::Textual && speech_enc_layers != 0)
    fail(Err::ConfigMismatch, "textual mode must have speech_enc_layers = 0");
  if (mode == ModelMode::SpeechOnly && text_enc_layers != 0)
    fail(Err::ConfigMismatch, "speech_only mode must have text_enc_layers = 0");
  if (mode != ModelMode::Textual) {
    if (speech_enc_layers == 0) fail(Err::ConfigMismatch, "speech encoder needs layers");
    if (speech_downsample != 1 && speech_downsample != 2 && speech_downsample != 4)
      fail(Err::ConfigMismatch, "speech_downsample must be 1, 2 or 4");
    if (speech_feat_dims == 0) fail(Err::ConfigMismatch, "speech_feat_dims must be positive");
  }
  if (mode != ModelMode::SpeechOnly && text_enc_layers == 0)
    fail(Err::ConfigMismatch, "text encoder needs layers");
  if (dropout < 0.0 || dropout >= 1.0) fail(Err::ConfigMismatch, "dropout must be in [0, 1)");
  if (vocab.empty()) fail(Err::ConfigMismatch, "empty vocabulary");
}

bool ModelConfig::operator==(const ModelConfig& o) const {
  return d_model == o.d_model && n_heads == o.n_heads && ffn_dim == o.ffn_dim &&
         text_enc_layers == o.text_enc_layers && speech_enc_layers == o.speech_enc_layers &&
         dec_layers == o.dec_layers && speech_downsample == o.speech_downsample &&
         speech_feat_dims == o.speech_feat_dims && mode == o.mode && vocab == o.vocab;
}

// --- named tensor walk -------------------------------------------------------

namespace {

template <class T, class Fn>
void walk_attn(AttentionParams<T>& a, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".wq", a.wq);
  fn(prefix + ".bq", a.bq);
  fn(prefix + ".wk", a.wk);
  fn(prefix + ".bk", a.bk);
  fn(prefix + ".wv", a.wv);
  fn(prefix + ".bv", a.bv);
  fn(prefix + ".wo", a.wo);
  fn(prefix + ".bo", a.bo);
}

template <class T, class Fn>
void walk_ln(LayerNormParams<T>& l, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".gamma", l.gamma);
  fn(prefix + ".beta", l.beta);
}

template <class T, class Fn>
void walk_ffn(FfnParams<T>& f, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".w1", f.w1);
  fn(prefix + ".b1", f.b1);
  fn(prefix + ".w2", f.w2);
  fn(prefix + ".b2", f.b2);
}

template <class T, class Fn>
void walk_params(Parameters<T>& p, Fn&& fn) {
  fn("embedding", p.embedding);
  for (size_t l = 0; l < p.text_layers.size(); ++l) {
    std::string pre = "text." + std::to_string(l);
    walk_ln(p.text_layers[l].ln1, pre + ".ln1", fn);
    walk_attn(p.text_layers[l].self_attn, pre + ".self", fn);
    walk_ln(p.text_layers[l].ln2, pre + ".ln2", fn);
    walk_ffn(p.text_layers[l].ffn, pre + ".ffn", fn);
  }
  if (!p.text_ln_final.gamma.empty()) walk_ln(p.text_ln_final, "text.ln_final", fn);
  if (!p.conv1.w.empty()) {
    fn("conv1.w", p.conv1.w);
    fn("conv1.b", p.conv1.b);
    fn("conv2.w", p.conv2.w);
    fn("conv2.b", p.conv2.b);
  }
  for (size_t l = 0; l < p.speech_layers.size(); ++l) {
    std::string pre = "speech." + std::to_string(l);
    walk_ln(p.speech_layers[l].ln1, pre + ".ln1", fn);
    walk_attn(p.speech_layers[l].self_attn, pre + ".self", fn);
    walk_ln(p.speech_layers[l].ln2, pre + ".ln2", fn);
    walk_ffn(p.speech_layers[l].ffn, pre + ".ffn", fn);
  }
  if (!p.speech_ln_final.gamma.empty()) walk_ln(p.speech_ln_final, "speech.ln_final", fn);
  if (!p.ctc_w.empty()) {
    fn("ctc.w", p.ctc_w);
    fn("ctc.b", p.ctc_b);
  }
  for (size_t l = 0; l < p.dec_layers.size(); ++l) {
    std::string pre = "dec." + std::to_string(l);
    walk_ln(p.dec_layers[l].ln1, pre + ".ln1", fn);
    walk_attn(p.dec_layers[l].self_attn, pre + ".self", fn);
    walk_ln(p.dec_layers[l].ln2, pre + ".ln2", fn);
    if (p.dec_layers[l].cross_text) walk_attn(*p.dec_layers[l].cross_text, pre + ".cross_text", fn);
    if (p.dec_layers[l].cross_speech)
      walk_attn(*p.dec_layers[l].cross_speech, pre + ".cross_speech", fn);
    walk_ln(p.dec_layers[l].ln3, pre + ".ln3", fn);
    walk_ffn(p.dec_layers[l].ffn, pre + ".ffn", fn);
  }
  walk_ln(p.dec_ln_final, "dec.ln_final", fn);
}

}  // namespace

template <class T>
std::vector<std::pair<std::string, Tensor<T>*>> named_tensors(Parameters<T>& p) {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  walk_params(p, [&](const std::string& name, Tensor<T>& t) { out.emplace_back(name, &t); });
  return out;
}

template <class T>
std::vector<std::pair<std::string, const Tensor<T>*>> named_tensors(const Parameters<T>& p) {
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  walk_params(const_cast<Parameters<T>&>(p),
              [&](const std::string& name, Tensor<T>& t) { out.emplace_back(name, &t); });
  return out;
}

// --- construction ------------------------------------------------------------

namespace {

template <class T>
AttentionParams<T> make_attn(size_t d) {
  AttentionParams<T> a;
  a.wq = Tensor<T>({d, d});
  a.bq = Tensor<T>({d});
  a.wk = Tensor<T>({d, d});
  a.bk = Tensor<T>({d});
  a.wv = Tensor<T>({d, d});
  a.bv = Tensor<T>({d});
  a.wo = Tensor<T>({d, d});
  a.bo = Tensor<T>({d});
  return a;
}

template <class T>
LayerNormParams<T> make_ln(size_t d) {
  return LayerNormParams<T>{Tensor<T>({d}), Tensor<T>({d})};
}

template <class T>
FfnParams<T> make_ffn(size_t d, size_t f) {
  return FfnParams<T>{Tensor<T>({d, f}), Tensor<T>({f}), Tensor<T>({f, d}), Tensor<T>({d})};
}

template <class T>
EncoderLayerParams<T> make_enc_layer(size_t d, size_t f) {
  return EncoderLayerParams<T>{make_ln<T>(d), make_ln<T>(d), make_attn<T>(d), make_ffn<T>(d, f)};
}

}  // namespace

template <class T>
Model<T>::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  vocab_ = Vocab::from_tokens(cfg_.vocab);
  const size_t d = cfg_.d_model, f = cfg_.ffn_dim, v = vocab_.size();

  params_.embedding = Tensor<T>({v, d});
  for (size_t l = 0; l < cfg_.text_enc_layers; ++l)
    params_.text_layers.push_back(make_enc_layer<T>(d, f));
  if (cfg_.text_enc_layers > 0) params_.text_ln_final = make_ln<T>(d);

  if (cfg_.mode != ModelMode::Textual) {
    size_t cin = cfg_.speech_feat_dims;
    params_.conv1 = ConvParams<T>{Tensor<T>({3 * cin, d}), Tensor<T>({d}),
                                  cfg_.speech_downsample >= 2 ? size_t(2) : size_t(1)};
    params_.conv2 = ConvParams<T>{Tensor<T>({3 * d, d}), Tensor<T>({d}),
                                  cfg_.speech_downsample == 4 ? size_t(2) : size_t(1)};
    for (size_t l = 0; l < cfg_.speech_enc_layers; ++l)
      params_.speech_layers.push_back(make_enc_layer<T>(d, f));
    params_.speech_ln_final = make_ln<T>(d);
    params_.ctc_w = Tensor<T>({d, v});
    params_.ctc_b = Tensor<T>({v});
  }

  for (size_t l = 0; l < cfg_.dec_layers; ++l) {
    DecoderLayerParams<T> dl;
    dl.ln1 = make_ln<T>(d);
    dl.ln2 = make_ln<T>(d);
    dl.ln3 = make_ln<T>(d);
    dl.self_attn = make_attn<T>(d);
    if (cfg_.mode != ModelMode::SpeechOnly) dl.cross_text = make_attn<T>(d);
    if (cfg_.mode != ModelMode::Textual) dl.cross_speech = make_attn<T>(d);
    dl.ffn = make_ffn<T>(d, f);
    params_.dec_layers.push_back(std::move(dl));
  }
  params_.dec_ln_final = make_ln<T>(d);
}

template <class T>
void Model<T>::init_weights(uint64_t seed) {
  Rng rng(seed);
  double emb_std = 1.0 / std::sqrt(static_cast<double>(cfg_.d_model));
  for (auto& [name, t] : named_tensors(params_)) {
    if (name == "embedding") {
      for (auto& x : t->v) x = static_cast<T>(rng.next_gaussian() * emb_std);
      // padding row stays zero
      for (size_t c = 0; c < t->cols(); ++c) t->at(static_cast<size_t>(vocab_.pad), c) = T(0);
    } else if (name.ends_with(".gamma")) {
      t->fill(T(1));
    } else if (name.ends_with(".beta") || t->shape.size() == 1) {
      t->zero();  // every bias
    } else {
      // Glorot uniform over [fan_in x fan_out]
      double fan_in = static_cast<double>(t->shape[0]);
      double fan_out = static_cast<double>(t->shape[1]);
      double bound = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& x : t->v) x = static_cast<T>(rng.next_uniform(-bound, bound));
    }
  }
}

template <class T>
Parameters<T> Model<T>::zero_grads() const {
  Model<T> tmp(cfg_);  // freshly allocated tensors are zero
  return std::move(tmp.params_);
}

// --- building blocks ---------------------------------------------------------

namespace {

constexpr double kLnEps = 1e-5;

// Sinusoidal position encoding added in place.
template <class T>
void add_positional(Tensor<T>& x) {
  const size_t d = x.cols();
  for (size_t pos = 0; pos < x.rows(); ++pos) {
    T* row = x.row(pos);
    for (size_t i = 0; i * 2 < d; ++i) {
      double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(d));
      double angle = static_cast<double>(pos) * freq;
      row[2 * i] += static_cast<T>(std::sin(angle));
      row[2 * i + 1] += static_cast<T>(std::cos(angle));
    }
  }
}

template <class T>
void apply_dropout(Tensor<T>& x, const DropoutCtx& drop, DropCache<T>* cache) {
  if (!drop.active()) return;
  T scale = static_cast<T>(1.0 / (1.0 - drop.p));
  Tensor<T> mask;
  mask.shape = x.shape;
  mask.v.resize(x.numel());
  for (size_t i = 0; i < x.numel(); ++i) {
    T m = drop.rng->next_double() < drop.p ? T(0) : scale;
    mask.v[i] = m;
    x.v[i] *= m;
  }
  if (cache) cache->mask = std::move(mask);
}

template <class T>
Tensor<T> dropout_backward(const Tensor<T>& dy, const DropCache<T>& cache) {
  Tensor<T> dx = dy;
  if (!cache.mask.empty())
    for (size_t i = 0; i < dx.numel(); ++i) dx.v[i] *= cache.mask.v[i];
  return dx;
}

template <class T>
Tensor<T> layernorm_forward(const LayerNormParams<T>& p, const Tensor<T>& x, LnCache<T>* cache) {
  const size_t rows = x.rows(), d = x.cols();
  Tensor<T> y({rows, d});
  Tensor<T> xhat({rows, d});
  std::vector<T> inv_std(rows);
  for (size_t r = 0; r < rows; ++r) {
    const T* in = x.row(r);
    T mean = kern::backend<T>().reduce_sum(in, d) / static_cast<T>(d);
    T var = 0;
    for (size_t c = 0; c < d; ++c) {
      T t = in[c] - mean;
      var += t * t;
    }
    var /= static_cast<T>(d);
    T is = T(1) / std::sqrt(var + static_cast<T>(kLnEps));
    inv_std[r] = is;
    T* xh = xhat.row(r);
    T* out = y.row(r);
    for (size_t c = 0; c < d; ++c) {
      xh[c] = (in[c] - mean) * is;
      out[c] = xh[c] * p.gamma.v[c] + p.beta.v[c];
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <class T>
Tensor<T> layernorm_backward(const LayerNormParams<T>& p, const LnCache<T>& cache,
                             const Tensor<T>& dy, LayerNormParams<T>& grads) {
  const size_t rows = dy.rows(), d = dy.cols();
  Tensor<T> dx({rows, d});
  for (size_t r = 0; r < rows; ++r) {
    const T* g = dy.row(r);
    const T* xh = cache.xhat.row(r);
    T mean_dxhat = 0, mean_dxhat_xhat = 0;
    for (size_t c = 0; c < d; ++c) {
      T dxh = g[c] * p.gamma.v[c];
      mean_dxhat += dxh;
      mean_dxhat_xhat += dxh * xh[c];
      grads.gamma.v[c] += g[c] * xh[c];
      grads.beta.v[c] += g[c];
    }
    mean_dxhat /= static_cast<T>(d);
    mean_dxhat_xhat /= static_cast<T>(d);
    T is = cache.inv_std[r];
    T* out = dx.row(r);
    for (size_t c = 0; c < d; ++c) {
      T dxh = g[c] * p.gamma.v[c];
      out[c] = is * (dxh - mean_dxhat - xh[c] * mean_dxhat_xhat);
    }
  }
  return dx;
}

template <class T>
Tensor<T> attn_forward(const AttentionParams<T>& p, const Tensor<T>& qin, const Tensor<T>& kvin,
                       size_t n_heads, bool causal, AttnCache<T>* cache) {
  const size_t sq = qin.rows(), sk = kvin.rows(), d = qin.cols(), dh = d / n_heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  const auto& be = kern::backend<T>();

  Tensor<T> q = matmul_nn(qin, p.wq);
  add_row_bias(q, p.bq);
  Tensor<T> k = matmul_nn(kvin, p.wk);
  add_row_bias(k, p.bk);
  Tensor<T> v = matmul_nn(kvin, p.wv);
  add_row_bias(v, p.bv);

  Tensor<T> probs({n_heads * sq, sk});
  Tensor<T> ctx({sq, d});
  for (size_t h = 0; h < n_heads; ++h) {
    const size_t off = h * dh;
    for (size_t i = 0; i < sq; ++i) {
      size_t jmax = causal ? std::min(i + 1, sk) : sk;
      T* row = probs.row(h * sq + i);
      for (size_t j = 0; j < jmax; ++j)
        row[j] = be.dot(q.row(i) + off, k.row(j) + off, dh) * scale;
      softmax_row(row, jmax);  // masked tail stays zero
      for (size_t j = 0; j < jmax; ++j) be.axpy(row[j], v.row(j) + off, ctx.row(i) + off, dh);
    }
  }

  Tensor<T> out = matmul_nn(ctx, p.wo);
  add_row_bias(out, p.bo);
  if (cache) {
    cache->qin = qin;
    cache->kvin = kvin;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->ctx = std::move(ctx);
  }
  return out;
}

// Accumulates parameter grads and input grads. dqin/dkvin may alias (self
// attention); all writes below are additive.
template <class T>
void attn_backward(const AttentionParams<T>& p, const AttnCache<T>& cache, size_t n_heads,
                   bool causal, const Tensor<T>& dy, AttentionParams<T>& grads, Tensor<T>& dqin,
                   Tensor<T>& dkvin) {
  const size_t sq = cache.q.rows(), sk = cache.k.rows(), d = cache.q.cols(), dh = d / n_heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  const auto& be = kern::backend<T>();

  // out = ctx * wo + bo
  Tensor<T> dctx = matmul_nt(dy, p.wo);
  matmul_tn_acc(cache.ctx, dy, grads.wo);
  accumulate_colsum(dy, grads.bo);

  Tensor<T> dq({sq, d}), dk({sk, d}), dv({sk, d});
  std::vector<T> dp, ds;
  for (size_t h = 0; h < n_heads; ++h) {
    const size_t off = h * dh;
    for (size_t i = 0; i < sq; ++i) {
      size_t jmax = causal ? std::min(i + 1, sk) : sk;
      const T* row = cache.probs.row(h * sq + i);
      dp.assign(jmax, T(0));
      ds.assign(jmax, T(0));
      for (size_t j = 0; j < jmax; ++j) {
        dp[j] = be.dot(dctx.row(i) + off, cache.v.row(j) + off, dh);
        be.axpy(row[j], dctx.row(i) + off, dv.row(j) + off, dh);
      }
      softmax_row_backward(row, dp.data(), ds.data(), jmax);
      for (size_t j = 0; j < jmax; ++j) {
        be.axpy(ds[j] * scale, cache.k.row(j) + off, dq.row(i) + off, dh);
        be.axpy(ds[j] * scale, cache.q.row(i) + off, dk.row(j) + off, dh);
      }
    }
  }

  matmul_nt_acc(dq, p.wq, dqin);
  matmul_tn_acc(cache.qin, dq, grads.wq);
  accumulate_colsum(dq, grads.bq);
  matmul_nt_acc(dk, p.wk, dkvin);
  matmul_tn_acc(cache.kvin, dk, grads.wk);
  accumulate_colsum(dk, grads.bk);
  matmul_nt_acc(dv, p.wv, dkvin);
  matmul_tn_acc(cache.kvin, dv, grads.wv);
  accumulate_colsum(dv, grads.bv);
}

template <class T>
Tensor<T> ffn_forward(const FfnParams<T>& p, const Tensor<T>& x, FfnCache<T>* cache) {
  Tensor<T> x1 = matmul_nn(x, p.w1);
  add_row_bias(x1, p.b1);
  Tensor<T> a = x1;
  gelu_inplace(a);
  Tensor<T> y = matmul_nn(a, p.w2);
  add_row_bias(y, p.b2);
  if (cache) {
    cache->in = x;
    cache->x1 = std::move(x1);
  }
  return y;
}

template <class T>
Tensor<T> ffn_backward(const FfnParams<T>& p, const FfnCache<T>& cache, const Tensor<T>& dy,
                       FfnParams<T>& grads) {
  Tensor<T> a = cache.x1;
  gelu_inplace(a);
  Tensor<T> da = matmul_nt(dy, p.w2);
  matmul_tn_acc(a, dy, grads.w2);
  accumulate_colsum(dy, grads.b2);
  Tensor<T> dx1 = std::move(da);
  for (size_t i = 0; i < dx1.numel(); ++i) dx1.v[i] *= gelu_grad(cache.x1.v[i]);
  Tensor<T> dx = matmul_nt(dx1, p.w1);
  matmul_tn_acc(cache.in, dx1, grads.w1);
  accumulate_colsum(dx1, grads.b1);
  return dx;
}

template <class T>
void enc_layer_forward(const EncoderLayerParams<T>& p, size_t n_heads, Tensor<T>& x,
                       EncLayerCache<T>* cache, const DropoutCtx& drop) {
  Tensor<T> h = layernorm_forward(p.ln1, x, cache ? &cache->ln1 : nullptr);
  Tensor<T> sa = attn_forward(p.self_attn, h, h, n_heads, false, cache ? &cache->attn : nullptr);
  apply_dropout(sa, drop, cache ? &cache->d_attn : nullptr);
  add_inplace(x, sa);
  Tensor<T> f = layernorm_forward(p.ln2, x, cache ? &cache->ln2 : nullptr);
  Tensor<T> ff = ffn_forward(p.ffn, f, cache ? &cache->ffn : nullptr);
  apply_dropout(ff, drop, cache ? &cache->d_ffn : nullptr);
  add_inplace(x, ff);
}

template <class T>
void enc_layer_backward(const EncoderLayerParams<T>& p, const EncLayerCache<T>& cache,
                        size_t n_heads, Tensor<T>& dx, EncoderLayerParams<T>& grads) {
  Tensor<T> dff = dropout_backward(dx, cache.d_ffn);
  Tensor<T> dln2_in = ffn_backward(p.ffn, cache.ffn, dff, grads.ffn);
  add_inplace(dx, layernorm_backward(p.ln2, cache.ln2, dln2_in, grads.ln2));
  Tensor<T> dsa = dropout_backward(dx, cache.d_attn);
  Tensor<T> dh({dsa.rows(), dsa.cols()});
  attn_backward(p.self_attn, cache.attn, n_heads, false, dsa, grads.self_attn, dh, dh);
  add_inplace(dx, layernorm_backward(p.ln1, cache.ln1, dh, grads.ln1));
}

// conv1d, kernel 3, pad 1: y[t] = gelu(sum_dk x[s*t + dk - 1] * w[dk] + b)
template <class T>
size_t conv_out_len(size_t f_in, size_t stride) { return (f_in - 1) / stride + 1; }

template <class T>
Tensor<T> conv_forward(const ConvParams<T>& p, const Tensor<T>& x, ConvCache<T>* cache) {
  const size_t f_in = x.rows(), cin = x.cols();
  const size_t f_out = conv_out_len<T>(f_in, p.stride);
  Tensor<T> m({f_out, 3 * cin});
  for (size_t t = 0; t < f_out; ++t) {
    for (size_t dk = 0; dk < 3; ++dk) {
      long src = static_cast<long>(p.stride * t + dk) - 1;
      if (src < 0 || src >= static_cast<long>(f_in)) continue;
      const T* in = x.row(static_cast<size_t>(src));
      T* dst = m.row(t) + dk * cin;
      for (size_t c = 0; c < cin; ++c) dst[c] = in[c];
    }
  }
  Tensor<T> x1 = matmul_nn(m, p.w);
  add_row_bias(x1, p.b);
  Tensor<T> y = x1;
  gelu_inplace(y);
  if (cache) {
    cache->im2col = std::move(m);
    cache->x1 = std::move(x1);
  }
  return y;
}

template <class T>
void conv_backward(const ConvParams<T>& p, const ConvCache<T>& cache, const Tensor<T>& dy,
                   ConvParams<T>& grads, Tensor<T>* dx) {
  Tensor<T> dx1 = dy;
  for (size_t i = 0; i < dx1.numel(); ++i) dx1.v[i] *= gelu_grad(cache.x1.v[i]);
  matmul_tn_acc(cache.im2col, dx1, grads.w);
  accumulate_colsum(dx1, grads.b);
  if (!dx) return;
  const size_t cin = dx->cols(), f_in = dx->rows();
  Tensor<T> dm = matmul_nt(dx1, p.w);  // [f_out x 3*cin]
  for (size_t t = 0; t < dm.rows(); ++t) {
    for (size_t dk = 0; dk < 3; ++dk) {
      long src = static_cast<long>(p.stride * t + dk) - 1;
      if (src < 0 || src >= static_cast<long>(f_in)) continue;
      kern::backend<T>().vadd(dm.row(t) + dk * cin, dx->row(static_cast<size_t>(src)), cin);
    }
  }
}

}  // namespace

// --- encoders ----------------------------------------------------------------

template <class T>
Tensor<T> Model<T>::encode_text(const std::vector<int>& ids, TextEncCache<T>* cache,
                                DropoutCtx drop) const {
  if (cfg_.mode == ModelMode::SpeechOnly)
    fail(Err::ModeMismatch, "speech_only model has no text encoder");
  if (ids.empty()) fail(Err::ShapeMismatch, "empty text input");
  const size_t d = cfg_.d_model;
  const T emb_scale = static_cast<T>(std::sqrt(static_cast<double>(d)));
  Tensor<T> x({ids.size(), d});
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<size_t>(ids[i]) >= vocab_.size())
      fail(Err::UnknownToken, "token id out of range", i);
    kern::backend<T>().axpy(emb_scale, params_.embedding.row(static_cast<size_t>(ids[i])),
                            x.row(i), d);
  }
  add_positional(x);
  apply_dropout(x, drop, cache ? &cache->d_embed : nullptr);
  if (cache) {
    cache->ids = ids;
    cache->layers.resize(params_.text_layers.size());
  }
  for (size_t l = 0; l < params_.text_layers.size(); ++l)
    enc_layer_forward(params_.text_layers[l], cfg_.n_heads, x, cache ? &cache->layers[l] : nullptr,
                      drop);
  Tensor<T> out = layernorm_forward(params_.text_ln_final, x, cache ? &cache->ln_final : nullptr);
  if (cache) cache->out = out;
  return out;
}

template <class T>
size_t Model<T>::speech_out_frames(size_t frames) const {
  size_t f1 = (frames - 1) / params_.conv1.stride + 1;
  return (f1 - 1) / params_.conv2.stride + 1;
}

template <class T>
Tensor<T> Model<T>::encode_speech(const FeatureMatrix& feats, SpeechEncCache<T>* cache,
                                  DropoutCtx drop) const {
  if (cfg_.mode == ModelMode::Textual)
    fail(Err::ModeMismatch, "textual model has no speech encoder");
  if (feats.dims != cfg_.speech_feat_dims)
    fail(Err::ShapeMismatch, "feature dims " + std::to_string(feats.dims) + " != configured " +
                                 std::to_string(cfg_.speech_feat_dims));
  Tensor<T> x0({feats.frames, feats.dims});
  for (size_t i = 0; i < x0.numel(); ++i) x0.v[i] = static_cast<T>(feats.data[i]);

  Tensor<T> a1 = conv_forward(params_.conv1, x0, cache ? &cache->c1 : nullptr);
  Tensor<T> x = conv_forward(params_.conv2, a1, cache ? &cache->c2 : nullptr);
  add_positional(x);
  apply_dropout(x, drop, cache ? &cache->d_embed : nullptr);
  if (cache) cache->layers.resize(params_.speech_layers.size());
  for (size_t l = 0; l < params_.speech_layers.size(); ++l)
    enc_layer_forward(params_.speech_layers[l], cfg_.n_heads, x,
                      cache ? &cache->layers[l] : nullptr, drop);
  Tensor<T> out = layernorm_forward(params_.speech_ln_final, x, cache ? &cache->ln_final : nullptr);
  if (cache) cache->out = out;
  return out;
}

template <class T>
Tensor<T> Model<T>::ctc_logits(const Tensor<T>& speech_out) const {
  if (params_.ctc_w.empty()) fail(Err::ModeMismatch, "model has no CTC head");
  Tensor<T> logits = matmul_nn(speech_out, params_.ctc_w);
  add_row_bias(logits, params_.ctc_b);
  return logits;
}

// --- decoder -----------------------------------------------------------------

template <class T>
Tensor<T> Model<T>::decode(const Tensor<T>* enc_text, const Tensor<T>* enc_speech,
                           const std::vector<int>& prefix, DecoderCache<T>* cache,
                           DropoutCtx drop) const {
  const bool want_text = cfg_.mode != ModelMode::SpeechOnly;
  const bool want_speech = cfg_.mode != ModelMode::Textual;
  if (want_text != (enc_text != nullptr))
    fail(Err::ModeMismatch, std::string("text encoder output ") +
                                (want_text ? "required" : "not accepted") + " in mode " +
                                mode_name(cfg_.mode));
  if (want_speech != (enc_speech != nullptr))
    fail(Err::ModeMismatch, std::string("speech encoder output ") +
                                (want_speech ? "required" : "not accepted") + " in mode " +
                                mode_name(cfg_.mode));
  if (prefix.empty()) fail(Err::ShapeMismatch, "empty decoder prefix");

  const size_t d = cfg_.d_model;
  const T emb_scale = static_cast<T>(std::sqrt(static_cast<double>(d)));
  Tensor<T> x({prefix.size(), d});
  for (size_t i = 0; i < prefix.size(); ++i) {
    if (prefix[i] < 0 || static_cast<size_t>(prefix[i]) >= vocab_.size())
      fail(Err::UnknownToken, "token id out of range", i);
    kern::backend<T>().axpy(emb_scale, params_.embedding.row(static_cast<size_t>(prefix[i])),
                            x.row(i), d);
  }
  add_positional(x);
  apply_dropout(x, drop, cache ? &cache->d_embed : nullptr);
  if (cache) {
    cache->ids = prefix;
    cache->layers.resize(params_.dec_layers.size());
  }

  for (size_t l = 0; l < params_.dec_layers.size(); ++l) {
    const auto& p = params_.dec_layers[l];
    DecLayerCache<T>* lc = cache ? &cache->layers[l] : nullptr;
    Tensor<T> h = layernorm_forward(p.ln1, x, lc ? &lc->ln1 : nullptr);
    Tensor<T> sa =
        attn_forward(p.self_attn, h, h, cfg_.n_heads, /*causal=*/true, lc ? &lc->self_attn : nullptr);
    apply_dropout(sa, drop, lc ? &lc->d_self : nullptr);
    add_inplace(x, sa);

    // Parallel cross-attention: both encoders are queried with the same
    // normalized self-attention output and their contexts are summed.
    Tensor<T> c = layernorm_forward(p.ln2, x, lc ? &lc->ln2 : nullptr);
    Tensor<T> cross({x.rows(), d});
    if (p.cross_text)
      add_inplace(cross, attn_forward(*p.cross_text, c, *enc_text, cfg_.n_heads, false,
                                      lc ? &lc->cross_text : nullptr));
    if (p.cross_speech)
      add_inplace(cross, attn_forward(*p.cross_speech, c, *enc_speech, cfg_.n_heads, false,
                                      lc ? &lc->cross_speech : nullptr));
    apply_dropout(cross, drop, lc ? &lc->d_cross : nullptr);
    add_inplace(x, cross);

    Tensor<T> f = layernorm_forward(p.ln3, x, lc ? &lc->ln3 : nullptr);
    Tensor<T> ff = ffn_forward(p.ffn, f, lc ? &lc->ffn : nullptr);
    apply_dropout(ff, drop, lc ? &lc->d_ffn : nullptr);
    add_inplace(x, ff);
  }

  Tensor<T> out = layernorm_forward(params_.dec_ln_final, x, cache ? &cache->ln_final : nullptr);
  if (cache) cache->out = out;
  // Output projection shares the embedding table.
  return matmul_nt(out, params_.embedding);
}

template <class T>
void Model<T>::decode_backward(const DecoderCache<T>& cache, const Tensor<T>& dlogits,
                               Parameters<T>& grads, Tensor<T>* denc_text,
                               Tensor<T>* denc_speech) const {
  const size_t d = cfg_.d_model;
  // logits = out * E^T
  Tensor<T> dx = matmul_nn(dlogits, params_.embedding);
  matmul_tn_acc(dlogits, cache.out, grads.embedding);

  dx = layernorm_backward(params_.dec_ln_final, cache.ln_final, dx, grads.dec_ln_final);

  for (size_t l = params_.dec_layers.size(); l-- > 0;) {
    const auto& p = params_.dec_layers[l];
    const auto& lc = cache.layers[l];
    auto& gp = grads.dec_layers[l];

    Tensor<T> dff = dropout_backward(dx, lc.d_ffn);
    Tensor<T> dln3_in = ffn_backward(p.ffn, lc.ffn, dff, gp.ffn);
    add_inplace(dx, layernorm_backward(p.ln3, lc.ln3, dln3_in, gp.ln3));

    Tensor<T> dcross = dropout_backward(dx, lc.d_cross);
    Tensor<T> dc({dx.rows(), d});
    if (p.cross_speech)
      attn_backward(*p.cross_speech, lc.cross_speech, cfg_.n_heads, false, dcross,
                    *gp.cross_speech, dc, *denc_speech);
    if (p.cross_text)
      attn_backward(*p.cross_text, lc.cross_text, cfg_.n_heads, false, dcross, *gp.cross_text, dc,
                    *denc_text);
    add_inplace(dx, layernorm_backward(p.ln2, lc.ln2, dc, gp.ln2));

    Tensor<T> dsa = dropout_backward(dx, lc.d_self);
    Tensor<T> dh({dx.rows(), d});
    attn_backward(p.self_attn, lc.self_attn, cfg_.n_heads, true, dsa, gp.self_attn, dh, dh);
    add_inplace(dx, layernorm_backward(p.ln1, lc.ln1, dh, gp.ln1));
  }

  Tensor<T> dembed = dropout_backward(dx, cache.d_embed);
  const T emb_scale = static_cast<T>(std::sqrt(static_cast<double>(d)));
  for (size_t i = 0; i < cache.ids.size(); ++i)
    kern::backend<T>().axpy(emb_scale, dembed.row(i),
                            grads.embedding.row(static_cast<size_t>(cache.ids[i])), d);
}

template <class T>
void Model<T>::ctc_head_backward(const Tensor<T>& speech_out, const Tensor<T>& dctc_logits,
                                 Parameters<T>& grads, Tensor<T>& dspeech_out) const {
  matmul_nt_acc(dctc_logits, params_.ctc_w, dspeech_out);
  matmul_tn_acc(speech_out, dctc_logits, grads.ctc_w);
  accumulate_colsum(dctc_logits, grads.ctc_b);
}

template <class T>
void Model<T>::encode_text_backward(const TextEncCache<T>& cache, const Tensor<T>& dout,
                                    Parameters<T>& grads) const {
  Tensor<T> dx =
      layernorm_backward(params_.text_ln_final, cache.ln_final, dout, grads.text_ln_final);
  for (size_t l = params_.text_layers.size(); l-- > 0;)
    enc_layer_backward(params_.text_layers[l], cache.layers[l], cfg_.n_heads, dx,
                       grads.text_layers[l]);
  Tensor<T> dembed = dropout_backward(dx, cache.d_embed);
  const size_t d = cfg_.d_model;
  const T emb_scale = static_cast<T>(std::sqrt(static_cast<double>(d)));
  for (size_t i = 0; i < cache.ids.size(); ++i)
    kern::backend<T>().axpy(emb_scale, dembed.row(i),
                            grads.embedding.row(static_cast<size_t>(cache.ids[i])), d);
}

template <class T>
void Model<T>::encode_speech_backward(const SpeechEncCache<T>& cache, const Tensor<T>& dout,
                                      Parameters<T>& grads) const {
  Tensor<T> dx =
      layernorm_backward(params_.speech_ln_final, cache.ln_final, dout, grads.speech_ln_final);
  for (size_t l = params_.speech_layers.size(); l-- > 0;)
    enc_layer_backward(params_.speech_layers[l], cache.layers[l], cfg_.n_heads, dx,
                       grads.speech_layers[l]);
  Tensor<T> dpost_conv = dropout_backward(dx, cache.d_embed);
  // positional encoding is additive constant: gradient passes through
  Tensor<T> da1({cache.c1.x1.rows(), cache.c1.x1.cols()});
  conv_backward(params_.conv2, cache.c2, dpost_conv, grads.conv2, &da1);
  conv_backward(params_.conv1, cache.c1, da1, grads.conv1, static_cast<Tensor<T>*>(nullptr));
}

template <class T>
typename Model<T>::ForwardOut Model<T>::forward(const FeatureMatrix* speech,
                                                const std::vector<int>* src_text,
                                                const std::vector<int>& tgt_prefix) const {
  const bool want_text = cfg_.mode != ModelMode::SpeechOnly;
  const bool want_speech = cfg_.mode != ModelMode::Textual;
  if (want_text != (src_text != nullptr))
    fail(Err::ModeMismatch,
         std::string("source text ") + (want_text ? "required" : "not accepted") + " in mode " +
             mode_name(cfg_.mode));
  if (want_speech != (speech != nullptr))
    fail(Err::ModeMismatch, std::string("speech features ") +
                                (want_speech ? "required" : "not accepted") + " in mode " +
                                mode_name(cfg_.mode));
  ForwardOut out;
  Tensor<T> enc_t, enc_s;
  if (want_text) enc_t = encode_text(*src_text);
  if (want_speech) {
    enc_s = encode_speech(*speech);
    out.ctc = ctc_logits(enc_s);
  }
  out.logits = decode(want_text ? &enc_t : nullptr, want_speech ? &enc_s : nullptr, tgt_prefix);
  return out;
}

template <class T>
template <class U>
Model<U> Model<T>::cast() const {
  Model<U> out(cfg_);
  auto src = named_tensors(params_);
  auto dst = named_tensors(out.params());
  for (size_t i = 0; i < src.size(); ++i) *dst[i].second = src[i].second->template cast<U>();
  return out;
}

template class Model<float>;
template class Model<double>;
template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template std::vector<std::pair<std::string, Tensor<float>*>> named_tensors(Parameters<float>&);
template std::vector<std::pair<std::string, Tensor<double>*>> named_tensors(Parameters<double>&);
template std::vector<std::pair<std::string, const Tensor<float>*>> named_tensors(
    const Parameters<float>&);
template std::vector<std::pair<std::string, const Tensor<double>*>> named_tensors(
    const Parameters<double>&);

}  // namespace subseg
