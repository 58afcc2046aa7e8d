#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "subseg/model.hpp"

using namespace subseg;

// ---------------------------------------------------------------------------
// Straight-line double-precision oracle: plain nested loops, no shared math
// code with the implementation. Mirrors the documented architecture:
// pre-norm transformer, sinusoidal positions, parallel cross-attention,
// GELU activations, shared embedding output projection.
// ---------------------------------------------------------------------------

namespace oracle {

using Mat = std::vector<std::vector<double>>;

Mat from_tensor(const Tensor<double>& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (size_t r = 0; r < t.rows(); ++r)
    for (size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  return m;
}

std::vector<double> vec_of(const Tensor<double>& t) {
  return std::vector<double>(t.v.begin(), t.v.end());
}

Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t k = 0; k < b.size(); ++k)
      for (size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

void add_bias(Mat& x, const std::vector<double>& b) {
  for (auto& row : x)
    for (size_t j = 0; j < b.size(); ++j) row[j] += b[j];
}

Mat layernorm(const Mat& x, const std::vector<double>& gamma, const std::vector<double>& beta) {
  Mat y = x;
  size_t d = gamma.size();
  for (auto& row : y) {
    double mean = 0;
    for (double v : row) mean += v;
    mean /= double(d);
    double var = 0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= double(d);
    double inv = 1.0 / std::sqrt(var + 1e-5);
    for (size_t j = 0; j < d; ++j) row[j] = (row[j] - mean) * inv * gamma[j] + beta[j];
  }
  return y;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

void add_positions(Mat& x) {
  size_t d = x[0].size();
  for (size_t pos = 0; pos < x.size(); ++pos)
    for (size_t i = 0; 2 * i < d; ++i) {
      double freq = std::pow(10000.0, -2.0 * double(i) / double(d));
      x[pos][2 * i] += std::sin(double(pos) * freq);
      x[pos][2 * i + 1] += std::cos(double(pos) * freq);
    }
}

Mat attention(const AttentionParams<double>& p, const Mat& qin, const Mat& kvin, size_t heads,
              bool causal) {
  Mat q = matmul(qin, from_tensor(p.wq));
  add_bias(q, vec_of(p.bq));
  Mat k = matmul(kvin, from_tensor(p.wk));
  add_bias(k, vec_of(p.bk));
  Mat v = matmul(kvin, from_tensor(p.wv));
  add_bias(v, vec_of(p.bv));

  size_t d = q[0].size(), dh = d / heads;
  Mat ctx(q.size(), std::vector<double>(d, 0.0));
  for (size_t h = 0; h < heads; ++h) {
    for (size_t i = 0; i < q.size(); ++i) {
      size_t jmax = causal ? std::min(i + 1, k.size()) : k.size();
      std::vector<double> scores(jmax);
      for (size_t j = 0; j < jmax; ++j) {
        double s = 0;
        for (size_t c = 0; c < dh; ++c) s += q[i][h * dh + c] * k[j][h * dh + c];
        scores[j] = s / std::sqrt(double(dh));
      }
      double mx = scores[0];
      for (double s : scores) mx = std::max(mx, s);
      double z = 0;
      for (double& s : scores) {
        s = std::exp(s - mx);
        z += s;
      }
      for (size_t j = 0; j < jmax; ++j)
        for (size_t c = 0; c < dh; ++c) ctx[i][h * dh + c] += scores[j] / z * v[j][h * dh + c];
    }
  }
  Mat out = matmul(ctx, from_tensor(p.wo));
  add_bias(out, vec_of(p.bo));
  return out;
}

void add_into(Mat& x, const Mat& y) {
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t j = 0; j < x[0].size(); ++j) x[i][j] += y[i][j];
}

Mat ffn(const FfnParams<double>& p, const Mat& x) {
  Mat h = matmul(x, from_tensor(p.w1));
  add_bias(h, vec_of(p.b1));
  for (auto& row : h)
    for (double& v : row) v = gelu(v);
  Mat y = matmul(h, from_tensor(p.w2));
  add_bias(y, vec_of(p.b2));
  return y;
}

Mat encoder_stack(const std::vector<EncoderLayerParams<double>>& layers,
                  const LayerNormParams<double>& ln_final, size_t heads, Mat x) {
  for (const auto& l : layers) {
    add_into(x, attention(l.self_attn, layernorm(x, vec_of(l.ln1.gamma), vec_of(l.ln1.beta)),
                          layernorm(x, vec_of(l.ln1.gamma), vec_of(l.ln1.beta)), heads, false));
    add_into(x, ffn(l.ffn, layernorm(x, vec_of(l.ln2.gamma), vec_of(l.ln2.beta))));
  }
  return layernorm(x, vec_of(ln_final.gamma), vec_of(ln_final.beta));
}

Mat embed(const Tensor<double>& table, const std::vector<int>& ids, size_t d) {
  Mat x(ids.size(), std::vector<double>(d, 0.0));
  double scale = std::sqrt(double(d));
  for (size_t i = 0; i < ids.size(); ++i)
    for (size_t c = 0; c < d; ++c) x[i][c] = scale * table.at(size_t(ids[i]), c);
  add_positions(x);
  return x;
}

Mat conv(const ConvParams<double>& p, const Mat& x) {
  size_t cin = x[0].size(), cout = p.b.numel();
  size_t f_out = (x.size() - 1) / p.stride + 1;
  Mat y(f_out, std::vector<double>(cout, 0.0));
  Mat w = from_tensor(p.w);  // [3*cin x cout]
  for (size_t t = 0; t < f_out; ++t) {
    for (size_t dk = 0; dk < 3; ++dk) {
      long src = long(p.stride * t + dk) - 1;
      if (src < 0 || src >= long(x.size())) continue;
      for (size_t ci = 0; ci < cin; ++ci)
        for (size_t co = 0; co < cout; ++co) y[t][co] += x[size_t(src)][ci] * w[dk * cin + ci][co];
    }
    for (size_t co = 0; co < cout; ++co) y[t][co] = gelu(y[t][co] + p.b.v[co]);
  }
  return y;
}

}  // namespace oracle

namespace {

ModelConfig tiny_multimodal() {
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.ffn_dim = 16;
  cfg.text_enc_layers = 1;
  cfg.speech_enc_layers = 1;
  cfg.dec_layers = 1;
  cfg.speech_downsample = 2;
  cfg.speech_feat_dims = 3;
  cfg.mode = ModelMode::Multimodal;
  cfg.vocab = {std::string(kPadTok), std::string(kBosTok), std::string(kEosTok),
               std::string(kBlankTok), std::string(kEolLit), std::string(kEobLit),
               lang_token("aa"), std::string(kSpaceTok), "a", "b", "c"};
  return cfg;
}

FeatureMatrix fixed_features() {
  FeatureMatrix m;
  m.frames = 7;
  m.dims = 3;
  m.frame_shift_ms = 10;
  Rng rng(99);
  m.data.resize(21);
  for (auto& v : m.data) v = float(rng.next_uniform(-1, 1));
  return m;
}

}  // namespace

TEST_CASE("tiny multimodal forward matches the straight-line oracle") {
  Model<double> model(tiny_multimodal());
  model.init_weights(12345);
  const auto& P = model.params();
  const Vocab& vocab = model.vocab();
  const size_t d = 8, heads = 2;

  std::vector<int> src = vocab.encode_words({"ab", "c"});
  std::vector<int> prefix{vocab.bos, vocab.find(lang_token("aa")), vocab.id("a")};
  FeatureMatrix feats = fixed_features();

  // implementation
  Tensor<double> enc_t = model.encode_text(src);
  Tensor<double> enc_s = model.encode_speech(feats);
  Tensor<double> ctc = model.ctc_logits(enc_s);
  Tensor<double> logits = model.decode(&enc_t, &enc_s, prefix);

  // oracle: text encoder
  oracle::Mat x = oracle::embed(P.embedding, src, d);
  oracle::Mat o_enc_t = oracle::encoder_stack(P.text_layers, P.text_ln_final, heads, x);

  // oracle: speech encoder
  oracle::Mat f(feats.frames, std::vector<double>(feats.dims));
  for (size_t i = 0; i < feats.frames; ++i)
    for (size_t j = 0; j < feats.dims; ++j) f[i][j] = feats.data[i * feats.dims + j];
  oracle::Mat post = oracle::conv(P.conv2, oracle::conv(P.conv1, f));
  oracle::add_positions(post);
  oracle::Mat o_enc_s = oracle::encoder_stack(P.speech_layers, P.speech_ln_final, heads, post);

  // oracle: ctc head
  oracle::Mat o_ctc = oracle::matmul(o_enc_s, oracle::from_tensor(P.ctc_w));
  oracle::add_bias(o_ctc, oracle::vec_of(P.ctc_b));

  // oracle: decoder with parallel cross-attention
  oracle::Mat y = oracle::embed(P.embedding, prefix, d);
  for (const auto& l : P.dec_layers) {
    oracle::Mat h = oracle::layernorm(y, oracle::vec_of(l.ln1.gamma), oracle::vec_of(l.ln1.beta));
    oracle::add_into(y, oracle::attention(l.self_attn, h, h, heads, true));
    oracle::Mat c = oracle::layernorm(y, oracle::vec_of(l.ln2.gamma), oracle::vec_of(l.ln2.beta));
    oracle::Mat cross = oracle::attention(*l.cross_text, c, o_enc_t, heads, false);
    oracle::add_into(cross, oracle::attention(*l.cross_speech, c, o_enc_s, heads, false));
    oracle::add_into(y, cross);
    oracle::Mat g = oracle::layernorm(y, oracle::vec_of(l.ln3.gamma), oracle::vec_of(l.ln3.beta));
    oracle::add_into(y, oracle::ffn(l.ffn, g));
  }
  oracle::Mat out =
      oracle::layernorm(y, oracle::vec_of(P.dec_ln_final.gamma), oracle::vec_of(P.dec_ln_final.beta));
  // shared-embedding projection
  oracle::Mat o_logits(out.size(), std::vector<double>(vocab.size(), 0.0));
  for (size_t i = 0; i < out.size(); ++i)
    for (size_t t = 0; t < vocab.size(); ++t)
      for (size_t c = 0; c < d; ++c) o_logits[i][t] += out[i][c] * P.embedding.at(t, c);

  REQUIRE(enc_t.rows() == o_enc_t.size());
  for (size_t i = 0; i < enc_t.rows(); ++i)
    for (size_t c = 0; c < d; ++c)
      CHECK(enc_t.at(i, c) == doctest::Approx(o_enc_t[i][c]).epsilon(1e-5));

  REQUIRE(enc_s.rows() == o_enc_s.size());
  REQUIRE(enc_s.rows() == model.speech_out_frames(feats.frames));
  for (size_t i = 0; i < enc_s.rows(); ++i)
    for (size_t c = 0; c < d; ++c)
      CHECK(enc_s.at(i, c) == doctest::Approx(o_enc_s[i][c]).epsilon(1e-5));

  for (size_t i = 0; i < ctc.rows(); ++i)
    for (size_t c = 0; c < ctc.cols(); ++c)
      CHECK(ctc.at(i, c) == doctest::Approx(o_ctc[i][c]).epsilon(1e-5));

  REQUIRE(logits.rows() == prefix.size());
  REQUIRE(logits.cols() == vocab.size());
  for (size_t i = 0; i < logits.rows(); ++i)
    for (size_t c = 0; c < logits.cols(); ++c)
      CHECK(logits.at(i, c) == doctest::Approx(o_logits[i][c]).epsilon(1e-5));
}

TEST_CASE("softmax rows of the output distribution sum to one") {
  Model<double> model(tiny_multimodal());
  model.init_weights(777);
  const Vocab& vocab = model.vocab();
  FeatureMatrix feats = fixed_features();
  std::vector<int> src = vocab.encode_words({"cab"});
  auto out = model.forward(&feats, &src, {vocab.bos, vocab.find(lang_token("aa"))});
  for (size_t r = 0; r < out.logits.rows(); ++r) {
    double mx = out.logits.at(r, 0);
    for (size_t c = 0; c < out.logits.cols(); ++c) mx = std::max(mx, out.logits.at(r, c));
    double z = 0;
    for (size_t c = 0; c < out.logits.cols(); ++c) z += std::exp(out.logits.at(r, c) - mx);
    double total = 0;
    for (size_t c = 0; c < out.logits.cols(); ++c)
      total += std::exp(out.logits.at(r, c) - mx) / z;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    for (size_t c = 0; c < out.logits.cols(); ++c) CHECK(std::isfinite(out.logits.at(r, c)));
  }
  REQUIRE(out.ctc.has_value());
}

TEST_CASE("zeroed text encoder output reduces to the speech branch") {
  ModelConfig mm_cfg = tiny_multimodal();
  Model<double> mm(mm_cfg);
  mm.init_weights(31415);
  // Silence the text-cross value/output biases so the zero-tensor branch
  // contributes exactly nothing.
  for (auto& layer : mm.params().dec_layers) {
    layer.cross_text->bv.zero();
    layer.cross_text->bo.zero();
  }

  ModelConfig so_cfg = mm_cfg;
  so_cfg.mode = ModelMode::SpeechOnly;
  so_cfg.text_enc_layers = 0;
  Model<double> so(so_cfg);
  {
    // share every common tensor
    auto src = named_tensors(mm.params());
    std::map<std::string, const Tensor<double>*> by_name;
    for (auto& [name, t] : src) by_name[name] = t;
    for (auto& [name, t] : named_tensors(so.params())) {
      auto it = by_name.find(name);
      REQUIRE(it != by_name.end());
      *t = *it->second;
    }
  }

  FeatureMatrix feats = fixed_features();
  Tensor<double> enc_s_mm = mm.encode_speech(feats);
  Tensor<double> enc_s_so = so.encode_speech(feats);
  for (size_t i = 0; i < enc_s_mm.numel(); ++i)
    CHECK(enc_s_mm.v[i] == doctest::Approx(enc_s_so.v[i]).epsilon(1e-12));

  std::vector<int> prefix{mm.vocab().bos, mm.vocab().find(lang_token("aa")), mm.vocab().id("b")};
  Tensor<double> zero_text({3, mm_cfg.d_model});
  Tensor<double> lm = mm.decode(&zero_text, &enc_s_mm, prefix);
  Tensor<double> ls = so.decode(nullptr, &enc_s_so, prefix);
  REQUIRE(lm.numel() == ls.numel());
  for (size_t i = 0; i < lm.numel(); ++i)
    CHECK(lm.v[i] == doctest::Approx(ls.v[i]).epsilon(1e-9));
}

TEST_CASE("mode mismatches are rejected") {
  ModelConfig cfg = tiny_multimodal();
  cfg.mode = ModelMode::Textual;
  cfg.speech_enc_layers = 0;
  Model<float> model(cfg);
  model.init_weights(1);
  FeatureMatrix feats = fixed_features();
  std::vector<int> src = model.vocab().encode_words({"ab"});
  std::vector<int> prefix{model.vocab().bos};
  CHECK_THROWS_AS(model.forward(&feats, &src, prefix), Error);  // unexpected speech
  CHECK_THROWS_AS(model.forward(nullptr, nullptr, prefix), Error);
  CHECK_NOTHROW(model.forward(nullptr, &src, prefix));
}

TEST_CASE("config validation") {
  ModelConfig cfg = tiny_multimodal();
  cfg.n_heads = 3;  // 8 % 3 != 0
  CHECK_THROWS_AS(Model<float>(cfg), Error);
  cfg = tiny_multimodal();
  cfg.mode = ModelMode::Textual;  // speech layers must be zero
  CHECK_THROWS_AS(Model<float>(cfg), Error);
}
