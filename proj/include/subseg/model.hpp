#pragma once

#include <optional>
#include <string>
#include <vector>

#include "subseg/features.hpp"
#include "subseg/rng.hpp"
#include "subseg/tensor.hpp"
#include "subseg/vocab.hpp"

namespace subseg {

enum class ModelMode { Textual, Multimodal, SpeechOnly };

const char* mode_name(ModelMode m);
ModelMode mode_from_name(const std::string& name);

// Architecture description. The toy profile (defaults below) keeps the
// topology of the full-scale setup at desk scale.
struct ModelConfig {
  size_t d_model = 64;
  size_t n_heads = 4;
  size_t ffn_dim = 128;
  size_t text_enc_layers = 3;
  size_t speech_enc_layers = 6;
  size_t dec_layers = 3;
  size_t speech_downsample = 4;  // 1, 2 or 4; strided conv front-end
  size_t speech_feat_dims = 16;
  ModelMode mode = ModelMode::Textual;
  double dropout = 0.0;
  std::vector<std::string> vocab;

  void validate() const;  // throws ConfigMismatch on inconsistent settings
  bool operator==(const ModelConfig& o) const;
};

// --- parameter structs ------------------------------------------------------

template <class T>
struct AttentionParams {
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;  // w: [D x D], b: [D]
};

template <class T>
struct LayerNormParams {
  Tensor<T> gamma, beta;  // [D]
};

template <class T>
struct FfnParams {
  Tensor<T> w1, b1, w2, b2;  // w1 [D x F], w2 [F x D]
};

template <class T>
struct EncoderLayerParams {
  LayerNormParams<T> ln1, ln2;
  AttentionParams<T> self_attn;
  FfnParams<T> ffn;
};

template <class T>
struct ConvParams {
  Tensor<T> w;  // [3*Cin x Cout], kernel 3, pad 1
  Tensor<T> b;  // [Cout]
  size_t stride = 2;
};

template <class T>
struct DecoderLayerParams {
  LayerNormParams<T> ln1, ln2, ln3;
  AttentionParams<T> self_attn;
  std::optional<AttentionParams<T>> cross_text;    // absent in speech-only mode
  std::optional<AttentionParams<T>> cross_speech;  // absent in textual mode
  FfnParams<T> ffn;
};

template <class T>
struct Parameters {
  // Shared between text-encoder input, decoder input and output projection.
  Tensor<T> embedding;  // [V x D]
  std::vector<EncoderLayerParams<T>> text_layers;
  LayerNormParams<T> text_ln_final;
  ConvParams<T> conv1, conv2;
  std::vector<EncoderLayerParams<T>> speech_layers;
  LayerNormParams<T> speech_ln_final;
  Tensor<T> ctc_w, ctc_b;  // [D x V], [V]; blank lives inside the vocab
  std::vector<DecoderLayerParams<T>> dec_layers;
  LayerNormParams<T> dec_ln_final;
};

// Stable-ordered view of every tensor; the basis for Adam moments,
// checkpoints, averaging and gradient checks.
template <class T>
std::vector<std::pair<std::string, Tensor<T>*>> named_tensors(Parameters<T>& p);
template <class T>
std::vector<std::pair<std::string, const Tensor<T>*>> named_tensors(const Parameters<T>& p);

// --- forward caches ---------------------------------------------------------

template <class T>
struct LnCache {
  Tensor<T> xhat;
  std::vector<T> inv_std;
};

template <class T>
struct AttnCache {
  Tensor<T> qin, kvin;
  Tensor<T> q, k, v;    // [S x D]
  Tensor<T> probs;      // [H * Sq, Sk]
  Tensor<T> ctx;        // [Sq x D], heads re-concatenated, before the out proj
};

template <class T>
struct FfnCache {
  Tensor<T> in, x1;  // post-LN input, pre-activation
};

template <class T>
struct DropCache {
  Tensor<T> mask;  // empty when dropout was off
};

template <class T>
struct EncLayerCache {
  LnCache<T> ln1, ln2;
  AttnCache<T> attn;
  FfnCache<T> ffn;
  DropCache<T> d_attn, d_ffn;
};

template <class T>
struct TextEncCache {
  std::vector<int> ids;
  DropCache<T> d_embed;
  std::vector<EncLayerCache<T>> layers;
  LnCache<T> ln_final;
  Tensor<T> out;
};

template <class T>
struct ConvCache {
  Tensor<T> im2col;  // [F_out x 3*Cin]
  Tensor<T> x1;      // pre-activation [F_out x Cout]
};

template <class T>
struct SpeechEncCache {
  ConvCache<T> c1, c2;
  DropCache<T> d_embed;
  std::vector<EncLayerCache<T>> layers;
  LnCache<T> ln_final;
  Tensor<T> out;
};

template <class T>
struct DecLayerCache {
  LnCache<T> ln1, ln2, ln3;
  AttnCache<T> self_attn, cross_text, cross_speech;
  FfnCache<T> ffn;
  DropCache<T> d_self, d_cross, d_ffn;
};

template <class T>
struct DecoderCache {
  std::vector<int> ids;
  DropCache<T> d_embed;
  std::vector<DecLayerCache<T>> layers;
  LnCache<T> ln_final;
  Tensor<T> out;  // final hidden states [S x D]
};

// Dropout switch for one forward pass; rng == nullptr means inference.
struct DropoutCtx {
  Rng* rng = nullptr;
  double p = 0.0;
  bool active() const { return rng != nullptr && p > 0.0; }
};

// --- the model ---------------------------------------------------------------

template <class T>
class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  Parameters<T>& params() { return params_; }
  const Parameters<T>& params() const { return params_; }

  // Gaussian/Glorot initialization, deterministic in the seed.
  void init_weights(uint64_t seed);

  Parameters<T> zero_grads() const;  // tensors shaped like params(), all zero

  Tensor<T> encode_text(const std::vector<int>& ids, TextEncCache<T>* cache = nullptr,
                        DropoutCtx drop = {}) const;
  Tensor<T> encode_speech(const FeatureMatrix& feats, SpeechEncCache<T>* cache = nullptr,
                          DropoutCtx drop = {}) const;
  Tensor<T> ctc_logits(const Tensor<T>& speech_out) const;

  // Decoder over a target prefix given encoder outputs (either may be null
  // according to the mode). Returns logits [S x V].
  Tensor<T> decode(const Tensor<T>* enc_text, const Tensor<T>* enc_speech,
                   const std::vector<int>& prefix, DecoderCache<T>* cache = nullptr,
                   DropoutCtx drop = {}) const;

  // End-to-end forward per the mode; validates input presence.
  struct ForwardOut {
    Tensor<T> logits;                  // [prefix length x V]
    std::optional<Tensor<T>> ctc;     // [frames_out x V] when speech present
  };
  ForwardOut forward(const FeatureMatrix* speech, const std::vector<int>* src_text,
                     const std::vector<int>& tgt_prefix) const;

  // Backward passes; gradients accumulate into `grads`.
  void decode_backward(const DecoderCache<T>& cache, const Tensor<T>& dout_logits,
                       Parameters<T>& grads, Tensor<T>* denc_text, Tensor<T>* denc_speech) const;
  void ctc_head_backward(const Tensor<T>& speech_out, const Tensor<T>& dctc_logits,
                         Parameters<T>& grads, Tensor<T>& dspeech_out) const;
  void encode_text_backward(const TextEncCache<T>& cache, const Tensor<T>& dout,
                            Parameters<T>& grads) const;
  void encode_speech_backward(const SpeechEncCache<T>& cache, const Tensor<T>& dout,
                              Parameters<T>& grads) const;

  // Output length of the convolutional front-end for a given frame count.
  size_t speech_out_frames(size_t frames) const;

  template <class U>
  Model<U> cast() const;

 private:
  ModelConfig cfg_;
  Vocab vocab_;
  Parameters<T> params_;
};

using ModelF = Model<float>;
using ModelD = Model<double>;

}  // namespace subseg
