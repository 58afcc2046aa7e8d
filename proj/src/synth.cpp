#include "subseg/synth.hpp"

#include <cmath>
#include <iostream>
#include <map>

#include "subseg/decode.hpp"
#include "subseg/parallel.hpp"
#include "subseg/utf8.hpp"

namespace subseg {

FeatureMatrix generate_synthetic_speech(const SegmentedSentence& sentence, const SynthConfig& cfg,
                                        Rng& rng) {
  validate_sentence(sentence, ParseMode::Strict);
  FeatureMatrix m;
  m.dims = static_cast<uint32_t>(cfg.feature_dims);
  m.frame_shift_ms = cfg.frame_shift_ms;

  auto emit = [&](size_t frames, double amplitude) {
    for (size_t t = 0; t < frames; ++t)
      for (size_t d = 0; d < cfg.feature_dims; ++d)
        m.data.push_back(static_cast<float>(rng.next_uniform(-amplitude, amplitude)));
    m.frames += static_cast<uint32_t>(frames);
  };

  for (const auto& tok : sentence.tokens) {
    if (tok.is_eob()) {
      emit(cfg.pause_frames, 0.02);
    } else if (tok.is_eol()) {
      emit((cfg.pause_frames + 1) / 2, 0.02);
    } else {
      emit(cfg.frames_per_char * utf8_length(tok.text) + cfg.word_pad_frames, 1.0);
    }
  }
  return m;
}

std::vector<FeatureMatrix> generate_synthetic_speech_corpus(const Corpus& c,
                                                            const SynthConfig& cfg) {
  std::vector<FeatureMatrix> out(c.size());
  parallel_for(c.size(), cfg.threads, [&](size_t i) {
    Rng rng(Rng::derive(cfg.seed, i));
    out[i] = generate_synthetic_speech(c.sentences[i], cfg, rng);
  });
  return out;
}

namespace {

void add_trigrams(const std::vector<std::string>& words, std::map<std::string, double>& counts) {
  std::string text;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) text.push_back(' ');
    text += words[i];
  }
  std::vector<uint32_t> cps = utf8_decode(text);
  for (size_t i = 0; i + 3 <= cps.size(); ++i) {
    std::string key;
    utf8_append(key, cps[i]);
    utf8_append(key, cps[i + 1]);
    utf8_append(key, cps[i + 2]);
    counts[key] += 1.0;
  }
}

double cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (const auto& [k, x] : a) {
    na += x * x;
    auto it = b.find(k);
    if (it != b.end()) dot += x * it->second;
  }
  for (const auto& [k, x] : b) nb += x * x;
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

LangProfiles build_lang_profiles(const Dataset& ds, size_t max_entries) {
  LangProfiles profiles;
  for (const auto& u : ds.items)
    add_trigrams(strip_breaks(u.target), profiles[lang_token(u.target_language)]);
  // Keep the heaviest entries per language (count desc, key asc).
  for (auto& [tok, counts] : profiles) {
    if (counts.size() <= max_entries) continue;
    std::vector<std::pair<std::string, double>> entries(counts.begin(), counts.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    entries.resize(max_entries);
    counts = std::map<std::string, double>(entries.begin(), entries.end());
  }
  return profiles;
}

std::string pick_language_token(const Corpus& input, const LangProfiles& profiles) {
  if (profiles.empty())
    fail(Err::UnknownLanguageToken, "checkpoint carries no language profiles; pass one explicitly");
  std::map<std::string, double> counts;
  for (const auto& s : input.sentences) add_trigrams(strip_breaks(s), counts);
  std::string best;
  double best_score = -1.0;
  for (const auto& [tok, prof] : profiles) {
    double score = cosine(counts, prof);
    if (score > best_score) {
      best_score = score;
      best = tok;
    }
  }
  return best;
}

SegmentedSentence normalize_strict(const SegmentedSentence& raw) {
  SegmentedSentence s;
  for (const auto& t : raw.tokens) {
    if (t.is_break()) {
      if (s.tokens.empty() || s.tokens.back().is_break()) continue;
      s.tokens.push_back(t);
    } else {
      s.tokens.push_back(t);
    }
  }
  // A block may hold two lines at most: a second <eol> in a row closes it.
  bool open_eol = false;
  for (auto& t : s.tokens) {
    if (t.is_eol()) {
      if (open_eol) t = Token::eob();
      else open_eol = true;
    }
    if (t.is_eob()) open_eol = false;
  }
  if (s.tokens.empty()) return s;
  if (s.tokens.back().is_eol())
    s.tokens.back() = Token::eob();
  else if (!s.tokens.back().is_eob())
    s.tokens.push_back(Token::eob());
  bool has_word = false;
  for (const auto& t : s.tokens) has_word |= !t.is_break();
  if (!has_word) return SegmentedSentence{};
  return s;
}

Corpus segment_corpus_with_model(const Corpus& unsegmented,
                                 const std::vector<FeatureMatrix>* features,
                                 const Model<float>& model, const LangProfiles& profiles,
                                 const SynthConfig& cfg) {
  const ModelConfig& mc = model.config();
  const bool needs_speech = mc.mode != ModelMode::Textual;
  if (needs_speech) {
    if (!features)
      fail(Err::FeatureCountMismatch, "multimodal/speech-only segmentation requires features");
    if (features->size() != unsegmented.size())
      fail(Err::FeatureCountMismatch,
           std::to_string(features->size()) + " feature matrices for " +
               std::to_string(unsegmented.size()) + " sentences");
  }

  std::string lang;
  if (mc.mode != ModelMode::Textual) {
    lang = cfg.language_token;
    if (lang.empty() || lang == "auto") lang = pick_language_token(unsegmented, profiles);
    if (model.vocab().find(lang) < 0)
      fail(Err::UnknownLanguageToken, "language token \"" + lang + "\" not in model vocabulary");
  }

  BeamConfig bc{cfg.beam_size, cfg.max_len};
  Corpus out;
  out.language = unsegmented.language;
  out.name = unsegmented.name;
  out.sentences.resize(unsegmented.size());

  parallel_for(unsegmented.size(), cfg.threads, [&](size_t i) {
    const std::vector<std::string> words = strip_breaks(unsegmented.sentences[i]);
    try {
      std::vector<int> src_ids;
      const std::vector<int>* src = nullptr;
      if (mc.mode != ModelMode::SpeechOnly) {
        src_ids = model.vocab().encode_words(words);
        src = &src_ids;
      }
      const FeatureMatrix* feats = needs_speech ? &(*features)[i] : nullptr;
      std::vector<int> ids = beam_decode(model, feats, src, lang, bc);
      SegmentedSentence sent = normalize_strict(model.vocab().decode_sentence(ids));
      if (sent.empty()) fail(Err::EmptyInput, "decoder produced no words");
      out.sentences[i] = std::move(sent);
    } catch (const Error& e) {
      // Degenerate fallback keeps the pipeline total: original text, one
      // final break.
      std::cerr << "segment: sentence " << i << " failed (" << e.what()
                << "); falling back to single <eob>\n";
      SegmentedSentence fb;
      for (const auto& w : words) fb.tokens.push_back(Token::word(w));
      fb.tokens.push_back(Token::eob());
      out.sentences[i] = std::move(fb);
    }
  });
  return out;
}

Corpus segment_corpus(const Corpus& unsegmented, const std::vector<FeatureMatrix>* features,
                      const SynthConfig& cfg) {
  if (cfg.segmenter == SynthConfig::Segmenter::CountChars) {
    CountCharsConfig cc = cfg.count_chars;
    cc.seed = cfg.seed;
    return count_chars_segment_corpus(unsegmented, cc, cfg.threads);
  }
  Checkpoint ck = load_checkpoint(cfg.checkpoint_path);
  return segment_corpus_with_model(unsegmented, features, *ck.model, ck.lang_profiles, cfg);
}

}  // namespace subseg
