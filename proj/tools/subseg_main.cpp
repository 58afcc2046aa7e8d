// subseg: subtitle segmentation toolkit.
//
// Converts speech-translation corpora into subtitling corpora by inserting
// subtitle break tokens, and evaluates segmentation quality. Every
// subcommand writes data to stdout (or --out) and diagnostics to stderr;
// randomized subcommands require an explicit --seed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "subseg/checkpoint.hpp"
#include "subseg/datapipe.hpp"
#include "subseg/dataset.hpp"
#include "subseg/decode.hpp"
#include "subseg/gradcheck.hpp"
#include "subseg/linalg.hpp"
#include "subseg/metrics.hpp"
#include "subseg/rulebased.hpp"
#include "subseg/synth.hpp"
#include "subseg/train.hpp"

namespace {

using namespace subseg;

// Data sink: --out or stdout.
struct Output {
  std::ofstream file;
  std::ostream* os = &std::cout;
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file.open(path, std::ios::binary);
      if (!file) fail(Err::IoError, "cannot open " + path + " for writing");
      os = &file;
    }
  }
  std::ostream& stream() { return *os; }
};

void emit_stats(const PipelineStats& stats, const std::string& stats_path) {
  if (stats_path.empty()) {
    std::cerr << stats.to_json() << '\n';
  } else {
    std::ofstream f(stats_path, std::ios::binary);
    if (!f) fail(Err::IoError, "cannot open " + stats_path + " for writing");
    f << stats.to_json() << '\n';
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<FeatureMatrix> load_features_list(const std::string& list_path) {
  std::vector<FeatureMatrix> out;
  std::filesystem::path base = std::filesystem::path(list_path).parent_path();
  for (const auto& rel : read_lines(list_path)) {
    std::filesystem::path p(rel);
    if (p.is_relative()) p = base / p;
    out.push_back(read_features_file(p.string()));
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"subtitle segmentation toolkit"};
  app.require_subcommand(1);

  unsigned threads = 1;
  app.add_option("--threads", threads, "worker threads (output order is unaffected)")
      ->capture_default_str();

  // --- segment ---------------------------------------------------------
  auto* seg = app.add_subcommand("segment", "insert subtitle breaks into unsegmented text");
  std::string seg_input, seg_mode = "count-chars", seg_out, seg_ckpt, seg_feats, seg_lang = "auto";
  size_t seg_limit = 42, seg_beam = 5, seg_maxlen = 640;
  double seg_eol_prob = 0.25;
  uint64_t seg_seed = 0;
  bool seg_seed_set = false;
  seg->add_option("--input", seg_input, "unsegmented corpus, one sentence per line")->required();
  seg->add_option("--mode", seg_mode, "count-chars | neural")
      ->check(CLI::IsMember({"count-chars", "neural"}))
      ->capture_default_str();
  seg->add_option("--limit", seg_limit, "character limit per line")->capture_default_str();
  seg->add_option("--eol-prob", seg_eol_prob, "probability of <eol> at a break")
      ->capture_default_str();
  seg->add_option_function<uint64_t>(
         "--seed", [&](const uint64_t& v) { seg_seed = v; seg_seed_set = true; },
         "RNG seed (required for count-chars)");
  seg->add_option("--ckpt", seg_ckpt, "checkpoint for --mode neural");
  seg->add_option("--features-list", seg_feats, "file listing one SPFT path per sentence");
  seg->add_option("--lang-token", seg_lang, "decoder language token, or 'auto'")
      ->capture_default_str();
  seg->add_option("--beam", seg_beam, "beam size")->capture_default_str();
  seg->add_option("--max-len", seg_maxlen, "decoder length cap")->capture_default_str();
  seg->add_option("--out", seg_out, "output file (default stdout)");

  // --- eval ------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "full segmentation evaluation report");
  std::string ev_hyp, ev_ref, ev_out, ev_fw, ev_format = "text";
  size_t ev_limit = 42;
  ev->add_option("--hyp", ev_hyp, "hypothesis corpus")->required();
  ev->add_option("--ref", ev_ref, "reference corpus")->required();
  ev->add_option("--limit", ev_limit, "CPL limit")->capture_default_str();
  ev->add_option("--function-words", ev_fw, "function word list for pattern stats");
  ev->add_option("--format", ev_format, "text | json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  ev->add_option("--out", ev_out, "output file (default stdout)");

  // --- datapipe --------------------------------------------------------
  auto* fi = app.add_subcommand("filter", "keep sentences whose lines fit the limit");
  std::string fi_input, fi_out, fi_stats;
  size_t fi_limit = 42;
  fi->add_option("--input", fi_input)->required();
  fi->add_option("--limit", fi_limit)->capture_default_str();
  fi->add_option("--out", fi_out);
  fi->add_option("--stats", fi_stats, "stats JSON file (default stderr)");

  auto* su = app.add_subcommand("substitute", "replace non-final <eob> by <eol> with probability p");
  std::string su_input, su_out, su_stats;
  double su_prob = 0.25;
  uint64_t su_seed = 0;
  su->add_option("--input", su_input)->required();
  su->add_option("--prob", su_prob)->capture_default_str();
  su->add_option("--seed", su_seed)->required();
  su->add_option("--out", su_out);
  su->add_option("--stats", su_stats);

  auto* ba = app.add_subcommand("balance", "all multi-subtitle sentences plus equal singles");
  std::string ba_input, ba_out, ba_stats;
  uint64_t ba_seed = 0;
  ba->add_option("--input", ba_input)->required();
  ba->add_option("--seed", ba_seed)->required();
  ba->add_option("--out", ba_out);
  ba->add_option("--stats", ba_stats);

  auto* un = app.add_subcommand("unsegment", "strip all break tokens");
  std::string un_input, un_out;
  un->add_option("--input", un_input)->required();
  un->add_option("--out", un_out);

  // --- neural ----------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train a segmenter / SubST model");
  std::string tr_manifest, tr_valid, tr_mode = "textual", tr_out, tr_config, tr_log, tr_vocab;
  uint64_t tr_seed = 0;
  std::vector<std::string> tr_set;
  ModelConfig tr_arch;  // toy defaults
  tr->add_option("--manifest", tr_manifest, "training manifest (JSONL)")->required();
  tr->add_option("--valid", tr_valid, "validation manifest");
  tr->add_option("--mode", tr_mode, "textual | multimodal | speech_only")
      ->check(CLI::IsMember({"textual", "multimodal", "speech_only"}))
      ->capture_default_str();
  tr->add_option("--out", tr_out, "checkpoint path")->required();
  tr->add_option("--config", tr_config, "training config file (key=value)");
  tr->add_option("--set", tr_set, "training config overrides key=value")->take_all();
  tr->add_option("--vocab", tr_vocab, "token list file (default: derived from the data)");
  tr->add_option("--seed", tr_seed)->required();
  tr->add_option("--log", tr_log, "JSONL training log");
  tr->add_option("--d-model", tr_arch.d_model)->capture_default_str();
  tr->add_option("--heads", tr_arch.n_heads)->capture_default_str();
  tr->add_option("--ffn", tr_arch.ffn_dim)->capture_default_str();
  tr->add_option("--text-layers", tr_arch.text_enc_layers)->capture_default_str();
  tr->add_option("--speech-layers", tr_arch.speech_enc_layers)->capture_default_str();
  tr->add_option("--dec-layers", tr_arch.dec_layers)->capture_default_str();
  tr->add_option("--downsample", tr_arch.speech_downsample)->capture_default_str();
  tr->add_option("--feat-dims", tr_arch.speech_feat_dims)->capture_default_str();
  tr->add_option("--dropout", tr_arch.dropout)->capture_default_str();

  auto* de = app.add_subcommand("decode", "segment a manifest with a trained model");
  std::string de_ckpt, de_manifest, de_input, de_lang = "auto", de_out;
  size_t de_beam = 5, de_maxlen = 640;
  de->add_option("--ckpt", de_ckpt)->required();
  de->add_option("--manifest", de_manifest, "JSONL manifest (features for speech modes)");
  de->add_option("--input", de_input, "plain corpus file (textual models)");
  de->add_option("--lang-token", de_lang)->capture_default_str();
  de->add_option("--beam", de_beam)->capture_default_str();
  de->add_option("--max-len", de_maxlen)->capture_default_str();
  de->add_option("--out", de_out);

  auto* av = app.add_subcommand("avg-ckpt", "elementwise mean of parameter snapshots");
  std::vector<std::string> av_inputs;
  std::string av_out;
  bool av_any = false;
  av->add_option("--inputs", av_inputs, "checkpoint files (7 unless --allow-any-count)")
      ->required()
      ->expected(-1);
  av->add_option("--out", av_out)->required();
  av->add_flag("--allow-any-count", av_any, "permit a count other than 7");

  auto* si = app.add_subcommand("significance", "paired bootstrap BLEU significance test");
  std::string si_a, si_b, si_ref, si_out;
  uint32_t si_samples = 1000;
  uint64_t si_seed = 0;
  double si_alpha = 0.05;
  si->add_option("--hyp-a", si_a)->required();
  si->add_option("--hyp-b", si_b)->required();
  si->add_option("--ref", si_ref)->required();
  si->add_option("--samples", si_samples)->capture_default_str()->check(CLI::Range(100u, 1000000u));
  si->add_option("--seed", si_seed)->required();
  si->add_option("--alpha", si_alpha)->capture_default_str();
  si->add_option("--out", si_out);

  // --- synthetic data ----------------------------------------------------
  auto* sy = app.add_subcommand("synth-speech", "generate synthetic speech features");
  std::string sy_input, sy_dir, sy_out;
  SynthConfig sy_cfg;
  uint64_t sy_seed = 0;
  sy->add_option("--input", sy_input, "segmented corpus")->required();
  sy->add_option("--out-dir", sy_dir, "directory for SPFT files")->required();
  sy->add_option("--seed", sy_seed)->required();
  sy->add_option("--pause-frames", sy_cfg.pause_frames)->capture_default_str();
  sy->add_option("--feature-dims", sy_cfg.feature_dims)->capture_default_str();
  sy->add_option("--frames-per-char", sy_cfg.frames_per_char)->capture_default_str();
  sy->add_option("--out", sy_out, "feature path list (default stdout)");

  auto* bd = app.add_subcommand("build-dataset", "zip sources, features and targets into a manifest");
  std::string bd_source, bd_segmented, bd_feats, bd_lang, bd_out;
  bd->add_option("--source", bd_source, "unsegmented corpus")->required();
  bd->add_option("--segmented", bd_segmented, "segmented corpus")->required();
  bd->add_option("--features-list", bd_feats, "file listing one SPFT path per sentence")
      ->required();
  bd->add_option("--language", bd_lang, "target language tag")->required();
  bd->add_option("--out", bd_out, "manifest path")->required();

  auto* ps = app.add_subcommand("pattern-stats", "break position statistics");
  std::string ps_input, ps_fw, ps_out, ps_format = "json";
  ps->add_option("--input", ps_input)->required();
  ps->add_option("--function-words", ps_fw)->required();
  ps->add_option("--format", ps_format)->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  ps->add_option("--out", ps_out);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  std::string gc_mode = "all", gc_out;
  uint64_t gc_seed = 0;
  gc->add_option("--mode", gc_mode)
      ->check(CLI::IsMember({"all", "textual", "multimodal", "speech_only"}))
      ->capture_default_str();
  gc->add_option("--seed", gc_seed)->required();
  gc->add_option("--out", gc_out);

  CLI11_PARSE(app, argc, argv);

  if (seg->parsed()) {
    Corpus in = read_corpus_file(seg_input, ParseMode::Lenient);
    Corpus out;
    if (seg_mode == "count-chars") {
      if (!seg_seed_set) fail(Err::BadFormat, "--seed is required for count-chars segmentation");
      CountCharsConfig cc{seg_limit, seg_eol_prob, seg_seed};
      out = count_chars_segment_corpus(in, cc, threads);
    } else {
      if (seg_ckpt.empty()) fail(Err::BadFormat, "--ckpt is required for neural segmentation");
      SynthConfig cfg;
      cfg.segmenter = SynthConfig::Segmenter::Neural;
      cfg.checkpoint_path = seg_ckpt;
      cfg.language_token = seg_lang;
      cfg.beam_size = seg_beam;
      cfg.max_len = seg_maxlen;
      cfg.threads = threads;
      std::vector<FeatureMatrix> feats;
      std::vector<FeatureMatrix>* pf = nullptr;
      if (!seg_feats.empty()) {
        feats = load_features_list(seg_feats);
        pf = &feats;
      }
      out = segment_corpus(in, pf, cfg);
    }
    Output o(seg_out);
    write_corpus(o.stream(), out);
    return 0;
  }

  if (ev->parsed()) {
    Corpus hyp = read_corpus_file(ev_hyp, ParseMode::Lenient);
    Corpus ref = read_corpus_file(ev_ref, ParseMode::Lenient);
    std::set<std::string> fw;
    EvaluationReport rep = evaluate(hyp.sentences, ref.sentences, ev_limit,
                                    ev_fw.empty() ? nullptr : (fw = read_function_words(ev_fw), &fw));
    Output o(ev_out);
    o.stream() << (ev_format == "json" ? report_to_json(rep) + "\n" : report_to_text(rep));
    return 0;
  }

  if (fi->parsed()) {
    PipelineStats stats;
    Corpus out = filter_conformant(read_corpus_file(fi_input, ParseMode::Lenient), fi_limit, stats);
    Output o(fi_out);
    write_corpus(o.stream(), out);
    emit_stats(stats, fi_stats);
    return 0;
  }

  if (su->parsed()) {
    PipelineStats stats;
    Corpus out =
        eob_to_eol_substitution(read_corpus_file(su_input, ParseMode::Lenient), su_prob, su_seed, stats);
    Output o(su_out);
    write_corpus(o.stream(), out);
    emit_stats(stats, su_stats);
    return 0;
  }

  if (ba->parsed()) {
    PipelineStats stats;
    Corpus out = balance_single_multi(read_corpus_file(ba_input, ParseMode::Lenient), ba_seed, stats);
    Output o(ba_out);
    write_corpus(o.stream(), out);
    emit_stats(stats, ba_stats);
    if (stats.single_shortfall > 0)
      std::cerr << "balance: only " << stats.single_subtitle_sentences
                << " single-subtitle sentences available, short by " << stats.single_shortfall
                << "\n";
    return 0;
  }

  if (un->parsed()) {
    Corpus out = make_unsegmented(read_corpus_file(un_input, ParseMode::Lenient));
    Output o(un_out);
    write_corpus(o.stream(), out);
    return 0;
  }

  if (tr->parsed()) {
    TrainConfig cfg;
    if (!tr_config.empty()) cfg = read_train_config(tr_config);
    for (const auto& kv : tr_set) {
      size_t eq = kv.find('=');
      if (eq == std::string::npos) fail(Err::BadFormat, "--set expects key=value, got " + kv);
      apply_train_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.seed = tr_seed;

    ModelConfig mc = tr_arch;
    mc.mode = mode_from_name(tr_mode);
    if (mc.mode == ModelMode::Textual) mc.speech_enc_layers = 0;
    if (mc.mode == ModelMode::SpeechOnly) mc.text_enc_layers = 0;

    Dataset train_ds = read_manifest(tr_manifest, mc.mode != ModelMode::Textual);
    Dataset valid_ds;
    if (!tr_valid.empty()) valid_ds = read_manifest(tr_valid, mc.mode != ModelMode::Textual);

    if (!tr_vocab.empty()) {
      mc.vocab = read_token_list(tr_vocab);
    } else {
      Corpus src, tgt;
      std::vector<std::string> langs;
      for (const auto& u : train_ds.items) {
        SegmentedSentence s;
        for (const auto& w : u.source_words) s.tokens.push_back(Token::word(w));
        src.sentences.push_back(std::move(s));
        tgt.sentences.push_back(u.target);
        langs.push_back(u.target_language);
      }
      mc.vocab = build_char_vocab({&src, &tgt}, langs).tokens;
    }
    if (mc.mode != ModelMode::Textual) {
      for (const auto& u : train_ds.items)
        if (u.features) {
          mc.speech_feat_dims = u.features->dims;
          break;
        }
    }

    Model<float> model(mc);
    model.init_weights(cfg.seed);
    TrainState state = TrainState::for_model(model, cfg.base_lr, cfg.warmup);

    std::unique_ptr<std::ofstream> log;
    if (!tr_log.empty()) {
      log = std::make_unique<std::ofstream>(tr_log, std::ios::binary);
      if (!*log) fail(Err::IoError, "cannot open " + tr_log + " for writing");
    }
    LangProfiles profiles = build_lang_profiles(train_ds);
    auto save_hook = [&](uint64_t step, double val_loss) {
      std::string path = tr_out + "." + std::to_string(step);
      save_checkpoint(path, model, step, val_loss, profiles);
      std::cerr << "saved " << path << " (val loss " << val_loss << ")\n";
    };
    std::cerr << "training " << mode_name(mc.mode) << " model, " << train_ds.size()
              << " utterances, vocab " << mc.vocab.size() << ", kernels "
              << backend_description() << "\n";
    TrainResult res = train_model(model, state, train_ds, tr_valid.empty() ? nullptr : &valid_ds,
                                  cfg, log.get(), save_hook);
    save_checkpoint(tr_out, model, res.steps, res.val_loss, profiles);
    std::cerr << "finished at step " << res.steps << ", loss " << res.last_loss << ", val "
              << res.val_loss << "\n";
    return 0;
  }

  if (de->parsed()) {
    if (de_manifest.empty() == de_input.empty())
      fail(Err::BadFormat, "give exactly one of --manifest or --input");
    Checkpoint ck = load_checkpoint(de_ckpt);
    SynthConfig cfg;
    cfg.language_token = de_lang;
    cfg.beam_size = de_beam;
    cfg.max_len = de_maxlen;
    cfg.threads = threads;

    Corpus in;
    std::vector<FeatureMatrix> feats;
    std::vector<FeatureMatrix>* pf = nullptr;
    if (!de_input.empty()) {
      in = read_corpus_file(de_input, ParseMode::Lenient);
    } else {
      Dataset ds = read_manifest(de_manifest, ck.config.mode != ModelMode::Textual);
      for (auto& u : ds.items) {
        SegmentedSentence s;
        for (const auto& w : u.source_words) s.tokens.push_back(Token::word(w));
        in.sentences.push_back(std::move(s));
        if (u.features) feats.push_back(std::move(*u.features));
      }
      if (!feats.empty()) pf = &feats;
    }
    Corpus out = segment_corpus_with_model(in, pf, *ck.model, ck.lang_profiles, cfg);
    Output o(de_out);
    write_corpus(o.stream(), out);
    return 0;
  }

  if (av->parsed()) {
    Checkpoint avg = average_checkpoints(av_inputs, av_any);
    save_checkpoint(av_out, *avg.model, avg.step, avg.val_loss, avg.lang_profiles);
    std::cerr << "averaged " << av_inputs.size() << " checkpoints into " << av_out << "\n";
    return 0;
  }

  if (si->parsed()) {
    auto strip = [](const std::string& path) {
      Corpus c = read_corpus_file(path, ParseMode::Lenient);
      std::vector<std::string> out;
      for (const auto& s : c.sentences)
        out.push_back(serialize_segmented(strip_breaks_sentence(s)));
      return out;
    };
    BootstrapResult r = paired_bootstrap(strip(si_a), strip(si_b), strip(si_ref), si_samples, si_seed);
    nlohmann::json j{{"bleu_a", r.bleu_a},
                     {"bleu_b", r.bleu_b},
                     {"p_value", r.p_value},
                     {"significant", r.p_value < si_alpha},
                     {"alpha", si_alpha},
                     {"win_rate_a", r.win_rate_a},
                     {"win_rate_b", r.win_rate_b},
                     {"ties", r.ties},
                     {"samples", r.samples}};
    Output o(si_out);
    o.stream() << j.dump(2) << '\n';
    return 0;
  }

  if (sy->parsed()) {
    Corpus in = read_corpus_file(sy_input, ParseMode::Strict);
    sy_cfg.seed = sy_seed;
    sy_cfg.threads = threads;
    std::filesystem::create_directories(sy_dir);
    std::vector<FeatureMatrix> feats = generate_synthetic_speech_corpus(in, sy_cfg);
    Output o(sy_out);
    for (size_t i = 0; i < feats.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "sent_%06zu.spft", i);
      std::filesystem::path p = std::filesystem::path(sy_dir) / name;
      write_features_file(p.string(), feats[i]);
      o.stream() << p.string() << '\n';
    }
    return 0;
  }

  if (bd->parsed()) {
    Corpus src = read_corpus_file(bd_source, ParseMode::Lenient);
    Corpus tgt = read_corpus_file(bd_segmented, ParseMode::Strict);
    tgt.language = bd_lang;
    std::vector<std::string> files = read_lines(bd_feats);
    std::vector<FeatureMatrix> feats = load_features_list(bd_feats);
    Dataset ds = build_subst_dataset(src, feats, tgt, files);
    write_manifest(bd_out, ds);
    std::cerr << "wrote " << ds.size() << " utterances to " << bd_out << "\n";
    return 0;
  }

  if (ps->parsed()) {
    Corpus in = read_corpus_file(ps_input, ParseMode::Lenient);
    std::set<std::string> fw = read_function_words(ps_fw);
    BreakPatternStats stats = break_pattern_stats(in.sentences, fw);
    EvaluationReport rep;  // reuse the JSON shape for the pattern block
    rep.pattern_stats = stats;
    Output o(ps_out);
    if (ps_format == "json") {
      nlohmann::json j = nlohmann::json::parse(report_to_json(rep));
      o.stream() << j["pattern_stats"].dump(2) << '\n';
    } else {
      auto kind = [&](const char* name, const std::optional<BreakKindStats>& k) {
        if (k)
          o.stream() << name << ": " << k->pct_after_punctuation() << "% after punctuation, "
                     << k->pct_before_function_word() << "% before function words (n=" << k->total
                     << ")\n";
        else
          o.stream() << name << ": absent\n";
      };
      kind("<eol>", stats.eol);
      kind("<eob>", stats.eob);
    }
    return 0;
  }

  if (gc->parsed()) {
    nlohmann::json j;
    auto one = [&](ModelMode m) {
      GradCheckResult r = gradient_check(m, gc_seed);
      j[mode_name(m)] = {{"max_rel_err", r.max_rel_err},
                         {"checked", r.checked},
                         {"total_params", r.total_params}};
      std::cerr << "gradcheck " << mode_name(m) << ": max rel err " << r.max_rel_err << " over "
                << r.checked << " of " << r.total_params << " params\n";
    };
    if (gc_mode == "all" || gc_mode == "textual") one(ModelMode::Textual);
    if (gc_mode == "all" || gc_mode == "multimodal") one(ModelMode::Multimodal);
    if (gc_mode == "all" || gc_mode == "speech_only") one(ModelMode::SpeechOnly);
    Output o(gc_out);
    o.stream() << j.dump(2) << '\n';
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Err::IoError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
