#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "subseg/metrics.hpp"
#include "subseg/rulebased.hpp"
#include "testutil.hpp"

using namespace subseg;

TEST_CASE("cpl conformity") {
  std::vector<SegmentedSentence> ok{parse_segmented("short line <eob>")};
  CHECK(cpl_conformity(ok, 42) == 100.0);

  // one 2-char line, one 43-char line
  std::string long_word(43, 'x');
  std::vector<SegmentedSentence> mixed{parse_segmented("ab <eol> " + long_word + " <eob>")};
  CHECK(cpl_conformity(mixed, 42) == 50.0);

  CHECK_THROWS_AS(cpl_conformity({}, 42), Error);
}

TEST_CASE("count chars output is always fully conformant") {
  Rng rng(4242);
  CountCharsConfig cfg;
  cfg.seed = 5;
  for (int trial = 0; trial < 30; ++trial) {
    Corpus unseg;
    for (int i = 0; i < 20; ++i) {
      SegmentedSentence s;
      for (auto& w : testutil::random_words(rng, 1 + rng.next_below(50)))
        s.tokens.push_back(Token::word(std::move(w)));
      unseg.sentences.push_back(std::move(s));
    }
    Corpus seg = count_chars_segment_corpus(unseg, cfg, 1);
    CHECK(cpl_conformity(seg.sentences, cfg.limit) == 100.0);
  }
}

TEST_CASE("break coverage formula is exact") {
  BreakCounts c;
  c.eob_pred = 100, c.eob_ref = 100;
  CHECK(break_coverage(c, BreakKind::Eob) == 0.0);
  c.eob_pred = 90;
  CHECK(break_coverage(c, BreakKind::Eob) == -10.0);
  c.eob_pred = 1004, c.eob_ref = 1000;
  CHECK(break_coverage(c, BreakKind::Eob) == doctest::Approx(0.4).epsilon(1e-12));
  c.eol_pred = 5, c.eol_ref = 0;
  try {
    break_coverage(c, BreakKind::Eol);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::ZeroReferenceBreaks);
  }
}

TEST_CASE("coverage is linear in pred and zero on identity") {
  Rng rng(88);
  auto corpus = testutil::random_strict_corpus(rng, 30);
  BreakCounts c = count_breaks(corpus.sentences, corpus.sentences);
  if (c.eob_ref > 0) CHECK(break_coverage(c, BreakKind::Eob) == 0.0);
  if (c.eol_ref > 0) CHECK(break_coverage(c, BreakKind::Eol) == 0.0);
}

TEST_CASE("paired bootstrap: identical systems are not significant") {
  Rng rng(9);
  std::vector<std::string> refs, hyp;
  for (int i = 0; i < 30; ++i) {
    std::string s;
    for (auto& w : testutil::random_words(rng, 5 + rng.next_below(6))) s += w + " ";
    refs.push_back(s);
    hyp.push_back(s);
  }
  BootstrapResult r = paired_bootstrap(hyp, hyp, refs, 200, 11);
  CHECK(r.win_rate_a == 0.0);  // ties count as wins for neither
  CHECK(r.ties == 200);
  CHECK(r.p_value >= 0.05);

  BootstrapResult r2 = paired_bootstrap(hyp, hyp, refs, 200, 11);
  CHECK(r.p_value == r2.p_value);  // deterministic in the seed
}

TEST_CASE("paired bootstrap: dominant system is significant") {
  Rng rng(10);
  std::vector<std::string> refs, junk;
  for (int i = 0; i < 40; ++i) {
    std::string s, j;
    for (auto& w : testutil::random_words(rng, 6 + rng.next_below(6))) s += w + " ";
    for (auto& w : testutil::random_words(rng, 6)) j += w + " ";
    refs.push_back(s);
    junk.push_back(j);
  }
  BootstrapResult r = paired_bootstrap(refs, junk, refs, 1000, 3);
  CHECK(r.p_value < 0.05);
  CHECK(r.win_rate_a == 1.0);
  CHECK(r.bleu_a == doctest::Approx(100.0));
}

TEST_CASE("bootstrap errors") {
  CHECK_THROWS_AS(paired_bootstrap({"a"}, {"a", "b"}, {"a"}, 100, 1), Error);
}

TEST_CASE("break pattern stats") {
  std::vector<SegmentedSentence> one{parse_segmented("hola , <eob> mundo .")};
  BreakPatternStats s = break_pattern_stats(one, {});
  REQUIRE(s.eob.has_value());
  CHECK(s.eob->total == 1);
  CHECK(s.eob->pct_after_punctuation() == 100.0);
  CHECK_FALSE(s.eol.has_value());  // reported absent, not fatal

  // 3 sentences, 4 <eob>s, 2 after punctuation; function word follows one.
  std::vector<SegmentedSentence> corpus{
      parse_segmented("uno , <eob> de dos <eob>"),
      parse_segmented("tres <eob>"),
      parse_segmented("cuatro . <eob>"),
  };
  BreakPatternStats t = break_pattern_stats(corpus, {"de", "y"});
  REQUIRE(t.eob.has_value());
  CHECK(t.eob->total == 4);
  CHECK(t.eob->pct_after_punctuation() == 50.0);
  CHECK(t.eob->with_following_word == 1);
  CHECK(t.eob->pct_before_function_word() == 100.0);

  // multibyte punctuation counts too
  std::vector<SegmentedSentence> uni{parse_segmented("ala… <eob> y mas <eob>")};
  BreakPatternStats u = break_pattern_stats(uni, {"y"});
  CHECK(u.eob->after_punctuation == 1);
  CHECK(u.eob->before_function_word == 1);
}

TEST_CASE("evaluation report JSON carries the full schema") {
  std::vector<SegmentedSentence> sents{parse_segmented("a b <eol> c <eob>"),
                                       parse_segmented("d <eob> e <eob>")};
  EvaluationReport rep = evaluate(sents, sents, 42);
  nlohmann::json j = nlohmann::json::parse(report_to_json(rep));
  CHECK(j["bleu"].get<double>() == doctest::Approx(100.0));
  CHECK(j["sigma"].get<double>() == doctest::Approx(100.0));
  CHECK(j["cpl"].get<double>() == 100.0);
  CHECK(j["eol_coverage"].get<double>() == 0.0);
  CHECK(j["eob_coverage"].get<double>() == 0.0);
  CHECK(j["counts"]["eob_ref"].get<int>() == 3);
  CHECK(j.contains("pattern_stats"));
}

TEST_CASE("evaluate strips breaks for BLEU") {
  std::vector<SegmentedSentence> hyp{parse_segmented("a b c <eob>")};
  std::vector<SegmentedSentence> ref{parse_segmented("a <eol> b c <eob>")};
  EvaluationReport rep = evaluate(hyp, ref, 42);
  CHECK(rep.bleu.score == doctest::Approx(100.0));  // text identical once stripped
  CHECK(rep.sigma < 100.0);
}
