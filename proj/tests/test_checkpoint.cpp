#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "subseg/checkpoint.hpp"

using namespace subseg;

namespace {

ModelConfig tiny() {
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.ffn_dim = 16;
  cfg.text_enc_layers = 1;
  cfg.speech_enc_layers = 0;
  cfg.dec_layers = 1;
  cfg.mode = ModelMode::Textual;
  cfg.vocab = {std::string(kPadTok), std::string(kBosTok), std::string(kEosTok),
               std::string(kBlankTok), std::string(kEolLit), std::string(kEobLit),
               std::string(kSpaceTok), "a", "b"};
  return cfg;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("subseg_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("save/load round-trip is bit exact") {
  TempDir tmp;
  Model<float> model(tiny());
  model.init_weights(42);
  LangProfiles profiles{{"<lang:aa>", {{"abc", 3.0}, {"bcd", 1.0}}}};
  save_checkpoint(tmp.file("m.ckpt"), model, 123, 4.5, profiles);

  Checkpoint ck = load_checkpoint(tmp.file("m.ckpt"));
  CHECK(ck.step == 123);
  CHECK(ck.val_loss == 4.5);
  CHECK(ck.config == model.config());
  CHECK(ck.lang_profiles == profiles);
  auto a = named_tensors(model.params());
  auto b = named_tensors(ck.model->params());
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second->v == b[i].second->v);
  }
}

TEST_CASE("averaging seven identical checkpoints is an exact identity") {
  TempDir tmp;
  Model<float> model(tiny());
  model.init_weights(7);
  std::vector<std::string> paths;
  for (int i = 0; i < 7; ++i) {
    paths.push_back(tmp.file("c" + std::to_string(i) + ".ckpt"));
    save_checkpoint(paths.back(), model, 10 + i, 1.0, {});
  }
  Checkpoint avg = average_checkpoints(paths);
  auto a = named_tensors(model.params());
  auto b = named_tensors(avg.model->params());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].second->v == b[i].second->v);
}

TEST_CASE("averaging takes the elementwise mean") {
  TempDir tmp;
  std::vector<std::string> paths;
  for (int i = 0; i < 7; ++i) {
    Model<float> model(tiny());
    model.init_weights(7);  // identical base
    model.params().embedding.v[10] = i == 0 ? 2.0f : 0.0f;
    paths.push_back(tmp.file("v" + std::to_string(i) + ".ckpt"));
    save_checkpoint(paths.back(), model, i, 0.0, {});
  }
  Checkpoint avg = average_checkpoints(paths);
  CHECK(avg.model->params().embedding.v[10] == doctest::Approx(2.0 / 7.0).epsilon(1e-7));
}

TEST_CASE("config mismatch and wrong count are typed errors") {
  TempDir tmp;
  Model<float> m1(tiny());
  m1.init_weights(1);
  ModelConfig other = tiny();
  other.vocab.push_back("zz");
  Model<float> m2(other);
  m2.init_weights(1);
  std::vector<std::string> paths;
  for (int i = 0; i < 6; ++i) {
    paths.push_back(tmp.file("a" + std::to_string(i) + ".ckpt"));
    save_checkpoint(paths.back(), m1, i, 0.0, {});
  }
  paths.push_back(tmp.file("weird.ckpt"));
  save_checkpoint(paths.back(), m2, 9, 0.0, {});
  try {
    average_checkpoints(paths);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigMismatch);
  }

  std::vector<std::string> five(paths.begin(), paths.begin() + 5);
  try {
    average_checkpoints(five);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::WrongCount);
  }
  CHECK_NOTHROW(average_checkpoints(five, /*allow_any_count=*/true));
}

TEST_CASE("loading garbage is a BadMagic error") {
  TempDir tmp;
  std::string p = tmp.file("junk.bin");
  FILE* f = fopen(p.c_str(), "wb");
  fputs("not a checkpoint", f);
  fclose(f);
  try {
    load_checkpoint(p);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::BadMagic);
  }
}
