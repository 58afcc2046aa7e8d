#include "subseg/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace subseg {

namespace {

constexpr char kMagic[4] = {'S', 'B', 'C', 'K'};
constexpr uint32_t kVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"d_model", c.d_model},
                        {"n_heads", c.n_heads},
                        {"ffn_dim", c.ffn_dim},
                        {"text_enc_layers", c.text_enc_layers},
                        {"speech_enc_layers", c.speech_enc_layers},
                        {"dec_layers", c.dec_layers},
                        {"speech_downsample", c.speech_downsample},
                        {"speech_feat_dims", c.speech_feat_dims},
                        {"mode", mode_name(c.mode)},
                        {"dropout", c.dropout},
                        {"vocab", c.vocab}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<size_t>();
  c.n_heads = j.at("n_heads").get<size_t>();
  c.ffn_dim = j.at("ffn_dim").get<size_t>();
  c.text_enc_layers = j.at("text_enc_layers").get<size_t>();
  c.speech_enc_layers = j.at("speech_enc_layers").get<size_t>();
  c.dec_layers = j.at("dec_layers").get<size_t>();
  c.speech_downsample = j.at("speech_downsample").get<size_t>();
  c.speech_feat_dims = j.at("speech_feat_dims").get<size_t>();
  c.mode = mode_from_name(j.at("mode").get<std::string>());
  c.dropout = j.at("dropout").get<double>();
  c.vocab = j.at("vocab").get<std::vector<std::string>>();
  return c;
}

template <class T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) fail(Err::BadFormat, "truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model<float>& model, uint64_t step,
                     double val_loss, const LangProfiles& profiles) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot open " + path + " for writing");

  nlohmann::json header;
  header["config"] = config_to_json(model.config());
  header["step"] = step;
  header["val_loss"] = val_loss;
  header["lang_profiles"] = profiles;
  std::string hs = header.dump();

  out.write(kMagic, 4);
  write_raw(out, kVersion);
  write_raw(out, static_cast<uint64_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));

  auto tensors = named_tensors(model.params());
  write_raw(out, static_cast<uint64_t>(tensors.size()));
  for (auto& [name, t] : tensors) {
    write_raw(out, static_cast<uint64_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_raw(out, static_cast<uint8_t>(t->shape.size()));
    for (size_t d : t->shape) write_raw(out, static_cast<uint64_t>(d));
    out.write(reinterpret_cast<const char*>(t->data()),
              static_cast<std::streamsize>(t->numel() * sizeof(float)));
  }
  if (!out) fail(Err::IoError, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    fail(Err::BadMagic, path + " is not a checkpoint file");
  uint32_t version = read_raw<uint32_t>(in);
  if (version != kVersion)
    fail(Err::BadFormat, "unsupported checkpoint version " + std::to_string(version));
  uint64_t hlen = read_raw<uint64_t>(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) fail(Err::BadFormat, "truncated checkpoint header");

  nlohmann::json header = nlohmann::json::parse(hs);
  Checkpoint ck;
  ck.config = config_from_json(header.at("config"));
  ck.step = header.at("step").get<uint64_t>();
  ck.val_loss = header.at("val_loss").get<double>();
  if (header.contains("lang_profiles"))
    ck.lang_profiles = header.at("lang_profiles").get<LangProfiles>();

  ck.model = std::make_shared<Model<float>>(ck.config);
  auto tensors = named_tensors(ck.model->params());
  uint64_t count = read_raw<uint64_t>(in);
  if (count != tensors.size())
    fail(Err::ConfigMismatch, "checkpoint holds " + std::to_string(count) + " tensors, config needs " +
                                  std::to_string(tensors.size()));
  for (auto& [name, t] : tensors) {
    uint64_t nlen = read_raw<uint64_t>(in);
    std::string tname(nlen, '\0');
    in.read(tname.data(), static_cast<std::streamsize>(nlen));
    if (tname != name)
      fail(Err::ConfigMismatch, "tensor order mismatch: expected " + name + ", got " + tname);
    uint8_t ndim = read_raw<uint8_t>(in);
    std::vector<size_t> shape(ndim);
    for (auto& d : shape) d = static_cast<size_t>(read_raw<uint64_t>(in));
    if (shape != t->shape) fail(Err::ConfigMismatch, "tensor shape mismatch for " + name);
    in.read(reinterpret_cast<char*>(t->data()),
            static_cast<std::streamsize>(t->numel() * sizeof(float)));
    if (!in) fail(Err::BadFormat, "truncated tensor data for " + name);
  }
  return ck;
}

Checkpoint average_checkpoints(const std::vector<std::string>& paths, bool allow_any_count) {
  if (paths.empty()) fail(Err::WrongCount, "no checkpoints given");
  if (!allow_any_count && paths.size() != 7)
    fail(Err::WrongCount, "checkpoint averaging expects exactly 7 snapshots, got " +
                              std::to_string(paths.size()) + " (use the override to allow)");

  Checkpoint first = load_checkpoint(paths[0]);
  auto out_tensors = named_tensors(first.model->params());

  // Accumulate in double so 7 identical snapshots average back bit-exactly.
  std::vector<std::vector<double>> acc(out_tensors.size());
  for (size_t i = 0; i < out_tensors.size(); ++i)
    acc[i].assign(out_tensors[i].second->v.begin(), out_tensors[i].second->v.end());

  Checkpoint last = first;
  for (size_t p = 1; p < paths.size(); ++p) {
    Checkpoint ck = load_checkpoint(paths[p]);
    if (!(ck.config == first.config))
      fail(Err::ConfigMismatch, paths[p] + " was trained with a different configuration");
    auto tensors = named_tensors(ck.model->params());
    for (size_t i = 0; i < tensors.size(); ++i)
      for (size_t j = 0; j < tensors[i].second->numel(); ++j)
        acc[i][j] += static_cast<double>(tensors[i].second->v[j]);
    if (p + 1 == paths.size()) last = std::move(ck);
  }

  const double n = static_cast<double>(paths.size());
  for (size_t i = 0; i < out_tensors.size(); ++i)
    for (size_t j = 0; j < out_tensors[i].second->numel(); ++j)
      out_tensors[i].second->v[j] = static_cast<float>(acc[i][j] / n);

  first.step = last.step;
  first.val_loss = last.val_loss;
  return first;
}

}  // namespace subseg
