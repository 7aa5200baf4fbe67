#include "hdcn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace hdcn {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian");

namespace {

constexpr char kMagic[8] = {'H', 'D', 'C', 'N', 'C', 'K', 'P', 'T'};

json config_to_json(const ModelConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"hidden_dim", c.hidden_dim},
          {"encoder_layers", c.encoder_layers},
          {"decoder_layers", c.decoder_layers},
          {"mode", std::string(copy_mode_name(c.mode))},
          {"encoder_init", std::string(encoder_init_name(c.encoder_init))},
          {"max_decode_len", c.max_decode_len},
          {"dropout", c.dropout}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.encoder_layers = j.at("encoder_layers").get<std::size_t>();
  c.decoder_layers = j.at("decoder_layers").get<std::size_t>();
  c.mode = parse_copy_mode(j.at("mode").get<std::string>());
  c.encoder_init = parse_encoder_init(j.at("encoder_init").get<std::string>());
  c.max_decode_len = j.at("max_decode_len").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  json header;
  header["model"] = config_to_json(model.config());
  header["seed"] = model.seed();
  header["vocab"] = model.vocab().tokens();
  header["slots"] = model.slots();
  header["step"] = model.params().step();
  header["params"] = json::array();
  for (const ad::Parameter* p : model.params().all()) {
    header["params"].push_back({{"name", p->name}, {"shape", p->shape.dims()}});
  }
  const std::string h = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out.write(kMagic, sizeof kMagic);
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t len = h.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const ad::Parameter* p : model.params().all()) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error(path + ": not an HDCN checkpoint");
  }
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in) throw std::runtime_error(path + ": truncated header");
  if (version != kCheckpointVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  if (len > (1ULL << 32)) throw std::runtime_error(path + ": implausible header length");
  std::string h(len, '\0');
  in.read(h.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error(path + ": truncated header");

  json header;
  try {
    header = json::parse(h);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": corrupt header: " + e.what());
  }
  const ModelConfig cfg = config_from_json(header.at("model"));
  Vocab vocab = Vocab::from_tokens(header.at("vocab").get<std::vector<std::string>>());
  auto slots = header.at("slots").get<std::vector<std::string>>();
  const auto seed = header.at("seed").get<std::uint64_t>();

  ad::ParamStore params;
  for (const json& jp : header.at("params")) {
    const auto dims = jp.at("shape").get<std::vector<std::size_t>>();
    ad::Shape shape;
    if (dims.size() == 1) {
      shape = ad::Shape(dims[0]);
    } else if (dims.size() == 2) {
      shape = ad::Shape(dims[0], dims[1]);
    } else {
      throw std::runtime_error(path + ": parameter " + jp.at("name").get<std::string>() +
                               " has unsupported rank");
    }
    ad::Parameter& p = params.add(jp.at("name").get<std::string>(), shape);
    in.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated data for parameter " + p.name);
  }
  params.set_step(header.value("step", std::int64_t{0}));
  try {
    return Model(cfg, std::move(vocab), std::move(slots), seed, std::move(params));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace hdcn
