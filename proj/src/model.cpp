#include "hdcn/model.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hdcn {

std::string_view copy_mode_name(CopyMode m) {
  switch (m) {
    case CopyMode::hierarchical_plain:
      return "plain";
    case CopyMode::hierarchical_freeze:
      return "freeze";
    case CopyMode::hierarchical_cover:
      return "cover";
    case CopyMode::flat:
      return "flat";
  }
  return "cover";
}

CopyMode parse_copy_mode(std::string_view s) {
  if (s == "plain" || s == "hierarchical_plain") return CopyMode::hierarchical_plain;
  if (s == "freeze" || s == "hierarchical_freeze") return CopyMode::hierarchical_freeze;
  if (s == "cover" || s == "hierarchical_cover") return CopyMode::hierarchical_cover;
  if (s == "flat") return CopyMode::flat;
  throw std::invalid_argument("unknown copy mode: " + std::string(s) +
                              " (expected plain, freeze, cover or flat)");
}

std::string_view encoder_init_name(EncoderInit e) {
  return e == EncoderInit::zero_init ? "zero" : "last";
}

EncoderInit parse_encoder_init(std::string_view s) {
  if (s == "zero" || s == "zero_init") return EncoderInit::zero_init;
  if (s == "last" || s == "last_init") return EncoderInit::last_init;
  throw std::invalid_argument("unknown encoder init: " + std::string(s) + " (expected zero or last)");
}

void ModelConfig::validate() const {
  if (hidden_dim == 0 || embed_dim == 0) throw std::invalid_argument("model dims must be positive");
  if (embed_dim != hidden_dim) {
    throw std::invalid_argument("embed_dim (" + std::to_string(embed_dim) + ") must equal hidden_dim (" +
                                std::to_string(hidden_dim) + ") for the tied output projection");
  }
  if (encoder_layers == 0 || decoder_layers == 0) throw std::invalid_argument("layer counts must be >= 1");
  if (max_decode_len == 0) throw std::invalid_argument("max_decode_len must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
}

ad::ParamStore Model::blueprint(const ModelConfig& cfg, std::size_t vocab_size) {
  cfg.validate();
  using ad::Shape;
  const std::size_t d = cfg.hidden_dim;
  ad::ParamStore s;
  s.add("embedding", Shape(vocab_size, d));
  for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
    const std::size_t in = l == 0 ? cfg.embed_dim : 2 * d;
    ad::add_lstm_layer(s, "encoder.fwd." + std::to_string(l), in, d);
    ad::add_lstm_layer(s, "encoder.bwd." + std::to_string(l), in, d);
  }
  s.add("pool_proj", Shape(d, 2 * d));
  for (std::size_t l = 0; l < cfg.decoder_layers; ++l) {
    ad::add_lstm_layer(s, "decoder." + std::to_string(l), l == 0 ? cfg.embed_dim : d, d);
  }
  s.add("attn.word", Shape(d, 2 * d));
  s.add("attn.turn", Shape(d, 2 * d));
  s.add("coverage.w", Shape(1));
  s.add("gen_gate", Shape(4 * d));
  s.add("slot_gate.weight", Shape(kNumGates, 2 * d));
  s.add("slot_gate.bias", Shape(kNumGates));
  return s;
}

Model::Model(ModelConfig cfg, Vocab vocab, std::vector<std::string> slots, std::uint64_t seed)
    : cfg_(cfg), vocab_(std::move(vocab)), slots_(std::move(slots)), seed_(seed) {
  params_ = blueprint(cfg_, vocab_.size());
  std::mt19937_64 rng(seed);
  for (ad::Parameter* p : params_.all()) {
    if (p->name == "embedding") {
      ad::init_uniform(*p, 1.0, rng);
    } else if (p->name == "coverage.w") {
      ad::init_uniform(*p, 0.1, rng);
    } else if (p->name == "slot_gate.bias") {
      // stays zero
    } else {
      ad::init_fan_in(*p, rng);
    }
  }
  bind();
}

Model::Model(ModelConfig cfg, Vocab vocab, std::vector<std::string> slots, std::uint64_t seed,
             ad::ParamStore params)
    : cfg_(cfg), vocab_(std::move(vocab)), slots_(std::move(slots)), seed_(seed),
      params_(std::move(params)) {
  const ad::ParamStore expected = blueprint(cfg_, vocab_.size());
  for (const ad::Parameter* e : expected.all()) {
    if (!params_.contains(e->name)) throw std::invalid_argument("missing parameter " + e->name);
    const ad::Parameter& p = params_.get(e->name);
    if (!(p.shape == e->shape)) {
      throw std::invalid_argument("parameter " + e->name + " has shape " + p.shape.str() +
                                  ", expected " + e->shape.str());
    }
    if (p.value.size() != p.shape.size()) {
      throw std::invalid_argument("parameter " + e->name + " has a truncated value buffer");
    }
  }
  if (params_.size() != expected.size()) throw std::invalid_argument("unexpected extra parameters");
  bind();
}

Model::Model(const Model& other)
    : cfg_(other.cfg_), vocab_(other.vocab_), slots_(other.slots_), seed_(other.seed_),
      params_(other.params_) {
  bind();
}

Model& Model::operator=(const Model& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    vocab_ = other.vocab_;
    slots_ = other.slots_;
    seed_ = other.seed_;
    params_ = other.params_;
    bind();
  }
  return *this;
}

Model::Model(Model&& other) noexcept
    : cfg_(other.cfg_), vocab_(std::move(other.vocab_)), slots_(std::move(other.slots_)),
      seed_(other.seed_), params_(std::move(other.params_)) {
  bind();
}

Model& Model::operator=(Model&& other) noexcept {
  cfg_ = other.cfg_;
  vocab_ = std::move(other.vocab_);
  slots_ = std::move(other.slots_);
  seed_ = other.seed_;
  params_ = std::move(other.params_);
  bind();
  return *this;
}

void Model::bind() {
  if (params_.size() == 0) return;
  embedding_ = &params_.get("embedding");
  enc_fwd_.clear();
  enc_bwd_.clear();
  dec_.clear();
  for (std::size_t l = 0; l < cfg_.encoder_layers; ++l) {
    enc_fwd_.push_back(ad::find_lstm_layer(params_, "encoder.fwd." + std::to_string(l)));
    enc_bwd_.push_back(ad::find_lstm_layer(params_, "encoder.bwd." + std::to_string(l)));
  }
  for (std::size_t l = 0; l < cfg_.decoder_layers; ++l) {
    dec_.push_back(ad::find_lstm_layer(params_, "decoder." + std::to_string(l)));
  }
  pool_proj_ = &params_.get("pool_proj");
  word_attn_ = &params_.get("attn.word");
  turn_attn_ = &params_.get("attn.turn");
  coverage_ = &params_.get("coverage.w");
  gen_gate_ = &params_.get("gen_gate");
  gate_w_ = &params_.get("slot_gate.weight");
  gate_b_ = &params_.get("slot_gate.bias");
}

std::size_t load_embeddings(Model& model, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file " + path);
  ad::Parameter& e = model.embedding();
  const std::size_t d = e.shape.cols();
  std::size_t loaded = 0, line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;
    std::vector<double> v;
    for (double x; ss >> x;) v.push_back(x);
    if (v.size() != d) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(d) + " values, got " + std::to_string(v.size()));
    }
    if (!model.vocab().contains(tok)) continue;
    const int id = model.vocab().id(tok);
    std::copy(v.begin(), v.end(), e.value.begin() + static_cast<std::ptrdiff_t>(id * d));
    ++loaded;
  }
  return loaded;
}

}  // namespace hdcn
