#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hdcn/autodiff.hpp"
#include "hdcn/lstm.hpp"
#include "hdcn/params.hpp"
#include "hdcn/vocab.hpp"

namespace hdcn {

enum class CopyMode { hierarchical_plain, hierarchical_freeze, hierarchical_cover, flat };
enum class EncoderInit { zero_init, last_init };

std::string_view copy_mode_name(CopyMode m);
CopyMode parse_copy_mode(std::string_view s);
std::string_view encoder_init_name(EncoderInit e);
EncoderInit parse_encoder_init(std::string_view s);
inline bool is_hierarchical(CopyMode m) { return m != CopyMode::flat; }

struct ModelConfig {
  // embed_dim must equal hidden_dim: the output projection reuses the
  // embedding matrix.
  std::size_t embed_dim = 400;
  std::size_t hidden_dim = 400;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  CopyMode mode = CopyMode::hierarchical_cover;
  EncoderInit encoder_init = EncoderInit::last_init;
  std::size_t max_decode_len = 10;
  double dropout = 0.5;

  void validate() const;
};

// Parameters plus the vocabulary and slot inventory they were built for.
//
// Parameter layout (d = hidden_dim, V = vocab size):
//   embedding              V x d     input embeddings and output projection
//   encoder.{fwd,bwd}.l    BiLSTM layers; layer 0 reads d, later layers 2d
//   pool_proj              d x 2d    max-pooled encoder states -> decoder h0
//   decoder.l              decoder LSTM layers
//   attn.word, attn.turn   d x 2d    bilinear word / turn scoring
//   coverage.w             1         turn-coverage weight
//   gen_gate               4d        p_gen over [s; e; c]
//   slot_gate.{weight,bias} 3 x 2d, 3
class Model {
 public:
  Model(ModelConfig cfg, Vocab vocab, std::vector<std::string> slots, std::uint64_t seed);
  // Adopts already-populated parameters; throws on any missing parameter or
  // shape mismatch.
  Model(ModelConfig cfg, Vocab vocab, std::vector<std::string> slots, std::uint64_t seed,
        ad::ParamStore params);
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&& other) noexcept;
  Model& operator=(Model&& other) noexcept;

  const ModelConfig& config() const { return cfg_; }
  ModelConfig& mutable_config() { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  const std::vector<std::string>& slots() const { return slots_; }
  std::uint64_t seed() const { return seed_; }
  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }

  ad::Parameter& embedding() { return *embedding_; }
  const ad::LstmLayer& encoder_forward(std::size_t layer) const { return enc_fwd_[layer]; }
  const ad::LstmLayer& encoder_backward(std::size_t layer) const { return enc_bwd_[layer]; }
  const ad::LstmLayer& decoder_layer(std::size_t layer) const { return dec_[layer]; }
  ad::Parameter& pool_proj() { return *pool_proj_; }
  ad::Parameter& word_attn() { return *word_attn_; }
  ad::Parameter& turn_attn() { return *turn_attn_; }
  ad::Parameter& coverage_weight() { return *coverage_; }
  ad::Parameter& gen_gate() { return *gen_gate_; }
  ad::Parameter& slot_gate_weight() { return *gate_w_; }
  ad::Parameter& slot_gate_bias() { return *gate_b_; }

  // Blueprint of every parameter this config needs, zero-initialized.
  static ad::ParamStore blueprint(const ModelConfig& cfg, std::size_t vocab_size);

 private:
  void bind();

  ModelConfig cfg_;
  Vocab vocab_;
  std::vector<std::string> slots_;
  std::uint64_t seed_ = 0;
  ad::ParamStore params_;

  ad::Parameter* embedding_ = nullptr;
  std::vector<ad::LstmLayer> enc_fwd_, enc_bwd_, dec_;
  ad::Parameter* pool_proj_ = nullptr;
  ad::Parameter* word_attn_ = nullptr;
  ad::Parameter* turn_attn_ = nullptr;
  ad::Parameter* coverage_ = nullptr;
  ad::Parameter* gen_gate_ = nullptr;
  ad::Parameter* gate_w_ = nullptr;
  ad::Parameter* gate_b_ = nullptr;
};

// Overwrites embedding rows from a whitespace-separated text file of
// "token v1 ... vd" lines. Returns how many vocabulary rows were set.
std::size_t load_embeddings(Model& model, const std::string& path);

}  // namespace hdcn
