#include "hdcn/kvconfig.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace hdcn {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("config: bad value for " + key + ": '" + v + "'");
  return out;
}

}  // namespace

KvConfig KvConfig::parse(std::string_view text) {
  KvConfig kv;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    kv.values_[key] = value;
  }
  return kv;
}

KvConfig KvConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void apply_config(const KvConfig& kv, Settings& s) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  TrainConfig& t = s.train;
  SyntheticConfig& g = s.synthetic;
  auto size = [](std::size_t& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_number<std::size_t>(k, v); };
  };
  auto real = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_number<double>(k, v); };
  };
  const std::map<std::string, Setter> setters = {
      {"focus_ratio", real(t.focus_ratio)},
      {"batch_size", size(t.batch_size)},
      {"lr", real(t.adam.lr)},
      {"beta1", real(t.adam.beta1)},
      {"beta2", real(t.adam.beta2)},
      {"eps", real(t.adam.eps)},
      {"epochs", size(t.epochs)},
      {"patience", size(t.patience)},
      {"seed", [&t](const std::string& k, const std::string& v) { t.seed = parse_number<std::uint64_t>(k, v); }},
      {"gate_weight", real(t.gate_weight)},
      {"teacher_forcing", real(t.teacher_forcing)},
      {"clip_norm", real(t.clip_norm)},
      {"min_count", [&t](const std::string& k, const std::string& v) { t.min_count = parse_number<int>(k, v); }},
      {"dropout", real(t.model.dropout)},
      {"embed_dim", size(t.model.embed_dim)},
      {"hidden_dim", size(t.model.hidden_dim)},
      {"dim",
       [&t](const std::string& k, const std::string& v) {
         t.model.embed_dim = t.model.hidden_dim = parse_number<std::size_t>(k, v);
       }},
      {"encoder_layers", size(t.model.encoder_layers)},
      {"decoder_layers", size(t.model.decoder_layers)},
      {"mode", [&t](const std::string&, const std::string& v) { t.model.mode = parse_copy_mode(v); }},
      {"encoder_init",
       [&t](const std::string&, const std::string& v) { t.model.encoder_init = parse_encoder_init(v); }},
      {"max_decode_len", size(t.model.max_decode_len)},
      {"n_dialogues", size(g.n_dialogues)},
      {"min_turns", size(g.min_turns)},
      {"max_turns", size(g.max_turns)},
      {"n_slots", size(g.n_slots)},
      {"vocab_size", size(g.vocab_size)},
      {"distractor_rate", real(g.distractor_rate)},
      {"echo_rate", real(g.echo_rate)},
      {"slot_active_rate", real(g.slot_active_rate)},
      {"dontcare_rate", real(g.dontcare_rate)},
      {"multiword_rate", real(g.multiword_rate)},
      {"values_per_slot", size(g.values_per_slot)},
      {"min_filler", size(g.min_filler)},
      {"max_filler", size(g.max_filler)},
      {"n_dev", size(s.n_dev)},
      {"n_test", size(s.n_test)},
  };
  // "dim" first so explicit embed_dim / hidden_dim keys win.
  if (auto it = kv.values().find("dim"); it != kv.values().end()) setters.at("dim")(it->first, it->second);
  for (const auto& [key, value] : kv.values()) {
    if (key == "dim") continue;
    auto it = setters.find(key);
    if (it == setters.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    it->second(key, value);
  }
}

}  // namespace hdcn
