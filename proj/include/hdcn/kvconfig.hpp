#pragma once

#include <map>
#include <string>
#include <string_view>

#include "hdcn/synthetic.hpp"
#include "hdcn/training.hpp"

namespace hdcn {

// Plain-text configuration: one "key = value" per line, '#' starts a
// comment, blank lines are ignored. Later keys override earlier ones.
class KvConfig {
 public:
  static KvConfig parse(std::string_view text);
  static KvConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Everything a config file can set. Corpus sizes for dev and test splits
// accompany the generator settings.
struct Settings {
  TrainConfig train;
  SyntheticConfig synthetic;
  std::size_t n_dev = 50;
  std::size_t n_test = 100;
};

// Applies every key; throws std::invalid_argument on an unknown key or a
// malformed value. "dim" sets embed_dim and hidden_dim together.
void apply_config(const KvConfig& kv, Settings& s);

}  // namespace hdcn
