#include "mmloc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace mmloc {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Stream ids for derived component seeds.
enum SeedStream : std::uint64_t {
  kRfChainStream = 1,
  kNoiseStream = 2,
  kSplitStream = 3,
  kCovModelStream = 10,
  kCovShuffleStream = 11,
  kCirModelStream = 20,
  kCirShuffleStream = 21,
  kRawModelStream = 30,
  kRawShuffleStream = 31,
};

const std::set<std::string>& scene_keys() {
  static const std::set<std::string> keys{
      "room_width", "room_depth", "bs_x", "bs_y", "array_rows", "array_cols",
      "element_spacing", "carrier_freq", "bandwidth", "n_subcarriers",
      "max_reflection_order", "wall_reflection_loss", "snr_db", "rf_chain_seed",
      "noise_seed"};
  return keys;
}

const std::set<std::string>& plan_keys() {
  static const std::set<std::string> keys{"n_lines", "line_spacing", "line_length", "speed",
                                          "snapshot_rate", "start_x", "start_y"};
  return keys;
}

const std::set<std::string>& train_keys() {
  static const std::set<std::string> keys{
      "epochs", "batch_size", "lr0", "lr_decay", "lr_decay_every", "optimizer",
      "adam_beta1", "adam_beta2", "adam_epsilon", "standardize", "leaky_slope"};
  return keys;
}

const std::set<std::string>& run_keys() {
  static const std::set<std::string> keys{"dataset", "train_fraction", "split", "cir_taps",
                                          "literal_cov", "include_raw", "seed", "split_seed",
                                          "out"};
  return keys;
}

bool known_key(const std::string& key) {
  if (scene_keys().contains(key) || plan_keys().contains(key) || run_keys().contains(key) ||
      train_keys().contains(key)) {
    return true;
  }
  for (const char* prefix : {"cov.", "cir.", "raw."}) {
    if (key.starts_with(prefix) && train_keys().contains(key.substr(4))) return true;
  }
  return false;
}

std::size_t as_size(double v, const std::string& key) {
  if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError(key + ": expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

BranchConfig resolve_branch(const KeyValueConfig& kv, const std::string& prefix,
                            std::uint64_t model_seed, std::uint64_t shuffle_seed) {
  auto key = [&](const std::string& name) { return kv.has(prefix + name) ? prefix + name : name; };
  BranchConfig b;
  TrainConfig& t = b.train;
  t.epochs = as_size(kv.get_double(key("epochs"), static_cast<double>(t.epochs)), key("epochs"));
  t.batch_size =
      as_size(kv.get_double(key("batch_size"), static_cast<double>(t.batch_size)), key("batch_size"));
  t.lr0 = kv.get_double(key("lr0"), t.lr0);
  t.lr_decay = kv.get_double(key("lr_decay"), t.lr_decay);
  t.lr_decay_every = as_size(kv.get_double(key("lr_decay_every"), static_cast<double>(t.lr_decay_every)),
                             key("lr_decay_every"));
  const std::string optimizer = kv.get_string(key("optimizer"), "adam");
  if (optimizer == "adam") {
    t.optimizer = OptimizerKind::kAdam;
  } else if (optimizer == "sgd") {
    t.optimizer = OptimizerKind::kSgd;
  } else {
    throw ConfigError(key("optimizer") + ": expected adam or sgd");
  }
  t.beta1 = kv.get_double(key("adam_beta1"), t.beta1);
  t.beta2 = kv.get_double(key("adam_beta2"), t.beta2);
  t.epsilon = kv.get_double(key("adam_epsilon"), t.epsilon);
  t.shuffle_seed = shuffle_seed;
  b.standardize = kv.get_bool(key("standardize"), false);
  b.leaky_slope = kv.get_double(key("leaky_slope"), b.leaky_slope);
  b.model_seed = model_seed;
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(prefix + e.what());
  }
  return b;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& source) {
  KeyValueConfig kv;
  kv.source_ = source;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(number) + ": empty key");
    kv.values_[key] = value;
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  if (v == "-inf") return -std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(source_ + ": " + key + ": not a number: " + v);
  }
  return out;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(source_ + ": " + key + ": not an unsigned integer: " + v);
  }
  return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(source_ + ": " + key + ": not a boolean: " + v);
}

SplitStrategy parse_split_strategy(const std::string& text) {
  if (text == "stride") return SplitStrategy::kStride;
  if (text == "random") return SplitStrategy::kRandom;
  throw ConfigError("split: expected stride or random, got " + text);
}

RunConfig resolve_run_config(const KeyValueConfig& kv, const ConfigOverrides& overrides) {
  for (const auto& [key, value] : kv.values()) {
    if (!known_key(key)) throw ConfigError("unknown config key: " + key);
  }
  RunConfig rc;
  rc.seed = overrides.seed.value_or(kv.get_u64("seed", rc.seed));
  const bool seed_forced = overrides.seed.has_value();
  auto component_seed = [&](const std::string& key, SeedStream stream) {
    const std::uint64_t derived = derive_seed(rc.seed, stream);
    return seed_forced ? derived : kv.get_u64(key, derived);
  };

  SceneConfig& s = rc.scene;
  s.room_width = kv.get_double("room_width", s.room_width);
  s.room_depth = kv.get_double("room_depth", s.room_depth);
  s.bs_position = {kv.get_double("bs_x", s.bs_position.x), kv.get_double("bs_y", s.bs_position.y)};
  s.array_rows = as_size(kv.get_double("array_rows", static_cast<double>(s.array_rows)), "array_rows");
  s.array_cols = as_size(kv.get_double("array_cols", static_cast<double>(s.array_cols)), "array_cols");
  s.carrier_freq = kv.get_double("carrier_freq", s.carrier_freq);
  s.element_spacing = kv.get_double("element_spacing", s.wavelength() / 2.0);
  s.bandwidth = kv.get_double("bandwidth", s.bandwidth);
  s.n_subcarriers =
      as_size(kv.get_double("n_subcarriers", static_cast<double>(s.n_subcarriers)), "n_subcarriers");
  s.max_reflection_order = static_cast<int>(
      kv.get_double("max_reflection_order", static_cast<double>(s.max_reflection_order)));
  s.wall_reflection_loss = kv.get_double("wall_reflection_loss", s.wall_reflection_loss);
  s.snr_db = kv.get_double("snr_db", s.snr_db);
  s.rf_chain_seed = component_seed("rf_chain_seed", kRfChainStream);
  s.noise_seed = component_seed("noise_seed", kNoiseStream);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  TrajectoryPlan& p = rc.plan;
  p.n_lines = as_size(kv.get_double("n_lines", static_cast<double>(p.n_lines)), "n_lines");
  p.line_spacing = kv.get_double("line_spacing", p.line_spacing);
  p.line_length = kv.get_double("line_length", p.line_length);
  p.speed = kv.get_double("speed", p.speed);
  p.snapshot_rate = kv.get_double("snapshot_rate", p.snapshot_rate);
  p.start = {kv.get_double("start_x", p.start.x), kv.get_double("start_y", p.start.y)};

  if (overrides.dataset_path) {
    rc.dataset_path = overrides.dataset_path;
  } else if (kv.has("dataset")) {
    rc.dataset_path = kv.get_string("dataset", "");
  }
  rc.out_dir = overrides.out_dir.value_or(kv.get_string("out", "."));

  rc.split.train_fraction = overrides.train_fraction.value_or(kv.get_double("train_fraction", 0.1));
  rc.split.strategy = overrides.split.value_or(parse_split_strategy(kv.get_string("split", "stride")));
  rc.split.seed = seed_forced ? derive_seed(rc.seed, kSplitStream)
                              : kv.get_u64("split_seed", derive_seed(rc.seed, kSplitStream));
  if (!(rc.split.train_fraction > 0.0 && rc.split.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must be in (0, 1)");
  }

  BranchConfigs& b = rc.branches;
  b.cov = resolve_branch(kv, "cov.", derive_seed(rc.seed, kCovModelStream),
                         derive_seed(rc.seed, kCovShuffleStream));
  b.cir = resolve_branch(kv, "cir.", derive_seed(rc.seed, kCirModelStream),
                         derive_seed(rc.seed, kCirShuffleStream));
  b.raw = resolve_branch(kv, "raw.", derive_seed(rc.seed, kRawModelStream),
                         derive_seed(rc.seed, kRawShuffleStream));
  b.include_raw = kv.get_bool("include_raw", true);
  b.fingerprints.cov_layout = (overrides.literal_cov || kv.get_bool("literal_cov", false))
                                  ? CovLayout::kLiteral
                                  : CovLayout::kLossless;
  b.fingerprints.cir_bins = as_size(
      kv.get_double("cir_taps", static_cast<double>(default_cir_bins(s.n_subcarriers))), "cir_taps");
  if (b.fingerprints.cir_bins < 1 || b.fingerprints.cir_bins > s.n_subcarriers) {
    throw ConfigError("cir_taps must be in [1, n_subcarriers]");
  }
  return rc;
}

std::uint64_t config_hash(const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  const SceneConfig& s = c.scene;
  os << s.room_width << ' ' << s.room_depth << ' ' << s.bs_position.x << ' ' << s.bs_position.y
     << ' ' << s.array_rows << ' ' << s.array_cols << ' ' << s.element_spacing << ' '
     << s.carrier_freq << ' ' << s.bandwidth << ' ' << s.n_subcarriers << ' '
     << s.max_reflection_order << ' ' << s.wall_reflection_loss << ' ' << s.snr_db << ' '
     << s.rf_chain_seed << ' ' << s.noise_seed << '|';
  const TrajectoryPlan& p = c.plan;
  os << p.n_lines << ' ' << p.line_spacing << ' ' << p.line_length << ' ' << p.speed << ' '
     << p.snapshot_rate << ' ' << p.start.x << ' ' << p.start.y << '|';
  os << (c.dataset_path ? c.dataset_path->string() : std::string("<synth>")) << '|';
  os << c.split.train_fraction << ' ' << static_cast<int>(c.split.strategy) << ' ' << c.split.seed
     << '|';
  for (const BranchConfig* b : {&c.branches.cov, &c.branches.cir, &c.branches.raw}) {
    const TrainConfig& t = b->train;
    os << t.epochs << ' ' << t.batch_size << ' ' << t.lr0 << ' ' << t.lr_decay << ' '
       << t.lr_decay_every << ' ' << static_cast<int>(t.optimizer) << ' ' << t.beta1 << ' '
       << t.beta2 << ' ' << t.epsilon << ' ' << t.shuffle_seed << ' ' << b->standardize << ' '
       << b->model_seed << ' ' << b->leaky_slope << '|';
  }
  os << c.branches.include_raw << ' ' << static_cast<int>(c.branches.fingerprints.cov_layout)
     << ' ' << c.branches.fingerprints.cir_bins << ' ' << c.seed;
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const unsigned char ch : os.str()) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace mmloc
