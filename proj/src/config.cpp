#include "cylin/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cylin {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected on/off, got '" + v + "'");
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_size(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt_list(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

// Library parse helpers report ParameterError; in a config file that is a
// configuration problem.
template <class F>
auto as_config(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr_gen > 0.0) || !(lr_disc > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(lambda_gen >= 0.0) || !(lambda_adv >= 0.0)) throw ConfigError("loss weights must be non-negative");
  if (batch == 0) throw ConfigError("train.batch must be positive");
  if (log_every == 0) throw ConfigError("train.log_every must be positive");
}

void DataConfig::validate() const {
  if (count == 0) throw ConfigError("data.count must be positive");
  if (val_count == 0) throw ConfigError("data.val_count must be positive");
  if (base.height == 0 || base.width == 0) throw ConfigError("data resolution must be positive");
  as_config("mask.fraction", [&] { base.mask.validate(); });
}

void RunConfig::validate() const {
  train.validate();
  data.validate();
  as_config("gen", [&] { gen.validate(); });
  if (data.base.height % gen.stride_product() || data.base.width % gen.stride_product()) {
    throw ConfigError("data resolution must be divisible by " + std::to_string(gen.stride_product()));
  }
  if (train.adversarial) {
    if (disc.channels.empty()) throw ConfigError("disc.channels must not be empty");
    if (disc.kernel % 2 == 0) throw ConfigError("disc.kernel must be odd");
  }
}

std::vector<std::string> RunConfig::to_lines() const {
  std::vector<std::string> l;
  auto add = [&](const std::string& k, const std::string& v) { l.push_back(k + " = " + v); };
  add("train.steps", std::to_string(train.steps));
  add("train.seed", std::to_string(train.seed));
  add("train.batch", std::to_string(train.batch));
  add("train.lr_gen", fmt(train.lr_gen));
  add("train.lr_disc", fmt(train.lr_disc));
  add("train.lambda_gen", fmt(train.lambda_gen));
  add("train.lambda_adv", fmt(train.lambda_adv));
  add("train.adversarial", train.adversarial ? "on" : "off");
  add("train.adv_loss", std::string(to_string(train.adv_loss)));
  add("train.log_every", std::to_string(train.log_every));
  add("train.checkpoint_every", std::to_string(train.checkpoint_every));
  add("train.out", out_dir.generic_string());
  add("data.family", std::string(to_string(data.base.family)));
  add("data.seed", std::to_string(data.base.seed));
  add("data.height", std::to_string(data.base.height));
  add("data.width", std::to_string(data.base.width));
  add("data.frequency", std::to_string(data.base.frequency));
  add("data.count", std::to_string(data.count));
  add("data.val_count", std::to_string(data.val_count));
  add("mask.fraction", data.base.mask.str());
  add("gen.channels", fmt_list(gen.channels));
  add("gen.kernel", std::to_string(gen.kernel));
  add("gen.pad_mode", std::string(to_string(gen.pad_mode)));
  add("gen.pe_group", gen.pe_group ? std::string(to_string(*gen.pe_group)) : "none");
  add("gen.spe_mode", std::string(to_string(gen.spe_mode)));
  add("gen.spe_pairs", std::to_string(gen.spe_pairs));
  add("gen.paste_known", gen.paste_known ? "on" : "off");
  add("disc.channels", fmt_list(disc.channels));
  add("disc.kernel", std::to_string(disc.kernel));
  add("disc.pad_mode", std::string(to_string(disc.pad_mode)));
  add("disc.slope", fmt(disc.slope));
  add("disc.train_iterations", std::to_string(disc.train_iterations));
  add("disc.eval_iterations", std::to_string(disc.eval_iterations));
  return l;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) throw ConfigError("duplicate key '" + key + "'");
  }
  return out;
}

RunConfig config_from_pairs(const std::map<std::string, std::string>& pairs) {
  RunConfig c;
  std::optional<std::size_t> stages;
  for (const auto& [k, v] : pairs) {
    if (k == "train.steps") c.train.steps = to_size(k, v);
    else if (k == "train.seed") c.train.seed = to_u64(k, v);
    else if (k == "train.batch") c.train.batch = to_size(k, v);
    else if (k == "train.lr_gen") c.train.lr_gen = to_double(k, v);
    else if (k == "train.lr_disc") c.train.lr_disc = to_double(k, v);
    else if (k == "train.lambda_gen") c.train.lambda_gen = to_double(k, v);
    else if (k == "train.lambda_adv") c.train.lambda_adv = to_double(k, v);
    else if (k == "train.adversarial") c.train.adversarial = to_bool(k, v);
    else if (k == "train.adv_loss") c.train.adv_loss = as_config(k, [&] { return parse_adversarial_loss(v); });
    else if (k == "train.log_every") c.train.log_every = to_size(k, v);
    else if (k == "train.checkpoint_every") c.train.checkpoint_every = to_size(k, v);
    else if (k == "train.out") c.out_dir = v;
    else if (k == "data.family") c.data.base.family = as_config(k, [&] { return parse_synth_family(v); });
    else if (k == "data.seed") c.data.base.seed = to_u64(k, v);
    else if (k == "data.height") c.data.base.height = to_size(k, v);
    else if (k == "data.width") c.data.base.width = to_size(k, v);
    else if (k == "data.frequency") c.data.base.frequency = to_size(k, v);
    else if (k == "data.count") c.data.count = to_size(k, v);
    else if (k == "data.val_count") c.data.val_count = to_size(k, v);
    else if (k == "mask.fraction") c.data.base.mask = as_config(k, [&] { return MaskSpec::parse(v); });
    else if (k == "gen.channels") c.gen.channels = to_list(k, v);
    else if (k == "gen.stages") stages = to_size(k, v);
    else if (k == "gen.kernel") c.gen.kernel = to_size(k, v);
    else if (k == "gen.pad_mode") c.gen.pad_mode = as_config(k, [&] { return parse_pad_mode(v); });
    else if (k == "gen.pe_group") {
      if (v == "none") c.gen.pe_group.reset();
      else c.gen.pe_group = as_config(k, [&] { return parse_pe_group(v); });
    } else if (k == "gen.spe_mode") c.gen.spe_mode = as_config(k, [&] { return parse_spe_mode(v); });
    else if (k == "gen.spe_pairs") c.gen.spe_pairs = to_size(k, v);
    else if (k == "gen.paste_known") c.gen.paste_known = to_bool(k, v);
    else if (k == "disc.channels") c.disc.channels = to_list(k, v);
    else if (k == "disc.kernel") c.disc.kernel = to_size(k, v);
    else if (k == "disc.pad_mode") c.disc.pad_mode = as_config(k, [&] { return parse_pad_mode(v); });
    else if (k == "disc.slope") c.disc.slope = to_double(k, v);
    else if (k == "disc.train_iterations") c.disc.train_iterations = to_size(k, v);
    else if (k == "disc.eval_iterations") c.disc.eval_iterations = to_size(k, v);
    else throw ConfigError("unknown configuration key '" + k + "'");
  }
  if (stages) {
    // Truncate the channel ladder, or extend it by repeating the last width.
    if (*stages == 0) throw ConfigError("gen.stages must be positive");
    c.gen.channels.resize(*stages, c.gen.channels.back());
  }
  c.validate();
  return c;
}

RunConfig parse_config(const std::string& text) { return config_from_pairs(parse_key_values(text)); }

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_string(const RunConfig& config) {
  std::string out;
  for (const auto& line : config.to_lines()) out += line + "\n";
  return out;
}

}  // namespace cylin
