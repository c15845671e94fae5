#include "smart/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

namespace smart {

namespace {

struct Violation {
  std::string key;
  std::string message;
};

std::optional<Violation> smart_violation(const SmartConfig& s, int T) {
  if (s.t_lo < 1 || s.t_lo > s.t_hi) {
    return Violation{"smart.t_lo", "need 1 <= t_lo <= t_hi (got [" + std::to_string(s.t_lo) +
                                       ", " + std::to_string(s.t_hi) + "])"};
  }
  if (s.t_hi > T) {
    return Violation{"smart.t_hi", "t_hi " + std::to_string(s.t_hi) + " exceeds T = " +
                                       std::to_string(T)};
  }
  if (s.freq < 1) return Violation{"smart.freq", "freq must be >= 1"};
  if (!(s.lambda >= 0.0)) return Violation{"smart.lambda", "lambda must be >= 0"};
  return std::nullopt;
}

std::optional<Violation> violation(const TrainConfig& c) {
  if (!(c.data_sigma > 0.0 && c.data_sigma <= 0.1)) {
    return Violation{"data.sigma", "must lie in (0, 0.1]"};
  }
  if (c.dpm.T < 1) return Violation{"dpm.T", "must be >= 1"};
  if (!(c.dpm.beta_start > 0.0 && c.dpm.beta_start <= c.dpm.beta_end)) {
    return Violation{"dpm.beta_start", "need 0 < beta_start <= beta_end"};
  }
  if (!(c.dpm.beta_end < 1.0)) return Violation{"dpm.beta_end", "must be < 1"};
  if (c.dpm.batch < 1) return Violation{"dpm.batch", "must be positive"};
  if (!(c.dpm.adam.lr > 0.0)) return Violation{"dpm.lr", "must be positive"};
  if (!(c.dpm.lr_final_scale > 0.0 && c.dpm.lr_final_scale <= 1.0)) {
    return Violation{"dpm.lr_final_scale", "must lie in (0, 1]"};
  }
  if (c.gan.latent_dim < 1) return Violation{"gan.latent_dim", "must be positive"};
  if (c.gan.batch < 1) return Violation{"gan.batch", "must be positive"};
  if (!(c.gan.adam_g.lr > 0.0)) return Violation{"gan.lr_g", "must be positive"};
  if (!(c.gan.adam_d.lr > 0.0)) return Violation{"gan.lr_d", "must be positive"};
  if (!(c.gan.lr_final_scale > 0.0 && c.gan.lr_final_scale <= 1.0)) {
    return Violation{"gan.lr_final_scale", "must lie in (0, 1]"};
  }
  if (c.eval.interval < 1) return Violation{"eval.interval", "must be positive"};
  if (c.eval.samples < 1) return Violation{"eval.samples", "must be positive"};
  if (!(c.eval.tau > 0.0)) return Violation{"eval.tau", "must be positive"};
  return smart_violation(c.smart, c.dpm.T);
}

}  // namespace

void SmartConfig::validate(int T) const {
  if (auto v = smart_violation(*this, T)) throw ConfigError(v->key + ": " + v->message);
}

void TrainConfig::validate() const {
  if (auto v = violation(*this)) throw ConfigError(v->key + ": " + v->message);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw std::invalid_argument("not a number: '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw std::invalid_argument("not a non-negative integer: '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw std::invalid_argument("not a boolean: '" + v + "'");
}

JacobianMode to_jacobian(const std::string& v) {
  if (v == "full") return JacobianMode::full;
  if (v == "omit") return JacobianMode::omit;
  throw std::invalid_argument("jacobian mode must be 'full' or 'omit', got '" + v + "'");
}

using Setter = std::function<void(TrainConfig&, const std::string&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"seed", [](TrainConfig& c, const std::string& v) { c.seed = to_uint(v); }},
      {"data.sigma", [](TrainConfig& c, const std::string& v) { c.data_sigma = to_double(v); }},
      {"dpm.T", [](TrainConfig& c, const std::string& v) { c.dpm.T = static_cast<int>(to_uint(v)); }},
      {"dpm.beta_start", [](TrainConfig& c, const std::string& v) { c.dpm.beta_start = to_double(v); }},
      {"dpm.beta_end", [](TrainConfig& c, const std::string& v) { c.dpm.beta_end = to_double(v); }},
      {"dpm.iters", [](TrainConfig& c, const std::string& v) { c.dpm.iters = to_uint(v); }},
      {"dpm.batch", [](TrainConfig& c, const std::string& v) { c.dpm.batch = to_uint(v); }},
      {"dpm.lr_final_scale", [](TrainConfig& c, const std::string& v) { c.dpm.lr_final_scale = to_double(v); }},
      {"dpm.lr", [](TrainConfig& c, const std::string& v) { c.dpm.adam.lr = to_double(v); }},
      {"gan.latent_dim", [](TrainConfig& c, const std::string& v) { c.gan.latent_dim = to_uint(v); }},
      {"gan.lr_g", [](TrainConfig& c, const std::string& v) { c.gan.adam_g.lr = to_double(v); }},
      {"gan.lr_d", [](TrainConfig& c, const std::string& v) { c.gan.adam_d.lr = to_double(v); }},
      {"gan.lr_final_scale", [](TrainConfig& c, const std::string& v) { c.gan.lr_final_scale = to_double(v); }},
      {"gan.batch", [](TrainConfig& c, const std::string& v) { c.gan.batch = to_uint(v); }},
      {"gan.iters", [](TrainConfig& c, const std::string& v) { c.gan.iters = to_uint(v); }},
      {"smart.enabled", [](TrainConfig& c, const std::string& v) { c.smart.enabled = to_bool(v); }},
      {"smart.lambda", [](TrainConfig& c, const std::string& v) { c.smart.lambda = to_double(v); }},
      {"smart.t_lo", [](TrainConfig& c, const std::string& v) { c.smart.t_lo = static_cast<int>(to_uint(v)); }},
      {"smart.t_hi", [](TrainConfig& c, const std::string& v) { c.smart.t_hi = static_cast<int>(to_uint(v)); }},
      {"smart.freq", [](TrainConfig& c, const std::string& v) { c.smart.freq = static_cast<int>(to_uint(v)); }},
      {"smart.jacobian", [](TrainConfig& c, const std::string& v) { c.smart.jacobian = to_jacobian(v); }},
      {"smart.fresh_latents", [](TrainConfig& c, const std::string& v) { c.smart.fresh_latents = to_bool(v); }},
      {"eval.interval", [](TrainConfig& c, const std::string& v) { c.eval.interval = to_uint(v); }},
      {"eval.samples", [](TrainConfig& c, const std::string& v) { c.eval.samples = to_uint(v); }},
      {"eval.tau", [](TrainConfig& c, const std::string& v) { c.eval.tau = to_double(v); }},
      {"cond.enabled", [](TrainConfig& c, const std::string& v) { c.conditional = to_bool(v); }},
  };
  return table;
}

}  // namespace

TrainConfig parse_config_text(std::string_view text) {
  TrainConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::string> set_at;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto where = "line " + std::to_string(line_no) + " ('" + body + "')";
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected `key = value`");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + ": unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const std::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
    set_at[key] = where;
  }
  if (auto v = violation(cfg)) {
    const auto it = set_at.find(v->key);
    const std::string where = it == set_at.end() ? "default for " + v->key : it->second;
    throw ConfigError(where + ": " + v->message);
  }
  return cfg;
}

TrainConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string format_config(const TrainConfig& c) {
  std::ostringstream out;
  out << "seed = " << c.seed << '\n'
      << "data.sigma = " << format_double(c.data_sigma) << '\n'
      << "dpm.T = " << c.dpm.T << '\n'
      << "dpm.beta_start = " << format_double(c.dpm.beta_start) << '\n'
      << "dpm.beta_end = " << format_double(c.dpm.beta_end) << '\n'
      << "dpm.iters = " << c.dpm.iters << '\n'
      << "dpm.batch = " << c.dpm.batch << '\n'
      << "dpm.lr = " << format_double(c.dpm.adam.lr) << '\n'
      << "dpm.lr_final_scale = " << format_double(c.dpm.lr_final_scale) << '\n'
      << "gan.latent_dim = " << c.gan.latent_dim << '\n'
      << "gan.lr_g = " << format_double(c.gan.adam_g.lr) << '\n'
      << "gan.lr_d = " << format_double(c.gan.adam_d.lr) << '\n'
      << "gan.lr_final_scale = " << format_double(c.gan.lr_final_scale) << '\n'
      << "gan.batch = " << c.gan.batch << '\n'
      << "gan.iters = " << c.gan.iters << '\n'
      << "smart.enabled = " << (c.smart.enabled ? "true" : "false") << '\n'
      << "smart.lambda = " << format_double(c.smart.lambda) << '\n'
      << "smart.t_lo = " << c.smart.t_lo << '\n'
      << "smart.t_hi = " << c.smart.t_hi << '\n'
      << "smart.freq = " << c.smart.freq << '\n'
      << "smart.jacobian = " << (c.smart.jacobian == JacobianMode::full ? "full" : "omit") << '\n'
      << "smart.fresh_latents = " << (c.smart.fresh_latents ? "true" : "false") << '\n'
      << "eval.interval = " << c.eval.interval << '\n'
      << "eval.samples = " << c.eval.samples << '\n'
      << "eval.tau = " << format_double(c.eval.tau) << '\n'
      << "cond.enabled = " << (c.conditional ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace smart
