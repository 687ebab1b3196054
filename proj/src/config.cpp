// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include "adnt/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "adnt/errors.hpp"

namespace adnt {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    throw ConfigError("config: " + std::string(key) + " expects a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("config: " + std::string(key) + " expects a non-negative integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: " + std::string(key) + " expects true/false, got '" + std::string(v) + "'");
}

std::vector<double> to_list(std::string_view key, std::string_view v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t comma = v.find(',', start);
    const std::string_view item = trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
    out.push_back(to_double(key, item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

template <class T>
Field number_field(T RunConfig::*member) {
  return {[member](RunConfig& c, std::string_view k, std::string_view v) {
            if constexpr (std::is_floating_point_v<T>) c.*member = to_double(k, v);
            else c.*member = static_cast<T>(to_uint(k, v));
          },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
            else return std::to_string(c.*member);
          }};
}

template <class S, class T>
Field nested_field(S RunConfig::*outer, T S::*member) {
  return {[outer, member](RunConfig& c, std::string_view k, std::string_view v) {
            if constexpr (std::is_floating_point_v<T>) (c.*outer).*member = to_double(k, v);
            else (c.*outer).*member = static_cast<T>(to_uint(k, v));
          },
          [outer, member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double((c.*outer).*member);
            else return std::to_string((c.*outer).*member);
          }};
}

Field bool_field(bool RunConfig::*member) {
  return {[member](RunConfig& c, std::string_view k, std::string_view v) { c.*member = to_bool(k, v); },
          [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

Field list_field(std::vector<double> RunConfig::*member) {
  return {[member](RunConfig& c, std::string_view k, std::string_view v) { c.*member = to_list(k, v); },
          [member](const RunConfig& c) { return format_list(c.*member); }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      {"alpha", number_field(&RunConfig::alpha)},
      {"beta", number_field(&RunConfig::beta)},
      {"tau", nested_field(&RunConfig::arce, &ArceConfig::tau)},
      {"rce_sign",
       {[](RunConfig& c, std::string_view k, std::string_view v) {
          if (v == "negative") c.arce.sign = RceSign::kNegative;
          else if (v == "literal") c.arce.sign = RceSign::kLiteral;
          else throw ConfigError("config: " + std::string(k) + " expects negative|literal");
        },
        [](const RunConfig& c) {
          return std::string(c.arce.sign == RceSign::kNegative ? "negative" : "literal");
        }}},
      {"batch_size", number_field(&RunConfig::batch_size)},
      {"pretrain_epochs", number_field(&RunConfig::pretrain_epochs)},
      {"adapt_epochs", number_field(&RunConfig::adapt_epochs)},
      {"lr_extractor", number_field(&RunConfig::lr_extractor)},
      {"lr_classifier", number_field(&RunConfig::lr_classifier)},
      {"lr_cadm", number_field(&RunConfig::lr_cadm)},
      {"adapt_lr_scale", number_field(&RunConfig::adapt_lr_scale)},
      {"adam_beta1", nested_field(&RunConfig::adam, &AdamConfig::beta1)},
      {"adam_beta2", nested_field(&RunConfig::adam, &AdamConfig::beta2)},
      {"adam_epsilon", nested_field(&RunConfig::adam, &AdamConfig::epsilon)},
      {"weight_decay", nested_field(&RunConfig::adam, &AdamConfig::weight_decay)},
      {"seed", number_field(&RunConfig::seed)},
      {"use_cadm", bool_field(&RunConfig::use_cadm)},
      {"use_contrary", bool_field(&RunConfig::use_contrary)},
      {"use_cr", bool_field(&RunConfig::use_cr)},
      {"use_arce", bool_field(&RunConfig::use_arce)},
      {"centroid_warmup_batches", number_field(&RunConfig::centroid_warmup_batches)},
      {"fusion_identity_init", number_field(&RunConfig::fusion_identity_init)},
      {"feature_scale", nested_field(&RunConfig::dims, &ModelDims::feature_scale)},
      {"hidden_dim", nested_field(&RunConfig::dims, &ModelDims::hidden_dim)},
      {"feature_dim", nested_field(&RunConfig::dims, &ModelDims::feature_dim)},
      {"bottleneck_dim", nested_field(&RunConfig::dims, &ModelDims::bottleneck_dim)},
      {"data_file",
       {[](RunConfig& c, std::string_view, std::string_view v) { c.data_file = std::string(v); },
        [](const RunConfig& c) { return c.data_file; }}},
      {"num_classes", nested_field(&RunConfig::synthetic, &SyntheticConfig::num_classes)},
      {"num_sources", nested_field(&RunConfig::synthetic, &SyntheticConfig::num_sources)},
      {"samples_per_class", nested_field(&RunConfig::synthetic, &SyntheticConfig::samples_per_class)},
      {"input_dim", nested_field(&RunConfig::synthetic, &SyntheticConfig::input_dim)},
      {"separation", nested_field(&RunConfig::synthetic, &SyntheticConfig::separation)},
      {"data_seed", nested_field(&RunConfig::synthetic, &SyntheticConfig::seed)},
      {"rotation_min_deg", nested_field(&RunConfig::synthetic, &SyntheticConfig::rotation_min_deg)},
      {"rotation_max_deg", nested_field(&RunConfig::synthetic, &SyntheticConfig::rotation_max_deg)},
      {"translation_scale", nested_field(&RunConfig::synthetic, &SyntheticConfig::translation_scale)},
      {"noise_sigma", nested_field(&RunConfig::synthetic, &SyntheticConfig::noise_sigma)},
      {"sweep_alpha", list_field(&RunConfig::sweep_alpha)},
      {"sweep_beta", list_field(&RunConfig::sweep_beta)},
      {"sweep_tau", list_field(&RunConfig::sweep_tau)},
  };
  return table;
}

void check_rate(const char* name, double v) {
  if (!(v > 0.0 && v <= 1.0)) {
    throw ConfigError(std::string("config: ") + name + " must be in (0, 1], got " + format_double(v));
  }
}

void check_positive(const char* name, double v) {
  if (!(v > 0.0)) throw ConfigError(std::string("config: ") + name + " must be positive");
}

}  // namespace

void RunConfig::validate() const {
  check_rate("alpha", alpha);
  check_rate("beta", beta);
  arce.validate();
  if (batch_size == 0) throw ConfigError("config: batch_size must be positive");
  if (data_file.empty() && batch_size % (synthetic.num_sources + 1) != 0) {
    throw ConfigError("config: batch_size " + std::to_string(batch_size) +
                      " is not divisible by num_sources + 1 = " + std::to_string(synthetic.num_sources + 1));
  }
  check_positive("lr_extractor", lr_extractor);
  check_positive("lr_classifier", lr_classifier);
  check_positive("lr_cadm", lr_cadm);
  check_positive("adapt_lr_scale", adapt_lr_scale);
  if (!(fusion_identity_init >= 0.0)) throw ConfigError("config: fusion_identity_init must be >= 0");
  if (!(dims.feature_scale >= 0.0) || !std::isfinite(dims.feature_scale)) {
    throw ConfigError("config: feature_scale must be finite and >= 0");
  }
  if (adam.weight_decay < 0.0) throw ConfigError("config: weight_decay must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("config: adam_beta1 and adam_beta2 must be in [0, 1)");
  }
  check_positive("adam_epsilon", adam.epsilon);
  if (dims.hidden_dim == 0 || dims.feature_dim == 0 || dims.bottleneck_dim == 0) {
    throw ConfigError("config: layer widths must be positive");
  }
  synthetic.validate();
  for (double a : sweep_alpha) check_rate("sweep_alpha", a);
  for (double b : sweep_beta) check_rate("sweep_beta", b);
  for (double t : sweep_tau) check_positive("sweep_tau", t);
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string_view line = text.substr(start, end == text.npos ? text.npos : end - start);
    start = end == text.npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == line.npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
    it->second.set(config, key, value);
  }
  config.dims.input_dim = config.synthetic.input_dim;
  config.dims.num_classes = config.synthetic.num_classes;
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) {
    out += key + " = " + field.get(config) + "\n";
  }
  return out;
}

}  // namespace adnt
