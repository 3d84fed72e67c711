// Copyright 2026 The affuq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "affuq/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <set>

namespace affuq
{

using nlohmann::json;

namespace
{

class TomlReader
{
public:
  TomlReader(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  json parse()
  {
    json root = json::object();
    json * table = &root;
    std::size_t start = 0;
    while (start <= text_.size()) {
      std::size_t end = text_.find('\n', start);
      if (end == std::string_view::npos) {
        end = text_.size();
      }
      ++line_;
      line_text_ = text_.substr(start, end - start);
      pos_ = 0;
      skip_ws();
      if (!at_end() && peek() != '#') {
        if (peek() == '[') {
          table = &open_table(root);
        } else {
          parse_key_value(*table);
        }
      }
      start = end + 1;
    }
    return root;
  }

private:
  [[noreturn]] void fail(const std::string & what) const
  {
    throw Error(ErrorKind::kParse, source_ + ":" + std::to_string(line_) + ": " + what);
  }

  bool at_end() const { return pos_ >= line_text_.size(); }
  char peek() const { return line_text_[pos_]; }
  void skip_ws()
  {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) {
      ++pos_;
    }
  }
  void expect_line_end()
  {
    skip_ws();
    if (!at_end() && peek() != '#') {
      fail("unexpected trailing characters");
    }
  }

  std::string parse_key()
  {
    skip_ws();
    const std::size_t begin = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
      ++pos_;
    }
    if (pos_ == begin) {
      fail("expected a key");
    }
    return std::string(line_text_.substr(begin, pos_ - begin));
  }

  json & open_table(json & root)
  {
    ++pos_;  // '['
    json * node = &root;
    while (true) {
      const std::string key = parse_key();
      json & child = (*node)[key];
      if (child.is_null()) {
        child = json::object();
      } else if (!child.is_object()) {
        fail("table '" + key + "' clashes with a value");
      }
      node = &child;
      skip_ws();
      if (!at_end() && peek() == '.') {
        ++pos_;
        continue;
      }
      break;
    }
    if (at_end() || peek() != ']') {
      fail("expected ']'");
    }
    ++pos_;
    expect_line_end();
    return *node;
  }

  void parse_key_value(json & table)
  {
    const std::string key = parse_key();
    skip_ws();
    if (at_end() || peek() != '=') {
      fail("expected '=' after key '" + key + "'");
    }
    ++pos_;
    if (table.contains(key)) {
      fail("duplicate key '" + key + "'");
    }
    table[key] = parse_value();
    expect_line_end();
  }

  json parse_value()
  {
    skip_ws();
    if (at_end()) {
      fail("missing value");
    }
    const char c = peek();
    if (c == '"') {
      return parse_string();
    }
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      skip_ws();
      if (!at_end() && peek() == ']') {
        ++pos_;
        return arr;
      }
      while (true) {
        arr.push_back(parse_value());
        skip_ws();
        if (at_end()) {
          fail("unterminated array");
        }
        if (peek() == ',') {
          ++pos_;
          skip_ws();
          if (!at_end() && peek() == ']') {
            ++pos_;
            return arr;
          }
          continue;
        }
        if (peek() == ']') {
          ++pos_;
          return arr;
        }
        fail("expected ',' or ']' in array");
      }
    }
    const std::size_t begin = pos_;
    while (!at_end() && peek() != ',' && peek() != ']' && peek() != '#' && peek() != ' ' && peek() != '\t' &&
           peek() != '\r') {
      ++pos_;
    }
    std::string token(line_text_.substr(begin, pos_ - begin));
    if (token == "true") {
      return true;
    }
    if (token == "false") {
      return false;
    }
    std::erase(token, '_');
    const bool is_float = token.find_first_of(".eE") != std::string::npos || token == "inf" || token == "nan";
    const char * first = token.data() + (token.starts_with('+') ? 1 : 0);
    const char * last = token.data() + token.size();
    if (is_float) {
      double v = 0.0;
      const auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc() || res.ptr != last) {
        fail("invalid number '" + token + "'");
      }
      return v;
    }
    long long v = 0;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
      fail("invalid value '" + token + "'");
    }
    return v;
  }

  json parse_string()
  {
    ++pos_;  // opening quote
    std::string out;
    while (!at_end() && peek() != '"') {
      char c = peek();
      ++pos_;
      if (c == '\\') {
        if (at_end()) {
          fail("unterminated escape");
        }
        const char e = peek();
        ++pos_;
        switch (e) {
          case 'n':
            c = '\n';
            break;
          case 't':
            c = '\t';
            break;
          case '"':
          case '\\':
            c = e;
            break;
          default:
            fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (at_end()) {
      fail("unterminated string");
    }
    ++pos_;
    return out;
  }

  std::string_view text_;
  std::string source_;
  std::string_view line_text_;
  std::size_t pos_{0};
  std::size_t line_{0};
};

[[noreturn]] void config_error(const std::string & what) { throw Error(ErrorKind::kInvalidArgument, "config: " + what); }

double number(const json & v, const std::string & key)
{
  if (!v.is_number()) {
    config_error("'" + key + "' must be a number");
  }
  return v.get<double>();
}

long long integer(const json & v, const std::string & key)
{
  if (!v.is_number_integer()) {
    config_error("'" + key + "' must be an integer");
  }
  return v.get<long long>();
}

std::string string(const json & v, const std::string & key)
{
  if (!v.is_string()) {
    config_error("'" + key + "' must be a string");
  }
  return v.get<std::string>();
}

bool boolean(const json & v, const std::string & key)
{
  if (!v.is_boolean()) {
    config_error("'" + key + "' must be a boolean");
  }
  return v.get<bool>();
}

std::pair<long long, long long> int_pair(const json & v, const std::string & key)
{
  if (!v.is_array() || v.size() != 2) {
    config_error("'" + key + "' must be a two-element array");
  }
  return {integer(v[0], key), integer(v[1], key)};
}

std::uint64_t parse_seed(const std::string & text, const std::string & origin)
{
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    config_error(origin + " seed '" + text + "' is not a non-negative integer");
  }
  return v;
}

}  // namespace

json parse_toml(std::string_view text, const std::string & source) { return TomlReader(text, source).parse(); }

json load_config_file(const std::string & path)
{
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool is_json = path.ends_with(".json") || (first != std::string::npos && text[first] == '{');
  json doc = is_json ? parse_json_text(text, path) : parse_toml(text, path);
  if (!doc.is_object()) {
    throw Error(ErrorKind::kInvalidArgument, "config '" + path + "' must be a table/object");
  }
  return doc;
}

SimConfig sim_config_from_json(const json & doc)
{
  if (!doc.is_object()) {
    config_error("expected a table");
  }
  SimConfig cfg;
  for (const auto & [key, v] : doc.items()) {
    if (key == "fuse" || key == "eval") {
      continue;
    } else if (key == "seed") {
      const long long s = integer(v, key);
      if (s < 0) {
        config_error("'seed' must be non-negative");
      }
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "image_extent") {
      const auto [r, c] = int_pair(v, key);
      cfg.image_extent = {static_cast<int>(r), static_cast<int>(c)};
    } else if (key == "n_frames") {
      cfg.n_frames = static_cast<int>(integer(v, key));
    } else if (key == "instances") {
      const auto [lo, hi] = int_pair(v, key);
      cfg.instances_min = static_cast<int>(lo);
      cfg.instances_max = static_cast<int>(hi);
    } else if (key == "n_classes") {
      cfg.n_classes = static_cast<int>(integer(v, key));
    } else if (key == "passes") {
      cfg.passes = static_cast<int>(integer(v, key));
    } else if (key == "regime") {
      cfg.regime = regime_from_string(string(v, key));
    } else if (key == "correlation") {
      cfg.correlation = number(v, key);
    } else if (key == "dropout_rate") {
      cfg.dropout_rate = number(v, key);
    } else if (key == "mask_scale") {
      cfg.mask_scale = number(v, key);
    } else if (key == "mask_units") {
      cfg.mask_units = static_cast<int>(integer(v, key));
    } else if (key == "logit_scale") {
      cfg.logit_scale = number(v, key);
    } else if (key == "min_size") {
      cfg.min_size = static_cast<int>(integer(v, key));
    } else if (key == "max_size") {
      cfg.max_size = static_cast<int>(integer(v, key));
    } else if (key == "max_gt_iou") {
      cfg.max_gt_iou = number(v, key);
    } else if (key == "background_class") {
      cfg.background_class = boolean(v, key);
    } else if (key == "noise") {
      if (!v.is_object()) {
        config_error("'noise' must be a table");
      }
      for (const auto & [nk, nv] : v.items()) {
        const std::string full = "noise." + nk;
        if (nk == "bbox_sigma") {
          cfg.noise.bbox_sigma = number(nv, full);
        } else if (nk == "logit_sigma") {
          cfg.noise.logit_sigma = number(nv, full);
        } else if (nk == "mask_flip_rate") {
          cfg.noise.mask_flip_rate = number(nv, full);
        } else if (nk == "miss_rate") {
          cfg.noise.miss_rate = number(nv, full);
        } else if (nk == "mask_blur") {
          cfg.noise.mask_blur = number(nv, full);
        } else {
          config_error("unknown key '" + full + "'");
        }
      }
    } else {
      config_error("unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

json sim_config_to_json(const SimConfig & cfg)
{
  return {
    {"seed", cfg.seed},
    {"image_extent", json::array({cfg.image_extent.rows, cfg.image_extent.cols})},
    {"n_frames", cfg.n_frames},
    {"instances", json::array({cfg.instances_min, cfg.instances_max})},
    {"n_classes", cfg.n_classes},
    {"passes", cfg.passes},
    {"regime", to_string(cfg.regime)},
    {"correlation", cfg.correlation},
    {"dropout_rate", cfg.dropout_rate},
    {"mask_scale", cfg.mask_scale},
    {"mask_units", cfg.mask_units},
    {"logit_scale", cfg.logit_scale},
    {"min_size", cfg.min_size},
    {"max_size", cfg.max_size},
    {"max_gt_iou", cfg.max_gt_iou},
    {"background_class", cfg.background_class},
    {"noise",
     {{"bbox_sigma", cfg.noise.bbox_sigma},
      {"logit_sigma", cfg.noise.logit_sigma},
      {"mask_flip_rate", cfg.noise.mask_flip_rate},
      {"miss_rate", cfg.noise.miss_rate},
      {"mask_blur", cfg.noise.mask_blur}}}};
}

void apply_seed_overrides(SimConfig & cfg, std::optional<std::uint64_t> flag_seed)
{
  if (flag_seed) {
    cfg.seed = *flag_seed;
    return;
  }
  if (const char * env = std::getenv(kSeedEnvVar); env != nullptr && *env != '\0') {
    cfg.seed = parse_seed(env, kSeedEnvVar);
  }
}

json eval_settings_to_json(const EvalSettings & s)
{
  return {
    {"epsilon", s.pmq.epsilon},
    {"detection_floor", s.pmq.detection_floor},
    {"match_floor", s.pmq.match_floor},
    {"resampling", s.pmq.resampling == Resampling::kBilinear ? "bilinear" : "nearest"},
    {"n_bins", s.n_bins},
    {"sparsification_steps", s.sparsification.n_steps},
    {"sparsification_f_max", s.sparsification.f_max}};
}

FuseSettings fuse_settings_from_config(const json & doc)
{
  FuseSettings s;
  const auto it = doc.find("fuse");
  if (it == doc.end()) {
    return s;
  }
  for (const auto & [key, v] : it->items()) {
    const std::string full = "fuse." + key;
    if (key == "iou_threshold") {
      s.clustering.iou_threshold = number(v, full);
    } else if (key == "bin_threshold") {
      s.clustering.bin_threshold = number(v, full);
    } else if (key == "ordering") {
      const std::string o = string(v, full);
      if (o != "by-confidence-desc" && o != "by-input-order") {
        config_error("'" + full + "' must be by-confidence-desc or by-input-order");
      }
      s.clustering.ordering = o == "by-input-order" ? ClusterOrdering::kByInputOrder : ClusterOrdering::kByConfidenceDesc;
    } else if (key == "linkage") {
      const std::string l = string(v, full);
      if (l != "representative" && l != "first-member") {
        config_error("'" + full + "' must be representative or first-member");
      }
      s.clustering.linkage = l == "first-member" ? ClusterLinkage::kFirstMember : ClusterLinkage::kRepresentative;
    } else if (key == "one_per_pass") {
      s.clustering.one_per_pass = boolean(v, full);
    } else if (key == "avg_denominator") {
      const std::string d = string(v, full);
      if (d != "k" && d != "M") {
        config_error("'" + full + "' must be k or M");
      }
      s.fusion.denominator = d == "M" ? AveragingDenominator::kPassCount : AveragingDenominator::kMemberCount;
    } else if (key == "resampling") {
      const std::string r = string(v, full);
      if (r != "bilinear" && r != "nearest") {
        config_error("'" + full + "' must be bilinear or nearest");
      }
      s.clustering.resampling = r == "nearest" ? Resampling::kNearest : Resampling::kBilinear;
      s.fusion.resampling = s.clustering.resampling;
    } else {
      config_error("unknown key '" + full + "'");
    }
  }
  s.clustering.validate();
  return s;
}

EvalSettings eval_settings_from_config(const json & doc)
{
  EvalSettings s;
  const auto it = doc.find("eval");
  if (it == doc.end()) {
    return s;
  }
  for (const auto & [key, v] : it->items()) {
    const std::string full = "eval." + key;
    if (key == "epsilon") {
      s.pmq.epsilon = number(v, full);
    } else if (key == "detection_floor") {
      s.pmq.detection_floor = number(v, full);
    } else if (key == "n_bins") {
      s.n_bins = static_cast<int>(integer(v, full));
    } else if (key == "sparsification_steps") {
      s.sparsification.n_steps = static_cast<int>(integer(v, full));
    } else if (key == "sparsification_f_max") {
      s.sparsification.f_max = number(v, full);
    } else {
      config_error("unknown key '" + full + "'");
    }
  }
  if (!(s.pmq.epsilon > 0.0 && s.pmq.epsilon < 0.5)) {
    config_error("'eval.epsilon' must lie in (0, 0.5)");
  }
  if (!(s.pmq.detection_floor >= 0.0 && s.pmq.detection_floor < 1.0)) {
    config_error("'eval.detection_floor' must lie in [0, 1)");
  }
  if (s.n_bins < 1) {
    config_error("'eval.n_bins' must be at least 1");
  }
  return s;
}

}  // namespace affuq
