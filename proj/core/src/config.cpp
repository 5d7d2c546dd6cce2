// Copyright 2026 The CLPD Authors.
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

#include "clpd/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "clpd/errors.hpp"
#include "clpd/hash.hpp"

extern char** environ;

namespace clpd {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError((path.empty() ? std::string("<root>") : path) + ": " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string join(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

json scalar_to_json(const YAML::Node& n) {
  const std::string& s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "null" || s == "~" || s.empty()) return nullptr;
  if (s == "true") return true;
  if (s == "false") return false;
  {
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && p == s.data() + s.size()) return v;
  }
  {
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    const auto [p, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec == std::errc() && p == s.data() + s.size() && std::isfinite(v)) return v;
  }
  return s;
}

json yaml_to_json(const YAML::Node& n, const std::string& path) {
  switch (n.Type()) {
    case YAML::NodeType::Undefined:
    case YAML::NodeType::Null:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(n);
    case YAML::NodeType::Sequence: {
      json out = json::array();
      std::size_t i = 0;
      for (const auto& item : n) {
        out.push_back(yaml_to_json(item, join(path, i)));
        ++i;
      }
      return out;
    }
    case YAML::NodeType::Map: {
      json out = json::object();
      for (const auto& kv : n) {
        if (!kv.first.IsScalar()) fail(path, "mapping keys must be scalars");
        const std::string key = kv.first.Scalar();
        if (out.contains(key)) fail(join(path, key), "duplicate key");
        out[key] = yaml_to_json(kv.second, join(path, key));
      }
      return out;
    }
  }
  return nullptr;
}

json parse_yaml(const std::string& text, const std::string& what) {
  try {
    return yaml_to_json(YAML::Load(text), "");
  } catch (const YAML::Exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

bool is_index(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

void apply_override(json& root, const std::string& name, const std::string& value) {
  const std::string body = name.substr(std::string(kEnvPrefix).size());
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = body.find("__", pos);
    parts.push_back(body.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) break;
    pos = next + 2;
  }
  json* node = &root;
  std::string path;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    if (p.empty()) fail(name, "empty path component in override");
    if (node->is_array()) {
      if (!is_index(p)) fail(name, "'" + path + "' is a list; expected an index, got '" + p + "'");
      const std::size_t idx = std::stoul(p);
      if (idx >= node->size()) fail(name, "index " + p + " out of range for '" + path + "'");
      node = &(*node)[idx];
      path = join(path, idx);
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) fail(name, "'" + path + "' is not a mapping");
      node = &(*node)[p];
      path = join(path, p);
    }
  }
  *node = parse_yaml(value, name);
}

// Path-tracking reader over one JSON object. Every key must be consumed or
// the object is rejected, so typos never pass silently.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected a mapping");
  }

  const std::string& path() const { return path_; }
  // Marks the key as known; explicit nulls count as absent.
  bool has(const std::string& key) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    return !j_.at(key).is_null();
  }
  const json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string sub(const std::string& key) const { return join(path_, key); }

  void read_double(const std::string& key, double& out, double lo, double hi) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number()) fail(sub(key), "expected a number");
    out = v.get<double>();
    if (!(out >= lo && out <= hi)) fail(sub(key), "must lie in [" + fmt(lo) + ", " + fmt(hi) + "]");
  }
  template <typename I>
  void read_int(const std::string& key, I& out, std::int64_t lo) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_integer()) fail(sub(key), "expected an integer");
    const std::int64_t x = v.get<std::int64_t>();
    if (x < lo) fail(sub(key), "must be >= " + std::to_string(lo));
    out = static_cast<I>(x);
  }
  void read_bool(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_boolean()) fail(sub(key), "expected true or false");
    out = v.get<bool>();
  }
  void read_string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_string()) fail(sub(key), "expected a string");
    out = v.get<std::string>();
  }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) fail(join(path_, k), "unknown key");
    }
  }

 private:
  static std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Runs a name parser, re-throwing its ConfigError with the field path.
template <typename F>
auto named(const std::string& path, const json& v, F&& parse) {
  if (!v.is_string()) fail(path, "expected a string");
  try {
    return parse(v.get<std::string>());
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
}

std::vector<double> read_doubles(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(join(path, i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

void check_fractions(const std::vector<double>& f, const std::string& path) {
  if (f.empty()) fail(path, "must not be empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!(f[i] > 0.0)) fail(join(path, i), "must be > 0");
    sum += f[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(path, "must sum to 1");
}

OptimConfig read_optim(Obj o, OptimConfig base) {
  if (o.has("method")) base.method = named(o.sub("method"), o.at("method"), [](const std::string& s) { return parse_optim(s); });
  o.read_double("lr", base.lr, 0.0, 1e6);
  o.read_double("momentum", base.momentum, 0.0, 1.0);
  o.read_double("beta1", base.beta1, 0.0, 1.0);
  o.read_double("beta2", base.beta2, 0.0, 1.0);
  o.read_double("eps", base.eps, 0.0, 1.0);
  o.read_double("weight_decay", base.weight_decay, 0.0, 1e6);
  o.read_double("clip", base.clip, -1e300, 1e300);
  o.finish();
  return base;
}

json optim_json(const OptimConfig& o) {
  return {{"method", std::string(to_string(o.method))}, {"lr", o.lr}, {"momentum", o.momentum}, {"beta1", o.beta1},
          {"beta2", o.beta2}, {"eps", o.eps}, {"weight_decay", o.weight_decay}, {"clip", o.clip}};
}

ExperimentConfig from_json(const json& root, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  Obj top(root, "");

  {
    std::string out = cfg.output_dir.string();
    top.read_string("output_dir", out);
    if (out.empty()) fail("output_dir", "must not be empty");
    cfg.output_dir = out;
  }

  if (top.has("seeds")) {
    const json& v = top.at("seeds");
    if (!v.is_array()) fail("seeds", "expected a list of integers");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < 0) fail(join("seeds", i), "expected an integer >= 0");
      cfg.seeds.push_back(v[i].get<std::uint64_t>());
    }
  }
  if (cfg.seeds.empty()) fail("seeds", "must not be empty");

  top.read_double("tau", cfg.tau, 0.0, 1.0);
  if (top.has("estimator")) cfg.estimator = named("estimator", top.at("estimator"), [](const std::string& s) { return parse_estimator(s); });
  if (top.has("loss")) cfg.loss = named("loss", top.at("loss"), [](const std::string& s) { return parse_loss(s); });
  if (top.has("fractions")) {
    cfg.fractions = read_doubles(top.at("fractions"), "fractions");
    check_fractions(*cfg.fractions, "fractions");
  }

  // dataset
  if (top.has("dataset")) {
    Obj d(top.at("dataset"), "dataset");
    GenConfig& g = cfg.dataset.gen;
    d.read_int("n", g.n, 3);
    d.read_int("min_steps", g.min_steps, 1);
    d.read_int("max_steps", g.max_steps, 1);
    d.read_int("operand_min", g.lo, -999);
    d.read_int("operand_max", g.hi, -999);
    d.read_int("multiplier_min", g.mul_lo, -999);
    d.read_int("multiplier_max", g.mul_hi, -999);
    d.read_int("limit", g.limit, 1);
    d.read_int("seed", g.seed, 0);
    d.read_int("split_seed", cfg.dataset.split_seed, 0);
    if (d.has("split")) {
      const auto f = read_doubles(d.at("split"), "dataset.split");
      if (f.size() != 3) fail("dataset.split", "expected [train, validation, test]");
      check_fractions(f, "dataset.split");
      cfg.dataset.split = {f[0], f[1], f[2]};
    }
    d.finish();
    if (g.min_steps > g.max_steps) fail("dataset.max_steps", "must be >= min_steps");
    if (g.lo > g.hi) fail("dataset.operand_max", "must be >= operand_min");
    if (g.mul_lo > g.mul_hi) fail("dataset.multiplier_max", "must be >= multiplier_min");
  }

  // model
  cfg.model.vocab_size = Vocabulary::standard().size();
  if (top.has("model")) {
    Obj m(top.at("model"), "model");
    if (m.has("arch")) cfg.model.arch = named("model.arch", m.at("arch"), [](const std::string& s) { return parse_arch(s); });
    m.read_int("embed_dim", cfg.model.embed_dim, 1);
    m.read_int("hidden_dim", cfg.model.hidden_dim, 1);
    m.read_int("num_layers", cfg.model.num_layers, 1);
    m.read_int("context_len", cfg.model.context_len, 1);
    m.read_bool("attention_readout", cfg.model.attention_readout);
    m.finish();
    try {
      cfg.model.validate();
    } catch (const ConfigError& e) {
      fail("model", e.what());
    }
  }

  // teachers
  if (!top.has("teachers")) fail("teachers", "required");
  {
    const json& ts = top.at("teachers");
    if (!ts.is_array() || ts.empty()) fail("teachers", "expected a non-empty list");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string path = join("teachers", i);
      Obj t(ts[i], path);
      TeacherSpec spec;
      t.read_string("id", spec.id);
      if (spec.id.empty()) fail(t.sub("id"), "required");
      if (spec.id.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
          std::string::npos) {
        fail(t.sub("id"), "use letters, digits, '_' and '-' only");
      }
      if (!ids.insert(spec.id).second) fail(t.sub("id"), "duplicate teacher id '" + spec.id + "'");
      std::string kind = "oracle";
      t.read_string("kind", kind);
      if (kind == "oracle") {
        spec.kind = TeacherKind::kOracle;
        CompetenceProfile p;
        if (!t.has("accuracy_by_steps")) fail(t.sub("accuracy_by_steps"), "required for oracle teachers");
        const json& acc = t.at("accuracy_by_steps");
        if (!acc.is_object() || acc.empty()) fail(t.sub("accuracy_by_steps"), "expected a mapping step_count -> accuracy");
        for (const auto& [k, v] : acc.items()) {
          const std::string kp = join(t.sub("accuracy_by_steps"), k);
          if (!is_index(k)) fail(kp, "keys must be step counts");
          if (!v.is_number()) fail(kp, "expected a number");
          p.accuracy_by_steps[std::stoi(k)] = v.get<double>();
        }
        t.read_int("verbosity", p.verbosity, 0);
        t.read_double("style_noise", p.style_noise, 0.0, 1.0);
        try {
          p.validate();
        } catch (const ConfigError& e) {
          fail(path, e.what());
        }
        for (int k = cfg.dataset.gen.min_steps; k <= cfg.dataset.gen.max_steps; ++k) {
          if (!p.accuracy_by_steps.count(k)) {
            fail(t.sub("accuracy_by_steps"), "no accuracy for step count " + std::to_string(k));
          }
        }
        spec.profile = p;
        for (const char* k : {"path", "exposes_distribution", "max_len"}) {
          if (t.has(k)) fail(t.sub(k), "only valid for checkpoint teachers");
        }
      } else if (kind == "checkpoint") {
        spec.kind = TeacherKind::kCheckpoint;
        t.read_string("path", spec.checkpoint_ref);
        if (spec.checkpoint_ref.empty()) fail(t.sub("path"), "required for checkpoint teachers");
        spec.checkpoint = std::filesystem::path(spec.checkpoint_ref).is_absolute()
                              ? std::filesystem::path(spec.checkpoint_ref)
                              : base_dir / spec.checkpoint_ref;
        if (!std::filesystem::is_regular_file(spec.checkpoint)) {
          fail(t.sub("path"), "file not found: " + spec.checkpoint.string());
        }
        spec.checkpoint_sha256 = sha256_file(spec.checkpoint);
        t.read_bool("exposes_distribution", spec.exposes_distribution);
        t.read_int("max_len", spec.max_len, 1);
        for (const char* k : {"accuracy_by_steps", "verbosity", "style_noise"}) {
          if (t.has(k)) fail(t.sub(k), "only valid for oracle teachers");
        }
      } else {
        fail(t.sub("kind"), "expected 'oracle' or 'checkpoint', got '" + kind + "'");
      }
      t.finish();
      cfg.teachers.push_back(std::move(spec));
    }
  }
  auto known_teacher = [&](const std::string& id) {
    for (const auto& t : cfg.teachers) {
      if (t.id == id) return true;
    }
    return false;
  };

  // training
  if (top.has("training")) {
    Obj tr(top.at("training"), "training");
    TrainingSpec& t = cfg.training;
    tr.read_int("epochs", t.epochs, 0);
    tr.read_int("batch_size", t.batch_size, 1);
    if (tr.has("optimizer")) t.optim = read_optim(Obj(tr.at("optimizer"), "training.optimizer"), t.optim);
    tr.read_bool("shuffle", t.shuffle);
    tr.read_bool("dynamic_rerank", t.dynamic_rerank);
    tr.read_int("decode_max_len", t.decode_max_len, 1);
    tr.read_int("stage_eval_examples", t.stage_eval_examples, 0);
    tr.read_int("alignment_examples", t.alignment_examples, 0);
    if (tr.has("warm_start")) {
      Obj w(tr.at("warm_start"), "training.warm_start");
      w.read_int("steps", t.warm_start_steps, 0);
      w.read_int("batch_size", t.warm_start_batch, 1);
      if (w.has("optimizer")) t.warm_start_optim = read_optim(Obj(w.at("optimizer"), "training.warm_start.optimizer"), t.optim);
      w.finish();
    }
    tr.finish();
  }

  // variants
  if (top.has("variants")) {
    const json& vs = top.at("variants");
    if (!vs.is_array() || vs.empty()) fail("variants", "expected a non-empty list");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const std::string path = join("variants", i);
      VariantSpec v = named(path, vs[i], [](const std::string& s) { return parse_variant_spec(s); });
      if (v.teacher && !known_teacher(*v.teacher)) fail(path, "unknown teacher '" + *v.teacher + "'");
      cfg.variants.push_back(v);
    }
  } else {
    for (Variant v : {Variant::kVanilla, Variant::kClOnly, Variant::kPdOnly, Variant::kClpd, Variant::kClpdRt,
                      Variant::kClpdRd}) {
      cfg.variants.push_back({v, std::nullopt});
    }
  }

  // sweep
  if (top.has("sweep")) {
    Obj s(top.at("sweep"), "sweep");
    if (s.has("weak_shares")) {
      cfg.sweep.weak_shares = read_doubles(s.at("weak_shares"), "sweep.weak_shares");
      if (cfg.sweep.weak_shares.empty()) fail("sweep.weak_shares", "must not be empty");
      for (std::size_t i = 0; i < cfg.sweep.weak_shares.size(); ++i) {
        const double w = cfg.sweep.weak_shares[i];
        if (!(w > 0.0 && w < 1.0)) fail(join("sweep.weak_shares", i), "must lie in (0, 1)");
      }
    }
    s.finish();
  }

  // table1
  if (top.has("table1")) {
    Obj t(top.at("table1"), "table1");
    t.read_double("fraction", cfg.table1.fraction, 1e-9, 1.0);
    t.read_int("epochs", cfg.table1.epochs, 0);
    t.finish();
  }

  top.finish();
  return cfg;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["output_dir"] = c.output_dir.generic_string();
  j["seeds"] = c.seeds;
  j["tau"] = c.tau;
  j["estimator"] = std::string(to_string(c.estimator));
  j["loss"] = std::string(to_string(c.loss));
  j["fractions"] = c.fractions ? json(*c.fractions) : json(nullptr);
  const GenConfig& g = c.dataset.gen;
  j["dataset"] = {{"n", g.n},
                  {"min_steps", g.min_steps},
                  {"max_steps", g.max_steps},
                  {"operand_min", g.lo},
                  {"operand_max", g.hi},
                  {"multiplier_min", g.mul_lo},
                  {"multiplier_max", g.mul_hi},
                  {"limit", g.limit},
                  {"seed", g.seed},
                  {"split", c.dataset.split},
                  {"split_seed", c.dataset.split_seed}};
  j["model"] = {{"arch", std::string(to_string(c.model.arch))},
                {"embed_dim", c.model.embed_dim},
                {"hidden_dim", c.model.hidden_dim},
                {"num_layers", c.model.num_layers},
                {"context_len", c.model.context_len},
                {"attention_readout", c.model.attention_readout}};
  json ts = json::array();
  for (const auto& t : c.teachers) {
    json tj = {{"id", t.id}, {"kind", std::string(to_string(t.kind))}};
    if (t.kind == TeacherKind::kOracle) {
      json acc = json::object();
      for (const auto& [k, v] : t.profile->accuracy_by_steps) acc[std::to_string(k)] = v;
      tj["accuracy_by_steps"] = acc;
      tj["verbosity"] = t.profile->verbosity;
      tj["style_noise"] = t.profile->style_noise;
    } else {
      tj["path"] = t.checkpoint_ref;
      tj["sha256"] = t.checkpoint_sha256;
      tj["exposes_distribution"] = t.exposes_distribution;
      tj["max_len"] = t.max_len;
    }
    ts.push_back(tj);
  }
  j["teachers"] = ts;
  const TrainingSpec& t = c.training;
  j["training"] = {{"epochs", t.epochs},
                   {"batch_size", t.batch_size},
                   {"optimizer", optim_json(t.optim)},
                   {"shuffle", t.shuffle},
                   {"dynamic_rerank", t.dynamic_rerank},
                   {"decode_max_len", t.decode_max_len},
                   {"stage_eval_examples", t.stage_eval_examples},
                   {"alignment_examples", t.alignment_examples},
                   {"warm_start",
                    {{"steps", t.warm_start_steps},
                     {"batch_size", t.warm_start_batch},
                     {"optimizer", optim_json(t.warm_start_optim.value_or(t.optim))}}}};
  json vs = json::array();
  for (const auto& v : c.variants) vs.push_back(variant_label(v));
  j["variants"] = vs;
  j["sweep"] = {{"weak_shares", c.sweep.weak_shares}};
  j["table1"] = {{"fraction", c.table1.fraction}, {"epochs", c.table1.epochs}};
  return j;
}

}  // namespace

std::string variant_label(const VariantSpec& v) {
  std::string s(to_string(v.variant));
  if (v.teacher) s += ":" + *v.teacher;
  return s;
}

VariantSpec parse_variant_spec(const std::string& text) {
  VariantSpec v;
  const auto colon = text.find(':');
  v.variant = parse_variant(text.substr(0, colon));
  if (colon != std::string::npos) {
    const std::string teacher = text.substr(colon + 1);
    if (teacher.empty()) throw ConfigError("empty teacher after ':' in '" + text + "'");
    if (!is_single_teacher(v.variant)) {
      throw ConfigError("variant '" + std::string(to_string(v.variant)) + "' uses the teacher pool; drop ':" +
                        teacher + "'");
    }
    v.teacher = teacher;
  }
  return v;
}

RunConfig ExperimentConfig::run_config(const VariantSpec& v, std::uint64_t seed) const {
  RunConfig rc;
  rc.variant = v.variant;
  rc.estimator = estimator;
  rc.loss = loss;
  rc.epochs = training.epochs;
  rc.batch_size = training.batch_size;
  rc.seed = seed;
  rc.tau = tau;
  rc.fractions = fractions;
  rc.dynamic_rerank = training.dynamic_rerank;
  rc.fixed_teacher_id = v.teacher;
  rc.shuffle = training.shuffle;
  rc.optim = training.optim;
  rc.decode_max_len = training.decode_max_len;
  rc.stage_eval_examples = training.stage_eval_examples;
  return rc;
}

void finalize_config(ExperimentConfig& cfg) {
  cfg.canonical = to_json(cfg).dump();
  cfg.hash = sha256_hex(cfg.canonical);
}

ExperimentConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir,
                              const std::map<std::string, std::string>& env) {
  json root = parse_yaml(yaml_text, "config");
  if (root.is_null()) root = json::object();
  for (const auto& [name, value] : env) {
    if (name.rfind(kEnvPrefix, 0) != 0) continue;
    apply_override(root, name, value);
  }
  ExperimentConfig cfg = from_json(root, base_dir);
  finalize_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& env) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path(), env);
}

std::map<std::string, std::string> config_env_from_process() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv(*e);
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = kv.substr(0, eq);
    if (name.rfind(kEnvPrefix, 0) == 0) out[name] = kv.substr(eq + 1);
  }
  return out;
}

std::vector<Teacher> build_teachers(const ExperimentConfig& cfg) {
  std::vector<Teacher> out;
  for (const auto& t : cfg.teachers) {
    if (t.kind == TeacherKind::kOracle) {
      out.push_back(Teacher::oracle(t.id, *t.profile));
    } else {
      StudentModel m = load_checkpoint(t.checkpoint);
      if (sha256_file(t.checkpoint) != t.checkpoint_sha256) {
        throw ConfigError("teacher '" + t.id + "': checkpoint changed after the config was loaded");
      }
      out.push_back(Teacher::checkpoint(t.id, std::move(m), t.exposes_distribution, t.max_len));
    }
  }
  return out;
}

}  // namespace clpd
