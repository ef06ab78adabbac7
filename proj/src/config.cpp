#include "ambient/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ambient {

namespace {

enum class Kind { Double, Int, Bool, String, DoubleList, IntList, VectorList };

struct KeySpec {
  Kind kind;
  const char* def;
  const char* choices = nullptr;  // comma-separated, for String keys
};

const std::map<std::string, KeySpec>& schema() {
  static const std::map<std::string, KeySpec> s = {
      {"schedule.kind", {Kind::String, "ve", "ve,vp"}},
      {"schedule.form", {Kind::String, "identity", "identity,paper-vp-anchors,anchors"}},
      {"schedule.T", {Kind::Double, "3.0"}},
      {"schedule.t_n", {Kind::Double, "0.5"}},
      {"schedule.guard", {Kind::Double, "1e-10"}},
      {"schedule.anchors", {Kind::VectorList, ""}},
      {"mixture.preset", {Kind::String, "m1", "m1,m2,ring8,custom,none"}},
      {"mixture.dim", {Kind::Int, "1"}},
      {"mixture.weights", {Kind::DoubleList, ""}},
      {"mixture.means", {Kind::VectorList, ""}},
      {"mixture.variances", {Kind::VectorList, ""}},
      {"net.hidden", {Kind::IntList, "64,64"}},
      {"net.embed_dim", {Kind::Int, "16"}},
      {"net.activation", {Kind::String, "silu", "silu,relu"}},
      {"net.sigma_data", {Kind::Double, "1.0"}},
      {"loss.kind", {Kind::String, "ambient", "dsm,ambient,ambient+consistency"}},
      {"loss.lambda", {Kind::Double, "0.01"}},
      {"loss.eps", {Kind::Double, "-1"}},
      {"loss.chain_steps", {Kind::Int, "8"}},
      {"loss.forward_noise_above_tn", {Kind::Bool, "false"}},
      {"sampler.steps", {Kind::Int, "25"}},
      {"sampler.kind", {Kind::String, "sde", "sde,ddim"}},
      {"sampler.t_start", {Kind::Double, "-1"}},
      {"sampler.t_stop", {Kind::Double, "0"}},
      {"sampler.final_denoise", {Kind::Bool, "false"}},
      {"sampler.seed", {Kind::Int, "0"}},
      {"sampler.n", {Kind::Int, "10000"}},
      {"train.batch_size", {Kind::Int, "256"}},
      {"train.phase2_batch_size", {Kind::Int, "0"}},
      {"train.phase1_steps", {Kind::Int, "2000"}},
      {"train.phase2_steps", {Kind::Int, "0"}},
      {"train.learning_rate", {Kind::Double, "1e-3"}},
      {"train.adam_beta1", {Kind::Double, "0.9"}},
      {"train.adam_beta2", {Kind::Double, "0.999"}},
      {"train.adam_epsilon", {Kind::Double, "1e-8"}},
      {"train.weight_decay", {Kind::Double, "0.01"}},
      {"train.seed", {Kind::Int, "1"}},
      {"train.eval_every", {Kind::Int, "500"}},
      {"train.checkpoint_every", {Kind::Int, "0"}},
      {"train.dataset", {Kind::String, ""}},
      {"train.out_dir", {Kind::String, ""}},
      {"dataset.count", {Kind::Int, "50000"}},
      {"dataset.seed", {Kind::Int, "1"}},
      {"eval.sigma_grid", {Kind::DoubleList, "0.6,1.0,2.0,3.0"}},
      {"eval.n_points", {Kind::Int, "2000"}},
      {"eval.projections", {Kind::Int, "128"}},
      {"eval.attack_sigma", {Kind::Double, "2.0"}},
      {"eval.attack_draws", {Kind::Int, "250"}},
      {"eval.attack_steps", {Kind::Int, "25"}},
  };
  return s;
}

std::string canon_double(const std::string& v) {
  std::size_t pos = 0;
  const double d = std::stod(v, &pos);
  while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
  if (pos != v.size()) throw std::invalid_argument("trailing characters in number '" + v + "'");
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::string canon_int(const std::string& v) {
  std::size_t pos = 0;
  const long long d = std::stoll(v, &pos);
  while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
  if (pos != v.size()) throw std::invalid_argument("trailing characters in integer '" + v + "'");
  return std::to_string(d);
}

std::string canon_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return "true";
  if (v == "false" || v == "0" || v == "no") return "false";
  throw std::invalid_argument("expected boolean, got '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string canon_list(const std::string& v, bool integer) {
  if (trim(v).empty()) return "";
  std::string out;
  for (const auto& part : split(v, ',')) {
    if (!out.empty()) out += ',';
    out += integer ? canon_int(trim(part)) : canon_double(trim(part));
  }
  return out;
}

// Semicolon-separated groups of comma-separated doubles (anchors, means, ...).
std::string canon_vector_list(const std::string& v) {
  if (trim(v).empty()) return "";
  std::string out;
  for (const auto& group : split(v, ';')) {
    if (!out.empty()) out += ';';
    out += canon_list(group, false);
  }
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& [key, spec] : schema()) set(key, spec.def);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = schema().find(key);
  if (it == schema().end()) throw std::invalid_argument("config: unknown key '" + key + "'");
  const KeySpec& spec = it->second;
  std::string canon;
  try {
    switch (spec.kind) {
      case Kind::Double: canon = canon_double(value); break;
      case Kind::Int: canon = canon_int(value); break;
      case Kind::Bool: canon = canon_bool(value); break;
      case Kind::DoubleList: canon = canon_list(value, false); break;
      case Kind::IntList: canon = canon_list(value, true); break;
      case Kind::VectorList: canon = canon_vector_list(value); break;
      case Kind::String: {
        canon = trim(value);
        if (spec.choices) {
          bool ok = false;
          for (const auto& c : split(spec.choices, ',')) ok = ok || c == canon;
          if (!ok)
            throw std::invalid_argument("value '" + canon + "' not in {" + spec.choices + "}");
        }
        break;
      }
    }
  } catch (const std::exception& e) {
    throw std::invalid_argument("config: key '" + key + "': " + e.what());
  }
  values_[key] = canon;
}

RunConfig RunConfig::parse_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

void RunConfig::apply_env() {
  const char* seed = std::getenv("ATW_SEED");
  if (!seed) return;
  for (const auto& [key, spec] : schema()) {
    (void)spec;
    if (key.size() > 5 && key.substr(key.size() - 5) == ".seed") set(key, seed);
  }
}

const std::string& RunConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const { return std::stod(raw(key)); }
long long RunConfig::get_int(const std::string& key) const { return std::stoll(raw(key)); }
bool RunConfig::get_bool(const std::string& key) const { return raw(key) == "true"; }
std::string RunConfig::get_string(const std::string& key) const { return raw(key); }

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  const std::string& v = raw(key);
  if (v.empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(std::stod(part));
  return out;
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  const std::string& v = raw(key);
  if (v.empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(static_cast<int>(std::stoll(part)));
  return out;
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

ScheduleSpec schedule_spec_from(const RunConfig& cfg) {
  ScheduleSpec s;
  s.kind = cfg.get_string("schedule.kind") == "vp" ? ScheduleKind::VP : ScheduleKind::VE;
  s.form = cfg.get_string("schedule.form");
  s.T = cfg.get_double("schedule.T");
  s.t_n = cfg.get_double("schedule.t_n");
  s.guard = cfg.get_double("schedule.guard");
  const std::string anchors = cfg.raw("schedule.anchors");
  if (!anchors.empty()) {
    for (const auto& group : split(anchors, ';')) {
      const auto parts = split(group, ',');
      if (parts.size() != 2)
        throw std::invalid_argument("config: schedule.anchors entries must be t,sigma pairs");
      s.anchors.emplace_back(std::stod(parts[0]), std::stod(parts[1]));
    }
  }
  return s;
}

bool has_mixture(const RunConfig& cfg) { return cfg.get_string("mixture.preset") != "none"; }

GaussianMixture mixture_from(const RunConfig& cfg) {
  const std::string preset = cfg.get_string("mixture.preset");
  if (preset != "custom") return GaussianMixture::preset(preset);
  GaussianMixture g;
  g.dim = static_cast<int>(cfg.get_int("mixture.dim"));
  const auto w = cfg.get_double_list("mixture.weights");
  g.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
  auto parse_rows = [&](const std::string& key) {
    std::vector<std::vector<double>> rows;
    for (const auto& group : split(cfg.raw(key), ';')) {
      std::vector<double> r;
      for (const auto& part : split(group, ',')) r.push_back(std::stod(part));
      rows.push_back(std::move(r));
    }
    Eigen::MatrixXd m(rows.size(), g.dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(rows[i].size()) != g.dim)
        throw std::invalid_argument("config: " + key + " row dimension mismatch");
      for (int j = 0; j < g.dim; ++j) m(i, j) = rows[i][j];
    }
    return m;
  };
  g.means = parse_rows("mixture.means");
  g.variances = parse_rows("mixture.variances");
  g.validate();
  return g;
}

}  // namespace ambient
