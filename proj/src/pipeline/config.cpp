#include "mvmdlstm/pipeline/config.hpp"

#include "mvmdlstm/error.hpp"

#include <cstdio>
#include <set>

namespace mvmdlstm::pipeline {

using nlohmann::json;

std::string to_string(LeakageProtocol p) { return p == LeakageProtocol::split ? "split" : "rolling"; }
std::string to_string(Aggregation a) { return a == Aggregation::per_source ? "per-source" : "direct"; }

LeakageProtocol protocol_from_string(const std::string& s) {
  if (s == "split") return LeakageProtocol::split;
  if (s == "rolling") return LeakageProtocol::rolling;
  throw ConfigError("protocol must be \"split\" or \"rolling\", got \"" + s + "\"");
}

Aggregation aggregation_from_string(const std::string& s) {
  if (s == "per-source") return Aggregation::per_source;
  if (s == "direct") return Aggregation::direct;
  throw ConfigError("aggregation must be \"per-source\" or \"direct\", got \"" + s + "\"");
}

namespace {

// Reads known keys from one JSON object and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown config key " + where_ + "." + item.key());
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

json to_json(const signal::SynthSpec& spec) {
  json channels = json::array();
  for (const auto& c : spec.channels) {
    json tones = json::array();
    for (const auto& t : c.tones) tones.push_back({{"amplitude", t.amplitude}, {"frequency", t.frequency}, {"phase", t.phase}});
    channels.push_back({{"name", c.name},
                        {"level", c.level},
                        {"tones", tones},
                        {"trend", c.trend},
                        {"diurnal_amplitude", c.diurnal_amplitude},
                        {"noise_std", c.noise_std}});
  }
  return {{"n_samples", spec.n_samples}, {"dt", spec.dt}, {"seed", spec.seed}, {"channels", channels}};
}

signal::SynthSpec synth_spec_from_json(const json& j) {
  signal::SynthSpec spec = signal::default_fixture_spec();
  Reader r(j, "synth");
  r.get("n_samples", spec.n_samples);
  r.get("dt", spec.dt);
  r.get("seed", spec.seed);
  if (const json* chans = r.sub("channels")) {
    if (!chans->is_array()) throw ConfigError("synth.channels: expected an array");
    spec.channels.clear();
    for (const auto& cj : *chans) {
      signal::ChannelSynth c;
      Reader cr(cj, "synth.channels[]");
      cr.get("name", c.name);
      cr.get("level", c.level);
      cr.get("trend", c.trend);
      cr.get("diurnal_amplitude", c.diurnal_amplitude);
      cr.get("noise_std", c.noise_std);
      if (const json* tones = cr.sub("tones")) {
        if (!tones->is_array()) throw ConfigError("synth.channels[].tones: expected an array");
        for (const auto& tj : *tones) {
          signal::Tone t;
          Reader tr(tj, "synth.channels[].tones[]");
          tr.get("amplitude", t.amplitude);
          tr.get("frequency", t.frequency);
          tr.get("phase", t.phase);
          tr.finish();
          c.tones.push_back(t);
        }
      }
      cr.finish();
      spec.channels.push_back(std::move(c));
    }
  }
  r.finish();
  signal::validate(spec);
  return spec;
}

json to_json(const mvmd::MvmdConfig& cfg) {
  return {{"modes", cfg.modes}, {"alpha", cfg.alpha},         {"tau", cfg.tau},
          {"tol", cfg.tol},     {"max_iter", cfg.max_iter}, {"omega_init", mvmd::to_string(cfg.omega_init)},
          {"seed", cfg.seed}};
}

mvmd::MvmdConfig mvmd_config_from_json(const json& j, mvmd::MvmdConfig cfg) {
  Reader r(j, "mvmd");
  r.get("modes", cfg.modes);
  r.get("alpha", cfg.alpha);
  r.get("tau", cfg.tau);
  r.get("tol", cfg.tol);
  r.get("max_iter", cfg.max_iter);
  r.get("seed", cfg.seed);
  std::string init = mvmd::to_string(cfg.omega_init);
  r.get("omega_init", init);
  cfg.omega_init = mvmd::omega_init_from_string(init);
  r.finish();
  cfg.validate();
  return cfg;
}

json to_json(const lstm::TrainConfig& cfg) {
  return {{"hidden_size", cfg.hidden_size}, {"batch_size", cfg.batch_size}, {"epochs", cfg.epochs},
          {"learning_rate", cfg.learning_rate}, {"beta1", cfg.beta1},         {"beta2", cfg.beta2},
          {"epsilon", cfg.epsilon},         {"clip_norm", cfg.clip_norm}};
}

lstm::TrainConfig train_config_from_json(const json& j, lstm::TrainConfig cfg) {
  Reader r(j, "train");
  r.get("hidden_size", cfg.hidden_size);
  r.get("batch_size", cfg.batch_size);
  r.get("epochs", cfg.epochs);
  r.get("learning_rate", cfg.learning_rate);
  r.get("beta1", cfg.beta1);
  r.get("beta2", cfg.beta2);
  r.get("epsilon", cfg.epsilon);
  r.get("clip_norm", cfg.clip_norm);
  r.finish();
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (!csv) signal::validate(synth);
  if (csv && csv_channels < 1) throw ConfigError("data.csv_channels must be >= 1");
  split.validate();
  if (lags < 1) throw ConfigError("lags must be >= 1");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  search.validate();
  if (!fixed_params && (bo_init < 2 || bo_budget < bo_init)) {
    throw ConfigError("search: need budget >= n_init >= 2");
  }
  if (fixed_params) {
    if (fixed_params->modes < 1 || !(fixed_params->alpha > 0.0)) throw ConfigError("search.fixed: invalid K or alpha");
  }
  mvmd.validate();
  train.validate();
  if (bo_epochs < 1) throw ConfigError("train.bo_epochs must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (protocol == LeakageProtocol::rolling && horizon != 1) {
    // Rolling mode re-decomposes up to t - 1 and reads the last lags samples.
    throw ConfigError("protocol \"rolling\" supports horizon 1 only");
  }
}

json ExperimentConfig::to_json() const {
  json data;
  data["csv"] = csv ? json(csv->string()) : json(nullptr);
  data["csv_channels"] = csv_channels;
  data["synth"] = pipeline::to_json(synth);
  json search_j = {{"k_min", search.k_min},         {"k_max", search.k_max},   {"alpha_min", search.alpha_min},
                   {"alpha_max", search.alpha_max}, {"budget", bo_budget},     {"n_init", bo_init}};
  search_j["fixed"] = fixed_params ? json{{"K", fixed_params->modes}, {"alpha", fixed_params->alpha}} : json(nullptr);
  json mv = pipeline::to_json(mvmd);
  mv.erase("modes");
  mv.erase("alpha");
  json tr = pipeline::to_json(train);
  tr["bo_epochs"] = bo_epochs;
  return {{"data", data},
          {"split", {{"train_fraction", split.train_fraction},
                     {"validation_fraction", split.validation_fraction},
                     {"lags", lags},
                     {"horizon", horizon}}},
          {"search", search_j},
          {"mvmd", mv},
          {"train", tr},
          {"protocol", pipeline::to_string(protocol)},
          {"aggregation", pipeline::to_string(aggregation)},
          {"cross_imf", cross_imf},
          {"residual", residual},
          {"seed", seed}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig cfg;
  Reader r(j, "config");
  if (const json* data = r.sub("data")) {
    Reader d(*data, "data");
    if (const json* csv = d.sub("csv"); csv && !csv->is_null()) {
      if (!csv->is_string()) throw ConfigError("data.csv: expected a path string or null");
      cfg.csv = csv->get<std::string>();
    }
    d.get("csv_channels", cfg.csv_channels);
    if (const json* s = d.sub("synth")) cfg.synth = synth_spec_from_json(*s);
    d.finish();
  }
  if (const json* s = r.sub("split")) {
    Reader sr(*s, "split");
    sr.get("train_fraction", cfg.split.train_fraction);
    sr.get("validation_fraction", cfg.split.validation_fraction);
    sr.get("lags", cfg.lags);
    sr.get("horizon", cfg.horizon);
    sr.finish();
  }
  if (const json* s = r.sub("search")) {
    Reader sr(*s, "search");
    sr.get("k_min", cfg.search.k_min);
    sr.get("k_max", cfg.search.k_max);
    sr.get("alpha_min", cfg.search.alpha_min);
    sr.get("alpha_max", cfg.search.alpha_max);
    sr.get("budget", cfg.bo_budget);
    sr.get("n_init", cfg.bo_init);
    if (const json* f = sr.sub("fixed"); f && !f->is_null()) {
      bayes::MvmdParams p;
      Reader fr(*f, "search.fixed");
      fr.get("K", p.modes);
      fr.get("alpha", p.alpha);
      fr.finish();
      cfg.fixed_params = p;
    }
    sr.finish();
  }
  if (const json* m = r.sub("mvmd")) cfg.mvmd = mvmd_config_from_json(*m, cfg.mvmd);
  if (const json* t = r.sub("train")) {
    json rest = *t;
    if (rest.is_object() && rest.contains("bo_epochs")) {
      try {
        cfg.bo_epochs = rest.at("bo_epochs").get<int>();
      } catch (const json::exception& e) {
        throw ConfigError(std::string("train.bo_epochs: ") + e.what());
      }
      rest.erase("bo_epochs");
    }
    cfg.train = train_config_from_json(rest, cfg.train);
  }
  std::string protocol = to_string(cfg.protocol);
  std::string aggregation = to_string(cfg.aggregation);
  r.get("protocol", protocol);
  r.get("aggregation", aggregation);
  cfg.protocol = protocol_from_string(protocol);
  cfg.aggregation = aggregation_from_string(aggregation);
  r.get("cross_imf", cfg.cross_imf);
  r.get("residual", cfg.residual);
  r.get("seed", cfg.seed);
  r.get("jobs", cfg.jobs);
  r.finish();
  cfg.validate();
  return cfg;
}

std::string ExperimentConfig::hash() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(mix(base) ^ a) ^ b) ^ c);
}

}  // namespace mvmdlstm::pipeline
