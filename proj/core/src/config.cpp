#include "mbc/config.hpp"

#include <fstream>

#include "mbc/errors.hpp"

namespace mbc {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (patience < 1) throw ConfigError("train.patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("train.max_epochs must be >= 1");
  if (lr <= 0.0) throw ConfigError("train.lr must be positive");
}

void RunConfig::validate() const {
  schema.validate();
  groups.validate(schema);
  model.validate();
  train.validate();
  if (coop.alpha < 0.0 || coop.beta < 0.0) {
    throw ConfigError("coop.alpha and coop.beta must be >= 0");
  }
  if (model.use_efgc && groups.num_groups() == 0) {
    throw ConfigError("groups: EFGC branch requires at least one group");
  }
  if (!data.generator.has_value() &&
      (data.train_path.empty() || data.val_path.empty())) {
    throw ConfigError(
        "data: either generator or train/val paths must be configured");
  }
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

std::vector<std::size_t> get_sizes(const json& j, const char* key,
                                   std::vector<std::size_t> fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<std::vector<std::size_t>>();
}

}  // namespace

json RunConfig::to_json() const {
  json j;
  json fields = json::array();
  for (const auto& f : schema.fields) {
    json jf{{"name", f.name},
            {"kind", to_string(f.kind)},
            {"embed_dim", f.embed_dim}};
    if (f.kind != FieldKind::kNumerical) jf["vocab_size"] = f.vocab_size;
    fields.push_back(jf);
  }
  j["schema"]["fields"] = fields;
  json jgroups = json::array();
  for (const auto& g : groups.groups) {
    jgroups.push_back({{"name", g.name}, {"fields", g.fields}});
  }
  j["groups"] = jgroups;
  j["model"] = {{"profile", profile},
                {"efgc",
                 {{"hidden", model.efgc.hidden},
                  {"reduction", model.efgc.reduction}}},
                {"cross",
                 {{"num_experts", model.cross.num_experts},
                  {"layers", model.cross.layers},
                  {"rank", model.cross.rank},
                  {"reduction", model.cross.reduction}}},
                {"deep", {{"hidden", model.deep.hidden}}},
                {"shared_top", {{"hidden", model.top.hidden}}},
                {"use_efgc", model.use_efgc},
                {"use_deep", model.use_deep},
                {"use_cross", model.use_cross}};
  j["coop"] = {{"alpha", coop.alpha},
               {"beta", coop.beta},
               {"variant", to_string(coop.variant)},
               {"mdr_squared", coop.mdr_squared},
               {"max_diff_floor", coop.max_diff_floor}};
  j["train"] = {{"batch_size", train.batch_size},
                {"max_epochs", train.max_epochs},
                {"patience", train.patience},
                {"lr", train.lr},
                {"seed", train.seed}};
  json jdata;
  if (!data.train_path.empty()) jdata["train"] = data.train_path;
  if (!data.val_path.empty()) jdata["val"] = data.val_path;
  if (!data.test_path.empty()) jdata["test"] = data.test_path;
  if (data.generator) {
    const GenConfig& g = *data.generator;
    json planted = json::array();
    for (const auto& p : g.planted) {
      planted.push_back({{"field_a", p.field_a},
                         {"field_b", p.field_b},
                         {"strength", p.strength},
                         {"category", p.category}});
    }
    jdata["generator"] = {{"rows_train", g.rows_train},
                          {"rows_val", g.rows_val},
                          {"rows_test", g.rows_test},
                          {"base_rate", g.base_rate},
                          {"field_effect_scale", g.field_effect_scale},
                          {"num_categories", g.num_categories},
                          {"seed", g.seed},
                          {"planted", planted}};
  }
  j["data"] = jdata;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig cfg;
  if (!j.contains("schema") || !j.at("schema").contains("fields")) {
    throw ConfigError("config: missing 'schema.fields' section");
  }
  for (const auto& jf : j.at("schema").at("fields")) {
    FeatureField f;
    f.name = get_or<std::string>(jf, "name", "");
    f.kind = field_kind_from_string(get_or<std::string>(jf, "kind", ""));
    f.vocab_size = get_or<std::size_t>(jf, "vocab_size", 0);
    f.embed_dim = get_or<std::size_t>(jf, "embed_dim", 0);
    cfg.schema.fields.push_back(std::move(f));
  }
  if (!j.contains("groups")) {
    throw ConfigError("config: missing 'groups' section");
  }
  for (const auto& jg : j.at("groups")) {
    FeatureGroup g;
    g.name = get_or<std::string>(jg, "name", "");
    g.fields = jg.at("fields").get<std::vector<std::string>>();
    cfg.groups.groups.push_back(std::move(g));
  }

  const json jm = j.contains("model") ? j.at("model") : json::object();
  cfg.profile = get_or<std::string>(jm, "profile", "desk");
  if (cfg.profile == "desk") {
    cfg.model = ModelConfig::desk_profile();
  } else if (cfg.profile == "paper") {
    cfg.model = ModelConfig::paper_profile();
  } else {
    throw ConfigError("model.profile must be 'desk' or 'paper', got '" +
                      cfg.profile + "'");
  }
  if (jm.contains("efgc")) {
    const json& je = jm.at("efgc");
    cfg.model.efgc.hidden = get_sizes(je, "hidden", cfg.model.efgc.hidden);
    cfg.model.efgc.reduction =
        get_or<std::size_t>(je, "reduction", cfg.model.efgc.reduction);
  }
  if (jm.contains("cross")) {
    const json& jc = jm.at("cross");
    cfg.model.cross.num_experts =
        get_or<std::size_t>(jc, "num_experts", cfg.model.cross.num_experts);
    cfg.model.cross.layers =
        get_or<std::size_t>(jc, "layers", cfg.model.cross.layers);
    cfg.model.cross.rank =
        get_or<std::size_t>(jc, "rank", cfg.model.cross.rank);
    cfg.model.cross.reduction =
        get_or<std::size_t>(jc, "reduction", cfg.model.cross.reduction);
  }
  if (jm.contains("deep")) {
    cfg.model.deep.hidden =
        get_sizes(jm.at("deep"), "hidden", cfg.model.deep.hidden);
  }
  if (jm.contains("shared_top")) {
    cfg.model.top.hidden =
        get_sizes(jm.at("shared_top"), "hidden", cfg.model.top.hidden);
  }
  cfg.model.use_efgc = get_or<bool>(jm, "use_efgc", true);
  cfg.model.use_deep = get_or<bool>(jm, "use_deep", true);
  cfg.model.use_cross = get_or<bool>(jm, "use_cross", true);

  const json jc = j.contains("coop") ? j.at("coop") : json::object();
  cfg.coop.alpha = get_or<double>(jc, "alpha", 0.1);
  cfg.coop.beta = get_or<double>(jc, "beta", 0.1);
  cfg.coop.variant = variant_from_string(
      get_or<std::string>(jc, "variant", "strong_to_weak"));
  cfg.coop.mdr_squared = get_or<bool>(jc, "mdr_squared", true);
  cfg.coop.max_diff_floor = get_or<double>(jc, "max_diff_floor", -10.0);

  const json jt = j.contains("train") ? j.at("train") : json::object();
  cfg.train.batch_size = get_or<std::size_t>(jt, "batch_size", 256);
  cfg.train.max_epochs = get_or<std::size_t>(jt, "max_epochs", 5);
  cfg.train.patience = get_or<std::size_t>(jt, "patience", 2);
  cfg.train.lr = get_or<double>(jt, "lr", 1e-3);
  cfg.train.seed = get_or<std::uint64_t>(jt, "seed", 1);

  const json jd = j.contains("data") ? j.at("data") : json::object();
  cfg.data.train_path = get_or<std::string>(jd, "train", "");
  cfg.data.val_path = get_or<std::string>(jd, "val", "");
  cfg.data.test_path = get_or<std::string>(jd, "test", "");
  if (jd.contains("generator")) {
    const json& jg = jd.at("generator");
    GenConfig g;
    g.rows_train = get_or<std::size_t>(jg, "rows_train", g.rows_train);
    g.rows_val = get_or<std::size_t>(jg, "rows_val", g.rows_val);
    g.rows_test = get_or<std::size_t>(jg, "rows_test", g.rows_test);
    g.base_rate = get_or<double>(jg, "base_rate", g.base_rate);
    g.field_effect_scale =
        get_or<double>(jg, "field_effect_scale", g.field_effect_scale);
    g.num_categories = get_or<int>(jg, "num_categories", 0);
    g.seed = get_or<std::uint64_t>(jg, "seed", 1);
    if (jg.contains("planted")) {
      for (const auto& jp : jg.at("planted")) {
        PlantedPair p;
        p.field_a = get_or<std::string>(jp, "field_a", "");
        p.field_b = get_or<std::string>(jp, "field_b", "");
        p.strength = get_or<double>(jp, "strength", 2.0);
        p.category = get_or<int>(jp, "category", -1);
        g.planted.push_back(std::move(p));
      }
    }
    cfg.data.generator = std::move(g);
  }
  return cfg;
}

void apply_override(json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like section.key=value, got '" +
                      assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  json value;
  if (raw == "true") {
    value = true;
  } else if (raw == "false") {
    value = false;
  } else if (!raw.empty() && (raw[0] == '[' || raw[0] == '{')) {
    try {
      value = json::parse(raw);
    } catch (const json::exception& e) {
      throw ConfigError("override value '" + raw +
                        "' looks like JSON but does not parse: " + e.what());
    }
  } else {
    try {
      std::size_t used = 0;
      if (raw.find_first_of(".eE") == std::string::npos) {
        const long long iv = std::stoll(raw, &used);
        if (used == raw.size()) value = iv;
      }
      if (value.is_null()) {
        const double dv = std::stod(raw, &used);
        if (used == raw.size()) value = dv;
      }
    } catch (...) {
      // fall through to string
    }
    if (value.is_null()) value = raw;
  }

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override has an empty path segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " +
                      e.what());
  }
  // Overrides are applied before validation, so an override can fix an
  // invalid file.
  for (const std::string& ov : overrides) apply_override(doc, ov);
  RunConfig cfg;
  try {
    cfg = RunConfig::from_json(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") +
                      e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace mbc
