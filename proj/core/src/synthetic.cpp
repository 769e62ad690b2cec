#include "mbc/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "mbc/errors.hpp"
#include "mbc/metrics.hpp"
#include "mbc/rng.hpp"

namespace mbc {

namespace {

struct GroundTruth {
  double base_logit = 0.0;
  // field name -> per-id effect (categorical/multi) or {coef} (numerical)
  std::map<std::string, std::vector<double>> field_effects;
  // one flat table per planted pair, size vocab_a * vocab_b
  std::vector<std::vector<double>> pair_tables;
};

struct Row {
  std::vector<std::vector<std::int32_t>> ids;  // per field (empty for num)
  std::vector<double> values;                  // per field (NaN for ids)
  std::int32_t category = -1;
  int label = 0;
  double logit = 0.0;
};

double field_effect(const FeatureSchema& schema, const GroundTruth& gt,
                    std::size_t f, const Row& row) {
  const FeatureField& field = schema.fields[f];
  const std::vector<double>& eff = gt.field_effects.at(field.name);
  if (field.kind == FieldKind::kNumerical) return eff[0] * row.values[f];
  const auto& ids = row.ids[f];
  if (ids.empty()) return 0.0;
  double s = 0.0;
  for (std::int32_t id : ids) s += eff[id];
  return s / static_cast<double>(ids.size());
}

}  // namespace

GenResult generate_synthetic(const FeatureSchema& schema, const GenConfig& cfg,
                             const std::filesystem::path& out_dir) {
  schema.validate();
  if (cfg.rows_train == 0 || cfg.rows_val == 0 || cfg.rows_test == 0) {
    throw ConfigError("generator: all split sizes must be positive");
  }
  if (cfg.base_rate <= 0.0 || cfg.base_rate >= 1.0) {
    throw ConfigError("generator: base_rate must be in (0,1)");
  }
  for (const auto& p : cfg.planted) {
    for (const std::string& fname : {p.field_a, p.field_b}) {
      const int idx = schema.field_index(fname);
      if (idx < 0) {
        throw ConfigError("generator: planted pair references unknown field '" +
                          fname + "'");
      }
      if (schema.fields[idx].kind != FieldKind::kCategorical) {
        throw ConfigError("generator: planted field '" + fname +
                          "' must be categorical");
      }
    }
    if (p.category >= cfg.num_categories) {
      throw ConfigError("generator: planted pair category out of range");
    }
  }

  Rng rng(cfg.seed);
  GroundTruth gt;
  gt.base_logit = std::log(cfg.base_rate / (1.0 - cfg.base_rate));
  for (const auto& f : schema.fields) {
    if (f.kind == FieldKind::kNumerical) {
      gt.field_effects[f.name] = {
          rng.uniform(-cfg.field_effect_scale, cfg.field_effect_scale)};
    } else {
      std::vector<double> eff(f.vocab_size);
      for (double& e : eff)
        e = rng.uniform(-cfg.field_effect_scale, cfg.field_effect_scale);
      gt.field_effects[f.name] = std::move(eff);
    }
  }
  for (const auto& p : cfg.planted) {
    const FeatureField& fa = schema.fields[schema.field_index(p.field_a)];
    const FeatureField& fb = schema.fields[schema.field_index(p.field_b)];
    std::vector<double> table(fa.vocab_size * fb.vocab_size);
    for (double& v : table) v = rng.uniform(-p.strength, p.strength);
    gt.pair_tables.push_back(std::move(table));
  }

  std::filesystem::create_directories(out_dir);

  auto gen_row = [&](Row& row) {
    row.ids.assign(schema.num_fields(), {});
    row.values.assign(schema.num_fields(), 0.0);
    for (std::size_t f = 0; f < schema.num_fields(); ++f) {
      const FeatureField& field = schema.fields[f];
      switch (field.kind) {
        case FieldKind::kCategorical:
          row.ids[f] = {static_cast<std::int32_t>(
              rng.uniform_int(field.vocab_size))};
          break;
        case FieldKind::kMultiValued: {
          const std::size_t n = rng.uniform_int(3);  // 0..2 ids
          for (std::size_t k = 0; k < n; ++k)
            row.ids[f].push_back(
                static_cast<std::int32_t>(rng.uniform_int(field.vocab_size)));
          break;
        }
        case FieldKind::kNumerical:
          row.values[f] = rng.uniform(-1.0, 1.0);
          break;
      }
    }
    row.category = cfg.num_categories > 0
                       ? static_cast<std::int32_t>(
                             rng.uniform_int(cfg.num_categories))
                       : -1;
    double logit = gt.base_logit;
    for (std::size_t f = 0; f < schema.num_fields(); ++f)
      logit += field_effect(schema, gt, f, row);
    for (std::size_t k = 0; k < cfg.planted.size(); ++k) {
      const PlantedPair& p = cfg.planted[k];
      if (p.category >= 0 && p.category != row.category) continue;
      const int ia = schema.field_index(p.field_a);
      const int ib = schema.field_index(p.field_b);
      const FeatureField& fb = schema.fields[ib];
      const std::int32_t a = row.ids[ia][0];
      const std::int32_t b = row.ids[ib][0];
      logit += gt.pair_tables[k][static_cast<std::size_t>(a) * fb.vocab_size +
                                 b];
    }
    row.logit = logit;
    const double p_click = 1.0 / (1.0 + std::exp(-logit));
    row.label = rng.bernoulli(p_click) ? 1 : 0;
  };

  auto write_split = [&](const std::filesystem::path& path, std::size_t n,
                         std::vector<double>* scores,
                         std::vector<double>* labels) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "label";
    if (cfg.num_categories > 0) out << ",category";
    for (const auto& f : schema.fields) out << "," << f.name;
    out << "\n";
    Row row;
    char buf[64];
    for (std::size_t i = 0; i < n; ++i) {
      gen_row(row);
      out << row.label;
      if (cfg.num_categories > 0) out << "," << row.category;
      for (std::size_t f = 0; f < schema.num_fields(); ++f) {
        out << ",";
        const FeatureField& field = schema.fields[f];
        if (field.kind == FieldKind::kNumerical) {
          std::snprintf(buf, sizeof buf, "%.6f", row.values[f]);
          out << buf;
        } else {
          for (std::size_t k = 0; k < row.ids[f].size(); ++k) {
            if (k > 0) out << "|";
            out << row.ids[f][k];
          }
        }
      }
      out << "\n";
      if (scores) {
        scores->push_back(row.logit);
        labels->push_back(row.label);
      }
    }
  };

  GenResult result;
  result.train_path = out_dir / "train.csv";
  result.val_path = out_dir / "val.csv";
  result.test_path = out_dir / "test.csv";
  result.ground_truth_path = out_dir / "ground_truth.json";
  write_split(result.train_path, cfg.rows_train, nullptr, nullptr);
  write_split(result.val_path, cfg.rows_val, nullptr, nullptr);
  std::vector<double> test_scores, test_labels;
  write_split(result.test_path, cfg.rows_test, &test_scores, &test_labels);
  result.bayes_test_auc = auc(test_scores, test_labels);

  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["base_logit"] = gt.base_logit;
  j["base_rate"] = cfg.base_rate;
  j["num_categories"] = cfg.num_categories;
  j["bayes_test_auc"] = result.bayes_test_auc;
  j["field_effects"] = gt.field_effects;
  nlohmann::json planted = nlohmann::json::array();
  for (std::size_t k = 0; k < cfg.planted.size(); ++k) {
    planted.push_back({{"field_a", cfg.planted[k].field_a},
                       {"field_b", cfg.planted[k].field_b},
                       {"strength", cfg.planted[k].strength},
                       {"category", cfg.planted[k].category},
                       {"table", gt.pair_tables[k]}});
  }
  j["planted"] = planted;
  std::ofstream gtf(result.ground_truth_path);
  gtf << j.dump(2) << "\n";
  return result;
}

}  // namespace mbc
