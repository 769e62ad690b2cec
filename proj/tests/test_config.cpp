#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mbc/config.hpp"
#include "mbc/errors.hpp"

using namespace mbc;
namespace fs = std::filesystem;

namespace {

const char* kBaseConfig = R"({
  "schema": {
    "fields": [
      {"name": "u", "kind": "categorical", "vocab_size": 10, "embed_dim": 4},
      {"name": "v", "kind": "categorical", "vocab_size": 10, "embed_dim": 4},
      {"name": "x", "kind": "numerical", "embed_dim": 2}
    ]
  },
  "groups": [
    {"name": "uv", "fields": ["u", "v"]},
    {"name": "vx", "fields": ["v", "x"]}
  ],
  "model": {"profile": "desk"},
  "coop": {"alpha": 0.2, "beta": 0.05, "variant": "weak_to_strong"},
  "train": {"batch_size": 64, "max_epochs": 4, "patience": 2, "lr": 0.01, "seed": 9},
  "data": {"train": "t.csv", "val": "v.csv", "test": "te.csv"}
})";

fs::path write_cfg(const std::string& name, const std::string& text) {
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << text;
  return p;
}

}  // namespace

TEST_CASE("config parses with profile defaults and section values") {
  fs::path p = write_cfg("mbc_cfg1.json", kBaseConfig);
  RunConfig cfg = load_run_config(p);
  CHECK(cfg.schema.num_fields() == 3);
  CHECK(cfg.groups.num_groups() == 2);
  CHECK(cfg.profile == "desk");
  CHECK(cfg.model.efgc.hidden == std::vector<std::size_t>{64, 16});
  CHECK(cfg.model.top.latent_dim() == 8);
  CHECK(cfg.coop.alpha == 0.2);
  CHECK(cfg.coop.variant == Variant::kWeakToStrong);
  CHECK(cfg.train.batch_size == 64);
  CHECK(cfg.train.seed == 9);
  CHECK(cfg.data.test_path == "te.csv");
}

TEST_CASE("round trip: parse -> serialize -> parse is identical") {
  fs::path p = write_cfg("mbc_cfg2.json", kBaseConfig);
  RunConfig cfg = load_run_config(p);
  nlohmann::json j1 = cfg.to_json();
  RunConfig cfg2 = RunConfig::from_json(j1);
  cfg2.validate();
  nlohmann::json j2 = cfg2.to_json();
  CHECK(j1 == j2);
  CHECK(j1.dump() == j2.dump());
}

TEST_CASE("missing sections are reported by name") {
  fs::path p = write_cfg("mbc_cfg3.json",
                         R"({"model": {"profile": "desk"}})");
  CHECK_THROWS_WITH_AS(load_run_config(p), doctest::Contains("schema"),
                       ConfigError);

  std::string no_groups = kBaseConfig;
  const auto pos = no_groups.find("\"groups\"");
  const auto end = no_groups.find("],", pos) + 2;
  no_groups.erase(pos, end - pos);
  fs::path p2 = write_cfg("mbc_cfg4.json", no_groups);
  CHECK_THROWS_WITH_AS(load_run_config(p2), doctest::Contains("groups"),
                       ConfigError);
}

TEST_CASE("overrides: typed values, nested paths, applied before validation") {
  fs::path p = write_cfg("mbc_cfg5.json", kBaseConfig);
  RunConfig cfg = load_run_config(
      p, {"coop.alpha=0", "train.batch_size=128", "model.use_cross=false",
          "coop.variant=no discrimination",
          "data.generator.rows_train=500", "data.generator.base_rate=0.25"});
  CHECK(cfg.coop.alpha == 0.0);
  CHECK(cfg.train.batch_size == 128);
  CHECK(!cfg.model.use_cross);
  CHECK(cfg.coop.variant == Variant::kNoDiscrimination);
  REQUIRE(cfg.data.generator.has_value());
  CHECK(cfg.data.generator->rows_train == 500);
  CHECK(cfg.data.generator->base_rate == 0.25);

  // a broken file fixed by an override passes validation
  std::string broken = kBaseConfig;
  const auto bs = broken.find("\"batch_size\": 64");
  broken.replace(bs, 16, "\"batch_size\": 0");
  fs::path pb = write_cfg("mbc_cfg6.json", broken);
  CHECK_THROWS_AS(load_run_config(pb), ConfigError);
  CHECK_NOTHROW(load_run_config(pb, {"train.batch_size=32"}));

  CHECK_THROWS_AS(load_run_config(p, {"no_equals_sign"}), ConfigError);

  // JSON-typed override values
  RunConfig deep = load_run_config(p, {"model.deep.hidden=[16,8,32]"});
  CHECK(deep.model.deep.hidden == std::vector<std::size_t>{16, 8, 32});
  CHECK_THROWS_AS(load_run_config(p, {"model.deep.hidden=[16,"}), ConfigError);
  // wrong value type surfaces as a config error, not a raw json exception
  CHECK_THROWS_AS(load_run_config(p, {"model.deep.hidden=oops"}), ConfigError);
}

TEST_CASE("invalid field values carry field-level messages") {
  fs::path p = write_cfg("mbc_cfg7.json", kBaseConfig);
  CHECK_THROWS_WITH_AS(load_run_config(p, {"coop.variant=bogus"}),
                       doctest::Contains("variant"), ConfigError);
  CHECK_THROWS_WITH_AS(load_run_config(p, {"model.profile=huge"}),
                       doctest::Contains("profile"), ConfigError);
  CHECK_THROWS_WITH_AS(load_run_config(p, {"train.patience=0"}),
                       doctest::Contains("patience"), ConfigError);
  // disabling two of three branches is rejected as a whole
  CHECK_THROWS_AS(
      load_run_config(p, {"model.use_cross=false", "model.use_deep=false"}),
      ConfigError);

  fs::path missing = fs::temp_directory_path() / "mbc_does_not_exist.json";
  CHECK_THROWS_AS(load_run_config(missing), ConfigError);
  fs::path garbage = write_cfg("mbc_cfg8.json", "{not json");
  CHECK_THROWS_AS(load_run_config(garbage), ConfigError);
}

TEST_CASE("paper profile carries the large layer sizes") {
  fs::path p = write_cfg("mbc_cfg9.json", kBaseConfig);
  RunConfig cfg = load_run_config(p, {"model.profile=paper"});
  CHECK(cfg.model.deep.hidden ==
        std::vector<std::size_t>{2048, 1024, 512, 512, 512});
  CHECK(cfg.model.efgc.reduction == 512);
  CHECK(cfg.model.cross.rank == 16);
  CHECK(cfg.model.top.latent_dim() == 128);
}
