#include <doctest.h>

#include <filesystem>

#include "testutil.hpp"
#include "tglink/checkpoint.hpp"
#include "tglink/trainer.hpp"

using namespace tglink;
using tglink::testing::random_graph;
using tglink::testing::temp_file;

namespace {

NetSpec small_net() {
  NetSpec ns;
  ns.width = 6;
  ns.head_channels = 8;
  ns.stage1_layers = 1;
  ns.stage2_layers = 1;
  return ns;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("save, load, forward is bit-identical") {
  auto g = random_graph(120, 11, 41);
  auto split = chronological_split(g);
  RunConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  cfg.n_nearest = 3;
  cfg.embed_dim = 4;
  auto pipe = make_pipeline(g, split, cfg, small_net());
  // a short training run moves every parameter and the BN running stats
  train_model(g, split, cfg, *pipe);

  const auto path = temp_file("ck");
  save_checkpoint(path.string(), cfg, pipe->sampling().time_scale, g.node_labels(), *pipe);
  auto ck = load_checkpoint(path.string());
  require_compatible(ck, g.node_labels());
  CHECK(ck.time_scale == pipe->sampling().time_scale);
  CHECK(ck.config.n_nearest == cfg.n_nearest);

  Rng rng(17);
  const int l = cfg.n_nearest + 1;
  for (int trial = 0; trial < 100; ++trial) {
    MatX<float> x(kNumChannels, l * l);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x.data()[i] = static_cast<float>(rng.gaussian());
    }
    const MatX<float> a = pipe->forward(x, 1, false);
    const MatX<float> b = ck.pipeline->forward(x, 1, false);
    REQUIRE(a(0, 0) == b(0, 0));
    REQUIRE(a(1, 0) == b(1, 0));
  }
}

TEST_CASE("node-map mismatch is rejected") {
  auto g = random_graph(60, 9, 42);
  auto other = random_graph(60, 10, 43);
  auto split = chronological_split(g);
  RunConfig cfg;
  cfg.n_nearest = 3;
  cfg.embed_dim = 4;
  auto pipe = make_pipeline(g, split, cfg, small_net());
  const auto path = temp_file("ck-mismatch");
  save_checkpoint(path.string(), cfg, 1.0, g.node_labels(), *pipe);
  auto ck = load_checkpoint(path.string());
  CHECK_THROWS_WITH_AS(require_compatible(ck, other.node_labels()),
                       doctest::Contains("node-map mismatch"), std::runtime_error);
}

TEST_CASE("corrupt files are reported") {
  const auto path = temp_file("ck-corrupt");
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(path.string()), std::runtime_error);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ck.bin"), std::runtime_error);
}

}  // TEST_SUITE

TEST_SUITE("config") {

TEST_CASE("defaults and round trip") {
  RunConfig cfg;
  CHECK(cfg.n_nearest == 12);
  CHECK(cfg.p_parametric == 0);
  CHECK(cfg.alpha == 5.0);
  CHECK(cfg.embed_dim == 64);
  CHECK(cfg.resolved_m() == 48);
  const auto back = RunConfig::from_json_text(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_WITH_AS(RunConfig::from_json_text(R"({"n_nearest": 4, "n_neares": 4})"),
                       doctest::Contains("unknown config key"), std::runtime_error);
}

TEST_CASE("time_scale accepts auto or a number") {
  auto a = RunConfig::from_json_text(R"({"time_scale": "auto"})");
  CHECK(a.time_scale == 0.0);
  auto b = RunConfig::from_json_text(R"({"time_scale": 2.5})");
  CHECK(b.time_scale == 2.5);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"time_scale": "never"})"), std::runtime_error);
}

TEST_CASE("invalid values are rejected") {
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"epochs": 0})"), std::runtime_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"alpha": -1})"), std::runtime_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"train_fraction": 0.95, "val_fraction": 0.1})"),
                  std::runtime_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"p_parametric": 6, "m_candidates": 3})"),
                  std::runtime_error);
}

TEST_CASE("digest is stable and sensitive") {
  RunConfig a, b;
  CHECK(a.digest() == b.digest());
  b.n_nearest = 24;
  CHECK(a.digest() != b.digest());
}

}  // TEST_SUITE
