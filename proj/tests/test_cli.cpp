#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include "pinn/error.hpp"
#include "pinncli/commands.hpp"
#include "pinncli/config.hpp"

using namespace pinncli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("pinnkit_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const pinn::Error& e) {
    return e.what();
  }
  return {};
}

RunConfig quick(const fs::path& out) {
  return parse_config(nullptr, {{"case.name", "poiseuille"},
                                {"train.epochs", "6"},
                                {"train.batch", "16"},
                                {"train.interior", "200"},
                                {"train.boundary", "50"},
                                {"train.initial", "50"},
                                {"paths.reference", "analytic"},
                                {"paths.output", out.string()}});
}

}  // namespace

TEST(Config, EmptyConfigGivesDefaults) {
  const auto c = parse_config(nullptr, {});
  EXPECT_EQ(c.lr, 0.001);
  EXPECT_EQ(c.batch, 128u);
  EXPECT_EQ(c.grid, 5);
  EXPECT_EQ(c.order, 3);
  EXPECT_EQ(c.noise, 0.1);
  EXPECT_EQ(c.rba_gamma, 0.5);
  EXPECT_EQ(c.rba_eta, 0.5);
  EXPECT_EQ(c.lra_alpha, 0.5);
  EXPECT_EQ(c.sa_lr, 0.001);
  EXPECT_EQ(c.gn_alpha, 1.5);
  EXPECT_EQ(c.gn_lr, 0.001);
  EXPECT_EQ(c.layers, (std::vector<int>{3, 20, 20, 3}));
  EXPECT_EQ(c.weights, std::vector<double>(6, 1.0));
}

TEST(Config, PoiseuilleUsesHeuristicWeights) {
  const auto c = parse_config(nullptr, {{"case.name", "poiseuille"}, {"net.family", "kan"}});
  EXPECT_EQ(c.weights, (std::vector<double>{0.1, 2, 2, 2}));
  EXPECT_EQ(c.layers, (std::vector<int>{3, 5, 5, 3}));
}

TEST(Config, FlagOverridesFile) {
  const auto dir = scratch("precedence");
  const auto file = dir / "run.cfg";
  std::ofstream(file) << "# test\ntrain.epochs = 300\ntrain.seed = 4\n";
  const auto c = parse_config(&file, {{"train.epochs", "12"}});
  EXPECT_EQ(c.epochs, 12);
  EXPECT_EQ(c.seed, 4u);
}

TEST(Config, UnknownAndInvalidKeys) {
  const auto unknown = error_of([] { parse_config(nullptr, {{"train.epoch", "3"}}); });
  EXPECT_EQ(unknown.rfind("unknown option", 0), 0u) << unknown;
  const auto batch = error_of([] { parse_config(nullptr, {{"train.batch", "0"}}); });
  EXPECT_EQ(batch.rfind("invalid config", 0), 0u) << batch;
  EXPECT_NE(batch.find("train.batch"), std::string::npos);
  const auto scheme = error_of([] { parse_config(nullptr, {{"scheme.name", "magic"}}); });
  EXPECT_NE(scheme.find("scheme.name"), std::string::npos) << scheme;
  const auto text = error_of([] { parse_key_values("train.epochs 3\n"); });
  EXPECT_EQ(text.rfind("invalid config", 0), 0u) << text;
  const auto arity = error_of([] { parse_config(nullptr, {{"scheme.weights", "1,2"}}); });
  EXPECT_NE(arity.find("weight/term arity mismatch"), std::string::npos) << arity;
}

TEST(Config, GradNormAlphaDefaultEchoedInManifest) {
  const auto c = parse_config(nullptr, {{"scheme.name", "gradnorm"}});
  const auto m = to_manifest(c);
  EXPECT_NE(m.find("scheme.gn_alpha = 1.5"), std::string::npos) << m;
  EXPECT_NE(m.find("train.seed = 0"), std::string::npos);
}

TEST(Config, ManifestRoundTrip) {
  const auto c = parse_config(nullptr, {{"case.name", "bfs-slip"},
                                        {"net.family", "kan"},
                                        {"scheme.name", "lra"},
                                        {"train.lr", "0.0123456789"},
                                        {"scheme.lra_ceiling", "3e7"},
                                        {"sweep.schemes", "rba,sa"}});
  const auto text = to_manifest(c);
  const auto dir = scratch("roundtrip");
  const auto file = dir / "manifest.txt";
  std::ofstream(file) << text;
  const auto back = parse_config(&file, {});
  EXPECT_TRUE(back == c);
  EXPECT_EQ(to_manifest(back), text);
}

TEST(Commands, TrainThenEvalReproducesReport) {
  const auto dir = scratch("train_eval");
  const auto cfg = quick(dir / "run");
  ASSERT_EQ(dispatch("train", cfg), kExitOk);
  for (const char* f : {"manifest.txt", "history.csv", "weights.csv", "timing.csv",
                        "checkpoint.txt", "status.txt", "report.txt"})
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  const auto trained = slurp(dir / "run" / "report.txt");
  fs::remove(dir / "run" / "report.txt");
  ASSERT_EQ(dispatch("eval", cfg), kExitOk);
  EXPECT_EQ(slurp(dir / "run" / "report.txt"), trained);
}

TEST(Commands, IdenticalManifestsGiveIdenticalHistory) {
  const auto dir = scratch("determinism");
  ASSERT_EQ(dispatch("train", quick(dir / "a")), kExitOk);
  ASSERT_EQ(dispatch("train", quick(dir / "b")), kExitOk);
  EXPECT_EQ(slurp(dir / "a" / "history.csv"), slurp(dir / "b" / "history.csv"));
  EXPECT_EQ(slurp(dir / "a" / "weights.csv"), slurp(dir / "b" / "weights.csv"));
}

TEST(Commands, EvalWithoutReferenceFails) {
  const auto dir = scratch("noref");
  auto cfg = quick(dir / "run");
  ASSERT_EQ(dispatch("train", cfg), kExitOk);
  cfg.reference = (dir / "missing.csv").string();
  const auto msg = error_of([&] { dispatch("eval", cfg); });
  EXPECT_EQ(msg.rfind("reference not found", 0), 0u) << msg;
}

TEST(Commands, ExportWritesGrid) {
  const auto dir = scratch("export");
  auto cfg = quick(dir / "run");
  ASSERT_EQ(dispatch("train", cfg), kExitOk);
  cfg.export_nx = 2;
  cfg.export_ny = 2;
  ASSERT_EQ(dispatch("export", cfg), kExitOk);
  bool found = false;
  for (const auto& e : fs::directory_iterator(dir / "run")) {
    const auto name = e.path().filename().string();
    if (name.rfind("field", 0) != 0) continue;
    found = true;
    const auto text = slurp(e.path());
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  }
  EXPECT_TRUE(found);
}

TEST(Commands, DivergedRunExitsNonZero) {
  const auto dir = scratch("diverge");
  auto cfg = quick(dir / "run");
  cfg.scheme = "gradnorm";
  cfg.lr = 0.1;
  cfg.gn_lr = 0.1;
  cfg.gn_alpha = 50.0;
  EXPECT_EQ(dispatch("train", cfg), kExitDiverged);
  const auto status = slurp(dir / "run" / "status.txt");
  EXPECT_NE(status.find("status=F"), std::string::npos) << status;
  EXPECT_NE(status.find("diverged_epoch="), std::string::npos) << status;
}

TEST(Commands, SweepWritesOneRowPerCell) {
  const auto dir = scratch("sweep");
  auto cfg = parse_config(nullptr, {{"train.epochs", "2"},
                                    {"train.batch", "8"},
                                    {"train.interior", "64"},
                                    {"train.boundary", "16"},
                                    {"train.initial", "16"},
                                    {"sweep.cases", "poiseuille,bfs-no-slip"},
                                    {"sweep.families", "tanh-mlp,kan"},
                                    {"sweep.schemes", "fixed,rba,gradnorm"},
                                    {"paths.output", dir.string()}},
                          false);
  ASSERT_EQ(dispatch("sweep", cfg), kExitOk);
  const auto text = slurp(dir / "sweep.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "scheme,family,case,field,rmse,final_loss,delta_pct,status");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 2 * 2 * 3);
}
