#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "blockopinf/pipeline/pipeline.hpp"

using namespace bopinf;
namespace pl = bopinf::pipeline;
namespace fs = std::filesystem;

namespace {

const std::string kSmallConfig = R"([fom]
steps = 200
[train]
k_train = 100
[regsearch]
lo = 1e-4
hi = 1e0
count = 2
refine = false
[predict]
steps = 200
[compare]
reps = 3
calls = 50
[flutter]
conditions = )" + std::string(BOPINF_DATA_DIR) + "/flow_conditions.csv\n";

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("bopinf_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& text, const std::string& name = "config.ini") {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  CliResult cli(const std::string& args) {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd =
        std::string("\"") + BOPINF_CLI + "\" " + args + " > \"" + out.string() + "\" 2> \"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = pl::read_file(out);
    r.err = pl::read_file(err);
    return r;
  }

  CliResult run_small(const fs::path& out, const std::string& stages, const std::string& extra = "") {
    const auto cfg = write_config(kSmallConfig + extra);
    return cli("-c \"" + cfg.string() + "\" -o \"" + out.string() + "\" run --stages " + stages);
  }

  static std::map<std::string, std::string> hashes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : pl::build_manifest(dir)) out[e.name] = e.sha256;
    return out;
  }

  fs::path dir_;
};

const char* kTrainStages = "simulate,preprocess,pod,search,train,predict,evaluate";

}  // namespace

TEST_F(PipelineTest, DefaultConfigFullRun) {
  const auto out = dir_ / "out";
  const auto r = cli("-c \"" + std::string(BOPINF_CONFIG_DIR) + "/default.ini\" -o \"" + out.string() + "\" run");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = pl::json::parse(pl::read_file(out / "manifest.json"));
  std::map<std::string, std::string> listed;
  for (const auto& f : manifest.at("files")) listed[f.at("name")] = f.at("sha256");
  for (const char* name : {"fom_snapshots.opif", "operators_block.opio", "operators_monolithic.opio",
                           "prediction_block.csv", "prediction_monolithic.csv", "errors.csv", "counts.csv",
                           "flow_conditions.csv"})
    EXPECT_TRUE(listed.count(name)) << name;
  EXPECT_FALSE(listed.count("timing.csv"));
  for (const auto& [name, hash] : listed) EXPECT_EQ(pl::sha256_hex(pl::read_file(out / name)), hash) << name;
}

TEST_F(PipelineTest, IdenticalRunsAreByteIdentical) {
  const auto a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(run_small(a, kTrainStages).code, 0);
  ASSERT_EQ(run_small(b, kTrainStages).code, 0);
  const auto ha = hashes(a), hb = hashes(b);
  EXPECT_EQ(ha, hb);
  EXPECT_EQ(pl::read_file(a / "manifest.json"), pl::read_file(b / "manifest.json"));
  EXPECT_GE(ha.size(), 15u);
}

TEST_F(PipelineTest, SeedDrivesFluidPerturbation) {
  const auto cfg = write_config(R"([fom]
steps = 50
fluid_perturbation = 0.01
[train]
k_train = 20
)");
  auto simulate = [&](const fs::path& out, const std::string& seed) {
    return cli("-c \"" + cfg.string() + "\" -o \"" + out.string() + "\" --seed " + seed + " simulate").code;
  };
  ASSERT_EQ(simulate(dir_ / "a", "3"), 0);
  ASSERT_EQ(simulate(dir_ / "b", "3"), 0);
  ASSERT_EQ(simulate(dir_ / "c", "4"), 0);
  EXPECT_EQ(hashes(dir_ / "a"), hashes(dir_ / "b"));
  EXPECT_NE(hashes(dir_ / "a").at("fom_snapshots.opif"), hashes(dir_ / "c").at("fom_snapshots.opif"));
}

TEST_F(PipelineTest, DownstreamRerunLeavesUpstreamUntouched) {
  const auto out = dir_ / "out";
  ASSERT_EQ(run_small(out, kTrainStages).code, 0);
  const auto before = hashes(out);
  ASSERT_EQ(run_small(out, "predict,evaluate").code, 0);
  const auto after = hashes(out);
  EXPECT_EQ(before, after);
}

TEST_F(PipelineTest, CompareEmitsTwoMethodRowsPerQoi) {
  const auto out = dir_ / "out";
  ASSERT_EQ(run_small(out, std::string(kTrainStages) + ",compare").code, 0);
  std::istringstream in(pl::read_file(out / "compare.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "qoi,method,eps_rel,parameters");
  std::map<std::string, std::map<std::string, long>> params;
  while (std::getline(in, line)) {
    const auto cells = pl::detail::split_list(line);
    ASSERT_EQ(cells.size(), 4u);
    EXPECT_TRUE(params[cells[0]].emplace(cells[1], std::stol(cells[3])).second);
  }
  ASSERT_EQ(params.size(), 3u);
  for (const auto& [qoi, m] : params) {
    ASSERT_EQ(m.size(), 2u) << qoi;
    EXPECT_EQ(m.at("block"), 560);
    EXPECT_EQ(m.at("monolithic"), 2448);
  }
  std::istringstream timing(pl::read_file(out / "timing.csv"));
  std::getline(timing, line);
  EXPECT_EQ(line, "method,r_s,r_f,reps,calls_per_rep,median_ns,p25_ns,p75_ns");
}

TEST_F(PipelineTest, UnknownConfigKeyExitsOneNamingKey) {
  const auto cfg = write_config("[train]\nk_trian = 300\n");
  const auto r = cli("-c \"" + cfg.string() + "\" -o \"" + (dir_ / "out").string() + "\" simulate");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("train.k_trian"), std::string::npos) << r.err;
}

TEST_F(PipelineTest, BadOptionOrValueExitsOne) {
  EXPECT_EQ(cli("--no-such-flag simulate").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("-o \"" + dir_.string() + "\" run --stages simulate,teleport").code, 1);
  const auto cfg = write_config("[fom]\nnu = -1\n");
  EXPECT_EQ(cli("-c \"" + cfg.string() + "\" simulate").code, 1);
  EXPECT_EQ(cli("-c \"" + (dir_ / "missing.ini").string() + "\" simulate").code, 1);
}

TEST_F(PipelineTest, MissingStageInputExitsTwo) {
  const auto out = dir_ / "out";
  const auto r = run_small(out, "predict");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("missing stage input"), std::string::npos) << r.err;
  EXPECT_EQ(run_small(dir_ / "empty", "compare").code, 2);
}

TEST_F(PipelineTest, CorruptArtifactExitsTwo) {
  const auto out = dir_ / "out";
  ASSERT_EQ(run_small(out, "simulate").code, 0);
  auto bytes = pl::read_file(out / "fom_snapshots.opif");
  bytes[0] = 'Z';
  pl::write_text(out / "fom_snapshots.opif", bytes);
  EXPECT_EQ(run_small(out, "preprocess").code, 2);
  pl::write_text(out / "fom_snapshots.opif", bytes.substr(0, 40));
  EXPECT_EQ(run_small(out, "preprocess").code, 2);
}

TEST_F(PipelineTest, InfeasibleSearchExitsFourWithLog) {
  const auto out = dir_ / "out";
  const auto tight = write_config(R"([fom]
steps = 200
[train]
k_train = 100
methods = block
[regsearch]
lo = 1e-4
hi = 1e0
count = 2
refine = false
alpha = 1e-9
)",
                                  "tight.ini");
  const auto s =
      cli("-c \"" + tight.string() + "\" -o \"" + out.string() + "\" run --stages simulate,preprocess,pod,search");
  EXPECT_EQ(s.code, 4) << s.err;
  EXPECT_TRUE(fs::exists(out / "search_block.csv"));
}

TEST_F(PipelineTest, FlutterSubcommand) {
  const auto out = dir_ / "out";
  const auto r = cli("-o \"" + out.string() + "\" flutter --conditions \"" + BOPINF_DATA_DIR + "/flow_conditions.csv\"");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("reynolds_number"), std::string::npos);
  std::istringstream in(pl::read_file(out / "flow_conditions.csv"));
  std::string line;
  Index rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 9);
  EXPECT_EQ(cli("-o \"" + out.string() + "\" flutter --conditions \"" + (dir_ / "none.csv").string() + "\"").code, 2);
  EXPECT_EQ(cli("-o \"" + out.string() + "\" flutter").code, 1);
}

TEST(PipelineConfig, DefaultsAndStrictParsing) {
  const auto c = pl::parse_config_text("");
  EXPECT_EQ(c.train.k_train, 300);
  EXPECT_EQ(c.pod.r_f, 8);
  EXPECT_EQ(c.fom.gvel_perturbation, 0.1);
  EXPECT_EQ(c.predict_steps(), 1000);
  EXPECT_THROW(pl::parse_config_text("[nope]\na = 1\n"), ConfigError);
  EXPECT_THROW(pl::parse_config_text("[fom]\nsteps = ten\n"), ConfigError);
  EXPECT_THROW(pl::parse_config_text("[fom]\nnu = 1e999\n"), ConfigError);
  EXPECT_THROW(pl::parse_config_text("[train]\nmethods = hybrid\n"), ConfigError);
  EXPECT_THROW(pl::parse_config_text("[train]\nk_train = 5000\n"), ConfigError);
  EXPECT_THROW(pl::parse_config_text("[regsearch]\nspacing = cubic\n"), ConfigError);
  EXPECT_THROW(pl::parse_config_text("[fom\n"), ConfigError);
  const auto d = pl::parse_config_text("[regsearch]\nlo = 0.5\nhi = 0.5\n[fom]\nfrequencies = 1, 2, 3, 4, 5\n");
  EXPECT_EQ(d.regsearch.grid.axes[0].values(), std::vector<double>{0.5});
  EXPECT_EQ(d.fom.frequencies_hz.size(), 5u);
}

TEST(PipelineConfig, ShippedConfigParses) {
  const auto c = pl::load_config(fs::path(BOPINF_CONFIG_DIR) / "default.ini");
  EXPECT_EQ(c.fom.n_f, 64);
  EXPECT_EQ(c.train.methods.size(), 2u);
  EXPECT_TRUE(fs::exists(c.resolve(c.flutter.conditions)));
}

TEST(PipelineStages, ParseOrdersAndDeduplicates) {
  const auto s = pl::parse_stages("evaluate, simulate,train,simulate");
  EXPECT_EQ(s, (std::vector<pl::Stage>{pl::Stage::simulate, pl::Stage::train, pl::Stage::evaluate}));
  EXPECT_THROW(pl::parse_stages("simulate,fly"), ConfigError);
}

TEST(PipelineExitCodes, Mapping) {
  EXPECT_EQ(pl::exit_code(ConfigError("x")), 1);
  EXPECT_EQ(pl::exit_code(pl::MissingInputError("x")), 2);
  EXPECT_EQ(pl::exit_code(FormatError("x", 0)), 2);
  EXPECT_EQ(pl::exit_code(NumericError("x")), 3);
  EXPECT_EQ(pl::exit_code(BlowUpError("x", 4)), 3);
  EXPECT_EQ(pl::exit_code(NoFeasiblePointError("x", {})), 4);
}

TEST(PipelineHash, KnownDigest) {
  EXPECT_EQ(pl::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(pl::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
