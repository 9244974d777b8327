#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "arl/cli.hpp"
#include "support/oracles.hpp"
#include "support/tables.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "arl");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = arl::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& s)
{
    std::ofstream os(p, std::ios::binary);
    os << s;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        std::random_device rd;
        dir_ = fs::temp_directory_path() / ("arl_cli_" + std::to_string(rd()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path mixture_config(const std::string& extra_arl = "", double alpha = 0.0)
    {
        const fs::path p = dir_ / "mixture.ini";
        spit(p, "[dataset]\nkind = mixture\nsamples_per_component = 40\n"
                "[model]\nencoder_hidden = 4\nembedding_dim = 2\ndiscriminator_hidden = 3\n"
                "[arl]\nvariant = maxent\nalpha = " +
                    std::to_string(alpha) + "\nepochs = 3\nbatch_size = 16\nseed = 5\n" + extra_arl +
                    "[adversary]\nkind = logistic\nmax_epochs = 20\npatience = 5\n");
        return p;
    }

    /// Nothing but the expected entries in dir_ (no temp leftovers).
    std::vector<std::string> entries() const
    {
        std::vector<std::string> out;
        for (const auto& e : fs::directory_iterator(dir_)) out.push_back(e.path().filename().string());
        std::sort(out.begin(), out.end());
        return out;
    }

    fs::path dir_;
};

} // namespace

TEST_F(Cli, TrainSmokeWritesThreeFiles)
{
    const auto cfg = mixture_config();
    const auto r = run_cli({"train", "--config", cfg.string(), "--out", (dir_ / "run").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::is_regular_file(dir_ / "run" / "checkpoint.txt"));
    EXPECT_TRUE(fs::is_regular_file(dir_ / "run" / "metrics.csv"));
    EXPECT_TRUE(fs::is_regular_file(dir_ / "run" / "manifest.txt"));
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_ / "run")) ++n;
    EXPECT_EQ(n, 3u);
    const std::string metrics = slurp(dir_ / "run" / "metrics.csv");
    EXPECT_EQ(metrics.substr(0, metrics.find('\n')), "epoch,v1,v2,v3,target_acc,disc_acc,disc_entropy_nats");
    EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 5); // header + epochs 0..3
    EXPECT_EQ(slurp(dir_ / "run" / "checkpoint.txt").substr(0, 10), "ARLCKPT v1");
}

TEST_F(Cli, TrainIsDeterministicAndManifestReproduces)
{
    const auto cfg = mixture_config();
    ASSERT_EQ(run_cli({"train", "--config", cfg.string(), "--out", (dir_ / "a").string()}).code, 0);
    ASSERT_EQ(run_cli({"train", "--config", cfg.string(), "--out", (dir_ / "b").string()}).code, 0);
    EXPECT_EQ(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "b" / "metrics.csv"));
    EXPECT_EQ(slurp(dir_ / "a" / "checkpoint.txt"), slurp(dir_ / "b" / "checkpoint.txt"));
    // the manifest is a config that reproduces the run byte for byte
    const auto r = run_cli({"train", "--config", (dir_ / "a" / "manifest.txt").string(), "--out", (dir_ / "c").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "c" / "metrics.csv"));
    EXPECT_EQ(slurp(dir_ / "a" / "checkpoint.txt"), slurp(dir_ / "c" / "checkpoint.txt"));
    EXPECT_EQ(slurp(dir_ / "a" / "manifest.txt"), slurp(dir_ / "c" / "manifest.txt"));
}

TEST_F(Cli, SeedOverrideChangesTheRun)
{
    const auto cfg = mixture_config();
    ASSERT_EQ(run_cli({"train", "--config", cfg.string(), "--out", (dir_ / "a").string()}).code, 0);
    ASSERT_EQ(run_cli({"train", "--config", cfg.string(), "--seed", "6", "--out", (dir_ / "b").string()}).code, 0);
    EXPECT_NE(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "b" / "metrics.csv"));
    EXPECT_NE(slurp(dir_ / "b" / "manifest.txt").find("\nseed = 6\n"), std::string::npos);
}

TEST_F(Cli, MissingDatasetFileLeavesNoOutput)
{
    const fs::path cfg = dir_ / "csv.ini";
    spit(cfg, "[dataset]\nkind = csv\npath = nowhere.csv\nschema = nowhere.schema\n[arl]\nseed = 1\n");
    const auto r = run_cli({"train", "--config", cfg.string(), "--out", (dir_ / "run").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("dataset.path"), std::string::npos) << r.err;
    EXPECT_EQ(entries(), std::vector<std::string>{"csv.ini"});
}

TEST_F(Cli, FailureDuringRunLeavesNoOutput)
{
    const fs::path csv = dir_ / "d.csv";
    spit(csv, "a,t,s\n1,x,p\n2,y,q\n3,x\n");
    const fs::path schema = dir_ / "d.schema";
    spit(schema, "a feature numeric\nt target categorical\ns sensitive categorical\n");
    const fs::path cfg = dir_ / "csv.ini";
    spit(cfg, "[dataset]\nkind = csv\npath = d.csv\nschema = d.schema\n[arl]\nseed = 1\nepochs = 1\n");
    const auto r = run_cli({"train", "--config", cfg.string(), "--out", (dir_ / "run").string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("d.csv:4"), std::string::npos) << r.err;
    EXPECT_EQ(entries(), (std::vector<std::string>{"csv.ini", "d.csv", "d.schema"}));
}

TEST_F(Cli, RefusesToOverwriteWithoutForce)
{
    const auto cfg = mixture_config();
    const std::string out = (dir_ / "run").string();
    ASSERT_EQ(run_cli({"train", "--config", cfg.string(), "--out", out}).code, 0);
    spit(dir_ / "run" / "marker", "x");
    const auto r = run_cli({"train", "--config", cfg.string(), "--out", out});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("--force"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir_ / "run" / "marker"));
    ASSERT_EQ(run_cli({"train", "--config", cfg.string(), "--out", out, "--force"}).code, 0);
    EXPECT_FALSE(fs::exists(dir_ / "run" / "marker"));
    EXPECT_TRUE(fs::exists(dir_ / "run" / "metrics.csv"));
}

TEST_F(Cli, SweepWritesOneDirectoryPerRunAndJobsDoNotChangeBytes)
{
    const auto cfg = mixture_config();
    ASSERT_EQ(run_cli({"train", "--config", cfg.string(), "--seed", "1,2", "--alpha", "0,0.5", "--out",
                       (dir_ / "s1").string()})
                  .code,
              0);
    ASSERT_EQ(run_cli({"train", "--config", cfg.string(), "--seed", "1,2", "--alpha", "0,0.5", "--jobs", "3", "--out",
                       (dir_ / "s3").string()})
                  .code,
              0);
    for (const char* sub : {"seed1_alpha0", "seed1_alpha0.5", "seed2_alpha0", "seed2_alpha0.5"}) {
        ASSERT_TRUE(fs::is_regular_file(dir_ / "s1" / sub / "metrics.csv")) << sub;
        EXPECT_EQ(slurp(dir_ / "s1" / sub / "metrics.csv"), slurp(dir_ / "s3" / sub / "metrics.csv")) << sub;
    }
    EXPECT_NE(slurp(dir_ / "s1" / "seed1_alpha0" / "metrics.csv"), slurp(dir_ / "s1" / "seed1_alpha0.5" / "metrics.csv"));
}

TEST_F(Cli, ConfigErrorsNameFieldPaths)
{
    const fs::path cfg = dir_ / "bad.ini";
    spit(cfg, "[arl]\nseed = 1\nlearnin_rate = 0.1\n");
    auto r = run_cli({"train", "--config", cfg.string(), "--out", (dir_ / "run").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("arl.learnin_rate"), std::string::npos) << r.err;
    spit(cfg, "[arl]\nalpha = -1\nseed = 1\n");
    r = run_cli({"train", "--config", cfg.string(), "--out", (dir_ / "run").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("arl.alpha"), std::string::npos) << r.err;
    spit(cfg, "[arl]\nepochs = 2\n");
    r = run_cli({"train", "--config", cfg.string(), "--out", (dir_ / "run").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("arl.seed"), std::string::npos) << r.err;
    spit(cfg, "[model]\nencoder_hidden = 4,x\n");
    r = run_cli({"train", "--config", cfg.string(), "--out", (dir_ / "run").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("model.encoder_hidden"), std::string::npos) << r.err;
    r = run_cli({"train", "--config", (dir_ / "absent.ini").string(), "--out", (dir_ / "run").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(run_cli({"train"}).code, 2);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
    EXPECT_EQ(run_cli({"--help"}).code, 0);
    EXPECT_FALSE(fs::exists(dir_ / "run"));
}

TEST_F(Cli, ConfigWriteReadRoundTrip)
{
    const auto cfg = arl::read_config(mixture_config("encoder_learning_rate = 0.003\n").string());
    EXPECT_EQ(cfg.arl.encoder_opt.learning_rate, 0.003);
    EXPECT_EQ(cfg.arl.predictor_opt.learning_rate, 1e-3);
    std::ostringstream a;
    arl::write_config(a, cfg);
    std::istringstream in(a.str());
    const auto back = arl::parse_config(in, "mem", dir_);
    std::ostringstream b;
    arl::write_config(b, back);
    EXPECT_EQ(a.str(), b.str());
}

TEST_F(Cli, AdversaryWritesTradeoffRowDeterministically)
{
    const auto cfg = mixture_config();
    ASSERT_EQ(run_cli({"train", "--config", cfg.string(), "--out", (dir_ / "run").string()}).code, 0);
    const std::string manifest = (dir_ / "run" / "manifest.txt").string();
    const std::string ckpt = (dir_ / "run" / "checkpoint.txt").string();
    auto r = run_cli({"adversary", "--config", manifest, "--checkpoint", ckpt, "--out", (dir_ / "a1").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_EQ(run_cli({"adversary", "--config", manifest, "--checkpoint", ckpt, "--out", (dir_ / "a2").string()}).code, 0);
    const std::string row = slurp(dir_ / "a1" / "tradeoff.csv");
    EXPECT_EQ(row, slurp(dir_ / "a2" / "tradeoff.csv"));
    std::istringstream is(row);
    const auto pts = arl::eval::read_tradeoff_csv(is, "tradeoff.csv");
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_EQ(pts[0].variant, "maxent");
    EXPECT_EQ(pts[0].seed, 5u);
    EXPECT_GE(pts[0].target_acc, 0.0);
    EXPECT_LE(pts[0].adv_acc, 100.0);
    EXPECT_LE(pts[0].adv_entropy, std::log(2.0) + 1e-12);

    r = run_cli({"adversary", "--config", manifest, "--checkpoint", (dir_ / "none.txt").string(), "--out",
                 (dir_ / "a3").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(fs::exists(dir_ / "a3"));
}

TEST_F(Cli, AdversaryRejectsCheckpointWithoutEncoder)
{
    const auto cfg = mixture_config();
    arl::nn::Mlp pred(arl::nn::Role::predictor, {2, {}, 2, arl::nn::Activation::relu, 1});
    {
        std::ofstream os(dir_ / "pred.txt");
        arl::nn::write_checkpoint(os, {&pred});
    }
    const auto r = run_cli({"adversary", "--config", cfg.string(), "--checkpoint", (dir_ / "pred.txt").string(), "--out",
                            (dir_ / "a").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("role"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir_ / "a"));
}

TEST_F(Cli, DynamicsWritesGridTrajectoryReport)
{
    auto r = run_cli({"dynamics", "--variant", "ml", "--alpha", "1", "--start", "0", "0", "0", "--steps", "10",
                      "--grid-n", "3", "--out", (dir_ / "d").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string grid = slurp(dir_ / "d" / "grid.csv");
    EXPECT_EQ(std::count(grid.begin(), grid.end(), '\n'), 1 + 27);
    const std::string traj = slurp(dir_ / "d" / "trajectory.csv");
    EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 1 + 11);
    const std::string report = slurp(dir_ / "d" / "report.txt");
    EXPECT_NE(report.find("variant = ml"), std::string::npos);
    EXPECT_NE(report.find("trajectory.final = 0 0 0"), std::string::npos) << report;
    EXPECT_NE(report.find("trajectory.final_field_norm = 0\n"), std::string::npos) << report;

    EXPECT_EQ(run_cli({"dynamics", "--game-form", "cubic", "--out", (dir_ / "e").string()}).code, 2);
    EXPECT_EQ(run_cli({"dynamics", "--dt", "0", "--out", (dir_ / "e").string()}).code, 2);
    EXPECT_FALSE(fs::exists(dir_ / "e"));
}

TEST_F(Cli, DynamicsFrozenCoordinateStaysPut)
{
    ASSERT_EQ(run_cli({"dynamics", "--variant", "maxent", "--start", "0.008", "0.006", "0.004", "--frozen", "w3",
                       "--steps", "100", "--record-every", "0", "--out", (dir_ / "d").string()})
                  .code,
              0);
    std::istringstream is(slurp(dir_ / "d" / "trajectory.csv"));
    const auto t = arl::data::parse_csv(is, "trajectory.csv");
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[1][3], t.rows[0][3]);
    EXPECT_NE(t.rows[1][1], t.rows[0][1]);
}

TEST_F(Cli, ParetoMlCifar10RowsAllRetainedAndMatchMonteCarlo)
{
    const auto sets = arl::testing::published_sets();
    const auto& s = *std::find_if(sets.begin(), sets.end(), [](const auto& x) { return x.name == "cifar10_accuracy_ml"; });
    std::ostringstream csv;
    arl::eval::write_tradeoff_header(csv);
    for (const auto& p : arl::testing::as_tradeoff(s)) arl::eval::write_tradeoff_row(csv, p);
    spit(dir_ / "ml.csv", csv.str());
    const auto r = run_cli({"pareto", (dir_ / "ml.csv").string(), "--objective", "accuracy", "--m", "10", "--out",
                            (dir_ / "p").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string front = slurp(dir_ / "p" / "front.csv");
    EXPECT_NE(front.find("input_points=6 retained=6"), std::string::npos) << front;
    const double hv = std::stod(front.substr(front.find("hv=") + 3));
    const auto mc = arl::testing::monte_carlo_hypervolume(arl::testing::oriented_unit(s), 1000000, 77);
    EXPECT_NEAR(hv, mc.value, 3 * mc.standard_error);
}

TEST_F(Cli, ParetoSingleRowAndDuplicates)
{
    spit(dir_ / "one.csv", "variant,alpha,seed,target_acc,adv_acc,adv_entropy\nml,1,0,80,30,\n");
    ASSERT_EQ(run_cli({"pareto", (dir_ / "one.csv").string(), "--m", "10", "--out", (dir_ / "p1").string()}).code, 0);
    std::string front = slurp(dir_ / "p1" / "front.csv");
    // box [0, 0.8] x [0.3, 1] above the point
    EXPECT_NEAR(std::stod(front.substr(front.find("hv=") + 3)), 0.8 * 0.7, 1e-12) << front;

    spit(dir_ / "dup.csv", "variant,alpha,seed,target_acc,adv_acc,adv_entropy\nml,1,0,80,30,\nml,1,0,80,30,\nml,1,1,70,20,\n");
    ASSERT_EQ(run_cli({"pareto", (dir_ / "dup.csv").string(), (dir_ / "one.csv").string(), "--m", "10", "--out",
                       (dir_ / "p2").string()})
                  .code,
              0);
    front = slurp(dir_ / "p2" / "front.csv");
    EXPECT_NE(front.find("input_points=4 retained=2"), std::string::npos) << front;
}

TEST_F(Cli, ParetoMalformedRowNamesFileAndLine)
{
    spit(dir_ / "bad.csv", "variant,alpha,seed,target_acc,adv_acc,adv_entropy\nml,1,0,80,30,\nml,1,0,80,oops,\n");
    const auto r = run_cli({"pareto", (dir_ / "bad.csv").string(), "--m", "10", "--out", (dir_ / "p").string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("bad.csv:3"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir_ / "p"));
    EXPECT_EQ(run_cli({"pareto", (dir_ / "missing.csv").string(), "--m", "10", "--out", (dir_ / "p").string()}).code, 2);
}

TEST_F(Cli, GenDataIsDeterministic)
{
    ASSERT_EQ(run_cli({"gen-data", "--seed", "3", "--samples-per-component", "25", "--out", (dir_ / "g1").string()}).code, 0);
    ASSERT_EQ(run_cli({"gen-data", "--seed", "3", "--samples-per-component", "25", "--out", (dir_ / "g2").string()}).code, 0);
    const std::string a = slurp(dir_ / "g1" / "data.csv");
    EXPECT_EQ(a, slurp(dir_ / "g2" / "data.csv"));
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 100);
    EXPECT_EQ(a.substr(0, a.find('\n')), "x0,x1,target,sensitive");
    EXPECT_EQ(run_cli({"gen-data", "--sigma", "-1", "--out", (dir_ / "g3").string()}).code, 2);
}

TEST(ShippedConfigs, AllParse)
{
    for (const char* name : {"mixture.ml", "mixture.maxent", "german.ml", "german.maxent", "adult.ml", "adult.maxent",
                             "lineargame.ml", "lineargame.maxent"}) {
        const std::string path = std::string(ARL_CONFIG_DIR) + "/" + name;
        ASSERT_TRUE(fs::exists(path)) << path;
        const auto cfg = arl::read_config(path);
        if (std::string(name).rfind("lineargame", 0) == 0) continue;
        EXPECT_NO_THROW(arl::validate_for_training(cfg)) << name;
        EXPECT_EQ(arl::to_string(cfg.arl.variant), std::string(name).substr(std::string(name).find('.') + 1)) << name;
    }
}
