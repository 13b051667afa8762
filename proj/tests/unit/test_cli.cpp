#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "afmm/io.hpp"

namespace fs = std::filesystem;

#ifndef AFMM_CLI_PATH
#error "AFMM_CLI_PATH must point at the afmm executable"
#endif

namespace {

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("afmm_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

// Runs the CLI with stderr captured; returns the exit status.
int run(const std::string& args, const fs::path& err_file) {
  const std::string cmd = std::string(AFMM_CLI_PATH) + " " + args + " > /dev/null 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

const std::string kFitFlags = " --iters 2000 --burn 1000 --thin 5 --calib-reps 3000 --seed 4";

}  // namespace

TEST(Cli, SimulateFitMetricsRoundTrip) {
  Scratch s("roundtrip");
  const auto err = s.dir / "err.txt";
  const auto sim = s.dir / "sim";
  const auto fit = s.dir / "fit";
  ASSERT_EQ(run("simulate --type type1 --kplus 2 --n 100 --seed 3 --out-dir " + sim.string(), err), 0) << slurp(err);
  ASSERT_TRUE(fs::exists(sim / "data.csv"));
  ASSERT_TRUE(fs::exists(sim / "truth.csv"));
  ASSERT_EQ(run("fit --data " + (sim / "data.csv").string() + " --U 2" + kFitFlags + " --out-dir " + fit.string(), err),
            0)
      << slurp(err);
  for (const char* f : {"manifest.json", "kplus_posterior.csv", "coclustering.csv", "partition.csv", "fitted.csv"}) {
    EXPECT_TRUE(fs::exists(fit / f)) << f;
  }
  ASSERT_EQ(run("metrics --run-dir " + fit.string() + " --truth " + (sim / "truth.csv").string(), err), 0)
      << slurp(err);
  const auto j = afmm::io::read_json((fit / "metrics.json").string());
  for (const char* key : {"kplus_mode", "point_clusters", "sd_ccp", "mse", "pwss", "mode_bias", "ccprob_error", "ari"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.at("kplus_mode").get<int>(), 2);
  EXPECT_GT(j.at("ari").get<double>(), 0.9);
  const auto m = afmm::io::read_json((fit / "manifest.json").string());
  EXPECT_EQ(m.at("status").get<std::string>(), "complete");
  EXPECT_EQ(m.at("seed").get<int>(), 4);
}

TEST(Cli, MetricsWithoutTruthOmitsTruthFields) {
  Scratch s("notruth");
  const auto err = s.dir / "err.txt";
  ASSERT_EQ(run("simulate --type type1 --kplus 2 --n 40 --seed 5 --out-dir " + (s.dir / "sim").string(), err), 0);
  ASSERT_EQ(run("fit --data " + (s.dir / "sim" / "data.csv").string() + " --U 2" + kFitFlags + " --out-dir " +
                    (s.dir / "fit").string(),
                err),
            0)
      << slurp(err);
  ASSERT_EQ(run("metrics --run-dir " + (s.dir / "fit").string(), err), 0) << slurp(err);
  const auto j = afmm::io::read_json((s.dir / "fit" / "metrics.json").string());
  EXPECT_TRUE(j.contains("sd_ccp"));
  EXPECT_TRUE(j.contains("mse"));
  EXPECT_FALSE(j.contains("ari"));
  EXPECT_FALSE(j.contains("pwss"));
  EXPECT_FALSE(j.contains("ccprob_error"));
}

TEST(Cli, InvalidCsvReportsRow) {
  Scratch s("badcsv");
  const auto err = s.dir / "err.txt";
  {
    std::ofstream out(s.dir / "data.csv");
    out << "y\n1.0\n2.5\nabc\n3.0\n";
  }
  EXPECT_EQ(run("fit --data " + (s.dir / "data.csv").string() + " --U 2 --out-dir " + (s.dir / "fit").string(), err), 3);
  const auto msg = slurp(err);
  EXPECT_NE(msg.find("row 4"), std::string::npos) << msg;
  EXPECT_EQ(std::count(msg.begin(), msg.end(), '\n'), 1) << msg;
}

TEST(Cli, UsageErrors) {
  Scratch s("usage");
  const auto err = s.dir / "err.txt";
  EXPECT_EQ(run("fit", err), 2);
  EXPECT_EQ(run("induced-prior --family nope", err), 2);
  EXPECT_EQ(run("calibrate --U 2 --tp 1.5 --out " + (s.dir / "c.json").string(), err), 2);
}

TEST(Cli, InducedPriorWritesPmf) {
  Scratch s("prior");
  const auto err = s.dir / "err.txt";
  const auto out = s.dir / "prior.csv";
  ASSERT_EQ(run("induced-prior --family asym --K 30 --U 10 --alpha1 10 --alpha2 0.001 --n 100 --reps 5000 --seed 2 "
                "--out " + out.string(),
                err),
            0)
      << slurp(err);
  const auto text = slurp(out);
  EXPECT_EQ(text.rfind("kplus,probability,mc_se\n", 0), 0u);
  const auto p = afmm::io::read_column(out.string(), "probability");
  double total = 0.0;
  for (double v : p) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Cli, FitIsByteIdenticalUnderSeed) {
  Scratch s("determinism");
  const auto err = s.dir / "err.txt";
  ASSERT_EQ(run("simulate --type type2 --U 3 --n 60 --seed 9 --out-dir " + (s.dir / "sim").string(), err), 0);
  const std::string cmd =
      "fit --data " + (s.dir / "sim" / "data.csv").string() + " --U 3" + kFitFlags + " --out-dir " + (s.dir / "fit").string();
  ASSERT_EQ(run(cmd, err), 0) << slurp(err);
  const auto first = snapshot(s.dir / "fit");
  fs::remove_all(s.dir / "fit");
  ASSERT_EQ(run(cmd, err), 0) << slurp(err);
  const auto second = snapshot(s.dir / "fit");
  ASSERT_EQ(first.size(), second.size());
  for (const auto& [name, bytes] : first) EXPECT_TRUE(second.at(name) == bytes) << name;
}

TEST(Cli, SensitivityWritesOneRowPerU) {
  Scratch s("sensitivity");
  const auto err = s.dir / "err.txt";
  ASSERT_EQ(run("simulate --type type1 --kplus 3 --n 60 --seed 6 --out-dir " + (s.dir / "sim").string(), err), 0);
  ASSERT_EQ(run("sensitivity --data " + (s.dir / "sim" / "data.csv").string() + " --U-min 2 --U-max 5" + kFitFlags +
                    " --out-dir " + (s.dir / "sweep").string(),
                err),
            0)
      << slurp(err);
  const auto table = s.dir / "sweep" / "sensitivity.csv";
  EXPECT_EQ(slurp(table).rfind("U,lambda,kplus_mode,point_clusters,mse,sd_ccp\n", 0), 0u);
  const auto us = afmm::io::read_column(table.string(), "U");
  EXPECT_EQ(us, (std::vector<double>{2, 3, 4, 5}));
  for (int U = 2; U <= 5; ++U) {
    EXPECT_TRUE(fs::exists(s.dir / "sweep" / ("coclustering_U" + std::to_string(U) + ".csv"))) << U;
  }
  EXPECT_EQ(run("sensitivity --data " + (s.dir / "sim" / "data.csv").string() + " --U-min 5 --U-max 3 --out-dir " +
                    (s.dir / "bad").string(),
                err),
            2);
}
