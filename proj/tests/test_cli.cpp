#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include <cstdlib>

#include <json.hpp>

#include "focalcal/commands.hpp"
#include "focalcal/io.hpp"
#include "focalcal/random.hpp"
#include "focalcal/temperature.hpp"
#include "focalcal/trainer.hpp"

using namespace focalcal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("focalcal_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path file(const std::string& name, const std::string& content) const {
    std::ofstream(path / name) << content;
    return path / name;
  }
};

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string logit_csv(const LogitSet& s) {
  std::ostringstream out;
  write_logit_csv(out, s);
  return out.str();
}

// Rows whose softmax confidences are 0.9, 0.8, 0.7, 0.4 with hits 1, 0, 1, 0.
std::string four_sample_csv() {
  std::ostringstream out;
  out << "label,logit_0,logit_1,logit_2\n";
  const double rows[4][3] = {{0.9, 0.05, 0.05}, {0.8, 0.1, 0.1}, {0.7, 0.2, 0.1}, {0.4, 0.3, 0.3}};
  const int labels[4] = {0, 1, 0, 1};
  for (int i = 0; i < 4; ++i) {
    out << labels[i];
    for (double p : rows[i]) out << ',' << format_double(std::log(p));
    out << '\n';
  }
  return out.str();
}

const char* kPerfect = "label,logit_0,logit_1\n0,60,0\n1,0,60\n";

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("logit csv parsing") {
    std::istringstream ok("label,logit_0,logit_1\r\n\r\n1,0.5,-2\r\n0,+3,1e-3\n");
    const auto s = parse_logit_csv(ok, "mem");
    CHECK(s.size() == 2);
    CHECK(s.classes() == 2);
    CHECK(s.row(1)[0] == 3.0);
    CHECK(s.label(0) == 1);

    auto error_of = [](const std::string& text) {
      std::istringstream in(text);
      try {
        parse_logit_csv(in, "f.csv");
      } catch (const InputError& e) {
        return std::string(e.what());
      }
      return std::string("no error");
    };
    CHECK(error_of("label,logit_0,logit_1\n0,1\n") == "f.csv:2: expected 3 fields, got 2");
    CHECK(error_of("label,logit_0,logit_1\n0,1,2\n0,1,x\n").rfind("f.csv:3: invalid number", 0) == 0);
    CHECK(error_of("label,logit_0,logit_1\n2,1,2\n").rfind("f.csv:2: label out of range", 0) == 0);
    CHECK(error_of("label,logit_0,logit_1\n-1,1,2\n").rfind("f.csv:2:", 0) == 0);
    CHECK(error_of("label,logit_0,logit_1\n0,1,inf\n").rfind("f.csv:2:", 0) == 0);
    CHECK(error_of("label,logit_0\n0,1\n").rfind("f.csv:1: need at least two", 0) == 0);
    CHECK(error_of("lbl,logit_0,logit_1\n").rfind("f.csv:1:", 0) == 0);
    CHECK(error_of("label,logit_1,logit_0\n").rfind("f.csv:1:", 0) == 0);
    CHECK(error_of("") == "f.csv: empty file");
    CHECK(error_of("label,logit_0,logit_1\n") == "f.csv: no data rows");
    CHECK_THROWS_AS(read_logit_csv("/nonexistent/x.csv"), InputError);
  }

  TEST_CASE("logit csv round trip keeps full precision") {
    RandomStream rng(71);
    std::vector<double> z;
    std::vector<int> y;
    for (int i = 0; i < 500; ++i) {
      for (int k = 0; k < 4; ++k) z.push_back(rng.normal(0.0, 1e3) * std::pow(10.0, rng.uniform(-300.0, 0.0)));
      y.push_back(static_cast<int>(rng.uniform_index(4)));
    }
    z[0] = 0.1;
    z[1] = -0.0;
    z[2] = 5e-324;
    const LogitSet s(4, z, y);
    std::istringstream in(logit_csv(s));
    CHECK(parse_logit_csv(in) == s);
  }

  TEST_CASE("report json") {
    const EvalSet e(2, {0.9, 0.1, 0.2, 0.8}, {0, 0});
    auto r = make_report(e, 10);
    const auto j = to_json(r);
    for (const char* key : {"ece", "adaece", "classwise_ece", "mce", "nll", "brier", "top1_error", "top5_error"}) {
      CHECK(j["metrics"].contains(key));
    }
    CHECK(j["n"] == 2);
    CHECK(j["k"] == 2);
    CHECK(j["bins"] == 10);
    CHECK_FALSE(j.contains("temperature"));
    const auto pct = to_json(r, true);
    CHECK(pct["metrics"]["top1_error"].get<double>() == doctest::Approx(50.0));
    CHECK(pct["metrics"]["nll"] == j["metrics"]["nll"]);
  }

  TEST_CASE("atomic writes replace the target") {
    TempDir dir;
    const auto p = dir.path / "a.txt";
    write_file_atomic(p, "one");
    write_file_atomic(p, "two");
    CHECK(read_all(p) == "two");
    CHECK_FALSE(fs::exists(dir.path / "a.txt.tmp"));
  }
}

TEST_SUITE("cli") {
  using namespace focalcal::cli;

  TEST_CASE("metrics command") {
    TempDir dir;
    std::ostringstream out, err;
    cli::MetricsOptions opt;
    opt.logits = dir.file("perfect.csv", kPerfect);
    REQUIRE(cmd_metrics(opt, out, err) == kOk);
    auto j = nlohmann::json::parse(out.str());
    // Off-class probabilities of e^-60 leave classwise ECE at rounding level.
    for (const char* key : {"ece", "adaece", "classwise_ece", "mce"}) CHECK(j["metrics"][key].get<double>() <= 1e-20);

    std::ostringstream out2;
    opt.logits = dir.file("four.csv", four_sample_csv());
    opt.bins = 2;
    REQUIRE(cmd_metrics(opt, out2, err) == kOk);
    j = nlohmann::json::parse(out2.str());
    CHECK(j["metrics"]["ece"].get<double>() == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(j["metrics"]["mce"].get<double>() == doctest::Approx(0.4).epsilon(1e-12));

    std::ostringstream out3;
    opt.bootstrap = 50;
    opt.seed = 3;
    REQUIRE(cmd_metrics(opt, out3, err) == kOk);
    j = nlohmann::json::parse(out3.str());
    CHECK(j["intervals"]["ece"].size() == 3);
    CHECK(j["intervals"]["ece"][2].get<double>() == 0.9);
    std::ostringstream out4;
    REQUIRE(cmd_metrics(opt, out4, err) == kOk);
    CHECK(out4.str() == out3.str());
  }

  TEST_CASE("metrics command errors") {
    TempDir dir;
    std::ostringstream out, err;
    cli::MetricsOptions opt;
    opt.logits = dir.path / "missing.csv";
    CHECK(cmd_metrics(opt, out, err) == kUsageError);
    CHECK(out.str().empty());

    opt.logits = dir.file("bad.csv", "label,logit_0,logit_1\n0,1,2\n1,oops,2\n");
    std::ostringstream err2;
    CHECK(cmd_metrics(opt, out, err2) == kUsageError);
    CHECK(err2.str().find("bad.csv:3:") != std::string::npos);
    CHECK(out.str().empty());

    opt.logits = dir.file("k1.csv", "label,logit_0\n0,1\n");
    CHECK(cmd_metrics(opt, out, err) == kUsageError);

    opt.logits = dir.file("ok.csv", kPerfect);
    opt.bins = 0;
    CHECK(cmd_metrics(opt, out, err) == kUsageError);
  }

  TEST_CASE("temp-scale command") {
    TempDir dir;
    const auto perfect = dir.file("perfect.csv", kPerfect);
    std::ostringstream out, err;
    cli::TempScaleOptions opt;
    opt.val = perfect;
    opt.test = perfect;
    REQUIRE(cmd_temp_scale(opt, out, err) == kOk);
    auto j = nlohmann::json::parse(out.str());
    CHECK(j["post_metrics"]["ece"].get<double>() == 0.0);
    CHECK(j["metrics"]["ece"].get<double>() == 0.0);
    CHECK(j["temperature"]["criterion"] == "ece");
    // ECE is 0 on every grid point where 60 / T saturates, so the tie rule picks the smallest T.
    CHECK(j["temperature"]["temperature"].get<double>() == 0.1);
    CHECK(j["validation"]["n"] == 2);

    // Overconfident: labels follow softmax(z / 3).
    RandomStream rng(72);
    std::vector<double> z;
    std::vector<int> y;
    for (int i = 0; i < 2000; ++i) {
      const double a = rng.normal(0.0, 4.0);
      z.insert(z.end(), {a, 0.0});
      y.push_back(rng.uniform() < 1.0 / (1.0 + std::exp(a / 3.0)) ? 1 : 0);
    }
    const LogitSet over(2, z, y);
    opt.val = opt.test = dir.file("over.csv", logit_csv(over));
    std::ostringstream out2;
    REQUIRE(cmd_temp_scale(opt, out2, err) == kOk);
    j = nlohmann::json::parse(out2.str());
    CHECK(j["temperature"]["temperature"].get<double>() > 1.0);
    CHECK(j["post_metrics"]["ece"].get<double>() <= j["metrics"]["ece"].get<double>());

    opt.criterion = "nll";
    std::ostringstream out3;
    REQUIRE(cmd_temp_scale(opt, out3, err) == kOk);
    j = nlohmann::json::parse(out3.str());
    CHECK(j["temperature"]["temperature"].get<double>() == fit_temperature_nll(over).temperature);
    CHECK(j["temperature"]["criterion"] == "nll");

    opt.criterion = "mse";
    CHECK(cmd_temp_scale(opt, out3, err) == kUsageError);
  }

  TEST_CASE("ood command") {
    TempDir dir;
    const auto roc = dir.path / "roc.csv";
    std::ostringstream out, err;
    cli::OodOptions opt;
    opt.in = opt.out = dir.file("same.csv", "label,logit_0,logit_1,logit_2\n0,1,2,3\n1,0,0,5\n2,1,1,1\n");
    opt.roc = roc;
    REQUIRE(cmd_ood(opt, out, err) == kOk);
    CHECK(nlohmann::json::parse(out.str())["auroc"].get<double>() == 0.5);
    CHECK(read_all(roc).rfind("fpr,tpr\n", 0) == 0);

    opt.in = dir.file("onehot.csv", "label,logit_0,logit_1,logit_2\n0,80,0,0\n1,0,80,0\n");
    opt.out = dir.file("uniform.csv", "label,logit_0,logit_1,logit_2\n0,1,1,1\n1,2,2,2\n2,0,0,0\n");
    std::ostringstream out2;
    REQUIRE(cmd_ood(opt, out2, err) == kOk);
    CHECK(nlohmann::json::parse(out2.str())["auroc"].get<double>() == 1.0);

    fs::remove(roc);
    opt.out = dir.file("k2.csv", kPerfect);
    std::ostringstream out3;
    CHECK(cmd_ood(opt, out3, err) == kUsageError);
    CHECK_FALSE(fs::exists(roc));
    CHECK(out3.str().empty());
  }

  TEST_CASE("train-toy command") {
    TempDir dir;
    std::ostringstream out, err;
    cli::TrainToyOptions opt;
    opt.seed = 5;
    opt.epochs = 30;
    opt.out_dir = dir.path / "ce";
    REQUIRE(cmd_train_toy(opt, out, err) == kOk);
    for (const char* f : {"epochs.csv", "model.json", "histogram.csv"}) CHECK(fs::exists(opt.out_dir / f));

    opt.out_dir = dir.path / "ce2";
    REQUIRE(cmd_train_toy(opt, out, err) == kOk);
    opt.loss = "focal";
    opt.gamma_policy = "fixed:0";
    opt.out_dir = dir.path / "focal0";
    REQUIRE(cmd_train_toy(opt, out, err) == kOk);
    for (const char* f : {"epochs.csv", "model.json", "histogram.csv"}) {
      CHECK(read_all(dir.path / "ce" / f) == read_all(dir.path / "ce2" / f));
      CHECK(read_all(dir.path / "ce" / f) == read_all(dir.path / "focal0" / f));
    }
    CHECK(read_all(dir.path / "ce" / "epochs.csv").rfind(std::string(kEpochCsvHeader) + "\n", 0) == 0);

    opt.gamma_policy = "sample:0.5=2";
    opt.out_dir = dir.path / "bad";
    CHECK(cmd_train_toy(opt, out, err) == kUsageError);
    CHECK_FALSE(fs::exists(opt.out_dir));
    opt.gamma_policy = "fixed:1";
    opt.loss = "hinge";
    CHECK(cmd_train_toy(opt, out, err) == kUsageError);
    opt.loss = "ce";
    opt.experiment = "resnet";
    CHECK(cmd_train_toy(opt, out, err) == kUsageError);

    opt.experiment = "mlp";
    opt.epochs = 2;
    opt.out_dir = dir.path / "mlp";
    CHECK(cmd_train_toy(opt, out, err) == kOk);
    CHECK(nlohmann::json::parse(read_all(opt.out_dir / "model.json"))["kind"] == "mlp");
  }

  TEST_CASE("gamma-star command") {
    auto run = [](cli::GammaStarOptions opt, int expect) {
      std::ostringstream out, err;
      CHECK(cmd_gamma_star(opt, out, err) == expect);
      return out.str();
    };
    CHECK(run({0.2, std::nullopt}, kOk) == "4.850554\n");
    CHECK(run({0.25, std::nullopt}, kOk) == "3.070227\n");
    CHECK(run({0.5, std::nullopt}, kOk) == "0.000000\n");
    CHECK(run({1.5, std::nullopt}, kUsageError).empty());
    CHECK(run({0.0, std::nullopt}, kUsageError).empty());
    CHECK(run({std::nullopt, std::nullopt}, kUsageError).empty());
    const auto policy = nlohmann::json::parse(run({std::nullopt, "0.2=0.2,1.0=0.25"}, kOk));
    CHECK(policy["kind"] == "sample");
    CHECK(policy["entries"][0][1].get<double>() == doctest::Approx(4.850554).epsilon(1e-6));
    CHECK(run({std::nullopt, "0.2=0.2,1.0=1.5"}, kUsageError).empty());
  }

  TEST_CASE("reliability command") {
    TempDir dir;
    std::ostringstream out, err;
    cli::ReliabilityOptions opt;
    opt.logits = dir.file("four.csv", four_sample_csv());
    opt.bins = 2;
    REQUIRE(cmd_reliability(opt, out, err) == kOk);
    std::istringstream in(out.str());
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 3);
  }

  TEST_CASE("seed from the environment") {
    ::setenv("FOCALCAL_SEED", "1234", 1);
    CHECK(default_seed() == 1234);
    ::setenv("FOCALCAL_SEED", "junk", 1);
    CHECK(default_seed() == kDefaultSeed);
    ::unsetenv("FOCALCAL_SEED");
    CHECK(default_seed() == kDefaultSeed);
  }
}
