#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct ScratchDir {
  fs::path path = fs::temp_directory_path() / ("idmaft_cli_" + std::to_string(::getpid()));
  ScratchDir() {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

const fs::path& root() {
  static const ScratchDir dir;
  return dir.path;
}

int run(const std::string& args) {
  const std::string cmd = std::string(IDMAFT_PATH) + " " + args + " --quiet > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

std::string write_config(const std::string& name, const std::string& text) {
  const fs::path p = root() / name;
  std::ofstream(p) << text;
  return p.string();
}

const char* kSmall =
    "[scenario]\nn = 150\nsigma = 1\nreplicates = 2\n[fit]\nmax_iterations = 15\n";

// A simulated dataset shared by the commands that read one.
const fs::path& dataset() {
  static const fs::path csv = [] {
    const std::string cfg = write_config("small.ini", kSmall);
    const fs::path dir = root() / "sim";
    REQUIRE(run("simulate --config " + cfg + " --seed 5 --output-dir " + dir.string()) == 0);
    return dir / "data.csv";
  }();
  return csv;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate is byte-identical under a fixed seed") {
    const std::string cfg = write_config("small.ini", kSmall);
    const fs::path a = root() / "sim_a", b = root() / "sim_b";
    REQUIRE(run("simulate --config " + cfg + " --seed 9 --output-dir " + a.string()) == 0);
    REQUIRE(run("simulate --config " + cfg + " --seed 9 --output-dir " + b.string()) == 0);
    for (const char* f : {"data.csv", "truth.csv", "simulation.json"}) {
      REQUIRE(fs::exists(a / f));
      CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(line_count(a / "data.csv") == 151);
  }

  TEST_CASE("fit writes the fit document and three hazard grids") {
    const std::string cfg = write_config("small.ini", kSmall);
    const fs::path out = root() / "fit";
    REQUIRE(run("fit --config " + cfg + " --input " + dataset().string() + " --output-dir " +
                out.string()) == 0);
    for (const char* f : {"fit.json", "hazard_01.csv", "hazard_02.csv", "hazard_12.csv",
                          "iterations.csv"})
      CHECK(fs::exists(out / f));
    const auto doc = read_json(out / "fit.json");
    CHECK(doc.contains("sigma"));
    CHECK(doc["transitions"].size() == 3);
    CHECK(line_count(out / "iterations.csv") == doc["iterations"].get<std::size_t>() + 1);
  }

  TEST_CASE("no-frailty output omits sigma") {
    const std::string cfg = write_config("small.ini", kSmall);
    const fs::path a = root() / "nf_flag", b = root() / "nf_cmd";
    REQUIRE(run("fit --no-frailty --config " + cfg + " --input " + dataset().string() +
                " --output-dir " + a.string()) == 0);
    REQUIRE(run("fit-no-frailty --config " + cfg + " --input " + dataset().string() +
                " --output-dir " + b.string()) == 0);
    CHECK_FALSE(read_json(a / "fit.json").contains("sigma"));
    CHECK(slurp(a / "fit.json") == slurp(b / "fit.json"));
    CHECK(fs::exists(a / "hazard_12.csv"));
  }

  TEST_CASE("zero 1->2 events exits 2 with ZeroEvents") {
    const fs::path csv = root() / "no12.csv";
    {
      std::ifstream in(dataset());
      std::ofstream out(csv);
      std::string line;
      std::getline(in, line);
      out << line << '\n';
      // delta3 is the fifth column
      while (std::getline(in, line)) {
        std::size_t pos = 0;
        for (int c = 0; c < 4; ++c) pos = line.find(',', pos) + 1;
        const std::size_t end = line.find(',', pos);
        out << line.substr(0, pos) << '0' << line.substr(end) << '\n';
      }
    }
    const fs::path out = root() / "zero";
    CHECK(run("fit --input " + csv.string() + " --output-dir " + out.string()) == 2);
    REQUIRE(fs::exists(out / "error.json"));
    CHECK(read_json(out / "error.json")["error"] == "ZeroEvents");
  }

  TEST_CASE("input and usage errors exit 2") {
    const fs::path out = root() / "bad";
    CHECK(run("fit --input " + (root() / "missing.csv").string() + " --output-dir " +
              out.string()) == 2);
    CHECK(run("fit --output-dir " + out.string()) == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("fit --input " + dataset().string() + " --level 1.5 --output-dir " +
              out.string()) == 2);
    const std::string zero = write_config("zero.ini", "[scenario]\nreplicates = 0\n");
    CHECK(run("experiment --config " + zero + " --output-dir " + out.string()) == 2);
    const std::string unknown = write_config("unknown.ini", "[fit]\nbogus = 1\n");
    CHECK(run("fit --config " + unknown + " --input " + dataset().string() +
              " --output-dir " + out.string()) == 2);
  }

  TEST_CASE("registry-shaped data with raw-scale covariates fits") {
    // Nine covariates on their natural scales (age in years, receptor
    // levels in the thousands), none of them related to the outcomes.
    const fs::path csv = root() / "registry.csv";
    {
      std::ifstream in(dataset());
      std::ofstream out(csv);
      std::string line;
      std::getline(in, line);
      out << "v,w,delta1,delta2,delta3,age,meno,size,grade,nodes,pgr,er,hormon,chemo\n";
      std::uint64_t state = 12345;
      auto next = [&] {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) / 9007199254740992.0;
      };
      while (std::getline(in, line)) {
        std::size_t pos = 0;
        for (int c = 0; c < 5; ++c) pos = line.find(',', pos) + 1;
        out << line.substr(0, pos - 1) << ',' << 24 + static_cast<int>(66 * next()) << ','
            << (next() < 0.5) << ',' << static_cast<int>(3 * next()) << ','
            << 2 + (next() < 0.7) << ',' << static_cast<int>(30 * next() * next()) << ','
            << 5000 * next() * next() << ',' << 3000 * next() * next() << ','
            << (next() < 0.2) << ',' << (next() < 0.3) << '\n';
      }
    }
    const std::string cfg = write_config("small.ini", kSmall);
    CHECK(run("fit-no-frailty --input " + csv.string() + " --output-dir " +
              (root() / "registry_nf").string()) == 0);
    CHECK(run("fit --config " + cfg + " --input " + csv.string() + " --output-dir " +
              (root() / "registry").string()) == 0);
    CHECK(read_json(root() / "registry" / "fit.json")["covariate_names"].size() == 9);
  }

  TEST_CASE("gof writes four histograms and honours --bins") {
    const std::string cfg = write_config("small.ini", kSmall);
    const fs::path fit_dir = root() / "gof_fit", out = root() / "gof";
    REQUIRE(run("fit --config " + cfg + " --input " + dataset().string() + " --output-dir " +
                fit_dir.string()) == 0);
    REQUIRE(run("gof --input " + dataset().string() + " --fit " + (fit_dir / "fit.json").string() +
                " --bins 40 --output-dir " + out.string()) == 0);
    for (const char* f : {"rsp0_histogram.csv", "rsp12_histogram.csv", "survival0_histogram.csv",
                          "survival12_histogram.csv"})
      CHECK(line_count(out / f) == 41);
    CHECK(fs::exists(out / "gof.json"));

    const fs::path renamed = root() / "renamed.csv";
    {
      std::ifstream in(dataset());
      std::ofstream o(renamed);
      std::string header;
      std::getline(in, header);
      o << header << "_z\n" << in.rdbuf();
    }
    CHECK(run("gof --input " + renamed.string() + " --fit " + (fit_dir / "fit.json").string() +
              " --output-dir " + (root() / "gof_bad").string()) == 2);
  }

  TEST_CASE("outputs do not depend on --threads") {
    const std::string cfg = write_config("small.ini", kSmall);
    const std::string input = " --config " + cfg + " --input " + dataset().string() + " --seed 4";
    for (const std::string cmd : {"fit" + input, "bootstrap --no-frailty --bootstrap 3" + input}) {
      const fs::path a = root() / "t1", b = root() / "t3";
      fs::remove_all(a);
      fs::remove_all(b);
      REQUIRE(run(cmd + " --threads 1 --output-dir " + a.string()) == 0);
      REQUIRE(run(cmd + " --threads 3 --output-dir " + b.string()) == 0);
      for (const auto& entry : fs::directory_iterator(a)) {
        const fs::path name = entry.path().filename();
        CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name.string());
      }
    }
    CHECK(fs::exists(root() / "t1" / "inference.csv"));
  }

  TEST_CASE("experiment is byte-identical under a fixed seed") {
    const std::string cfg = write_config("exp.ini",
        "[scenario]\nn = 120\nsigma = 1\nreplicates = 2\n[fit]\nmax_iterations = 5\n");
    const fs::path a = root() / "exp_a", b = root() / "exp_b";
    REQUIRE(run("experiment --config " + cfg + " --seed 3 --threads 1 --output-dir " + a.string()) == 0);
    REQUIRE(run("experiment --config " + cfg + " --seed 3 --threads 2 --output-dir " + b.string()) == 0);
    for (const char* f : {"parameters.csv", "hazards.csv", "experiment.json"}) {
      REQUIRE(fs::exists(a / f));
      CHECK(slurp(a / f) == slurp(b / f));
    }
  }
}
