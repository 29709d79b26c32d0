#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nqkd/cli.hpp"
#include "nqkd/error.hpp"

using namespace nqkd;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("nqkd_test_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string line(const std::string& text, int index) {
  std::istringstream in(text);
  std::string l;
  for (int i = 0; i <= index; ++i) std::getline(in, l);
  return l;
}

}  // namespace

TEST_CASE("sweep specification") {
  const auto s = cli::SweepSpec::parse("Q:0:0.3:4");
  CHECK(s.variable == "Q");
  const auto v = s.values();
  REQUIRE(v.size() == 4);
  CHECK(v.front() == 0.0);
  CHECK(v[1] == doctest::Approx(0.1));
  CHECK(v.back() == 0.3);
  CHECK(cli::SweepSpec::parse("N:3:6:2").values().size() == 4);
  CHECK_THROWS_AS(cli::SweepSpec::parse("Q:0:0.3"), InvalidArgument);
  CHECK_THROWS_AS(cli::SweepSpec::parse("Q:0.3:0:5"), InvalidArgument);
  CHECK_THROWS_AS(cli::SweepSpec::parse("Q:0:0.3:1"), InvalidArgument);
  CHECK_THROWS_AS(cli::SweepSpec::parse("T:0:0.3:5"), InvalidArgument);
  CHECK(cli::parse_party_list("2..4,inf").size() == 4);
  CHECK_THROWS_AS(cli::parse_party_list("5..3"), InvalidArgument);
  CHECK(cli::format_number(0.1) == "0.1");
  CHECK(cli::format_number(1.0 / 3.0) == "0.333333333");
}

TEST_CASE("thresholds table") {
  const auto r = run({"thresholds", "--kind", "qber", "--n", "2..17,inf"});
  CHECK(r.code == 0);
  CHECK(line(r.out, 0) == "N,threshold");
  CHECK(line(r.out, 1) == "2,0.126193083");
  CHECK(line(r.out, 17) == "inf,0.341071322");
  const auto g = run({"thresholds", "--kind", "gate", "--n", "3"});
  CHECK(line(g.out, 1).rfind("3,0.07257", 0) == 0);
  CHECK(run({"thresholds", "--kind", "gate", "--n", "inf"}).code == cli::kUsage);
  CHECK(run({"thresholds", "--kind", "bogus"}).code == cli::kUsage);
}

TEST_CASE("rate sweeps are byte-identical across runs") {
  const std::vector<std::string> args = {"rates", "--sweep", "Q:0:0.35:8", "--n", "2..8,inf"};
  const auto a = run(args);
  const auto b = run(args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(line(a.out, 0) == "N,Q,r_inf,R_nqkd,R_2qkd");
  CHECK(line(a.out, 1) == "2,0,1,1,1");
  const auto f = run({"rates", "--sweep", "fG:0:0.1:3", "--n", "3", "--topology", "router"});
  CHECK(f.code == 0);
  CHECK(line(f.out, 1) == "3,0,1,1,0.5");
  const auto n = run({"rates", "--sweep", "N:3:5:2", "--noise", "channel:0.01"});
  CHECK(line(n.out, 0) == "N,fC,r_inf,R_nqkd,R_2qkd");
  CHECK(line(n.out, 3).rfind("5,0.01,", 0) == 0);
  const auto j = run({"rates", "--sweep", "Q:0:0.1:2", "--n", "3", "--format", "json"});
  CHECK(nlohmann::json::parse(j.out).size() == 2);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"rates"}).code == cli::kUsage);
  CHECK(run({"rates", "--sweep", "Q:0:0:4"}).code == cli::kUsage);
  CHECK(run({"rates", "--sweep", "fG:0:0.1:3", "--n", "inf"}).code == cli::kUsage);
  CHECK(run({"rates", "--sweep", "Q:0:0.1:3", "--format", "xml"}).code == cli::kUsage);
  CHECK(run({"network", "--topology", "butterfly", "--n", "4"}).code == cli::kUsage);
  CHECK(run({"simulate", "--config", "/nonexistent.json"}).code == cli::kUsage);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("network comparisons") {
  auto report = [](std::vector<std::string> args) { return nlohmann::json::parse(run(args).out); };
  CHECK(report({"network", "--topology", "router", "--n", "3", "--noise", "gate:0.05"})["advantage"] == true);
  CHECK(report({"network", "--topology", "router", "--n", "3", "--noise", "gate:0.10"})["advantage"] == false);
  CHECK(report({"network", "--topology", "butterfly", "--n", "3"})["ratio"] == 2.0);
  CHECK(report({"network", "--topology", "router", "--n", "5"})["ratio"] == 4.0);

  const auto graph = temp_file("graph.json");
  std::ofstream(graph) << R"({"nodes":[{"id":"A","role":"alice"},{"id":"C","role":"router"},
    {"id":"B1","role":"bob"},{"id":"B2","role":"bob"},{"id":"B3","role":"bob"}],
    "edges":[{"from":"A","to":"C"},{"from":"C","to":"B1"},{"from":"C","to":"B2"},{"from":"C","to":"B3"}]})";
  const auto g = report({"network", "--graph", graph.string()});
  CHECK(g["ratio"] == 3.0);
  const auto sweep = run({"network", "--graph", graph.string(), "--sweep", "fG:0:0.1:3"});
  CHECK(line(sweep.out, 0) == "fG,R_nqkd,R_2qkd,advantage");
  CHECK(line(sweep.out, 1) == "0,1,0.333333333,1");
  std::filesystem::remove(graph);
}

TEST_CASE("simulation command") {
  const auto config = temp_file("config.json");
  const auto transcript = temp_file("transcript.jsonl");
  const auto summary = temp_file("summary.json");
  std::ofstream(config) << R"({"n": 3, "rounds": 100000, "seed": 7,
    "state": {"kind": "depolarized", "qber": 0.1}})";
  const auto r = run({"simulate", "--config", config.string(), "--transcript", transcript.string(), "--out",
                      summary.string()});
  REQUIRE(r.code == 0);
  const auto first = slurp(summary);
  const auto s = nlohmann::json::parse(first);
  CHECK(s["seed"] == 7);
  CHECK(s["estimates"]["q_z"].get<double>() == doctest::Approx(0.1).epsilon(0.1));
  // golden counts from the seeded run
  CHECK(s["ledger"]["second_type_rounds"] == 5035);
  CHECK(s["ledger"]["discarded_second_type_rounds"] == 2498);
  CHECK(s["ledger"]["key_rounds"] == 89930);
  CHECK(s["estimates"]["n_plus"] == 2368);
  CHECK(s["estimates"]["n_minus"] == 169);
  CHECK(s["key_length"].get<double>() == doctest::Approx(37578.8662054888).epsilon(1e-12));
  std::ifstream in(transcript);
  std::string l;
  int lines = 0;
  while (std::getline(in, l)) ++lines;
  CHECK(lines == 100000);
  // identical rerun
  run({"simulate", "--config", config.string(), "--out", summary.string()});
  CHECK(slurp(summary) == first);
  // a different seed changes the summary
  run({"simulate", "--config", config.string(), "--seed", "8", "--out", summary.string()});
  CHECK(slurp(summary) != first);

  std::ofstream(config) << R"({"n": 3, "rounds": 10000, "p_p": 2.0, "state": {"kind": "depolarized", "qber": 0.1}})";
  CHECK(run({"simulate", "--config", config.string()}).code == cli::kUsage);
  for (const auto& p : {config, transcript, summary}) std::filesystem::remove(p);
}
