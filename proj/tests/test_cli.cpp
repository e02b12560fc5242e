#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <sstream>

#include "matchq/cli.hpp"

using namespace matchq;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (!line.empty() && line[0] == '#') continue;
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

double last_field(const std::string& line) {
  return std::stod(line.substr(line.rfind(',') + 1));
}

}  // namespace

TEST_CASE("solve twoway emits the uniform table") {
  const auto res = run_cli({"solve", "twoway", "--kbar", "2", "--p", "0.3"});
  REQUIRE(res.code == 0);
  const auto rows = data_lines(res.out);
  REQUIRE(rows.size() == 5);
  for (const auto& row : rows) {
    CHECK(last_field(row) == Catch::Approx(0.2).margin(1e-12));
  }
  CHECK(res.out.find("p,kbar,k,pi") == 0);
  CHECK(res.out.find("# method=direct-solve") != std::string::npos);
  CHECK(res.out.find("# residual=") != std::string::npos);
}

TEST_CASE("solve disassortative emits the closed-form values") {
  const auto res = run_cli({"solve", "disassortative", "--kh", "1", "--kl", "1", "--p", "0.5"});
  REQUIRE(res.code == 0);
  const auto rows = data_lines(res.out);
  REQUIRE(rows.size() == 3);
  CHECK(last_field(rows[0]) == Catch::Approx(1.0 / 6.0).margin(1e-12));
  CHECK(last_field(rows[1]) == Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK(last_field(rows[2]) == Catch::Approx(1.0 / 6.0).margin(1e-12));
}

TEST_CASE("solve assortative lumped normalizes the weighted column") {
  const auto res = run_cli({"solve", "assortative", "--kbar", "2", "--p", "0.5", "--lumped"});
  REQUIRE(res.code == 0);
  const auto rows = data_lines(res.out);
  REQUIRE(rows.size() == 6);
  double weighted = 0.0;
  for (const auto& row : rows) weighted += last_field(row);
  CHECK(std::abs(weighted - 1.0) < 1e-9);
  CHECK(res.out.find("p,kbar,class,a1,a2,a3,multiplicity,pi_class,pi_weighted") == 0);
}

TEST_CASE("solve assortative full table normalizes") {
  const auto res = run_cli({"solve", "assortative", "--kbar", "3", "--p", "0.25"});
  REQUIRE(res.code == 0);
  const auto rows = data_lines(res.out);
  REQUIRE(rows.size() == 37);
  double sum = 0.0;
  for (const auto& row : rows) {
    const double pi = last_field(row);
    CHECK(pi >= 0.0);
    CHECK(pi <= 1.0);
    sum += pi;
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("identical invocations are byte identical") {
  const std::vector<std::string> args{"solve", "assortative", "--kbar", "2", "--p", "0.37",
                                      "--lumped"};
  CHECK(run_cli(args).out == run_cli(args).out);

  const std::vector<std::string> sim{"simulate", "disassortative", "--kh", "1", "--kl", "1",
                                     "--p", "0.5", "--steps", "20000", "--seed", "7"};
  CHECK(run_cli(sim).out == run_cli(sim).out);
}

TEST_CASE("sweep assortative lumped emits grid-major rows") {
  const auto res = run_cli(
      {"sweep", "assortative", "--kbar", "2", "--p-grid", "0.1:0.9:0.1", "--lumped"});
  REQUIRE(res.code == 0);
  const auto rows = data_lines(res.out);
  REQUIRE(rows.size() == 9 * 6);
  // every grid point normalizes
  for (std::size_t g = 0; g < 9; ++g) {
    double weighted = 0.0;
    for (std::size_t i = 0; i < 6; ++i) weighted += last_field(rows[g * 6 + i]);
    CHECK(std::abs(weighted - 1.0) < 1e-9);
  }
}

TEST_CASE("sweep disassortative lists threshold combinations") {
  const auto res = run_cli({"sweep", "disassortative", "--p", "0.5", "--kh-list", "1,2,5",
                            "--kl-list", "1,2,5"});
  REQUIRE(res.code == 0);
  const auto rows = data_lines(res.out);
  std::size_t expect = 0;
  for (int kh : {1, 2, 5})
    for (int kl : {1, 2, 5}) expect += static_cast<std::size_t>(kh + kl + 1);
  CHECK(rows.size() == expect);
}

TEST_CASE("malformed grids exit with code 2") {
  CHECK(run_cli({"sweep", "assortative", "--kbar", "2", "--p-grid", "0.9:0.1:0.1"}).code == 2);
  CHECK(run_cli({"sweep", "assortative", "--kbar", "2", "--p-grid", "0.1:0.9:-0.1"}).code == 2);
  CHECK(run_cli({"sweep", "assortative", "--kbar", "2", "--p-grid", "nonsense"}).code == 2);
  CHECK(run_cli({"sweep", "assortative", "--kbar", "2", "--p-grid", "0.0:0.9:0.1"}).code == 2);
}

TEST_CASE("argument errors exit with code 2") {
  CHECK(run_cli({"solve", "twoway", "--p", "0.5"}).code == 2);           // missing --kbar
  CHECK(run_cli({"solve", "assortative", "--kbar", "2"}).code == 2);     // missing --p
  CHECK(run_cli({"solve", "twoway", "--kbar", "2", "--p", "1.5"}).code == 2);
  CHECK(run_cli({"solve", "nonsense", "--kbar", "2", "--p", "0.5"}).code == 2);
  CHECK(run_cli({"solve", "twoway", "--kbar", "2", "--p", "0.5", "--lumped"}).code == 2);
  CHECK(run_cli({"solve", "disassortative", "--kh", "1", "--p", "0.5"}).code == 2);
  CHECK(run_cli({}).code == 2);
}

TEST_CASE("simulate emits the report and the TV distance") {
  const auto res = run_cli({"simulate", "assortative", "--kbar", "2", "--p", "0.5", "--steps",
                            "50000", "--seed", "7"});
  REQUIRE(res.code == 0);
  const auto rows = data_lines(res.out);
  REQUIRE(rows.size() == 19);
  CHECK(res.out.find("# steps=50000") != std::string::npos);
  CHECK(res.out.find("# burn_in=5000") != std::string::npos);  // default 10%
  CHECK(res.out.find("# seed=7") != std::string::npos);
  CHECK(res.out.find("# tv_to_exact=") != std::string::npos);
  CHECK(res.out.find("# team_HHH=") != std::string::npos);
}

TEST_CASE("welfare sweep flags exactly one best row") {
  const auto res = run_cli({"welfare", "assortative", "--p", "0.5", "--c", "0.05",
                            "--kbar-list", "1,2,3"});
  REQUIRE(res.code == 0);
  const auto rows = data_lines(res.out);
  REQUIRE(rows.size() == 3);
  int best = 0;
  for (const auto& row : rows) best += static_cast<int>(last_field(row));
  CHECK(best == 1);
}

TEST_CASE("welfare rejects utilities violating the preference ordering") {
  const auto res = run_cli({"welfare", "assortative", "--p", "0.5", "--kbar-list", "1,2",
                            "--u", "HHH=0.1"});
  CHECK(res.code == 2);
}

TEST_CASE("json output mirrors the csv rows and carries meta") {
  const auto res = run_cli({"solve", "disassortative", "--kh", "1", "--kl", "1", "--p", "0.5",
                            "--format", "json"});
  REQUIRE(res.code == 0);
  const auto doc = nlohmann::json::parse(res.out);
  REQUIRE(doc.contains("meta"));
  REQUIRE(doc.contains("rows"));
  CHECK(doc["meta"]["method"] == "direct-solve");
  CHECK(doc["meta"]["version"] == std::string(kVersion));
  REQUIRE(doc["rows"].size() == 3);
  CHECK(doc["rows"][1]["k"] == 0);
  CHECK(std::abs(doc["rows"][1]["pi"].get<double>() - 2.0 / 3.0) < 1e-12);
}

TEST_CASE("environment variable sets the default format") {
  setenv("MATCHQ_FORMAT", "json", 1);
  const auto res = run_cli({"solve", "twoway", "--kbar", "1", "--p", "0.5"});
  unsetenv("MATCHQ_FORMAT");
  REQUIRE(res.code == 0);
  CHECK_NOTHROW(nlohmann::json::parse(res.out));

  const auto csv = run_cli({"solve", "twoway", "--kbar", "1", "--p", "0.5"});
  CHECK(csv.out.find("p,kbar,k,pi") == 0);
}

TEST_CASE("help exits zero") {
  CHECK(run_cli({"--help"}).code == 0);
}
