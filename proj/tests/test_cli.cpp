#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "otecon/cli/io.hpp"
#include "otecon/cli/run.hpp"

using namespace otecon;
using namespace otecon::cli;

namespace {

// Temporary file removed on scope exit.
class TempCsv {
 public:
  explicit TempCsv(const std::string& text) {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("otecon_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".csv"))
                .string();
    std::ofstream(path_) << text;
  }
  ~TempCsv() { std::remove(path_.c_str()); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

std::size_t error_line(const std::function<void()>& f) {
  try {
    f();
  } catch (const CsvError& e) {
    return e.line();
  }
  return 0;
}

std::string data(const std::string& rel) { return std::string(OTECON_DATA_DIR) + "/" + rel; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("csv reader skips comments and headers") {
  TempCsv f("a,b\n# note\n\n1,2\n3.5,-4e-1\n");
  const MatrixXd m = read_matrix(f.path());
  REQUIRE(m.rows() == 2);
  CHECK(m(1, 1) == -0.4);
  CHECK(read_csv(f.path())[1].line == 5);
}

TEST_CASE("malformed rows report their line") {
  TempCsv bad("w\n0.5\nabc\n");
  CHECK(error_line([&] { read_vector(bad.path()); }) == 3);
  TempCsv ragged("1,2\n3\n");
  CHECK(error_line([&] { read_matrix(ragged.path()); }) == 2);
  TempCsv negative("w\n0.5\n-0.1\n0.6\n");
  CHECK_THROWS_AS(read_measure(negative.path()), CsvError);
  CHECK_THROWS_AS(read_matrix("/nonexistent/otecon.csv"), CsvError);
}

TEST_CASE("measure with points") {
  TempCsv f("w,x1,x2\n0.25,0,0\n0.75,1,2\n");
  const DiscreteMeasure mu = read_measure(f.path());
  CHECK(mu.weights()[1] == 0.75);
  CHECK(mu.points()(1, 1) == 2.0);
}

TEST_CASE("matching table and basis") {
  TempCsv table("x,y,count\n1,1,0.5\n1,0,0.5\n0,1,0.5\n");
  const MatchingTable t = read_matching_table(table.path());
  CHECK(t.flows()(0, 0) == 0.5);
  CHECK(t.singles_y()[0] == 0.5);
  TempCsv missing("x,y,count\n1,1,0.5\n1,0,0.5\n");
  CHECK_THROWS_AS(read_matching_table(missing.path()), CsvError);
  TempCsv twice("x,y,count\n1,1,0.5\n1,1,0.5\n1,0,0.5\n0,1,0.5\n");
  CHECK(error_line([&] { read_matching_table(twice.path()); }) == 3);

  TempCsv basis("x,y,k,value\n1,2,1,3.0\n2,1,2,-1\n");
  const SurplusBasis b = read_basis(basis.path(), 2, 2);
  REQUIRE(b.size() == 2);
  CHECK(b[0](0, 1) == 3.0);
  CHECK(b[0](1, 1) == 0.0);
  CHECK(b[1](1, 0) == -1.0);
  TempCsv outside("x,y,k,value\n3,1,1,1\n");
  CHECK(error_line([&] { read_basis(outside.path(), 2, 2); }) == 2);
}

TEST_CASE("run writes the documented examples") {
  RunConfig c;
  c.command = "ot";
  c.inputs = {{"mu", data("ot/mu.csv")}, {"nu", data("ot/nu.csv")}, {"cost", data("ot/cost.csv")}};
  std::ostringstream out, err;
  CHECK(run(c, out, err) == kExitOk);
  const auto doc = nlohmann::json::parse(out.str());
  CHECK(doc["result"]["value"] == 1.0);
  CHECK(out.str().find("\"value\": 1.0") != std::string::npos);
  CHECK(doc["version"] == "0.1.0");
  CHECK(doc["diagnostics"]["certified"] == true);

  RunConfig w;
  w.command = "w1d";
  w.inputs = {{"x", data("w1d/x.csv")}, {"y", data("w1d/x.csv")}};
  std::ostringstream wout;
  CHECK(run(w, wout, err) == kExitOk);
  CHECK(nlohmann::json::parse(wout.str())["result"]["value"] == 0.0);

  RunConfig m;
  m.command = "match-identify";
  m.inputs = {{"table", data("match-identify/table.csv")}};
  std::ostringstream mout;
  CHECK(run(m, mout, err) == kExitOk);
  CHECK(nlohmann::json::parse(mout.str())["result"]["Phi"] == nlohmann::json::parse("[[0.0]]"));
}

TEST_CASE("run maps failures to exit codes") {
  std::ostringstream out, err;
  RunConfig missing;
  missing.command = "ot";
  missing.inputs = {{"mu", data("ot/mu.csv")}};
  CHECK(run(missing, out, err) == kExitInput);

  RunConfig window;
  window.command = "bounds-subgroup";
  window.inputs = {{"y0", data("bounds-subgroup/y0.csv")}, {"y1", data("bounds-subgroup/y1.csv")}};
  window.a = 0.8;
  window.b = 0.2;
  CHECK(run(window, out, err) == kExitInput);

  RunConfig capped;
  capped.command = "sinkhorn";
  capped.inputs = {{"mu", data("sinkhorn/mu.csv")}, {"nu", data("sinkhorn/nu.csv")},
                   {"cost", data("sinkhorn/cost.csv")}};
  capped.max_iter = 1;
  std::ostringstream cout_;
  CHECK(run(capped, cout_, err) == kExitNoConvergence);
  CHECK(nlohmann::json::parse(cout_.str())["diagnostics"]["converged"] == false);
}

TEST_CASE("repeated runs are byte identical") {
  RunConfig c;
  c.command = "sliced";
  c.inputs = {{"x", data("sliced/x.csv")}, {"y", data("sliced/y.csv")}};
  c.seed = 11;
  std::ostringstream a, b, err;
  run(c, a, err);
  run(c, b, err);
  CHECK(a.str() == b.str());
  c.seed = 12;
  std::ostringstream other;
  run(c, other, err);
  CHECK(other.str() != a.str());
}

}  // TEST_SUITE
