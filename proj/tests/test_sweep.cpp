#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "losp/branching.hpp"
#include "losp/errors.hpp"
#include "losp/sweep.hpp"

using namespace losp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "losp_test_sweep";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  fs::remove(p);
  fs::remove(p.string() + ".json");
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string giant_config(const fs::path& out) {
  return R"({"schema_version": 1, "model": "site", "estimator": "giant",
             "grid": {"omega": [2, 4], "n": [64], "lambda": [0.8, 1.2]},
             "reps": 10, "master_seed": 5, "output": ")" +
         out.string() + R"("})";
}

std::string body(const std::string& csv) { return csv.substr(csv.find('\n', csv.find('\n') + 1) + 1); }

}  // namespace

TEST_CASE("config: errors name the problem") {
  CHECK_THROWS_WITH_AS(parse_sweep_config(R"({"schema_version": 1, "grid": {"omega": [], "n": [8]},
                                              "output": "x.csv", "reps": 10})"),
                       "nonempty grid required", PreconditionError);
  CHECK_THROWS_AS(parse_sweep_config(R"({"grid": {"omega": [2], "n": [32]}, "output": "x.csv"})"),
                  PreconditionError);
  CHECK_THROWS_AS(parse_sweep_config(R"({"schema_version": 2, "grid": {"omega": [2], "n": [32]}, "output": "x"})"),
                  PreconditionError);
  CHECK_THROWS_AS(parse_sweep_config("{not json"), PreconditionError);
  CHECK_THROWS_AS(parse_sweep_config(R"({"schema_version": 1, "grid": {"omega": "2", "n": [32]}, "output": "x"})"),
                  PreconditionError);
}

TEST_CASE("sweep: grid expansion and resumption") {
  const auto out = scratch("giant.csv");
  const auto cfg = parse_sweep_config(giant_config(out));
  CHECK(sweep_points(cfg).size() == 4);

  const auto first = run_sweep(cfg);
  CHECK(first.total == 4);
  CHECK(first.computed == 4);
  const auto records = read_results(out);
  REQUIRE(records.size() == 4);
  for (const auto& r : records) {
    CHECK(r.estimator == "giant");
    CHECK(r.wall_seconds == 0.0);
    CHECK(r.reps == 10);
  }
  CHECK(fs::exists(out.string() + ".json"));

  const std::string before = slurp(out);
  const auto again = run_sweep(cfg);
  CHECK(again.computed == 0);
  CHECK(again.skipped == 4);
  CHECK(slurp(out) == before);
}

TEST_CASE("sweep: an interrupted run is completed") {
  const auto full_path = scratch("full.csv");
  run_sweep(parse_sweep_config(giant_config(full_path)));
  const std::string full = slurp(full_path);

  const auto cut_path = scratch("cut.csv");
  // Keep the header, two complete rows and half of the third.
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) pos = full.find('\n', pos) + 1;
  const std::size_t third_end = full.find('\n', pos);
  std::ofstream(cut_path, std::ios::binary) << full.substr(0, pos + (third_end - pos) / 2);
  const auto summary = run_sweep(parse_sweep_config(giant_config(cut_path)));
  CHECK(summary.skipped == 2);
  CHECK(summary.computed == 2);
  CHECK(slurp(cut_path) == full);
}

TEST_CASE("sweep: bodies are reproducible and seeds depend only on the point") {
  const auto a = scratch("a.csv");
  const auto b = scratch("b.csv");
  run_sweep(parse_sweep_config(giant_config(a)));
  run_sweep(parse_sweep_config(giant_config(b)));
  CHECK(body(slurp(a)) == body(slurp(b)));

  SweepPoint pt{2, 1, 4, 64, 1.2};
  const auto key = point_key("site", "giant", pt);
  CHECK(point_seed(5, key) == point_seed(5, key));
  CHECK(point_seed(5, key) != point_seed(6, key));
  pt.lambda = 0.8;
  CHECK(point_seed(5, key) != point_seed(5, point_key("site", "giant", pt)));
}

TEST_CASE("sweep: csv header and sidecar") {
  CHECK(csv_header() == "model,d,r,omega,n,lambda,p,estimator,estimate,stderr,ci_low,ci_high,reps,seed,wall_seconds");
  const auto out = scratch("side.csv");
  run_sweep(parse_sweep_config(giant_config(out)));
  const std::string text = slurp(out);
  CHECK(text.rfind("# schema_version: 1\n", 0) == 0);
  const std::string side = slurp(out.string() + ".json");
  CHECK(side.find("\"schema_version\": 1") != std::string::npos);
  CHECK(side.find("\"master_seed\": 5") != std::string::npos);
}

TEST_CASE("report: schema mismatch is rejected") {
  const auto out = scratch("old.csv");
  std::ofstream(out) << "# schema_version: 0\n" << csv_header() << "\n";
  CHECK_THROWS_WITH_AS(read_results(out), doctest::Contains("schema version mismatch"), PreconditionError);
}

TEST_CASE("report: theory columns come from the theory modules") {
  EstimateRecord pc;
  pc.model = "site";
  pc.estimator = "pc";
  pc.omega = 10;
  pc.estimate = 0.041;
  EstimateRecord giant;
  giant.model = "site";
  giant.estimator = "giant";
  giant.lambda = 1.0;
  giant.estimate = 0.9;
  EstimateRecord bond;
  bond.model = "bond";
  bond.estimator = "giant";
  bond.lambda = 0.5;
  bond.estimate = 0.79;
  const std::vector<EstimateRecord> recs{pc, giant, bond};

  const auto lim = report(recs, Theory::pc_limit, 0.07);
  REQUIRE(lim.size() == 1);
  CHECK(lim[0].theory == doctest::Approx(std::log(1.5)));
  CHECK(lim[0].scaled == doctest::Approx(0.41));
  CHECK(lim[0].pass);

  const auto gf = report(recs, Theory::giant_fraction, 0.05);
  REQUIRE(gf.size() == 1);
  CHECK(gf[0].theory == phi(1.0));
  CHECK_FALSE(gf[0].pass);

  const auto bf = report(recs, Theory::bond_fraction, 0.05);
  REQUIRE(bf.size() == 1);
  CHECK(bf[0].theory == phi_bar(2.0));
  CHECK(bf[0].pass);

  std::ostringstream csv;
  write_report_csv(csv, bf, Theory::bond_fraction);
  CHECK(csv.str().find("bond_fraction") != std::string::npos);
  CHECK(parse_theory("nope") == std::nullopt);
  CHECK(parse_theory("theta") == Theory::theta);
}

TEST_CASE("theory constants are computed, not hard-coded") {
  const fs::path root = LOSP_SOURCE_DIR;
  const std::regex constant(R"(0\.4054|0\.1776|1\.114)");
  for (const char* dir : {"src", "include", "tools"}) {
    for (const auto& entry : fs::recursive_directory_iterator(root / dir)) {
      if (!entry.is_regular_file()) continue;
      const std::string text = slurp(entry.path());
      INFO(entry.path().string());
      CHECK_FALSE(std::regex_search(text, constant));
    }
  }
}
