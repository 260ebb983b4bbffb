#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <string>

#include "ipvt_perc/config.hpp"

using namespace ipvt_perc;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("minimal config parses with defaults filled") {
  ExperimentConfig cfg = parse_config("estimator=local_uniqueness d=3 k=2 lambda=0.1 p=0.8 R=4");
  REQUIRE(cfg.params.d == 3);
  REQUIRE(cfg.params.k == 2);
  REQUIRE(cfg.estimator == Estimator::LocalUniqueness);
  REQUIRE(cfg.lambdas == std::vector<double>{0.1});
  REQUIRE(cfg.ps == std::vector<double>{0.8});
  REQUIRE(cfg.R == 4);
  REQUIRE(cfg.replicas == 200);
  REQUIRE(cfg.theta0 == Catch::Approx(0.5).epsilon(1e-15));
  REQUIRE(cfg.seed == 1);
  REQUIRE(cfg.out_dir == "out");
}

TEST_CASE("theta0 default tracks the configured degree") {
  ExperimentConfig cfg = parse_config("estimator=local_uniqueness d=5 k=1 lambda=0.1 p=0.8 R=2");
  REQUIRE(cfg.theta0 == Catch::Approx(0.75).epsilon(1e-15));
  ExperimentConfig explicitTheta =
      parse_config("estimator=local_uniqueness d=5 k=1 lambda=0.1 p=0.8 R=2 theta0=0.3");
  REQUIRE(explicitTheta.theta0 == Catch::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("comments, blank lines, and multi-line layout are accepted") {
  ExperimentConfig cfg = parse_config(
      "# run description\n"
      "estimator=two_point d=3 k=2\n"
      "\n"
      "lambda=0.1,0.2  p=0.5,0.9   # grids\n"
      "R=3 pairs=-,-:1,-;10,-:-,21\n"
      "seed=77\n");
  REQUIRE(cfg.lambdas == std::vector<double>{0.1, 0.2});
  REQUIRE(cfg.ps == std::vector<double>{0.5, 0.9});
  REQUIRE(cfg.seed == 77);
  REQUIRE(cfg.pairs.size() == 2);
}

TEST_CASE("range errors name the offending key") {
  REQUIRE_THROWS_WITH(parse_config("estimator=local_uniqueness d=3 k=2 lambda=1.5 p=0.8 R=4"),
                      ContainsSubstring("lambda"));
  REQUIRE_THROWS_WITH(parse_config("estimator=local_uniqueness d=3 k=0 lambda=0.1 p=0.8 R=4"),
                      ContainsSubstring("'k'") && ContainsSubstring("out of range"));
  REQUIRE_THROWS_WITH(parse_config("estimator=local_uniqueness d=3 k=2 lambda=0.1 p=1.5 R=4"),
                      ContainsSubstring("'p'"));
  REQUIRE_THROWS_WITH(parse_config("estimator=local_uniqueness d=3 k=2 lambda=0.1 p=0.8 R=90"),
                      ContainsSubstring("'R'"));
}

TEST_CASE("unknown keys and malformed entries name key and line") {
  REQUIRE_THROWS_WITH(
      parse_config("estimator=local_uniqueness d=3 k=2 lambda=0.1 p=0.8 R=4\nwidth=9\n"),
      ContainsSubstring("line 2") && ContainsSubstring("'width'") &&
          ContainsSubstring("unknown key"));
  REQUIRE_THROWS_WITH(parse_config("estimator=local_uniqueness\nd=3 k=two lambda=0.1 p=0.8 R=4"),
                      ContainsSubstring("line 2") && ContainsSubstring("'k'") &&
                          ContainsSubstring("malformed"));
  REQUIRE_THROWS_WITH(parse_config("estimator=local_uniqueness d=3 k=2 lambda=0.1p=0.8 R=4"),
                      ContainsSubstring("'lambda'"));
  REQUIRE_THROWS_WITH(parse_config("estimator=local_uniqueness d=3 k=2\nnonsense\n"),
                      ContainsSubstring("line 2") && ContainsSubstring("key=value"));
  REQUIRE_THROWS_WITH(parse_config("estimator=local_uniqueness d=3 k=2 lambda=0.1 p=0.8 R=4\nd=4"),
                      ContainsSubstring("duplicate") && ContainsSubstring("line 2"));
}

TEST_CASE("unknown estimator lists the valid names") {
  REQUIRE_THROWS_WITH(parse_config("estimator=percolate d=3 k=2 lambda=0.1 p=0.8 R=4"),
                      ContainsSubstring("local_uniqueness") && ContainsSubstring("wall_growth") &&
                          ContainsSubstring("diagram_tv"));
}

TEST_CASE("missing required keys are reported") {
  REQUIRE_THROWS_WITH(parse_config("d=3 k=2 lambda=0.1 p=0.8 R=4"),
                      ContainsSubstring("'estimator'"));
  REQUIRE_THROWS_WITH(parse_config("estimator=local_uniqueness k=2 lambda=0.1 p=0.8"),
                      ContainsSubstring("'d'"));
  REQUIRE_THROWS(parse_config("   \n  # only a comment\n"));
}

TEST_CASE("estimator-specific keys parse") {
  ExperimentConfig cfg = parse_config(
      "estimator=wall_growth d=3 k=2 replicas=5 eval_radii=4,7,9 r_wall=3 wall_pairs=2 seed=9");
  REQUIRE(cfg.eval_radii == std::vector<int>{4, 7, 9});
  REQUIRE(cfg.r_wall == 3);
  REQUIRE(cfg.wall_pairs == 2);
  REQUIRE_THROWS_WITH(
      parse_config("estimator=wall_growth d=3 k=2 eval_radii=9,4"),
      ContainsSubstring("increasing"));

  ExperimentConfig tp =
      parse_config("estimator=two_point d=3 k=2 lambda=0.1 p=0.8 R=3 pairs=-,-:10,-;1,-:-,2");
  REQUIRE(tp.pairs.size() == 2);
  REQUIRE(vertex_to_string(tp.pairs[0].second) == "10,-");
  REQUIRE(vertex_to_string(tp.pairs[1].first) == "1,-");
  REQUIRE_THROWS_WITH(
      parse_config("estimator=two_point d=3 k=2 lambda=0.1 p=0.8 pairs=3,-:-,-"),
      ContainsSubstring("'pairs'"));
}

TEST_CASE("load_config reads files and rejects missing paths") {
  std::string path = "cfg_roundtrip_test.cfg";
  {
    std::ofstream out(path);
    out << "# comment only line\n";
    out << "estimator=neighbor_completeness\n";
    out << "d=3 k=2 lambda=0.3,0.1 R=3 replicas=7\n";
  }
  ExperimentConfig cfg = load_config(path);
  REQUIRE(cfg.estimator == Estimator::NeighborCompleteness);
  REQUIRE(cfg.lambdas == std::vector<double>{0.3, 0.1});
  REQUIRE(cfg.replicas == 7);
  std::remove(path.c_str());
  REQUIRE_THROWS_WITH(load_config("does_not_exist.cfg"), ContainsSubstring("does_not_exist.cfg"));
}
