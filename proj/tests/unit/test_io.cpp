#include <catch_amalgamated.hpp>

#include <cstring>
#include <sstream>

#include "imdse/config.hpp"
#include "imdse/csv_io.hpp"
#include "imdse/pipeline.hpp"
#include "imdse/report.hpp"

using namespace imdse;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("measurement CSV round trip is exact") {
  Scenario sc;
  sc.sim.t_end = 0.3;
  const auto rec = run_scenario(sc);
  std::stringstream ss;
  write_measurement_csv(ss, rec.samples);
  const auto back = read_measurement_csv(ss);
  REQUIRE(back.size() == rec.samples.size());
  for (std::size_t k = 0; k < back.size(); ++k)
    CHECK(std::memcmp(&back[k], &rec.samples[k], sizeof(SimSample)) == 0);
}

TEST_CASE("malformed measurement CSVs name the problem") {
  std::istringstream missing("t,va,vb,vc,ia,ib,Tm,wm\n0,1,2,3,4,5,6,7\n");
  CHECK_THROWS_WITH(read_measurement_csv(missing), ContainsSubstring("missing column 'ic'"));

  std::istringstream short_row("t,va,vb,vc,ia,ib,ic,Tm,wm\n0,1,2,3,4,5,6,7\n");
  CHECK_THROWS_WITH(read_measurement_csv(short_row), ContainsSubstring("line 2"));

  std::istringstream bad_number("t,va,vb,vc,ia,ib,ic,Tm,wm\n0,1,2,3,4,x,6,7,8\n");
  CHECK_THROWS_WITH(read_measurement_csv(bad_number), ContainsSubstring("column 'ib'"));

  std::istringstream empty("");
  CHECK_THROWS_AS(read_measurement_csv(empty), CsvError);

  std::istringstream backwards("t,va,vb,vc,ia,ib,ic,Tm,wm\n1,0,0,0,0,0,0,0,0\n0,0,0,0,0,0,0,0,0\n");
  CHECK_THROWS_WITH(read_measurement_csv(backwards), ContainsSubstring("strictly increasing"));
}

TEST_CASE("config defaults and overrides") {
  const RunConfig def = parse_config(std::string("[fault]\nkind = none\n"));
  CHECK(def.scenario.motor.r_s == 1.115);
  CHECK(def.dse.window == 5);
  const RunConfig cfg = parse_config(std::string("# comment\n[dse]\nN = 7\n; other comment\n[fault]\nkind = LLG\nphases = BCG\n"));
  CHECK(cfg.dse.window == 7);
  CHECK(cfg.scenario.fault.kind == FaultKind::LineLineGround);
  CHECK(cfg.scenario.fault.phases == std::array<bool, 3>{false, true, true});
}

TEST_CASE("config errors name the offending key") {
  CHECK_THROWS_WITH(parse_config(std::string("[dse]\nwindow_size = 4\n")), ContainsSubstring("dse.window_size"));
  CHECK_THROWS_WITH(parse_config(std::string("[dse]\nN = five\n")), ContainsSubstring("dse.N"));
  CHECK_THROWS_WITH(parse_config(std::string("[dse]\nN = 1\n")), ContainsSubstring("dse.N"));
  CHECK_THROWS_WITH(parse_config(std::string("[sim]\ndt = 1e-4\n")), ContainsSubstring("sim.dt"));
  CHECK_THROWS_AS(parse_config(std::string("orphan = 1\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(std::string("[fault]\nkind = LG\nphases = AB\n")), ConfigError);
}

TEST_CASE("config text and report echo round-trip") {
  RunConfig cfg;
  cfg.scenario.fault.kind = FaultKind::LineLine;
  cfg.scenario.fault.phases = {false, true, true};
  cfg.scenario.sim.dt = 2.5e-5;
  cfg.dse.sigmas.flux = 0.0123456789;
  cfg.dse.include_speed_residual = false;
  const std::string ini = to_ini(cfg);
  CHECK(to_ini(parse_config(ini)) == ini);
  CHECK(to_ini(config_from_json(config_to_json(cfg))) == ini);
}

TEST_CASE("bundled configs load") {
  for (const char* name : {"no_fault.cfg", "ag_fault.cfg", "ab_fault.cfg", "abcg_fault.cfg"}) {
    INFO(name);
    CHECK_NOTHROW(load_config(std::filesystem::path(IMDSE_SOURCE_DIR) / "configs" / name));
  }
  const auto ag = load_config(std::filesystem::path(IMDSE_SOURCE_DIR) / "configs" / "ag_fault.cfg");
  CHECK(ag.scenario.fault.kind == FaultKind::LineGround);
  CHECK(ag.scenario.fault.phases == std::array<bool, 3>{true, false, false});
}

TEST_CASE("window CSV rows") {
  WindowOutcome ok;
  ok.t_start = 1.0;
  ok.t_end = 1.04;
  EstimationResult r;
  r.iterations = 3;
  r.converged = true;
  r.cost = 2.5;
  r.dof = 15;
  r.p = 0.001;
  ok.result = r;
  WindowOutcome bad;
  bad.t_start = 1.01;
  bad.t_end = 1.05;
  bad.error = "boom";
  std::ostringstream os;
  write_window_csv(os, {ok, bad});
  CHECK(os.str() == "t_start,t_end,iterations,converged,J,dof,p,verdict\n"
                    "1,1.04,3,true,2.5,15,0.001,Healthy\n"
                    "1.01,1.05,0,false,,,,Error\n");
}
