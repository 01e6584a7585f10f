#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "nlform/config.hpp"
#include "nlform/records.hpp"
#include "nlform/runner.hpp"

using namespace nlform;
using namespace nlform::cli;

namespace {

const char* kMinimalForm =
    "command = form\n"
    "seed = 42\n"
    "[model]\n"
    "kind = product-1d\n"
    "dim = 2\n"
    "marginal = gaussian(0,1)\n"
    "[function]\n"
    "kind = cutoff\n"
    "coord = 1\n"
    "scale = 1\n"
    "[form]\n"
    "alpha = 1\n"
    "delta = 0.1\n"
    "samples = 400\n";

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty config reports the missing command") {
  const auto out = parse_config("");
  REQUIRE_FALSE(out.ok());
  CHECK(out.errors[0].message.find("missing command") != std::string::npos);
}

TEST_CASE("minimal form config parses and round-trips") {
  const auto out = parse_config(kMinimalForm);
  REQUIRE(out.ok());
  CHECK(out.config.command() == "form");
  CHECK(out.config.seed().value() == 42);
  CHECK(out.config.get_double("form", "alpha") == 1.0);

  const std::string canon = serialize_config(out.config);
  const auto re = parse_config(canon);
  REQUIRE(re.ok());
  CHECK(serialize_config(re.config) == canon);  // idempotent re-serialization
  const bool same_values = re.config.sections == out.config.sections;
  CHECK(same_values);
}

TEST_CASE("duplicate keys name both lines") {
  const auto out = parse_config("command = form\nseed = 1\nseed = 2\n");
  REQUIRE_FALSE(out.ok());
  bool found = false;
  for (const auto& e : out.errors)
    if (e.line == 3 && e.message.find("line 2") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("unknown keys and sections carry line numbers") {
  const auto out = parse_config("command = eigen\nbogus = 1\n[weird]\nx = 2\n");
  REQUIRE_FALSE(out.ok());
  CHECK(out.errors.size() >= 2);
  CHECK(out.errors[0].line == 2);
}

TEST_CASE("stochastic commands demand a seed") {
  const auto out = parse_config("command = form\n");
  REQUIRE_FALSE(out.ok());
  bool found = false;
  for (const auto& e : out.errors)
    if (e.message.find("requires a seed") != std::string::npos) found = true;
  CHECK(found);
  // Deterministic commands do not.
  CHECK(parse_config("command = eigen\n").ok());
}

TEST_CASE("index lists accept ranges and reject the out-of-bounds") {
  const auto idx = parse_index_list("1-3,5", 6, "t");
  CHECK(idx == std::vector<int>{0, 1, 2, 4});
  CHECK_THROWS_AS(parse_index_list("0", 4, "t"), InvalidInput);
  CHECK_THROWS_AS(parse_index_list("7", 4, "t"), InvalidInput);
}

TEST_CASE("records serialize with stable order and re-parse exactly") {
  Record r;
  r.add("command", "form").add("value", 0.1234567890123456789).add("nsamples", 77L);
  r.add("per_coordinate", std::vector<double>{1.5, -2.25e-17});
  const std::string line = r.to_json_line();
  CHECK(line.find("\"command\"") < line.find("\"value\""));
  CHECK(line.find("\"value\"") < line.find("\"nsamples\""));

  const auto j = nlohmann::json::parse(line);
  CHECK(j["command"] == "form");
  CHECK(j["nsamples"] == 77);
  CHECK(j["value"].get<double>() == 0.1234567890123456789);  // 17 digits round-trip
  CHECK(j["per_coordinate"][1].get<double>() == -2.25e-17);
}

TEST_CASE("runner: form command emits records and reproduces bytes") {
  const std::string cfg_path = "test_cfg_form.conf";
  const std::string out_path = "test_out_form.jsonl";
  {
    std::ofstream f(cfg_path);
    f << "out = " << out_path << "\n" << kMinimalForm;
  }
  const auto parsed = parse_config(slurp(cfg_path));
  REQUIRE(parsed.ok());
  std::ostringstream summary1, summary2;
  RunOverrides ov;
  CHECK(run(parsed.config, ov, summary1) == 0);
  const std::string first = slurp(out_path);
  CHECK(run(parsed.config, ov, summary2) == 0);
  CHECK(first == slurp(out_path));  // byte-identical replay
  REQUIRE_FALSE(first.empty());

  // Schema: the total record carries the documented fields.
  std::istringstream lines(first);
  std::string line, last;
  while (std::getline(lines, line))
    if (!line.empty()) last = line;
  const auto j = nlohmann::json::parse(last);
  for (const char* key : {"command", "version", "seed", "alpha", "delta", "value", "stderr",
                          "nsamples", "per_coordinate"})
    CHECK(j.contains(key));

  std::remove(cfg_path.c_str());
  std::remove(out_path.c_str());
}

TEST_CASE("runner: unknown command and unwritable output fail cleanly") {
  auto parsed = parse_config("command = eigen\n[grid]\nd = 1\nextent = 8\nn = 16\nK = 4\n");
  REQUIRE(parsed.ok());
  RunOverrides ov;
  ov.out = "/nonexistent-dir/x.jsonl";
  std::ostringstream summary;
  CHECK(run(parsed.config, ov, summary) == kIo);

  auto bad = parse_config("command = eigen\n");
  bad.config.sections[""]["command"].value = "nope";
  std::ostringstream s2;
  RunOverrides ov2;
  ov2.out = "-";
  CHECK(run(bad.config, ov2, s2) == kInvalidInput);
}

TEST_CASE("runner: model and function builders reject unknown kinds") {
  auto parsed = parse_config(
      "command = sample\nseed = 1\n[model]\nkind = mystery\n[sample]\ncount = 1\n");
  REQUIRE(parsed.ok());
  CHECK_THROWS_AS(build_model(parsed.config), InvalidInput);

  auto parsed2 = parse_config(kMinimalForm);
  REQUIRE(parsed2.ok());
  auto cfg = parsed2.config;
  cfg.sections["function"]["kind"].value = "mystery";
  CHECK_THROWS_AS(build_function(cfg), InvalidInput);
}

TEST_CASE("runner: blocks partition reproduces independently of threads") {
  const std::string base =
      "command = form\nseed = 9\nblocks = 4\n"
      "[model]\nkind = product-1d\ndim = 1\nmarginal = gaussian(0,1)\n"
      "[function]\nkind = cutoff\ncoord = 1\nscale = 1\n"
      "[form]\nalpha = 1\ndelta = 0.2\nsamples = 800\n";
  const std::string out1 = "test_blocks1.jsonl", out2 = "test_blocks2.jsonl";
  auto parsed = parse_config(base);
  REQUIRE(parsed.ok());
  std::ostringstream s1, s2;
  RunOverrides serial;
  serial.out = out1;
  serial.threads = 1;
  RunOverrides threaded;
  threaded.out = out2;
  threaded.threads = 3;
  CHECK(run(parsed.config, serial, s1) == 0);
  CHECK(run(parsed.config, threaded, s2) == 0);
  CHECK(slurp(out1) == slurp(out2));
  std::remove(out1.c_str());
  std::remove(out2.c_str());
}
