#include "doctest.h"

#include "gks/config.hpp"

using namespace gks;
using nlohmann::json;

TEST_SUITE("config") {
  TEST_CASE("parses a full document") {
    const auto c = parse_config(json::parse(R"({"k": 2, "n": [3, 4], "policy": ["2/3", "1/3"],
        "adversary": "lower_bound", "phases": 50, "max_steps": 1000, "seed": 9, "emit_trace": true,
        "trace_path": "t.csv"})"));
    CHECK(c.spec.points == std::vector<std::uint32_t>{3, 4});
    CHECK(c.policy.prob(0) == Rational(2, 3));
    CHECK(c.phases == 50);
    CHECK(c.max_steps == 1000);
    CHECK(c.seed == 9);
    CHECK(c.emit_trace);
    CHECK(c.trace_path == "t.csv");
    CHECK(parse_config(config_json(c)).policy.to_string() == c.policy.to_string());
  }

  TEST_CASE("shorthands") {
    const auto c = parse_config(json::parse(R"({"k": 3, "n": 2, "policy": "uniform", "adversary": "n2"})"));
    CHECK(c.spec.points == std::vector<std::uint32_t>{2, 2, 2});
    CHECK(c.policy.is_uniform());
    CHECK(c.adversary == AdversaryKind::n2);
  }

  TEST_CASE("rejections") {
    auto bad = [](const char* text) { return parse_config(json::parse(text)); };
    CHECK_THROWS_AS(bad(R"({"k": 2, "n": [2, 2], "policy": "uniform", "adversary": "lower_bound"})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(bad(R"({"k": 2, "n": 3, "policy": "uniform", "adversary": "n2"})"), std::invalid_argument);
    CHECK_THROWS_AS(bad(R"({"k": 2, "n": [3], "policy": "uniform"})"), std::invalid_argument);
    CHECK_THROWS_AS(bad(R"({"k": 2, "n": 3, "policy": ["1/2"]})"), std::invalid_argument);
    CHECK_THROWS_AS(bad(R"({"k": 2, "n": 3, "policy": ["1", "0"]})"), std::invalid_argument);
    CHECK_THROWS_AS(bad(R"({"k": 2, "n": 3, "policy": [0.5, 0.5]})"), std::invalid_argument);
    CHECK_THROWS_AS(bad(R"({"k": 2, "n": 3, "policy": "uniform", "phases": -1})"), std::invalid_argument);
    CHECK_THROWS_AS(bad(R"({"k": 2, "n": 3, "policy": "uniform", "speed": 1})"), std::invalid_argument);
    CHECK_THROWS_AS(bad(R"({"n": 3, "policy": "uniform"})"), std::invalid_argument);
    CHECK_THROWS_AS(bad(R"([1, 2])"), std::invalid_argument);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), std::invalid_argument);
  }

  TEST_CASE("summary json") {
    RunSummary s;
    s.alg_cost = 8;
    s.adv_cost = 2;
    s.ratio = 4;
    const auto j = summary_json(s);
    CHECK(j["ratio"] == 4.0);
    CHECK(j["budget_exhausted"] == false);
  }
}
