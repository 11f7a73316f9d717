// Copyright 2026 The bbdiff Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "bbdiff/fixture.hpp"
#include "bbdiff/predictors.hpp"

#include "helpers.hpp"

using namespace bbdiff;
using namespace bbdiff::testing;

namespace {

PredictorSpec uniform_spec(double cost) {
  return predictor_from_json(uniform_predictor_json(mini(), "uniform", cost));
}

PredictorSpec planted_spec() {
  return predictor_from_json(planted_predictor_json(mini(), "planted", 1.0, 6.0));
}

BasicBlock double_rmw(std::int64_t d1, std::int64_t d2) {
  const SchemeUniverse &u = mini();
  return BasicBlock({ins(u, "add_m64_r64", {mem(u, "rcx", d1), reg(u, "rbx")}),
                     ins(u, "add_m64_r64", {mem(u, "rcx", d2), reg(u, "rbx")})});
}

} // namespace

TEST_CASE("synthetic costs sum and the planted rule multiplies") {
  PredictorSpec uniform = uniform_spec(1.0);
  PredictorSpec planted = planted_spec();

  // two read-modify-writes to one location: the planted rule fires
  BasicBlock hit = double_rmw(16, 16);
  CHECK(predict(uniform, hit) == PredictorResult::make_cycles(2.0));
  CHECK(predict(planted, hit) == PredictorResult::make_cycles(12.0));

  // distinct locations: both models agree
  BasicBlock miss = double_rmw(16, 128);
  CHECK(predict(planted, miss) == PredictorResult::make_cycles(2.0));
}

TEST_CASE("the planted rule needs an aliasing read next to a read-write") {
  const SchemeUniverse &u = mini();
  const Rule rule = planted_rule(6.0);

  auto block = [&](const char *first, const char *second) {
    return BasicBlock({ins(u, first, {mem(u, "rcx", 0), reg(u, "rbx")}),
                       ins(u, second, {mem(u, "rcx", 0), reg(u, "rax")})});
  };

  CHECK(rule_matches(rule, block("cmp_m64_r64", "add_m64_r64")));  // R vs RW
  CHECK(rule_matches(rule, block("add_m64_r64", "sub_m64_r64")));  // RW vs RW
  CHECK_FALSE(rule_matches(rule, block("cmp_m64_r64", "test_m64_r64"))); // R vs R
  CHECK_FALSE(rule_matches(rule, block("cmp_m64_r64", "mov_m64_r64"))); // R vs W
  CHECK_FALSE(rule_matches(rule, block("mov_m64_r64", "mov_m64_r64"))); // W vs W

  // same operands, loads through different locations: nothing aliases
  BasicBlock apart({ins(u, "cmp_m64_r64", {mem(u, "rcx", 0), reg(u, "rbx")}),
                    ins(u, "add_m64_r64", {mem(u, "rdx", 0), reg(u, "rax")})});
  CHECK_FALSE(rule_matches(rule, apart));
}

TEST_CASE("rules compose over the base cost in order") {
  const SchemeUniverse &u = mini();
  json j{{"name", "composed"},
         {"kind", "synthetic"},
         {"default_cost", 1.0},
         {"rules",
          json::array({{{"when", {{"kind", "min_insn_count"}, {"count", 2}}},
                        {"effect", {{"kind", "add"}, {"amount", 5.0}}}},
                       {{"when",
                         {{"kind", "feature_equals"},
                          {"feature", "category"},
                          {"value", "mul"}}},
                        {"effect", {{"kind", "multiply"}, {"factor", 2.0}}}}})}};
  PredictorSpec spec = predictor_from_json(j);

  BasicBlock one({ins(u, "nop", {})});
  CHECK(predict(spec, one) == PredictorResult::make_cycles(1.0));

  // (1 + 1 + 5), then no category hit
  BasicBlock two({ins(u, "nop", {}), ins(u, "nop", {})});
  CHECK(predict(spec, two) == PredictorResult::make_cycles(7.0));

  // ((1 + 1) + 5) * 2 with an imul present
  BasicBlock mul({ins(u, "imul_r64_r64", {reg(u, "rax"), reg(u, "rbx")}),
                  ins(u, "nop", {})});
  CHECK(predict(spec, mul) == PredictorResult::make_cycles(14.0));
}

TEST_CASE("a crash rule and a missing cost entry are distinct failures") {
  const SchemeUniverse &u = mini();
  PredictorSpec crashy = predictor_from_json(
      crash_predictor_json(u, "crashy", 1.0, "bitscan"));

  BasicBlock scan({ins(u, "bsf_r64_r64", {reg(u, "rax"), reg(u, "rbx")})});
  PredictorResult r = predict(crashy, scan);
  CHECK(r.kind == PredictorResult::Kind::Crash);
  CHECK_FALSE(r.detail.empty());

  BasicBlock safe({ins(u, "nop", {})});
  CHECK(predict(crashy, safe).is_cycles());

  json partial{{"name", "partial"},
               {"kind", "synthetic"},
               {"costs", {{"nop", 1.0}}}};
  PredictorSpec sparse = predictor_from_json(partial);
  CHECK(predict(sparse, scan).kind == PredictorResult::Kind::Unsupported);
  CHECK(predict(sparse, safe).is_cycles());
}

TEST_CASE("external tools speak the line protocol") {
  const SchemeUniverse &u = mini();
  const std::string dir = make_temp_dir("ext");
  BasicBlock b({ins(u, "add_r64_r64", {reg(u, "rax"), reg(u, "rbx")})});

  auto external = [&](const std::string &path, double timeout = 10.0,
                      std::map<std::string, std::string> env = {}) {
    PredictorSpec spec;
    spec.name = path;
    ExternalSpec e;
    e.command = path;
    e.timeout_seconds = timeout;
    e.env = std::move(env);
    spec.impl = e;
    spec.seal();
    return spec;
  };

  SUBCASE("first stdout line is the cycle count") {
    auto ok = external(make_script(dir, "ok.sh",
                                   "cat > /dev/null\necho 3.0\necho ignored\n"));
    CHECK(predict(ok, b) == PredictorResult::make_cycles(3.0));
  }
  SUBCASE("the block text arrives on stdin") {
    auto echo_in = external(
        make_script(dir, "in.sh", "cat > \"$CAPTURE\"\necho 1.5\n"), 10.0,
        {{"CAPTURE", dir + "/captured.txt"}});
    CHECK(predict(echo_in, b) == PredictorResult::make_cycles(1.5));
    CHECK(read_file(dir + "/captured.txt") == render(b));
  }
  SUBCASE("non-zero exit becomes a crash result") {
    auto dies = external(make_script(dir, "dies.sh", "cat > /dev/null\nexit 3\n"));
    PredictorResult r = predict(dies, b);
    CHECK(r.kind == PredictorResult::Kind::Crash);
    CHECK(r.detail.find("3") != std::string::npos);
  }
  SUBCASE("garbage output becomes a crash result") {
    auto garbled = external(
        make_script(dir, "garbled.sh", "cat > /dev/null\necho not-a-number\n"));
    CHECK(predict(garbled, b).kind == PredictorResult::Kind::Crash);
  }
  SUBCASE("overrunning the deadline becomes a timeout result") {
    auto slow = external(
        make_script(dir, "slow.sh", "cat > /dev/null\nsleep 5\necho 1.0\n"), 0.3);
    CHECK(predict(slow, b).kind == PredictorResult::Kind::Timeout);
  }
}

TEST_CASE("batch evaluation collapses identical blocks into one run") {
  const SchemeUniverse &u = mini();
  const std::string dir = make_temp_dir("count");
  const std::string counter = dir + "/count.txt";
  PredictorSpec spec;
  spec.name = "counting";
  ExternalSpec e;
  e.command = make_script(dir, "count.sh",
                          "cat > /dev/null\necho x >> \"$COUNTER\"\necho 2.0\n");
  e.env = {{"COUNTER", counter}};
  spec.impl = e;
  spec.seal();

  BasicBlock b({ins(u, "nop", {})});
  BatchEvaluator evaluator(1);
  auto results = evaluator.evaluate(spec, {b, b, b, b, b});
  REQUIRE(results.size() == 5);
  for (const auto &r : results)
    CHECK(r == PredictorResult::make_cycles(2.0));
  CHECK(evaluator.evaluations() == 1);
  CHECK(evaluator.cache_hits() == 4);

  std::string log = read_file(counter);
  CHECK(std::count(log.begin(), log.end(), 'x') == 1);
}

TEST_CASE("parallel evaluation returns the same results in the same order") {
  const SchemeUniverse &u = mini();
  Rng rng(12121);
  std::vector<BasicBlock> blocks;
  for (int i = 0; i < 60; ++i)
    blocks.push_back(sample_unconstrained(u, 1 + i % 4, rng));

  PredictorSpec planted = planted_spec();
  PredictorSpec uniform = uniform_spec(2.0);

  BatchEvaluator serial(1), wide(8);
  auto a1 = serial.evaluate(planted, blocks);
  auto a8 = wide.evaluate(planted, blocks);
  CHECK(a1 == a8);

  auto pairs = wide.evaluate_pair(planted, uniform, blocks);
  REQUIRE(pairs.size() == blocks.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].first == a1[i]);
    CHECK(pairs[i].second == PredictorResult::make_cycles(2.0 * blocks[i].size()));
  }
}

TEST_CASE("relative difference is symmetric and scale-invariant") {
  CHECK(rel_difference(12.0, 2.0) == doctest::Approx(10.0 / 7.0).epsilon(1e-12));
  CHECK(rel_difference(1.0, 1.0) == 0.0);
  CHECK(rel_difference(0.0, 0.0) == 0.0);
  CHECK(rel_difference(0.0, 1.0) == 2.0);

  Rng rng(13131);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform_real01() * 50.0;
    const double b = rng.uniform_real01() * 50.0;
    const double s = 0.25 + rng.uniform_real01() * 8.0;
    CHECK(rel_difference(a, b) == doctest::Approx(rel_difference(b, a)).epsilon(1e-12));
    if (a + b > 0)
      CHECK(rel_difference(s * a, s * b) ==
            doctest::Approx(rel_difference(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("result differences and interestingness follow the contract") {
  auto cyc = [](double c) { return PredictorResult::make_cycles(c); };
  const PredictorResult crash = PredictorResult::crash("boom");
  const PredictorResult timeout = PredictorResult::timeout();
  const PredictorResult unsup = PredictorResult::unsupported();

  CHECK(*result_difference(cyc(12), cyc(2), Metric::Relative) ==
        doctest::Approx(10.0 / 7.0));
  CHECK(*result_difference(cyc(5.03), cyc(2.0), Metric::Absolute) ==
        doctest::Approx(3.03));
  CHECK(std::isinf(*result_difference(cyc(1), crash, Metric::Relative)));
  CHECK(std::isinf(*result_difference(timeout, cyc(1), Metric::Absolute)));
  CHECK_FALSE(result_difference(unsup, cyc(1), Metric::Relative).has_value());

  CHECK(is_interesting(cyc(12), cyc(2), Metric::Relative, 0.5));
  CHECK_FALSE(is_interesting(cyc(2.2), cyc(2), Metric::Relative, 0.5));
  CHECK(is_interesting(cyc(5.03), cyc(2.0), Metric::Absolute, 2.0));
  CHECK_FALSE(is_interesting(cyc(3.9), cyc(2.0), Metric::Absolute, 2.0));
  // threshold is strict
  CHECK_FALSE(is_interesting(cyc(3.0), cyc(1.0), Metric::Absolute, 2.0));
  CHECK(is_interesting(crash, cyc(2), Metric::Relative, 0.5));
  CHECK(is_interesting(cyc(2), timeout, Metric::Relative, 0.5));
  CHECK_FALSE(is_interesting(unsup, cyc(2), Metric::Relative, 0.5));
  // a crash outranks missing support
  CHECK(is_interesting(crash, unsup, Metric::Relative, 0.5));
}

TEST_CASE("abstract blocks are interesting only when every sample is") {
  const SchemeUniverse &u = mini();
  PredictorSpec uniform = uniform_spec(1.0);
  PredictorSpec planted = planted_spec();
  BatchEvaluator evaluator(1);

  // pinned to two read-modify-writes of one location: always fires
  AbstractBlock pinned = represent(double_rmw(16, 16));
  Rng rng1(14141);
  AbstractCheck yes = abstract_interesting(u, pinned, uniform, planted,
                                           Metric::Relative, 0.5, 10, rng1,
                                           evaluator);
  CHECK(yes.interesting);
  CHECK(yes.evidence.samples.size() == 10);
  for (const auto &s : yes.evidence.samples) {
    CHECK(s.interesting);
    CHECK(*s.difference == doctest::Approx(10.0 / 7.0));
  }

  // with the location constraint dropped, non-aliasing samples appear
  AbstractBlock loose = pinned;
  loose.aliasing.erase(AliasPair({1, 1}, {2, 1}));
  Rng rng2(15151);
  AbstractCheck no = abstract_interesting(u, loose, uniform, planted,
                                          Metric::Relative, 0.5, 20, rng2,
                                          evaluator);
  CHECK_FALSE(no.interesting);
  bool found_uninteresting_sample = false;
  for (const auto &s : no.evidence.samples)
    if (!s.interesting)
      found_uninteresting_sample = true;
  CHECK(found_uninteresting_sample);

  // a single sample is enough evidence either way
  Rng rng3(16161);
  AbstractCheck one = abstract_interesting(u, pinned, uniform, planted,
                                           Metric::Relative, 0.5, 1, rng3,
                                           evaluator);
  CHECK(one.interesting);
  CHECK(one.evidence.samples.size() == 1);

  // a dead-ended batch is never interesting and records the failure
  BasicBlock two({ins(u, "shl_r64_cl", {reg(u, "rax"), reg(u, "cl")}),
                  ins(u, "shl_r64_cl", {reg(u, "rbx"), reg(u, "cl")})});
  AbstractBlock impossible = represent(two);
  impossible.aliasing[AliasPair({1, 2}, {2, 2})] = AliasKind::MustNot;
  SamplerConfig tight;
  tight.max_retries = 3;
  Rng rng4(17171);
  AbstractCheck dead = abstract_interesting(u, impossible, uniform, planted,
                                            Metric::Relative, 0.5, 5, rng4,
                                            evaluator, tight);
  CHECK_FALSE(dead.interesting);
  CHECK(dead.evidence.underfilled);
  CHECK(dead.evidence.sampler_failures > 0);
}

TEST_CASE("canonical instances are deterministic and probing filters schemes") {
  const SchemeUniverse &u = mini();
  auto canon = canonical_instance(u, *u.find_scheme("add_m64_r64"));
  REQUIRE(canon.has_value());
  CHECK(render(*canon) == "add [rcx], rax\n");
  auto shl = canonical_instance(u, *u.find_scheme("shl_r64_cl"));
  REQUIRE(shl.has_value());
  CHECK(render(*shl) == "shl rax, cl\n");

  PredictorSpec uniform = uniform_spec(1.0);
  json partial_json{{"name", "partial"},
                    {"kind", "synthetic"},
                    {"default_cost", 1.0},
                    {"costs", {{"nop", 0.0}, {"bsf_r64_r64", 0.0}}}};
  PredictorSpec partial = predictor_from_json(partial_json);

  BatchEvaluator evaluator(4);
  auto all = probe_supported(u, {&uniform}, evaluator);
  CHECK(all.size() == u.num_schemes());

  auto some = probe_supported(u, {&uniform, &partial}, evaluator);
  CHECK(some.size() == u.num_schemes() - 2);
  CHECK(some.count("nop") == 0);
  CHECK(some.count("bsf_r64_r64") == 0);
  CHECK(some.count("add_r64_r64") == 1);
}

TEST_CASE("predictor identities track the full configuration") {
  PredictorSpec a = uniform_spec(1.0);
  PredictorSpec b = uniform_spec(1.0);
  PredictorSpec c = uniform_spec(2.0);
  CHECK(a.identity() == b.identity());
  CHECK(a.identity() != c.identity());

  json round = predictor_to_json(planted_spec());
  CHECK(predictor_from_json(round).identity() == planted_spec().identity());
}

TEST_CASE("predictor results round-trip through json") {
  for (const PredictorResult &r :
       {PredictorResult::make_cycles(3.25), PredictorResult::crash("why"),
        PredictorResult::timeout(), PredictorResult::unsupported()})
    CHECK(predictor_result_from_json(predictor_result_to_json(r)) == r);
}
