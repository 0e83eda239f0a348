// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <bit>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "closure_oracle.hpp"
#include "common/files.hpp"
#include "lexicon/lexicon.hpp"
#include "melter/melter.hpp"
#include "mr_golden.hpp"
#include "oracle/oracle.hpp"
#include "planner/planner.hpp"
#include "soundness.hpp"
#include "support.hpp"

namespace mc = meltcheck;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail.str("");
      detail << what;
    }
  }
};

int failures = 0;

void criterion(const std::string& name, double limit_sec, const std::function<void(Outcome&)>& body) {
  Outcome o;
  auto start = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail.str("");
    o.detail << "exception: " << e.what();
  }
  double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (o.pass && sec > limit_sec) {
    o.pass = false;
    o.detail.str("");
    o.detail << "took longer than " << limit_sec << " s";
  }
  if (!o.pass) ++failures;
  std::printf("%s  %-26s %.3f s  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), sec, o.detail.str().c_str());
  std::fflush(stdout);
}

std::uint64_t ipow(std::uint64_t b, unsigned e) {
  std::uint64_t r = 1;
  while (e--) r *= b;
  return r;
}

void pair_count_law(Outcome& o) {
  for (unsigned m = 0; m <= 10; ++m) {
    o.require(mc::planner::count_pairs(m, std::nullopt) == ipow(3, m) - ipow(2, m), "closed form at m=" + std::to_string(m));
  }
  o.require(mc::planner::count_pairs(8, std::nullopt) == 6305, "m=8 is not 6305");
  std::size_t lattices = 0;
  for (unsigned m = 0; m <= 6; ++m) {
    std::vector<int> ids;
    for (unsigned i = 0; i < m; ++i) ids.push_back(static_cast<int>(i + 2));
    for (mc::planner::MaxDepth d : {mc::planner::MaxDepth{1}, mc::planner::MaxDepth{2}, mc::planner::MaxDepth{3},
                                    mc::planner::MaxDepth{}}) {
      std::size_t brute = 0;
      for (unsigned t = 1; t < (1u << m); ++t) {
        if (d && static_cast<unsigned>(std::popcount(t)) > *d) continue;
        for (unsigned s = 0; s < t; ++s)
          if ((s & t) == s) ++brute;
      }
      auto pairs = mc::planner::enumerate_pairs("x", ids, {d, std::nullopt});
      o.require(pairs.size() == brute, "lattice size at m=" + std::to_string(m));
      o.require(mc::planner::count_pairs(m, d) == brute, "capped count at m=" + std::to_string(m));
      ++lattices;
    }
  }
  o.detail << "3^m-2^m for m=0..10, m=8 -> 6305, " << lattices << " lattices match brute force";
}

void mr_golden(Outcome& o) {
  const auto& cases = mc::test::mr_golden_cases();
  o.require(cases.size() >= 20, "fewer than 20 cases");
  std::size_t mr1 = 0, mr2 = 0;
  for (const auto& c : cases) {
    auto r1 = mc::oracle::check_mr1(c.ancestor, c.descendant, c.deleted);
    o.require(r1.violating == c.mr1 && r1.violated == !c.mr1.empty(), std::string("MR1 mismatch: ") + c.name);
    mr1 += r1.violated;
    if (c.mr2) {
      auto r2 = mc::oracle::check_mr2(c.ancestor, c.descendant, c.alldel);
      o.require(r2.violating == *c.mr2 && r2.violated == !c.mr2->empty(), std::string("MR2 mismatch: ") + c.name);
      mr2 += r2.violated;
    }
  }
  o.detail << cases.size() << " cases (" << mr1 << " MR1 and " << mr2 << " MR2 violations) match";
}

void lexicon_rules(Outcome& o) {
  const auto& lex = mc::test::lex();
  using V = std::vector<std::string>;
  o.require(mc::lexicon::apply_wordgroup_rules({"hot", "dog"}, lex) == V{"hot dog"}, "hot dog");
  o.require(mc::lexicon::apply_wordgroup_rules({"bowl", "sink"}, lex) == V{"sink"}, "bowl sink");
  o.require(mc::lexicon::apply_wordgroup_rules({"bow", "tie"}, lex) == V{"tie"}, "bow tie");
  auto hot = mc::lexicon::extract_object_set("two hot dogs on a dining table", lex).classes;
  o.require(hot == std::set<std::string>{"dining table", "hot dog"}, "hot dog caption keeps dog");
  auto balls = mc::lexicon::extract_object_set("A group of balls sitting in a stone window", lex).classes;
  o.require(balls.count("sports ball") && !balls.count("vase"), "balls caption");

  const auto doc = mc::read_json(mc::test::data_dir() / "lexicon.json");
  const auto audit = mc::read_json(mc::test::data_dir() / "lexicon_audit.json");
  const unsigned depth = audit.at("depth").get<unsigned>();
  o.require(depth == 3, "audit depth is not 3");
  std::size_t agree = 0;
  for (const auto& e : audit.at("entries")) {
    const auto w = e.at("word").get<std::string>();
    auto got = mc::lexicon::map_to_keyword(w, mc::lexicon::TargetKeywords::all(), lex, depth).keyword;
    auto oracle = mc::test::closure_oracle(w, doc, depth);
    std::optional<std::string> listed;
    if (!e.at("keyword").is_null()) listed = e.at("keyword").get<std::string>();
    bool ok = got == listed && (oracle ? std::optional<std::string>(oracle->first) : std::nullopt) == listed;
    o.require(ok, "audit word '" + w + "'");
    agree += ok;
  }
  o.require(audit.at("entries").size() == 200, "audit list is not 200 words");
  o.detail << "Rule 1/2 table ok, " << agree << "/" << audit.at("entries").size() << " audit words agree";
}

void soundness(Outcome& o) {
  auto seeds = mc::test::sweep_seeds();
  auto result = mc::test::soundness_sweep(seeds, mc::test::lex());
  o.require(result.max_meltable <= 4, "a seed has more than 4 meltable objects");
  o.require(result.issues.empty(), result.issues.empty() ? "" : "issue raised: " + result.issues.front());
  o.detail << seeds.size() << " seeds, " << result.pairs << " pairs at unlimited depth, " << result.issues.size()
           << " issues";
}

// Hand-evaluated expectations for the planted adapter on the fixture corpus.
struct Expected {
  std::string seed;
  std::vector<int> ancestor, descendant;
  std::string relation;
  std::set<std::string> violating;
};
const std::vector<Expected> kPlanted = {
    {"s2", {}, {2}, "MR2", {"person"}},   {"s2", {2}, {2, 3}, "MR1", {"person"}},
    {"s2", {2}, {2, 4}, "MR1", {"person"}}, {"s3", {}, {2}, "MR1", {"sports ball"}},
    {"s3", {2}, {2, 3}, "MR1", {"sports ball"}}, {"s3", {2}, {2, 4}, "MR1", {"sports ball"}},
};

mc::test::TempDir& run_dir() {
  static mc::test::TempDir dir;
  return dir;
}

int run_cli(const std::filesystem::path& out) {
  std::string cmd = std::string(MELTCHECK_CLI) + " --config " + (mc::test::fixtures() / "run_config.json").string() +
                    " --out " + out.string() + " run >/dev/null 2>" + (out.string() + ".stderr");
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void end_to_end(Outcome& o) {
  const std::string golden = mc::read_text(mc::test::fixtures() / "golden" / "issues.jsonl");
  std::vector<std::string> outputs;
  for (int i = 0; i < 3; ++i) {
    auto out = run_dir() / ("run" + std::to_string(i));
    int code = run_cli(out);
    o.require(code == 0, "run " + std::to_string(i) + " exited " + std::to_string(code));
    if (code != 0) return;
    outputs.push_back(mc::read_text(out / "issues.jsonl"));
  }
  for (const auto& text : outputs) o.require(text == golden, "issues.jsonl differs from golden");

  std::vector<Expected> got;
  for (const auto& line : mc::read_jsonl(run_dir() / "run0" / "issues.jsonl")) {
    const auto& v = line.value;
    got.push_back({v["pair"]["seed_id"], v["pair"]["ancestor"], v["pair"]["descendant"], v["mr_violated"],
                   v["violating_classes"]});
    o.require(v["adapter_id"] == "planted", "issue from the reference adapter");
  }
  o.require(got.size() == kPlanted.size(), "expected " + std::to_string(kPlanted.size()) + " issues, got " +
                                               std::to_string(got.size()));
  for (std::size_t i = 0; i < std::min(got.size(), kPlanted.size()); ++i) {
    const auto& a = got[i];
    const auto& b = kPlanted[i];
    o.require(a.seed == b.seed && a.ancestor == b.ancestor && a.descendant == b.descendant &&
                  a.relation == b.relation && a.violating == b.violating,
              "issue " + std::to_string(i) + " does not match the hand evaluation");
  }
  o.detail << "3 runs byte-identical to golden, k=" << got.size() << " (1 MR2 + 5 MR1) as hand-evaluated";
}

void inpainter(Outcome& o) {
  std::mt19937 rng(5);
  mc::Image img{33, 21, std::vector<std::uint8_t>(33 * 21 * 3)};
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(rng());
  mc::GrayImage mask{33, 21, std::vector<std::uint8_t>(33 * 21)};
  for (auto& p : mask.pixels) p = rng() % 4 == 0 ? 255 : 0;
  auto out = mc::melter::builtin_inpaint(img, mask).image;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < mask.pixels.size(); ++i) {
    if (mask.pixels[i]) continue;
    ++kept;
    for (int c = 0; c < 3; ++c) o.require(out.rgb[i * 3 + c] == img.rgb[i * 3 + c], "unmasked pixel changed");
  }

  mc::Image flat{16, 12, std::vector<std::uint8_t>(16 * 12 * 3, 77)};
  mc::GrayImage box{16, 12, std::vector<std::uint8_t>(16 * 12, 0)};
  for (int y = 3; y < 9; ++y)
    for (int x = 4; x < 12; ++x) box.pixels[y * 16 + x] = 255;
  o.require(mc::melter::builtin_inpaint(flat, box).image == flat, "uniform image is not a fixed point");

  mc::Image three{3, 3, std::vector<std::uint8_t>(27, 100)};
  for (int c = 0; c < 3; ++c) three.rgb[12 + c] = 0;
  mc::GrayImage centre{3, 3, std::vector<std::uint8_t>(9, 0)};
  centre.pixels[4] = 255;
  auto r = mc::melter::builtin_inpaint(three, centre, {100, 1e-3});
  o.require(r.iterations <= 100, "3x3 fill needed more than 100 iterations");
  o.require(r.last_change <= 1e-3, "3x3 fill did not converge");
  for (int c = 0; c < 3; ++c) o.require(std::abs(int(r.image.rgb[12 + c]) - 100) == 0, "3x3 centre is not 100");
  o.detail << kept << " unmasked pixels identical, flat fixed point, 3x3 centre=100 after " << r.iterations
           << " iteration(s)";
}

void gt_audit(Outcome& o) {
  auto flags_file = run_dir() / "run0" / "gt_flags.jsonl";
  if (!std::filesystem::exists(flags_file)) {
    int code = run_cli(run_dir() / "run0");
    o.require(code == 0, "run exited " + std::to_string(code));
  }
  std::map<std::string, std::set<std::string>> flagged;
  for (const auto& line : mc::read_jsonl(flags_file)) {
    flagged[line.value["seed_id"]] = line.value["missing_classes"].get<std::set<std::string>>();
  }
  const std::map<std::string, std::set<std::string>> expected = {{"s1", {"zebra"}}, {"s2", {"dog", "person"}}};
  o.require(flagged == expected, "flagged seeds differ from the injected label errors");
  o.detail << "flagged s1 {zebra} (labelled giraffe) and s2 {dog, person} (omitted); s3 clean";
}

void precision(Outcome& o) {
  auto a = mc::oracle::format_precision(1824, 1979);
  auto b = mc::oracle::format_precision(0, 0);
  o.require(a == "92.17%", "1824/1979 gave " + a);
  o.require(b == "undefined", "0/0 gave " + b);
  o.require(mc::oracle::format_precision(1, 20000) == "0.01%", "half-up rounding");
  o.detail << "1824/1979 -> " << a << ", 0 labeled -> " << b;
}

}  // namespace

int main() {
  criterion("pair-count law", 1, pair_count_law);
  criterion("MR golden suite", 1, mr_golden);
  criterion("lexicon rule table", 1, lexicon_rules);
  criterion("soundness sweep", 5, soundness);
  criterion("end-to-end determinism", 30, end_to_end);
  criterion("builtin inpainter", 5, inpainter);
  criterion("GT audit", 5, gt_audit);
  criterion("precision arithmetic", 1, precision);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
