#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "divseq/cli.hpp"
#include "divseq/serialize.hpp"

using namespace divseq;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;

  Json json() const { return Json::parse(out); }
  Json error() const { return Json::parse(err).at("error"); }
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempStore {
  std::string path;
  TempStore() {
    path = (std::filesystem::temp_directory_path() / ("divseq_cli_" + std::to_string(std::rand()) + ".json")).string();
    std::filesystem::remove(path);
  }
  ~TempStore() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("kernel example cites the single step 7*1+1=8") {
  const Run r = run({"kernel", "--p", "7", "--q", "16", "--domain", "pos", "--element", "8", "--seed-bound", "1"});
  REQUIRE(r.code == kExitOk);
  const Json j = r.json();
  CHECK(j.at("schema") == "divseq-report/1");
  CHECK(j.at("answer") == "yes");
  const Json& terms = j.at("certificate").at("terms");
  REQUIRE(terms.size() == 1);
  CHECK(terms[0].at("relation_text") == "7*1+1=8");
  CHECK(terms[0].at("coefficient") == "1");
  CHECK(replay(kernel_certificate_from_json(j.at("certificate"))));
}

TEST_CASE("kernel reports unknown without failing") {
  const Run r = run({"kernel", "--p", "7", "--q", "16", "--element", "11", "--seed-bound", "1"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.json().at("answer") == "unknown");
  CHECK_FALSE(r.json().contains("certificate"));
}

TEST_CASE("census example summary") {
  const Run r = run({"census", "--p", "3", "--q", "2", "--domain", "pos", "--seeds", "1..1000"});
  REQUIRE(r.code == kExitOk);
  const Json j = r.json();
  CHECK(j.at("cycles") == 1);
  CHECK(j.at("lower_bound") == 1);
  CHECK(j.at("unresolved") == 0);
}

TEST_CASE("census csv has one row per seed and ignores job count") {
  const Run one = run({"census", "--p", "3", "--q", "2", "--seeds", "1..50", "--format", "csv"});
  const Run four = run({"census", "--p", "3", "--q", "2", "--seeds", "1..50", "--format", "csv", "--jobs", "4"});
  REQUIRE(one.code == kExitOk);
  CHECK(one.out == four.out);
  CHECK(std::count(one.out.begin(), one.out.end(), '\n') == 51);
  CHECK(one.out.rfind("seed,status,cycle_id,steps\n", 0) == 0);
}

TEST_CASE("nonzero census over a negative range") {
  const Run r = run({"census", "--p", "3", "--q", "2", "--domain", "nonzero", "--seeds", "-200..200"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.json().at("cycles").get<int>() >= 4);
}

TEST_CASE("usage errors exit 1 with structured stderr") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"orbit", "--p", "3", "--q", "2", "--domain", "pos", "--seed", "0"},
           {"census", "--p", "3", "--q", "2", "--domain", "pos", "--seeds", "-5..5"},
           {"census", "--p", "3", "--q", "2", "--seeds", "5"},
           {"orbit", "--p", "0", "--q", "2", "--seed", "1"},
           {"orbit", "--q", "2", "--seed", "1"},
           {"frobnicate"},
           {}}) {
    const Run r = run(args);
    CHECK(r.code == kExitUsage);
    CHECK(r.out.empty());
    CHECK(r.error().at("exit_code") == 1);
  }
}

TEST_CASE("unusual parameters need the override") {
  CHECK(run({"orbit", "--p", "-3", "--q", "2", "--domain", "nonzero", "--seed", "1"}).code == kExitUsage);
  CHECK(run({"orbit", "--p", "-3", "--q", "2", "--domain", "nonzero", "--seed", "1", "--allow-unusual-params"}).code ==
        kExitOk);
}

TEST_CASE("error kinds map to exit codes") {
  CHECK(exit_code_for(ErrorKind::SizeGuard) == kExitAborted);
  CHECK(exit_code_for(ErrorKind::CorruptCertificate) == kExitReplay);
  CHECK(exit_code_for(ErrorKind::InvalidCertificate) == kExitReplay);
  CHECK(exit_code_for(ErrorKind::InvalidArgument) == kExitUsage);
  CHECK(exit_code_for(ErrorKind::ParseError) == kExitUsage);
}

TEST_CASE("orbit report") {
  const Run r = run({"orbit", "--p", "3", "--q", "2", "--seed", "7"});
  REQUIRE(r.code == kExitOk);
  const Json j = r.json();
  CHECK(j.at("status") == "ReachedCycle");
  CHECK(j.at("path").front() == "7");
  CHECK(j.at("cycle").at("members") == Json{"1", "4", "2"});
}

TEST_CASE("present and overline reports") {
  const Run p = run({"present", "--p", "3", "--q", "2", "--seed-bound", "20", "--prime-bound", "7"});
  REQUIRE(p.code == kExitOk);
  CHECK(p.json().at("harvest").at("policy") == "fixed");
  CHECK(p.json().at("primes").size() == 4);
  CHECK(p.json().at("truncated") == true);
  const Run o = run({"overline", "--p", "3", "--q", "2", "--domain", "nonzero", "--seeds", "-30..30"});
  REQUIRE(o.code == kExitOk);
  CHECK(o.json().at("conditional") == false);
  CHECK(o.json().at("one_cycle").at("members") == Json{"1", "4", "2"});
}

TEST_CASE("deduce session persists, derives and queries") {
  TempStore s;
  Run r = run({"deduce", "--store", s.path, "--assert",
               R"j({"statement":"KernelMember(8, H(7,2;pos))","status":"Certified","seed_bound":"10"})j", "--assert",
               R"j({"statement":"KernelMember(8, H(7,16;pos))","status":"Certified"})j"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.json().at("asserted").size() == 2);
  REQUIRE(std::filesystem::exists(s.path));

  r = run({"deduce", "--store", s.path, "--apply", "--query", "QuotientOf(H(7,16), H(7,2))"});
  REQUIRE(r.code == kExitOk);
  const Json applied = r.json();
  CHECK_FALSE(applied.at("derived").empty());
  const Json& hits = applied.at("query").at("QuotientOf(H(7,16), H(7,2))");
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].at("status") == "Certified");
  CHECK(hits[0].at("replays") == true);
  CHECK(hits[0].at("certificate").at("rule") == "R4");

  // Re-applying changes nothing.
  r = run({"deduce", "--store", s.path, "--apply"});
  CHECK(r.json().at("derived").empty());
}

TEST_CASE("deduce rejects a tampered store with exit 3") {
  TempStore s;
  REQUIRE(run({"deduce", "--store", s.path, "--assert",
               R"j({"statement":"KernelMember(4, H(3,2;pos))","status":"Certified"})j"})
              .code == kExitOk);
  std::string text;
  {
    std::ifstream in(s.path);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto at = text.find("\"coefficient\": \"1\"");
  REQUIRE(at != std::string::npos);
  text.replace(at, 18, "\"coefficient\": \"3\"");
  {
    std::ofstream out(s.path, std::ios::trunc);
    out << text;
  }
  const Run r = run({"deduce", "--store", s.path, "--query", "?"});
  CHECK(r.code == kExitReplay);
  CHECK(r.error().at("kind") == "CorruptCertificate");
}

TEST_CASE("deduce computed leaves and hypotheses") {
  TempStore s;
  const Run r = run({"deduce", "--store", s.path, "--assert",
                     R"j({"statement":"EquivalentToOne(4, C(3,2;pos))","status":"Certified"})j", "--assert",
                     R"j({"statement":"ClassLowerBound(C(3,2;nonzero), 4)","status":"Certified","seeds":"-100..100"})j",
                     "--assert", R"j({"statement":"SingleClass(C(3,2;pos))","status":"Hypothesis"})j", "--apply",
                     "--query", "OrderAtMost(?, ?)"});
  REQUIRE(r.code == kExitOk);
  const Json j = r.json();
  CHECK(j.at("asserted")[0].at("status") == "Certified");
  CHECK(j.at("asserted")[2].at("status") == "Hypothesis");
  for (const auto& hit : j.at("query").at("OrderAtMost(?, ?)")) CHECK(hit.at("status") != "Certified");

  const Run bad = run({"deduce", "--store", s.path, "--assert",
                       R"j({"statement":"ClassLowerBound(C(3,2;pos), 2)","status":"Certified","seeds":"1..100"})j"});
  CHECK(bad.code == kExitUsage);
  CHECK(run({"deduce", "--store", s.path, "--assert", "not json"}).code == kExitUsage);
}

TEST_CASE("deduce power request") {
  TempStore s;
  const Run r = run({"deduce", "--store", s.path, "--power", "H(3,2;pos)^3", "--query", "QuotientOf(H(3,2), H(3,8))"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.json().at("query").at("QuotientOf(H(3,2), H(3,8))").size() == 1);
  CHECK(run({"deduce", "--store", s.path, "--power", "H(3,2;pos)^1"}).code == kExitUsage);
}

TEST_CASE("help exits 0") {
  const Run r = run({"--help"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("census") != std::string::npos);
}

TEST_CASE("output flag writes the report to a file") {
  TempStore f;
  const Run r = run({"--output", f.path, "orbit", "--p", "3", "--q", "2", "--seed", "5"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.empty());
  std::ifstream in(f.path);
  const Json j = Json::parse(in);
  CHECK(j.at("command") == "orbit");
  CHECK(run({"--output", f.path, "orbit", "--p", "3", "--q", "2", "--seed", "0"}).code == kExitUsage);
}
