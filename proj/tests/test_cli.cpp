#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <string>

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout captured and stderr discarded.
Result run(const std::string& args) {
  std::string cmd = std::string(C2WFOMC_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string problem(const char* name) { return std::string(C2WFOMC_PROBLEMS) + "/" + name; }

std::string temp_file(const std::string& name, const std::string& text) {
  std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Cli, CountExamples) {
  auto r = run("count " + problem("regular2.c2") + " --n 3..10");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "1 3 12 70 465 3507 30016 286884\n");
  r = run("count " + problem("heads_tails.c2") + " --n 2");
  EXPECT_EQ(r.out, "9\n");
  r = run("count " + problem("bijections.c2") + " --n 5");
  EXPECT_EQ(r.out, "120\n");
}

TEST(Cli, CountFormats) {
  auto r = run("count " + problem("heads_tails.c2") + " --n 1,2 --format csv");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "n,value_num,value_den\n1,3,1\n2,9,1\n");
  r = run("count " + problem("heads_tails.c2") + " --n 2 --format jsonl");
  EXPECT_NE(r.out.find("\"value\":\"9\""), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\"backend\":\"interpolation\""), std::string::npos);
  r = run("count " + problem("heads_tails.c2") + " --n 2 --backend dft");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, 1), "9");
}

TEST(Cli, TableFixedPoints) {
  auto r = run("table " + problem("fixed_points.c2") + " --n 10 --format csv");
  ASSERT_EQ(r.code, 0);
  // |f| = 10 slice, xi = 0: 9^10
  EXPECT_NE(r.out.find("10,0,3486784401"), std::string::npos);
  auto empty = temp_file("nopsi.c2", "predicate u/1\nsentence forall x. u(x)\n");
  r = run("table " + empty + " --n 2");
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, MlnPartitionAndMarginal) {
  auto f = temp_file("sm.c2", "predicate sm/1\nmln 2: sm(x)\n");
  EXPECT_EQ(run("mln " + f + " --n 1").out, "3\n");
  EXPECT_EQ(run("mln " + f + " --n 2").out, "9\n");
  EXPECT_EQ(run("mln " + f + " --n 1 --query 'forall x. sm(x)'").out, "2/3\n");
  auto h = temp_file("hard.c2", "predicate sm/1\nmln hard: ~sm(x)\n");
  EXPECT_EQ(run("mln " + h + " --n 2").out, "1\n");
}

TEST(Cli, CheckReportsMatchAndMismatch) {
  auto r = run("check " + problem("heads_tails.c2") + " --n 1..3");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("EXACT-MATCH n=2"), std::string::npos);
  r = run("check " + problem("smokers.c2") + " --n 2 --query 'smokes(alice)'");
  EXPECT_EQ(r.code, 0) << r.out;
  r = run("check " + problem("heads_tails.c2") + " --n 2 --corrupt-multiplier");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("MISMATCH n=2"), std::string::npos);
  auto big = temp_file("big.c2", "predicate a/2 b/2 c/2\nsentence forall x. forall y. (a(x,y) | b(x,y) | c(x,y))\n");
  r = run("check " + big + " --n 5");
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, ExitCodesAndNoPartialOutput) {
  auto bad = temp_file("bad.c2", "predicate p/1\nsentence forall z. p(z)\n");
  auto r = run("count " + bad + " --n 2");
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(r.out.empty());
  r = run("count " + problem("heads_tails.c2") + " --n 3..1");
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(r.out.empty());
  r = run("count /nonexistent.c2 --n 2");
  EXPECT_EQ(r.code, 1);
  r = run("frobnicate");
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, OutputIndependentOfWorkers) {
  for (const char* p : {"regular2.c2", "anti_involutive.c2"}) {
    auto a = run(std::string("count ") + problem(p) + " --n 3..6 --workers 1 --format csv");
    auto b = run(std::string("count ") + problem(p) + " --n 3..6 --workers 4 --format csv");
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out) << p;
  }
}

TEST(Cli, ExplainPrintsTrace) {
  auto r = run("explain " + problem("regular2_counting.c2"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("clauses"), std::string::npos);
  EXPECT_NE(r.out.find("multiplier"), std::string::npos);
}
