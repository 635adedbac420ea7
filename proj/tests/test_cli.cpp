#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "seqtag/cli.hpp"
#include "seqtag/corpus.hpp"
#include "seqtag/evaluation.hpp"

using namespace seqtag;
namespace fs = std::filesystem;

namespace {

const char* kTiny =
    "# id a\nJohn B-PER\nvisited O\nParis B-LOC\n\n"
    "# id b\nwe O\nplayed O\nAmong B-CW\nUs I-CW\n\n"
    "# id c\nAcme B-CORP\nhired O\nMary B-PER\n\n"
    "# id d\nthe O\nband O\nQueen B-GRP\nsold O\niPhones B-PROD\n\n";

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("seqtag-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) const {
    std::ofstream(path / name, std::ios::binary) << content;
    return (path / name).string();
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(SEQTAG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("train on a tiny corpus") {
  TempDir d;
  const auto train = d.file("train.conll", kTiny);
  const auto r = run({"train", "--train-file", train, "--model", d / "m.bin", "--arch", "linear",
                      "--epochs", "5"});
  CHECK(r.code == 0);
  CHECK(fs::exists(d / "m.bin"));
  CHECK(count_lines(r.err) == 6);  // header plus one row per epoch
  CHECK(r.err.rfind("epoch\tloss\tdev_p\tdev_r\tdev_f1\n1\t", 0) == 0);
  CHECK(parse_report(r.out).per_class.size() == 6);
}

TEST_CASE("missing train file is an I/O error") {
  TempDir d;
  const auto r = run({"train", "--train-file", d / "absent.conll", "--model", d / "m.bin"});
  CHECK(r.code == 2);
  CHECK(r.err.find("no such file") != std::string::npos);
  CHECK_FALSE(fs::exists(d / "m.bin"));
}

TEST_CASE("parse errors name the file and line") {
  TempDir d;
  const auto bad = d.file("bad.conll", "a O\nb B-MISC\n");
  const auto r = run({"train", "--train-file", bad, "--model", d / "m.bin"});
  CHECK(r.code == 3);
  CHECK(r.err.find("bad.conll:2: unknown tag 'B-MISC'") != std::string::npos);
}

TEST_CASE("repeated training runs write identical model files") {
  TempDir d;
  const auto train = d.file("train.conll", kTiny);
  for (const char* threads : {"1", "3"}) {
    const auto r = run({"train", "--train-file", train, "--dev-file", train, "--model",
                        d / (std::string("m") + threads + ".bin"), "--arch", "bilstm-crf", "--epochs",
                        "3", "--embed-dim", "4", "--hidden-dim", "4", "--threads", threads});
    REQUIRE(r.code == 0);
  }
  CHECK(slurp(d / "m1.bin") == slurp(d / "m3.bin"));
}

TEST_CASE("predict reproduces gold on an overfit model") {
  TempDir d;
  const auto train = d.file("train.conll", kTiny);
  REQUIRE(run({"train", "--train-file", train, "--model", d / "m.bin", "--arch", "crf", "--epochs",
               "60", "--lr", "0.1", "--dropout", "0", "--patience", "0", "--embed-dim", "8"})
              .code == 0);
  const auto r = run({"predict", "--input", train, "--model", d / "m.bin"});
  REQUIRE(r.code == 0);
  const auto gold = parse_conll(std::string_view(kTiny));
  const auto pred = parse_conll(std::string_view(r.out));
  REQUIRE(pred.size() == gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    CHECK(pred[i].tokens == gold[i].tokens);
    CHECK(pred[i].id == gold[i].id);
    CHECK(*pred[i].gold_tags == *gold[i].gold_tags);
  }

  // Unseen text still yields valid BIO, written to --out.
  const auto other = d.file("other.conll", "Zorp\nfled\nto\nQuux\nCity\n\nI\n\n");
  REQUIRE(run({"predict", "--input", other, "--model", d / "m.bin", "--out", d / "p.conll"}).code == 0);
  for (const auto& s : parse_conll(std::string_view(slurp(d / "p.conll")))) CHECK(is_valid_bio(*s.gold_tags));

  const auto empty = d.file("empty.conll", "");
  const auto e = run({"predict", "--input", empty, "--model", d / "m.bin"});
  CHECK(e.code == 0);
  CHECK(e.out.empty());
}

TEST_CASE("predict reports a POS feature mismatch") {
  TempDir d;
  const auto train = d.file("train.conll", "John NNP B-PER\nran VBD O\n\n");
  REQUIRE(run({"train", "--train-file", train, "--model", d / "m.bin", "--arch", "linear", "--epochs",
               "1", "--pos-features"})
              .code == 0);
  const auto input = d.file("in.conll", "John\nran\n\n");
  const auto r = run({"predict", "--input", input, "--model", d / "m.bin"});
  CHECK(r.code != 0);
  CHECK(r.err.find("POS") != std::string::npos);
}

TEST_CASE("predict with a corrupt model file fails cleanly") {
  TempDir d;
  const auto input = d.file("in.conll", "a\n\n");
  const auto model = d.file("m.bin", "XXXXnot a model");
  CHECK(run({"predict", "--input", input, "--model", model}).code != 0);
  CHECK(run({"predict", "--input", input, "--model", d / "none.bin"}).code == 2);
}

TEST_CASE("evaluate") {
  TempDir d;
  const auto gold = d.file("gold.conll", kTiny);
  const auto self = run({"evaluate", "--gold", gold, "--input", gold});
  REQUIRE(self.code == 0);
  const auto report = parse_report(self.out);
  for (const auto& c : report.per_class) CHECK(c.f1 == 1.0);
  CHECK(report.macro_f1 == 1.0);

  const auto g2 = d.file("g2.conll", "a B-PER\nb I-PER\nc O\nd B-LOC\ne O\n\n");
  const auto p2 = d.file("p2.conll", "a B-PER\nb I-PER\nc O\nd O\ne B-LOC\n\n");
  const auto pair = run({"evaluate", "--gold", g2, "--input", p2, "--out", d / "r.tsv"});
  REQUIRE(pair.code == 0);
  const auto r2 = parse_report(slurp(d / "r.tsv"));
  const auto& per = r2.at(EntityType::PER);
  const auto& loc = r2.at(EntityType::LOC);
  CHECK((per.precision + loc.precision) / 2 == 0.5);
  CHECK((per.recall + loc.recall) / 2 == 0.5);
  CHECK((per.f1 + loc.f1) / 2 == 0.5);

  const auto ragged = d.file("ragged.conll", "a B-PER\nb I-PER\n\n");
  const auto bad = run({"evaluate", "--gold", g2, "--input", ragged});
  CHECK(bad.code == 3);
  CHECK(bad.err.find("sentence 0") != std::string::npos);
}

TEST_CASE("config file precedence") {
  TempDir d;
  const auto train = d.file("train.conll", kTiny);
  const auto cfg = d.file("run.cfg", "# tiny run\narch=linear\nepochs=4\nseed=3\n");
  const auto from_file = run({"train", "--train-file", train, "--model", d / "a.bin", "--config", cfg});
  REQUIRE(from_file.code == 0);
  CHECK(count_lines(from_file.err) == 5);
  const auto overridden =
      run({"train", "--train-file", train, "--model", d / "b.bin", "--config", cfg, "--epochs", "2"});
  REQUIRE(overridden.code == 0);
  CHECK(count_lines(overridden.err) == 3);

  const auto bad_cfg = d.file("bad.cfg", "arch=transformer\n");
  CHECK(run({"train", "--train-file", train, "--model", d / "c.bin", "--config", bad_cfg}).code == 4);
  CHECK(run({"train", "--train-file", train, "--model", d / "c.bin", "--dropout", "1.5"}).code == 4);
  CHECK(run({"train", "--train-file", train}).code == 4);
  CHECK(run({"frobnicate"}).code == 4);
}

TEST_CASE("binary: help and exit codes") {
  for (const char* sub : {"", "train ", "predict ", "evaluate "}) CHECK(run_binary(std::string(sub) + "--help") == 0);
  CHECK(run_binary("train --train-file /nonexistent/x.conll --model /nonexistent/m.bin") == 2);
  CHECK(run_binary("train --arch nope --train-file x --model y") == 4);
}
