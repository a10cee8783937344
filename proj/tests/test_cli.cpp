#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "nowcaster/io.hpp"

namespace fs = std::filesystem;
using nowcaster::read_text_file;

namespace {

const std::string kCli = NOWCAST_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nowcaster_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool same_file(const fs::path& a, const fs::path& b) {
  return read_text_file(a.string()) == read_text_file(b.string());
}

}  // namespace

TEST_CASE("cli synth is idempotent and self-validating") {
  const fs::path dir = fresh_dir("synth");
  const std::string base = "synth --seed 5 --days 25 --posts-per-bin 30 --signal-terms 3 "
                           "--noise-terms 8 --location alpha --location beta";
  REQUIRE(run(base + " --out " + (dir / "a").string()) == 0);
  REQUIRE(run(base + " --out " + (dir / "b").string()) == 0);
  for (const char* name : {"posts.jsonl", "ground_truth.csv", "manifest.json", "run.json"}) {
    CHECK(same_file(dir / "a" / name, dir / "b" / name));
  }
}

TEST_CASE("cli pipeline: features, score-matrix, train, infer, evaluate") {
  const fs::path dir = fresh_dir("pipeline");
  const std::string synth_out = (dir / "synth").string();
  REQUIRE(run("synth --seed 7 --days 30 --posts-per-bin 60 --signal-terms 4 "
              "--noise-terms 12 --location alpha --out " + synth_out) == 0);

  // reference document from the manifest terms
  {
    const std::string manifest = read_text_file(synth_out + "/manifest.json");
    std::string words;
    size_t pos = 0;
    while ((pos = manifest.find('"', pos)) != std::string::npos) {
      const size_t end = manifest.find('"', pos + 1);
      const std::string token = manifest.substr(pos + 1, end - pos - 1);
      if (token.rfind("sig", 0) == 0 || token.rfind("nse", 0) == 0) {
        words += token + "\n";
      }
      pos = end + 1;
    }
    std::ofstream ref(dir / "ref.txt");
    ref << words;
  }

  const std::string feats = (dir / "features").string();
  REQUIRE(run("features --posts " + synth_out + "/posts.jsonl --ref " +
              (dir / "ref.txt").string() + " --arity 1 --min-count 0 --out " + feats) == 0);

  // manifest terms are contained in the produced vocabulary
  const std::string vocab = read_text_file(feats + "/vocabulary.txt");
  CHECK(vocab.find("sigaa") != std::string::npos);

  const std::string mat = (dir / "matrix").string();
  REQUIRE(run("score-matrix --posts " + synth_out + "/posts.jsonl --vocab " + feats +
              "/vocabulary.txt --out " + mat) == 0);

  // --jobs must not affect any train output byte
  const std::string t1 = (dir / "train1").string();
  const std::string t8 = (dir / "train8").string();
  const std::string train_args = "train --matrix-u " + mat + "/matrix.csv --truth " +
                                 synth_out + "/ground_truth.csv --seed 3 --bootstraps 8";
  REQUIRE(run(train_args + " --jobs 1 --out " + t1) == 0);
  REQUIRE(run(train_args + " --jobs 8 --out " + t8) == 0);
  for (const char* name : {"model.json", "selected_features.csv", "diagnostics.csv"}) {
    CHECK(same_file(fs::path(t1) / name, fs::path(t8) / name));
  }

  const std::string inf = (dir / "infer").string();
  REQUIRE(run("infer --model " + t1 + "/model.json --matrix " + mat +
              "/matrix.csv --truth " + synth_out + "/ground_truth.csv --out " + inf) == 0);
  CHECK(fs::exists(fs::path(inf) / "inference.csv"));
  CHECK(fs::exists(fs::path(inf) / "metrics.json"));

  const std::string ev = (dir / "eval").string();
  REQUIRE(run("evaluate --inference " + inf + "/inference.csv --out " + ev) == 0);
  const std::string metrics = read_text_file(ev + "/metrics.json");
  CHECK(metrics.find("rmse") != std::string::npos);
  CHECK(metrics.find("pearson") != std::string::npos);

  // metrics recomputed from the CSV agree with the ones infer wrote
  CHECK(read_text_file(ev + "/metrics.json") == read_text_file(inf + "/metrics.json"));
}

TEST_CASE("cli error paths exit nonzero") {
  const fs::path dir = fresh_dir("errors");
  CHECK(run("train --learner nosuch --matrix-u missing.csv --truth missing.csv --out " +
            (dir / "x").string()) != 0);
  CHECK(run("features --posts /nonexistent.jsonl --ref /nonexistent.txt --out " +
            (dir / "y").string()) != 0);
  // unknown config key is rejected
  std::ofstream cfg(dir / "bad.json");
  cfg << "{\"no_such_key\": 1}";
  cfg.close();
  CHECK(run("synth --config " + (dir / "bad.json").string() + " --out " +
            (dir / "z").string()) != 0);
}

TEST_CASE("cli mood, network and posting run deterministically") {
  const fs::path dir = fresh_dir("analyses");
  const std::string synth_out = (dir / "synth").string();
  REQUIRE(run("synth --seed 11 --days 16 --posts-per-bin 40 --signal-terms 3 "
              "--noise-terms 10 --location alpha --location beta --location gamma "
              "--out " + synth_out) == 0);

  // lexicon built from two generated noise terms
  std::ofstream lex(dir / "lex.txt");
  lex << "nseaa\nnseab\n";
  lex.close();

  const std::string mood_args = "mood --posts " + synth_out +
                                "/posts.jsonl --interval day --scheme MSFMS --lexicon "
                                "calm=" + (dir / "lex.txt").string() +
                                " --permutations 50 --seed 2";
  REQUIRE(run(mood_args + " --out " + (dir / "m1").string()) == 0);
  REQUIRE(run(mood_args + " --out " + (dir / "m2").string()) == 0);
  CHECK(same_file(dir / "m1" / "mood.csv", dir / "m2" / "mood.csv"));
  CHECK(same_file(dir / "m1" / "mood_tests.json", dir / "m2" / "mood_tests.json"));

  const std::string net_args = "network --posts " + synth_out +
                               "/posts.jsonl --alpha 3 --windows 2 --swaps 100 --seed 4";
  REQUIRE(run(net_args + " --out " + (dir / "n1").string()) == 0);
  REQUIRE(run(net_args + " --out " + (dir / "n2").string()) == 0);
  CHECK(same_file(dir / "n1" / "edges.csv", dir / "n2" / "edges.csv"));
  CHECK(same_file(dir / "n1" / "nodes.csv", dir / "n2" / "nodes.csv"));
  CHECK(same_file(dir / "n1" / "network_tests.json", dir / "n2" / "network_tests.json"));

  const std::string post_args =
      "posting --posts " + synth_out + "/posts.jsonl --permutations 50 --seed 6";
  REQUIRE(run(post_args + " --out " + (dir / "p1").string()) == 0);
  REQUIRE(run(post_args + " --out " + (dir / "p2").string()) == 0);
  CHECK(same_file(dir / "p1" / "posting.csv", dir / "p2" / "posting.csv"));

  // posting shares sum to about 1
  const std::string posting = read_text_file((dir / "p1" / "posting.csv").string());
  CHECK(posting.find("hour,share") == 0);
}
