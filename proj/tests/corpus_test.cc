#include "fiova/corpus.h"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <thread>

#include "fiova/file_io.h"

namespace fiova::corpus {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class TempDir {
 public:
  TempDir() {
    static int n = 0;
    path_ = fs::temp_directory_path() /
            ("fiova_corpus_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(n++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string record_line(const std::string& id, int captions = 5) {
  json doc = {{"video_id", id}, {"theme", "acc"}, {"responses", json::object()}};
  doc["captions"] = json::array();
  for (int i = 0; i < captions; ++i) {
    doc["captions"].push_back("A boy rides a bike " + std::to_string(i) + ".");
  }
  doc["responses"]["Tarsier"] = "A child rides a bicycle.";
  return doc.dump();
}

fs::path write_lines(const fs::path& dir, const std::vector<std::string>& lines) {
  const auto path = dir / "corpus.jsonl";
  std::ofstream out(path);
  for (const auto& l : lines) out << l << "\n";
  return path;
}

TEST(LoadCorpus, SingleRecord) {
  TempDir tmp;
  const auto corpus = load_corpus(write_lines(tmp.path(), {record_line("acc15")}));
  ASSERT_EQ(corpus.size(), 1u);
  const auto& rec = corpus.records().front();
  EXPECT_EQ(rec.video_id, "acc15");
  EXPECT_EQ(rec.theme, "acc");
  EXPECT_EQ(rec.captions.size(), 5u);
  EXPECT_FALSE(rec.groundtruth);
  EXPECT_EQ(rec.responses.at("Tarsier"), "A child rides a bicycle.");
  EXPECT_EQ(corpus.provenance().source_path, (tmp.path() / "corpus.jsonl").string());
}

TEST(LoadCorpus, BlankLinesSkippedAndOrderKept) {
  TempDir tmp;
  const auto corpus = load_corpus(write_lines(
      tmp.path(), {record_line("b"), "", "   ", record_line("a")}));
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus.records()[0].video_id, "b");
  EXPECT_EQ(corpus.records()[1].video_id, "a");
}

TEST(LoadCorpus, WrongCaptionCountNamesLine) {
  TempDir tmp;
  const auto path = write_lines(tmp.path(), {record_line("a"), record_line("b", 4)});
  try {
    load_corpus(path);
    FAIL() << "expected CorpusError";
  } catch (const CorpusError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected 5 captions"), std::string::npos) << msg;
  }
}

TEST(LoadCorpus, DuplicateVideoId) {
  TempDir tmp;
  const auto path = write_lines(tmp.path(), {record_line("acc15"), record_line("acc15")});
  try {
    load_corpus(path);
    FAIL() << "expected CorpusError";
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
}

TEST(LoadCorpus, RejectsBadRecords) {
  EXPECT_THROW(parse_record("{not json"), CorpusError);
  EXPECT_THROW(parse_record("[1,2]"), CorpusError);
  json doc = json::parse(record_line("x"));
  doc["captions"][2] = "   ";
  EXPECT_THROW(parse_record(doc.dump()), CorpusError);
  doc = json::parse(record_line("x"));
  doc["extra"] = 1;
  EXPECT_THROW(parse_record(doc.dump()), CorpusError);
  doc = json::parse(record_line("x"));
  doc["groundtruth"] = "";
  EXPECT_THROW(parse_record(doc.dump()), CorpusError);
  doc = json::parse(record_line(""));
  EXPECT_THROW(parse_record(doc.dump()), CorpusError);
  doc = json::parse(record_line("x"));
  doc.erase("responses");
  EXPECT_THROW(parse_record(doc.dump()), CorpusError);
}

TEST(LoadCorpus, MissingFile) {
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), CorpusError);
}

TEST(LoadCorpus, DeterministicAcrossLoads) {
  TempDir tmp;
  const auto path =
      write_lines(tmp.path(), {record_line("a"), record_line("b"), record_line("c")});
  EXPECT_EQ(load_corpus(path).records(), load_corpus(path).records());
  EXPECT_EQ(parse_record(to_json(load_corpus(path).records()[0]).dump()),
            load_corpus(path).records()[0]);
}

TEST(ScanCorpus, ReportsBadLinesAndKeepsGood) {
  TempDir tmp;
  const auto scan = scan_corpus(write_lines(
      tmp.path(), {record_line("a"), record_line("b", 3), "{oops", record_line("a"),
                   record_line("c")}));
  EXPECT_EQ(scan.corpus.size(), 2u);
  ASSERT_EQ(scan.failures.size(), 3u);
  EXPECT_EQ(scan.failures[0].line, 2u);
  EXPECT_EQ(scan.failures[0].video_id, "b");
  EXPECT_EQ(scan.failures[1].line, 3u);
  EXPECT_EQ(scan.failures[2].line, 4u);
}

TEST(ArtifactStore, IdempotentSaveAndUnknownId) {
  TempDir tmp;
  const auto corpus = load_corpus(write_lines(tmp.path(), {record_line("acc15")}));
  ArtifactStore store(tmp.path() / "out", corpus);
  const json payload = {{"groundtruth", "A boy rides."}, {"source", "llm"}};
  const auto path = store.save("acc15", ArtifactKind::kGroundtruth, payload);
  EXPECT_EQ(path, tmp.path() / "out" / "acc15" / "gt.json");
  const std::string first = io::read_file(path);
  store.save("acc15", ArtifactKind::kGroundtruth, payload);
  EXPECT_EQ(io::read_file(path), first);
  EXPECT_THROW(store.save("nope", ArtifactKind::kEvents, payload), CorpusError);
  EXPECT_THROW(store.load("nope", ArtifactKind::kEvents), CorpusError);
  EXPECT_FALSE(store.load("acc15", ArtifactKind::kEvents));
  // No temp files left behind.
  int files = 0;
  for (const auto& e : fs::directory_iterator(tmp.path() / "out" / "acc15")) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);
}

json random_json(std::mt19937& rng, int depth) {
  switch (depth > 2 ? rng() % 4 : rng() % 6) {
    case 0: return static_cast<int>(rng() % 1000) - 500;
    case 1: return std::uniform_real_distribution<double>(-1, 1)(rng);
    case 2: return std::string("s") + std::to_string(rng() % 97) + " “é”";
    case 3: return rng() % 2 == 0;
    case 4: {
      json arr = json::array();
      for (unsigned i = 0; i < rng() % 4; ++i) arr.push_back(random_json(rng, depth + 1));
      return arr;
    }
    default: {
      json obj = json::object();
      for (unsigned i = 0; i < rng() % 4; ++i) {
        obj["k" + std::to_string(rng() % 10)] = random_json(rng, depth + 1);
      }
      return obj;
    }
  }
}

TEST(ArtifactStore, RoundTripProperty) {
  TempDir tmp;
  const auto corpus = load_corpus(write_lines(tmp.path(), {record_line("v1")}));
  ArtifactStore store(tmp.path() / "out", corpus);
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto kind = static_cast<ArtifactKind>(trial % 5);
    const json payload = {{"payload", random_json(rng, 0)}};
    const auto path = store.save("v1", kind, payload);
    const auto bytes = io::read_file(path);
    const auto loaded = store.load("v1", kind);
    ASSERT_TRUE(loaded);
    EXPECT_EQ(*loaded, payload);
    store.save("v1", kind, *loaded);
    EXPECT_EQ(io::read_file(path), bytes);
  }
}

TEST(ArtifactStore, ConcurrentDistinctKeys) {
  TempDir tmp;
  std::vector<std::string> lines;
  for (int i = 0; i < 8; ++i) lines.push_back(record_line("v" + std::to_string(i)));
  const auto corpus = load_corpus(write_lines(tmp.path(), lines));
  ArtifactStore store(tmp.path() / "out", corpus);
  std::vector<std::jthread> workers;
  for (int i = 0; i < 8; ++i) {
    workers.emplace_back([&, i] {
      for (int k = 0; k < 20; ++k) {
        store.save("v" + std::to_string(i), ArtifactKind::kScores, {{"k", k}});
      }
    });
  }
  workers.clear();
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ((*store.load("v" + std::to_string(i), ArtifactKind::kScores))["k"], 19);
  }
}

TEST(ArtifactKind, Names) {
  EXPECT_EQ(to_string(ArtifactKind::kGroundtruth), "gt");
  EXPECT_EQ(artifact_kind_from_string("verdicts"), ArtifactKind::kVerdicts);
  EXPECT_THROW(artifact_kind_from_string("bogus"), CorpusError);
}

}  // namespace
}  // namespace fiova::corpus
