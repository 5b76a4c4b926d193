// Copyright 2026 The liveness-gate Authors
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

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "liveness/batch.hpp"
#include "liveness/json_io.hpp"

using namespace liveness;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("liveness_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int gate(const std::string& args) {
    const std::string cmd = std::string(LIVENESS_GATE_BIN) + " " + args + " 2>" + (dir_ / "stderr.txt").string();
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }
  std::string slurp(const fs::path& p) const {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  std::string err() const { return slurp(dir_ / "stderr.txt"); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write_frames(const std::string& name, const std::vector<LandmarkFrame>& frames) {
    std::ofstream out(dir_ / name);
    write_trajectory(out, frames);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, RunRecordedLiveSessionPasses) {
  write_frames("live.jsonl", record_live_session(SessionConfig{}, FaceModel{}, AgentConfig{}, 31, 32));
  EXPECT_EQ(gate("run " + path("live.jsonl") + " --seed 31 --out " + path("r.json")), 0) << err();
  const Json rep = Json::parse(slurp(dir_ / "r.json"));
  EXPECT_EQ(rep["verdict"], "Passed");
  EXPECT_EQ(rep["label_live"], true);
  EXPECT_EQ(rep["fits_completed"], 3);
  const std::string events = slurp(dir_ / "r.events.jsonl");
  EXPECT_NE(events.find(R"("kind":"Verdict","payload":{"status":"Passed"})"), std::string::npos);
}

TEST_F(Cli, RunStaticPhotoTimesOut) {
  std::vector<LandmarkFrame> frames;
  for (int i = 0; i <= 320; ++i) frames.push_back(FaceModel{}.rest_frame(50 * i));
  write_frames("photo.jsonl", frames);
  EXPECT_EQ(gate("run " + path("photo.jsonl") + " --out " + path("r.json") + " --events " + path("e.jsonl")), 1);
  EXPECT_EQ(Json::parse(slurp(dir_ / "r.json"))["verdict"], "FailedTimeout");
  EXPECT_TRUE(fs::exists(dir_ / "e.jsonl"));
}

TEST_F(Cli, RunReportsMalformedLine) {
  {
    std::ofstream out(dir_ / "bad.jsonl");
    out << to_json(FaceModel{}.rest_frame(0)).dump() << "\n" << R"({"t_ms":50,"bbox":)" << "\n";
  }
  EXPECT_EQ(gate("run " + path("bad.jsonl") + " --out " + path("r.json")), 2);
  EXPECT_NE(err().find("line 2"), std::string::npos) << err();
}

TEST_F(Cli, RunRejectsDecreasingTime) {
  write_frames("ooo.jsonl", {FaceModel{}.rest_frame(100), FaceModel{}.rest_frame(50)});
  EXPECT_EQ(gate("run " + path("ooo.jsonl") + " --out " + path("r.json")), 2);
}

TEST_F(Cli, SimulateIsReproducible) {
  const std::string args = "simulate --agent live --agent photo --agent replay --trials 6 --seed 4 --threads 2";
  ASSERT_EQ(gate(args + " --out " + path("a.json") + " --csv " + path("a.csv")), 0) << err();
  ASSERT_EQ(gate(args + " --out " + path("b.json") + " --record-dir " + path("rec")), 0) << err();
  EXPECT_EQ(slurp(dir_ / "a.json"), slurp(dir_ / "b.json"));
  const Json rep = Json::parse(slurp(dir_ / "a.json"));
  EXPECT_EQ(rep["classes"].size(), 3u);
  EXPECT_EQ(slurp(dir_ / "a.csv").substr(0, 12), "class,label,");
  EXPECT_TRUE(fs::exists(dir_ / "rec" / "LiveUser_0000.jsonl"));
  EXPECT_TRUE(fs::exists(dir_ / "rec" / "trials.jsonl"));
}

TEST_F(Cli, RecordedTrialReplaysToSameVerdict) {
  ASSERT_EQ(gate("simulate --agent live --trials 1 --seed 8 --out " + path("s.json") + " --record-dir " +
                 path("rec")),
            0);
  std::ifstream manifest(dir_ / "rec" / "trials.jsonl");
  std::string line;
  ASSERT_TRUE(std::getline(manifest, line));
  const Json t = Json::parse(line);
  const int code = gate("run " + path("rec/" + t["trajectory"].get<std::string>()) + " --seed " +
                        std::to_string(t["session_seed"].get<std::uint64_t>()) + " --out " + path("r.json"));
  EXPECT_EQ(Json::parse(slurp(dir_ / "r.json"))["verdict"], t["verdict"]);
  EXPECT_EQ(code, t["verdict"] == "Passed" ? 0 : 1);
}

TEST_F(Cli, SimulateRejectsZeroTrials) {
  EXPECT_EQ(gate("simulate --agent live --trials 0 --out " + path("a.json")), 2);
  EXPECT_EQ(gate("simulate --agent mask --trials 3 --out " + path("a.json")), 2);
  EXPECT_EQ(gate("frobnicate"), 2);
}

TEST_F(Cli, EvalFromCounts) {
  ASSERT_EQ(gate("eval --bona-fide 105 --attacks 126 --false-accepts 2 --false-rejects 0 --out " + path("m.json")),
            0);
  const Json m = Json::parse(slurp(dir_ / "m.json"));
  EXPECT_EQ(m["display_percent"]["bpcer"], "0.00");
  EXPECT_EQ(m["display_percent"]["acer"], "0.79");
  EXPECT_EQ(m["display_percent"]["accuracy"], "99.13");
  EXPECT_EQ(gate("eval --bona-fide 0 --attacks 126 --false-accepts 2 --false-rejects 0"), 2);
}

TEST_F(Cli, EvalFromResults) {
  {
    std::ofstream out(dir_ / "res.jsonl");
    out << R"({"label":"bona_fide","label_live":true})" << "\n"
        << R"({"label":"attack","label_live":true})" << "\n"
        << R"({"label":"attack","label_live":false})" << "\n";
  }
  ASSERT_EQ(gate("eval --results " + path("res.jsonl") + " --out " + path("m.json")), 0) << err();
  const Json m = Json::parse(slurp(dir_ / "m.json"));
  EXPECT_EQ(m["false_accepts"], 1);
  EXPECT_DOUBLE_EQ(m["apcer"].get<double>(), 0.5);
}
