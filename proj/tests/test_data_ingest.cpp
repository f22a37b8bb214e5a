#include <sstream>

#include <gtest/gtest.h>

#include "layout_infer/data_ingest.hpp"
#include "test_util.hpp"

using namespace layout_infer;

TEST(LoadScores, ParsesWellFormedFileInRowOrder) {
  test_util::TempDir dir;
  const auto path = dir.write("scores.csv",
                              "submission_id,scenario_id,episode_index,score\n"
                              "a,s1,0,0.5\n"
                              "a,s1,1,-0.25\n"
                              "b,s2,0,1.75\n");
  const auto recs = load_scores(path);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0], (RawScoreRecord{"a", "s1", 0, 0.5}));
  EXPECT_EQ(recs[1].score, -0.25);
  EXPECT_EQ(recs[2].submission_id, "b");
}

TEST(LoadScores, NonNumericScoreNamesTheRow) {
  test_util::TempDir dir;
  const auto path = dir.write("scores.csv",
                              "submission_id,scenario_id,episode_index,score\n"
                              "a,s1,0,0.5\n"
                              "a,s1,1,abc\n");
  try {
    load_scores(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("abc"), std::string::npos);
  }
}

TEST(LoadScores, MissingColumnAndDuplicateTriple) {
  test_util::TempDir dir;
  EXPECT_THROW(load_scores(dir.write("a.csv", "submission_id,scenario_id,score\na,s,1\n")), DataError);
  EXPECT_THROW(load_scores(dir.write("b.csv",
                                     "submission_id,scenario_id,episode_index,score\n"
                                     "a,s,3,0.1\na,s,3,0.2\n")),
               DataError);
  EXPECT_THROW(load_scores(dir.write("c.csv",
                                     "submission_id,scenario_id,episode_index,score\n"
                                     "a,s,3,inf\n")),
               DataError);
}

TEST(LoadScores, UnknownColumnsIgnoredWithWarning) {
  test_util::TempDir dir;
  Warnings w;
  const auto recs = load_scores(dir.write("s.csv",
                                          "submission_id,extra,scenario_id,episode_index,score\n"
                                          "a,zz,s,0,0.1\n"),
                                &w);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].scenario_id, "s");
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("extra"), std::string::npos);
}

TEST(LoadScores, FullContestShapeCount) {
  // 80 episodes x 51 scenarios for one submission
  std::ostringstream ss;
  ss << "submission_id,scenario_id,episode_index,score\n";
  for (int s = 0; s < 51; ++s)
    for (int e = 0; e < 80; ++e) ss << "team,scn" << s << ',' << e << ",0.5\n";
  test_util::TempDir dir;
  EXPECT_EQ(load_scores(dir.write("s.csv", ss.str())).size(), 4080u);
}

namespace {
std::string demands_csv(int scenarios, int demands) {
  std::ostringstream ss;
  ss << "scenario_id";
  for (int d = 0; d < demands; ++d) ss << ",d" << d;
  ss << '\n';
  for (int s = 0; s < scenarios; ++s) {
    ss << "scn" << s;
    for (int d = 0; d < demands; ++d) ss << ',' << ((s + d) % 3 == 0 ? 1 : 0);
    ss << '\n';
  }
  return ss.str();
}
}  // namespace

TEST(LoadDemands, ContestShape) {
  test_util::TempDir dir;
  const auto t = load_demands(dir.write("d.csv", demands_csv(51, 16)));
  EXPECT_EQ(t.flags.size(), 51u);
  EXPECT_EQ(t.demand_names.size(), 16u);
}

TEST(LoadDemands, NonBinaryAndDuplicateScenarioRejected) {
  test_util::TempDir dir;
  EXPECT_THROW(load_demands(dir.write("a.csv", "scenario_id,x,y\ns1,0,2\n")), DataError);
  EXPECT_THROW(load_demands(dir.write("b.csv", "scenario_id,x\ns1,0\ns1,1\n")), DataError);
}

TEST(LoadDemands, AllZeroColumnAcceptedWithWarning) {
  test_util::TempDir dir;
  Warnings w;
  const auto t = load_demands(dir.write("d.csv", "scenario_id,x,never\ns1,1,0\ns2,0,0\n"), &w);
  EXPECT_EQ(t.flags.size(), 2u);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("never"), std::string::npos);
}

TEST(ValidateJoin, SortsDemandsAndChecksScenarios) {
  DemandTable t;
  t.demand_names = {"zeta", "alpha"};
  t.flags["s1"] = {1, 0};
  t.flags["s2"] = {0, 1};
  std::vector<RawScoreRecord> recs = {{"a", "s1", 0, 0.5}, {"a", "s2", 0, 0.4}};
  const Dataset ds = validate_join(recs, t);
  EXPECT_EQ(ds.demand_names, (std::vector<std::string>{"alpha", "zeta"}));
  EXPECT_EQ(ds.demands.flags.at("s1"), (std::vector<std::uint8_t>{0, 1}));
  EXPECT_EQ(validate_join(recs, t), ds);  // pure

  recs.push_back({"a", "s3", 0, 0.1});
  EXPECT_THROW(validate_join(recs, t), DataError);
  EXPECT_THROW(validate_join({}, t), DataError);
}

TEST(Dataset, SerializeLoadRoundTrip) {
  DemandTable t;
  t.demand_names = {"b", "a"};
  t.flags["s1"] = {1, 0};
  t.flags["s2"] = {0, 0};
  std::vector<RawScoreRecord> recs;
  for (int e = 0; e < 10; ++e) {
    recs.push_back({"x", "s1", e, 0.1 * e + 1e-17 * e});
    recs.push_back({"y", "s2", e, -3.3 / (e + 1)});
  }
  const Dataset ds = validate_join(recs, t);
  test_util::TempDir dir;
  save_dataset(ds, dir.file("s.csv"), dir.file("d.csv"));
  EXPECT_EQ(load_dataset(dir.file("s.csv"), dir.file("d.csv")), ds);

  // Total count = sum over submissions of scenarios x episodes.
  EXPECT_EQ(ds.records.size(), 2u * 10u);
}
