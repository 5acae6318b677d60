#include "cli.hpp"

#include "superpart/features.hpp"
#include "superpart/partition_io.hpp"
#include "superpart/point_cloud.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace superpart;
using namespace superpart::cli;
using testing_util::read_file;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing_util::TempDir("cli");
    const CliRun r = run({"synth", "--output", scene(), "--points", "6000", "--seed", "3"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string path(const std::string& name) { return (*dir_ / name).string(); }
  static std::string scene() { return path("scene.ply"); }

  static testing_util::TempDir* dir_;
};

testing_util::TempDir* CliTest::dir_ = nullptr;

}  // namespace

TEST_F(CliTest, SynthWritesLabeledCloud) {
  const PointCloud c = read_ply(scene());
  EXPECT_NEAR(static_cast<double>(c.size()), 6000.0, 60.0);
  ASSERT_TRUE(c.has_labels());
  EXPECT_EQ(c.num_classes, 3u);
  const CliRun again = run({"synth", "--output", path("scene2.ply"), "--points", "6000", "--seed", "3"});
  ASSERT_EQ(again.code, kExitOk);
  EXPECT_EQ(read_file(scene()), read_file(path("scene2.ply")));
}

TEST_F(CliTest, PartitionIsDeterministicAcrossRunsAndThreads) {
  const CliRun a = run({"partition", "--input", scene(), "--output", path("a.csv"), "--threads", "1"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  const CliRun b = run({"partition", "--input", scene(), "--output", path("b.csv"), "--threads", "8"});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  const std::string csv = read_file(path("a.csv"));
  EXPECT_EQ(csv, read_file(path("b.csv")));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "point_id,level0,level1,level2");
  EXPECT_EQ(count_lines(csv), read_ply(scene()).size() + 1);
  EXPECT_NE(a.out.find("level 2:"), std::string::npos);
  EXPECT_NE(a.out.find("end-to-end"), std::string::npos);

  const CliRun bin = run({"partition", "--input", scene(), "--output", path("a.bin"), "--format", "bin"});
  ASSERT_EQ(bin.code, kExitOk) << bin.err;
  EXPECT_EQ(read_partition(path("a.bin")), read_partition(path("a.csv")));
}

TEST_F(CliTest, SidecarReplaysTheRun) {
  const CliRun a = run({"partition", "--input", scene(), "--output", path("s.csv"), "--lambda", "0.05", "--k", "10",
                     "--min-sizes", "4,20", "--seed", "99"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  const std::string sidecar = read_file(path("s.csv.config.txt"));
  EXPECT_NE(sidecar.find("lambda = 0.05"), std::string::npos);
  EXPECT_NE(sidecar.find("min_sizes = 4,20"), std::string::npos);
  const CliRun b = run({"partition", "--input", scene(), "--output", path("s2.csv"), "--config", path("s.csv.config.txt")});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  EXPECT_EQ(read_file(path("s.csv")), read_file(path("s2.csv")));
  EXPECT_EQ(sidecar, read_file(path("s2.csv.config.txt")));
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  testing_util::write_file(*dir_ / "big_lambda.txt", "[partition]\nlambda = 50\nmin_sizes = 5,30,90\n");
  const CliRun plain = run({"partition", "--input", scene(), "--output", path("p.csv")});
  const CliRun cfg = run({"partition", "--input", scene(), "--output", path("c.csv"), "--config", path("big_lambda.txt")});
  const CliRun over = run({"partition", "--input", scene(), "--output", path("o.csv"), "--config",
                        path("big_lambda.txt"), "--lambda", "0.02"});
  ASSERT_EQ(plain.code, kExitOk);
  ASSERT_EQ(cfg.code, kExitOk);
  ASSERT_EQ(over.code, kExitOk);
  EXPECT_NE(read_file(path("p.csv")), read_file(path("c.csv")));
  EXPECT_EQ(read_file(path("p.csv")), read_file(path("o.csv")));
}

TEST_F(CliTest, EvalScoresPartitionAndSweeps) {
  ASSERT_EQ(run({"partition", "--input", scene(), "--output", path("e.csv")}).code, kExitOk);
  const CliRun e = run({"eval", "--input", scene(), "--partition", path("e.csv"), "--output", path("report.csv")});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  EXPECT_NE(e.out.find("oracle mIoU"), std::string::npos);
  const std::string report = read_file(path("report.csv"));
  EXPECT_EQ(report.substr(0, report.find('\n')), "level,n_superpoints,oracle_miou,iou_0,iou_1,iou_2");
  EXPECT_EQ(count_lines(report), 4u);

  const CliRun sweep = run({"eval", "--input", scene(), "--sweep", "lambda", "--grid", "0.01,0.1,1"});
  ASSERT_EQ(sweep.code, kExitOk) << sweep.err;
  EXPECT_EQ(sweep.out.substr(0, sweep.out.find('\n')), "n_superpoints,oracle_miou,iou_0,iou_1,iou_2,parameter");
  EXPECT_EQ(count_lines(sweep.out), 4u);

  const CliRun voxel = run({"eval", "--input", scene(), "--sweep", "voxel", "--grid", "0.1,0.4"});
  ASSERT_EQ(voxel.code, kExitOk) << voxel.err;
  EXPECT_EQ(count_lines(voxel.out), 3u);
  EXPECT_EQ(run({"eval", "--input", scene(), "--sweep", "nope", "--grid", "1"}).code, kExitConfig);
  EXPECT_EQ(run({"eval", "--input", scene()}).code, kExitConfig);
}

TEST_F(CliTest, FitWritesWeightsEmbeddingsAndTrajectory) {
  const CliRun f = run({"fit", "--input", scene(), "--output", path("w.bin"), "--embeddings", path("emb.bin"),
                     "--steps", "25", "--dim", "4"});
  ASSERT_EQ(f.code, kExitOk) << f.err;
  const EmbeddingMatrix W = read_embeddings(path("w.bin"));
  EXPECT_EQ(W.dim(), 4u);
  EXPECT_EQ(count_lines(read_file(path("w.bin.loss.csv"))), 26u);
  const EmbeddingMatrix emb = read_embeddings(path("emb.bin"));
  EXPECT_EQ(emb.dim(), 4u);

  // The fitted embeddings drive a partition of the same subsampled nodes.
  const CliRun p = run({"partition", "--input", scene(), "--output", path("fp.csv"), "--embeddings", path("emb.bin")});
  ASSERT_EQ(p.code, kExitOk) << p.err;
  // Embedding rows must match the subsampled node count.
  const CliRun bad = run({"partition", "--input", scene(), "--output", path("fp2.csv"), "--embeddings", path("emb.bin"),
                       "--voxel-size", "0"});
  EXPECT_EQ(bad.code, kExitConfig);
}

TEST_F(CliTest, BenchReportsStagesAndIdenticalRepeats) {
  const CliRun b = run({"bench", "--points", "4000", "--repeats", "2", "--output", path("bench.csv")});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  EXPECT_NE(b.out.find("identical across repeats"), std::string::npos);
  const std::string csv = read_file(path("bench.csv"));
  for (const char* stage : {"knn", "partition", "end_to_end"}) EXPECT_NE(csv.find(stage), std::string::npos) << stage;
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({"--help"}).code, kExitOk);
  EXPECT_EQ(run({"partition", "--input", path("missing.ply"), "--output", path("x.csv")}).code, kExitIo);
  testing_util::write_file(*dir_ / "broken.ply", "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nend_header\n1\n");
  EXPECT_EQ(run({"partition", "--input", path("broken.ply"), "--output", path("x.csv")}).code, kExitIo);
  EXPECT_EQ(run({"partition", "--input", scene(), "--output", path("x.csv"), "--min-sizes", "0"}).code, kExitConfig);
  EXPECT_EQ(run({"partition", "--input", scene(), "--output", path("x.csv"), "--lambda", "-1"}).code, kExitConfig);
  EXPECT_EQ(run({"partition", "--input", scene(), "--output", path("x.csv"), "--bogus"}).code, kExitConfig);
  EXPECT_EQ(run({"partition", "--input", scene()}).code, kExitConfig);
  testing_util::write_file(*dir_ / "unknown.txt", "[partition]\nlamda = 1\n");
  const CliRun typo = run({"partition", "--input", scene(), "--output", path("x.csv"), "--config", path("unknown.txt")});
  EXPECT_EQ(typo.code, kExitConfig);
  EXPECT_NE(typo.err.find("lamda"), std::string::npos);
  EXPECT_EQ(run({"partition", "--input", scene(), "--output", path("nodir/x.csv")}).code, kExitIo);

  PointCloud unlabeled;
  unlabeled.positions = testing_util::random_points(50, 1);
  write_ply(*dir_ / "unlabeled.ply", unlabeled);
  EXPECT_EQ(run({"fit", "--input", path("unlabeled.ply"), "--output", path("w2.bin")}).code, kExitConfig);
}
