#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "lagdyn/io.hpp"
#include "reference.hpp"

namespace fs = std::filesystem;
using namespace lagdyn;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "lagdyn");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::set<fs::path> listing(const fs::path& dir) {
  std::set<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    out.insert(fs::relative(e.path(), dir));
  }
  return out;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

struct Workspace {
  fs::path root;
  fs::path out;
  Workspace() {
    root = ref::temp_path("cli");
    fs::remove_all(root);
    fs::create_directories(root);
    out = root / "out";
  }
};

const std::vector<std::string> kSmall{"--sequences", "3",       "--frames",       "90",
                                      "--min-regime-frames", "30", "--hidden-width", "8",
                                      "--channels",  "4",       "--stages",       "1"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

TEST_CASE("exit codes") {
  Workspace ws;
  CHECK(invoke({"validate"}).code == 0);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"no-such-command"}).code == 2);
  CHECK(invoke({"validate", "--epochs", "many"}).code == 2);
  CHECK(invoke({"validate", "--delta", "-1"}).code == 2);
  CHECK(invoke({"validate", "--config", (ws.root / "missing.cfg").string()}).code == 2);
  CHECK(invoke({"validate", "--data", (ws.root / "missing.jsonl").string()}).code == 2);
  CHECK(invoke({"eval", "--pred", "x.csv"}).code == 2);

  std::ofstream(ws.root / "bad.jsonl") << "{\"chain\": 3}\n";
  const auto bad = invoke({"validate", "--data", (ws.root / "bad.jsonl").string()});
  CHECK(bad.code == 3);
  CHECK(bad.err.find("bad.jsonl:1") != std::string::npos);

  const auto help = invoke({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("segment-boundaries") != std::string::npos);
}

TEST_CASE("config file and flag precedence") {
  Workspace ws;
  const auto cfg = ws.root / "run.cfg";
  std::ofstream(cfg) << "# tiny\nsequences = 2\nframes = 60\nmin-regime-frames = 20\noutput-dir = "
                     << ws.out.string() << "\n";
  auto r = invoke({"generate-oracle", "--config", cfg.string(), "--sequences", "4"});
  REQUIRE(r.code == 0);
  const auto data = io::read_dataset(ws.out / "dataset.jsonl");
  CHECK(data.size() == 4);
  CHECK(data[0].frames() == 60);
  CHECK(invoke({"generate-oracle", "--config", cfg.string(), "--bogus", "1"}).code == 2);
  std::ofstream(cfg, std::ios::app) << "bogus = 1\n";
  CHECK(invoke({"generate-oracle", "--config", cfg.string()}).code == 2);
}

TEST_CASE("pipeline writes only under the output directory") {
  Workspace ws;
  const auto before = listing(ws.root);
  const auto dir = ws.out.string();
  REQUIRE(invoke(with({"generate-oracle", "--output-dir", dir}, kSmall)).code == 0);
  const auto data = (ws.out / "dataset.jsonl").string();

  const auto train = invoke(with({"train-dynamics", "--output-dir", dir, "--data", data, "--epochs", "2",
                                  "--warmup-start", "1", "--warmup-ramp", "1", "--holdout-fraction", "0.34"},
                                 kSmall));
  REQUIRE(train.code == 0);
  CHECK(train.out.find("epoch 1") != std::string::npos);
  CHECK(first_line(ws.out / "metrics.csv") == "epoch,l_torque,l_ec,mean_abs_residual,lambda_ec");
  const auto ckpt = (ws.out / "model.ckpt").string();

  const auto audit = invoke(with({"energy-audit", "--output-dir", dir, "--data", data, "--checkpoint", ckpt,
                                  "--sequence", "1"},
                                 kSmall));
  REQUIRE(audit.code == 0);
  CHECK(first_line(ws.out / "energy_audit.csv") == "t,E_K,dE_K,P,W,r_E,mask");
  CHECK(invoke({"energy-audit", "--output-dir", dir, "--data", data}).code == 2);
  CHECK(invoke({"energy-audit", "--output-dir", dir, "--data", data, "--checkpoint", ckpt, "--sequence", "9"})
            .code == 3);

  REQUIRE(invoke(with({"signals", "--output-dir", dir, "--data", data, "--checkpoint", ckpt}, kSmall)).code == 0);
  CHECK(first_line(ws.out / "signals.csv") == "t,g_P,g_tau,g_tau_dot,stage1_P,stage1_tau,stage1_tau_dot");
  REQUIRE(invoke(with({"segment-boundaries", "--output-dir", dir, "--data", data, "--source", "model",
                       "--checkpoint", ckpt, "--boundary-signal", "torque-change", "--polarity", "trough"},
                      kSmall))
              .code == 0);
  CHECK(fs::exists(ws.out / "boundaries.json"));
  CHECK(invoke({"signals", "--output-dir", dir, "--data", data, "--source", "neither"}).code == 2);

  // Everything new lives under out/.
  for (const auto& p : listing(ws.root)) {
    if (!before.contains(p)) {
      CHECK(p.string().starts_with("out"));
    }
  }

  // Rerunning a command on the same inputs reproduces its output.
  std::ifstream a(ws.out / "energy_audit.csv");
  const std::string first((std::istreambuf_iterator<char>(a)), {});
  invoke(with({"energy-audit", "--output-dir", dir, "--data", data, "--checkpoint", ckpt, "--sequence", "1"},
              kSmall));
  std::ifstream b(ws.out / "energy_audit.csv");
  const std::string second((std::istreambuf_iterator<char>(b)), {});
  CHECK(first == second);
  CHECK(io::read_dataset(data).size() == 3);
}

TEST_CASE("eval table") {
  Workspace ws;
  io::write_labels({0, 0, 1, 1}, ws.root / "pred.csv");
  io::write_labels({0, 0, 2, 2}, ws.root / "gt.csv");
  const auto r = invoke({"eval", "--pred", (ws.root / "pred.csv").string(), "--gt", (ws.root / "gt.csv").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out ==
        "metric   value\n"
        "Acc      50.00\n"
        "Edit     50.00\n"
        "F1@10    50.00\n"
        "F1@25    50.00\n"
        "F1@50    50.00\n");
  io::write_labels({0, 0, 1}, ws.root / "short.csv");
  CHECK(invoke({"eval", "--pred", (ws.root / "short.csv").string(), "--gt", (ws.root / "gt.csv").string()}).code ==
        3);
}

TEST_CASE("gradcheck command") {
  const auto ok = invoke(with({"gradcheck", "--samples", "60"}, kSmall));
  CHECK(ok.code == 0);
  CHECK(ok.out.find("max relative error") != std::string::npos);
  CHECK(ok.out.find("ok") != std::string::npos);
  // An impossible tolerance reports a numerical failure.
  CHECK(invoke(with({"gradcheck", "--samples", "20", "--tolerance", "0"}, kSmall)).code == 4);
}

TEST_CASE("coordinates from poses") {
  Workspace ws;
  const auto topo = kinematics::SkeletonTopology::build({"root", "spine", "rhip", "lhip", "knee"}, {-1, 0, 0, 0, 2},
                                                        {0, 1, 2, 3}, 3);
  io::write_topology(topo, ws.root / "topology.json");
  ref::Rng rng(3);
  kinematics::PoseSequence pose;
  pose.joints = 5;
  pose.dim = 3;
  pose.positions.resize(6, 15);
  for (Index t = 0; t < 6; ++t) {
    const double s = 0.01 * static_cast<double>(t);
    pose.positions.row(t) << 0, 0, 0, 0, 1, s, 0.3, 0, 0, -0.3, 0, 0, 0.3 + s, -0.5, 0.1;
  }
  io::write_poses(pose, ws.root / "poses.jsonl");
  const auto r = invoke({"coords", "--topology", (ws.root / "topology.json").string(), "--poses",
                         (ws.root / "poses.jsonl").string(), "--output-dir", ws.out.string()});
  REQUIRE(r.code == 0);
  CHECK(first_line(ws.out / "coords.csv") ==
        "t,q0,q1,q2,q3,q4,q5,qdot0,qdot1,qdot2,qdot3,qdot4,qdot5,qddot0,qddot1,qddot2,qddot3,qddot4,qddot5");
  CHECK(invoke({"coords", "--output-dir", ws.out.string()}).code == 2);
}
