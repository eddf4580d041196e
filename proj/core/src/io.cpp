#include "lagdyn/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace lagdyn::io {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataUnreadable("cannot open " + path.string());
  }
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw DataUnreadable("cannot write " + path.string());
  }
  return out;
}

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << path.string();
  if (line > 0) {
    msg << ":" << line;
  }
  msg << ": " << what;
  throw DataUnreadable(msg.str());
}

json rows_to_json(const RowMat& m) {
  json rows = json::array();
  for (Index t = 0; t < m.rows(); ++t) {
    rows.push_back(std::vector<double>(m.row(t).data(), m.row(t).data() + m.cols()));
  }
  return rows;
}

RowMat rows_from_json(const json& rows, Index cols) {
  RowMat m(static_cast<Index>(rows.size()), cols);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const auto& r = rows[t];
    if (!r.is_array() || static_cast<Index>(r.size()) != cols) {
      throw DataUnreadable("row " + std::to_string(t) + " has the wrong width");
    }
    for (Index i = 0; i < cols; ++i) {
      m(static_cast<Index>(t), i) = r[static_cast<std::size_t>(i)].get<double>();
    }
  }
  return m;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

kinematics::SkeletonTopology read_topology(const std::filesystem::path& path) {
  auto in = open_in(path);
  json j;
  try {
    in >> j;
    auto names = j.at("joints").get<std::vector<std::string>>();
    auto parents = j.at("parents").get<std::vector<int>>();
    const auto frame_names = j.at("frame_joints").get<std::vector<std::string>>();
    const int dim = j.at("dim").get<int>();
    if (frame_names.size() != 4) {
      fail(path, 0, "frame_joints must name exactly four joints");
    }
    kinematics::SkeletonTopology::FrameJoints frame{};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto it = std::find(names.begin(), names.end(), frame_names[k]);
      if (it == names.end()) {
        fail(path, 0, "unknown frame joint '" + frame_names[k] + "'");
      }
      frame[k] = static_cast<int>(it - names.begin());
    }
    return kinematics::SkeletonTopology::build(std::move(names), std::move(parents), frame, dim);
  } catch (const json::exception& e) {
    fail(path, 0, e.what());
  }
}

void write_topology(const kinematics::SkeletonTopology& topology, const std::filesystem::path& path) {
  json j;
  j["joints"] = topology.names();
  std::vector<int> parents;
  for (int v = 0; v < topology.joint_count(); ++v) {
    parents.push_back(topology.parent(v));
  }
  j["parents"] = parents;
  std::vector<std::string> frame;
  for (int v : topology.frame_joints()) {
    frame.push_back(topology.names()[static_cast<std::size_t>(v)]);
  }
  j["frame_joints"] = frame;
  j["dim"] = topology.spatial_dim();
  open_out(path) << j.dump(2) << "\n";
}

kinematics::PoseSequence read_poses(const std::filesystem::path& path, int joints, int dim) {
  auto in = open_in(path);
  std::vector<std::vector<double>> frames;
  std::string line;
  std::size_t lineno = 0;
  long last_t = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) {
      continue;
    }
    try {
      const auto j = json::parse(line);
      const long t = j.at("t").get<long>();
      if (t <= last_t) {
        fail(path, lineno, "frame index t must increase strictly");
      }
      last_t = t;
      const auto& xyz = j.at("xyz");
      if (!xyz.is_array() || static_cast<int>(xyz.size()) != joints) {
        fail(path, lineno, "expected " + std::to_string(joints) + " joints");
      }
      std::vector<double> row;
      row.reserve(static_cast<std::size_t>(joints * dim));
      for (const auto& p : xyz) {
        if (!p.is_array() || static_cast<int>(p.size()) != dim) {
          fail(path, lineno, "expected " + std::to_string(dim) + " coordinates per joint");
        }
        for (const auto& c : p) {
          const double v = c.get<double>();
          if (!std::isfinite(v)) {
            fail(path, lineno, "non-finite coordinate");
          }
          row.push_back(v);
        }
      }
      frames.push_back(std::move(row));
    } catch (const json::exception& e) {
      fail(path, lineno, e.what());
    }
  }
  if (frames.empty()) {
    fail(path, 0, "no frames");
  }
  kinematics::PoseSequence pose;
  pose.joints = joints;
  pose.dim = dim;
  pose.positions.resize(static_cast<Index>(frames.size()), joints * dim);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t k = 0; k < frames[t].size(); ++k) {
      pose.positions(static_cast<Index>(t), static_cast<Index>(k)) = frames[t][k];
    }
  }
  return pose;
}

void write_poses(const kinematics::PoseSequence& pose, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (Index t = 0; t < pose.frames(); ++t) {
    json xyz = json::array();
    for (int v = 0; v < pose.joints; ++v) {
      const auto p = pose.joint(t, v);
      xyz.push_back(std::vector<double>(p.data(), p.data() + p.size()));
    }
    out << json{{"t", t}, {"xyz", xyz}}.dump() << "\n";
  }
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) {
      continue;
    }
    if (lineno == 1 && line.find_first_of("0123456789-") != 0) {
      continue;  // header
    }
    std::istringstream row(line);
    long frame = 0;
    int label = 0;
    char comma = 0;
    if (!(row >> frame >> comma >> label) || comma != ',') {
      fail(path, lineno, "expected 'frame,label'");
    }
    if (frame != static_cast<long>(labels.size())) {
      fail(path, lineno, "frames must be consecutive from 0");
    }
    labels.push_back(label);
  }
  if (labels.empty()) {
    fail(path, 0, "no labels");
  }
  return labels;
}

void write_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "frame,label\n";
  for (std::size_t t = 0; t < labels.size(); ++t) {
    out << t << "," << labels[t] << "\n";
  }
}

std::vector<oracle::LabeledSequence> read_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<oracle::LabeledSequence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) {
      continue;
    }
    try {
      const auto j = json::parse(line);
      oracle::LabeledSequence s;
      const auto& c = j.at("chain");
      s.chain.masses = c.at("masses").get<std::vector<double>>();
      s.chain.lengths = c.at("lengths").get<std::vector<double>>();
      s.chain.gravity = c.value("gravity", 9.81);
      s.chain.friction = c.value("friction", std::vector<double>{});
      s.chain.validate();
      s.dt = j.at("dt").get<double>();
      const Index n = s.chain.links();
      s.q = rows_from_json(j.at("q"), n);
      s.tau = rows_from_json(j.at("tau"), n);
      s.labels = j.at("labels").get<std::vector<int>>();
      s.boundaries = j.at("boundaries").get<std::vector<Index>>();
      if (s.q.rows() == 0 || s.tau.rows() != s.q.rows() ||
          static_cast<Index>(s.labels.size()) != s.q.rows()) {
        fail(path, lineno, "q, tau and labels must share a nonzero frame count");
      }
      if (!s.q.allFinite() || !s.tau.allFinite()) {
        fail(path, lineno, "non-finite values");
      }
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      fail(path, lineno, e.what());
    } catch (const DataUnreadable&) {
      throw;
    } catch (const Error& e) {
      fail(path, lineno, e.what());
    }
  }
  if (out.empty()) {
    fail(path, 0, "no sequences");
  }
  return out;
}

void write_dataset(const std::vector<oracle::LabeledSequence>& data, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& s : data) {
    json j;
    j["chain"] = {{"masses", s.chain.masses},
                  {"lengths", s.chain.lengths},
                  {"gravity", s.chain.gravity},
                  {"friction", s.chain.friction}};
    j["dt"] = s.dt;
    j["q"] = rows_to_json(s.q);
    j["tau"] = rows_to_json(s.tau);
    j["labels"] = s.labels;
    j["boundaries"] = s.boundaries;
    out << j.dump() << "\n";
  }
}

}  // namespace lagdyn::io
