#include "focovil/corpus_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "focovil/errors.hpp"

namespace focovil::io {

using nlohmann::json;

std::string sequence_to_line(const skeleton::ActionSequence& seq) {
  json frames = json::array();
  for (const auto& f : seq.frames) {
    json joints = json::array();
    for (int j = 0; j < f.rows(); ++j) joints.push_back({f(j, 0), f(j, 1), f(j, 2)});
    frames.push_back(std::move(joints));
  }
  json rec;
  rec["scene_id"] = seq.scene_id;
  rec["view_id"] = seq.view_id;
  rec["class_label"] = seq.class_label ? json(*seq.class_label) : json(nullptr);
  rec["frames"] = std::move(frames);
  return rec.dump();
}

skeleton::ActionSequence sequence_from_line(const std::string& line) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed corpus record: ") + e.what());
  }
  if (!rec.is_object()) throw ParseError("corpus record must be a JSON object");
  for (const auto& [key, _] : rec.items()) {
    if (key != "scene_id" && key != "view_id" && key != "class_label" && key != "frames") {
      throw ParseError("unknown corpus record field '" + key + "'");
    }
  }
  auto require_int = [&](const char* key) {
    if (!rec.contains(key) || !rec[key].is_number_integer()) {
      throw ParseError(std::string("corpus record field '") + key + "' must be an integer");
    }
    return rec[key].get<int>();
  };
  skeleton::ActionSequence seq;
  seq.scene_id = require_int("scene_id");
  seq.view_id = require_int("view_id");
  if (rec.contains("class_label") && !rec["class_label"].is_null()) {
    seq.class_label = require_int("class_label");
  }
  if (!rec.contains("frames") || !rec["frames"].is_array()) {
    throw ParseError("corpus record field 'frames' must be an array");
  }
  int n_joints = -1;
  for (const auto& frame : rec["frames"]) {
    if (!frame.is_array()) throw ParseError("each frame must be an array of joints");
    if (n_joints < 0) n_joints = static_cast<int>(frame.size());
    if (static_cast<int>(frame.size()) != n_joints || n_joints == 0) {
      throw ParseError("frames disagree on joint count");
    }
    skeleton::Pose pose(n_joints, 3);
    for (int j = 0; j < n_joints; ++j) {
      const auto& p = frame[j];
      if (!p.is_array() || p.size() != 3) throw ParseError("each joint must be [x, y, z]");
      for (int a = 0; a < 3; ++a) {
        if (!p[a].is_number()) throw ParseError("joint coordinates must be numbers");
        pose(j, a) = p[a].get<double>();
      }
    }
    seq.frames.push_back(std::move(pose));
  }
  return seq;
}

void write_corpus(std::ostream& out, const skeleton::MultiViewCorpus& corpus) {
  for (const auto& seq : corpus.sequences) out << sequence_to_line(seq) << '\n';
  if (!out) throw IoError("failed writing corpus");
}

void write_corpus(const std::filesystem::path& path, const skeleton::MultiViewCorpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_corpus(out, corpus);
}

skeleton::MultiViewCorpus read_corpus(std::istream& in, const skeleton::Topology& topology) {
  skeleton::MultiViewCorpus corpus;
  corpus.topology = topology;
  std::set<int> views;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      corpus.sequences.push_back(sequence_from_line(line));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    views.insert(corpus.sequences.back().view_id);
  }
  if (in.bad()) throw IoError("failed reading corpus");
  corpus.n_views = static_cast<int>(views.size());
  return corpus;
}

skeleton::MultiViewCorpus read_corpus(const std::filesystem::path& path,
                                      const skeleton::Topology& topology) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_corpus(in, topology);
}

}  // namespace focovil::io
