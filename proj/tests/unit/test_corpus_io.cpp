#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "focovil/corpus_io.hpp"
#include "focovil/errors.hpp"
#include "focovil/synth.hpp"

using namespace focovil;

TEST(CorpusIo, RoundTripIsBitExact) {
  synth::GeneratorConfig g;
  g.n_classes = 2;
  g.scenes_per_class = 3;
  g.seq_len = 6;
  const auto c = synth::generate_corpus(g);
  std::stringstream buf;
  io::write_corpus(buf, c);
  const auto back = io::read_corpus(buf, c.topology);
  ASSERT_EQ(back.sequences.size(), c.sequences.size());
  EXPECT_EQ(back.n_views, c.n_views);
  for (std::size_t i = 0; i < c.sequences.size(); ++i) {
    const auto& a = c.sequences[i];
    const auto& b = back.sequences[i];
    EXPECT_EQ(a.scene_id, b.scene_id);
    EXPECT_EQ(a.view_id, b.view_id);
    EXPECT_EQ(a.class_label, b.class_label);
    for (std::size_t t = 0; t < a.frames.size(); ++t) {
      EXPECT_EQ(std::memcmp(a.frames[t].data(), b.frames[t].data(),
                            sizeof(double) * static_cast<std::size_t>(a.frames[t].size())),
                0);
    }
  }
}

TEST(CorpusIo, NullLabelRoundTrips) {
  skeleton::ActionSequence s;
  s.scene_id = 4;
  s.view_id = 1;
  s.frames = {skeleton::Pose::Constant(2, 3, 0.1), skeleton::Pose::Constant(2, 3, 0.2)};
  const auto back = io::sequence_from_line(io::sequence_to_line(s));
  EXPECT_FALSE(back.class_label.has_value());
  EXPECT_EQ(back.scene_id, 4);
}

TEST(CorpusIo, RejectsUnknownFieldsAndBadShapes) {
  EXPECT_THROW(io::sequence_from_line(R"({"scene_id":0,"view_id":0,"frames":[],"extra":1})"),
               ParseError);
  EXPECT_THROW(io::sequence_from_line(R"({"scene_id":"a","view_id":0,"frames":[]})"), ParseError);
  EXPECT_THROW(io::sequence_from_line(R"({"scene_id":0,"view_id":0,"frames":[[[1,2]]]})"),
               ParseError);
  EXPECT_THROW(io::sequence_from_line(R"({"scene_id":0,"view_id":0,"frames":[[[1,2,3]],[]]})"),
               ParseError);
  EXPECT_THROW(io::sequence_from_line("not json"), ParseError);
}

TEST(CorpusIo, ParseErrorNamesLine) {
  std::stringstream buf;
  buf << R"({"scene_id":0,"view_id":0,"class_label":null,"frames":[[[1,2,3]]]})" << '\n'
      << R"({"scene_id":0,"view_id":1,"bogus":true,"frames":[[[1,2,3]]]})" << '\n';
  try {
    io::read_corpus(buf, skeleton::Topology::with_default_landmarks(4));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(CorpusIo, MissingFileIsIoError) {
  EXPECT_THROW(io::read_corpus(std::filesystem::path("/nonexistent/corpus.jsonl"),
                               skeleton::Topology::with_default_landmarks(4)),
               IoError);
}
