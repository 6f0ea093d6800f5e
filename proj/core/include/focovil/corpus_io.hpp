#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "focovil/skeleton.hpp"

namespace focovil::io {

/// Corpus interchange format: UTF-8 text, one JSON object per line, one line
/// per sequence, in corpus order:
///
///   {"scene_id":3,"view_id":1,"class_label":0,"frames":[[[x,y,z],...],...]}
///
/// frames is T x N x 3 (frame, joint, axis). class_label may be null.
/// Numbers are written in the shortest form that parses back to the same
/// double, so write -> read is bit-exact.
std::string sequence_to_line(const skeleton::ActionSequence& seq);
skeleton::ActionSequence sequence_from_line(const std::string& line);

void write_corpus(std::ostream& out, const skeleton::MultiViewCorpus& corpus);
void write_corpus(const std::filesystem::path& path, const skeleton::MultiViewCorpus& corpus);

/// Reads records and attaches the given topology. n_views is the number of
/// distinct view ids seen. Throws ParseError on malformed records and
/// IoError when the file cannot be opened.
skeleton::MultiViewCorpus read_corpus(std::istream& in, const skeleton::Topology& topology);
skeleton::MultiViewCorpus read_corpus(const std::filesystem::path& path,
                                      const skeleton::Topology& topology);

}  // namespace focovil::io
