#pragma once

#include <cstdint>
#include <string>

#include "limsuplab/measure.hpp"

namespace limsuplab::io {

// Text measure file: '#' comment lines, then offset= base= depth= total=
// headers, then one "level:coords<TAB>mass" row per positive leaf cube.
// Deep-query backends do not survive a round trip; files are finite trees.
void write_measure(const std::string& path, const TreeMeasure& mu);
TreeMeasure read_measure(const std::string& path);

// Cube set file: dim= depth= headers, then one level:coords row per member.
void write_cubeset(const std::string& path, const CubeSet& s);
CubeSet read_cubeset(const std::string& path);

// FNV-1a over the raw file bytes, as a fixed-width hex string.
std::string file_hash(const std::string& path);

}  // namespace limsuplab::io
