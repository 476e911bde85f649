#pragma once

#include <string>
#include <vector>

namespace hetdecomp::csv {

struct Document {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180 reader: quoted fields, doubled quotes, embedded separators and
// line breaks. First record is the header. Throws Error on ragged rows or
// malformed quoting.
Document read_file(const std::string& path);
Document parse(const std::string& text);

// Writer quotes only where required. Doubles are formatted elsewhere (see
// format_double) so that a written table reloads bit-exactly.
std::string to_string(const Document& doc);
void write_file(const std::string& path, const Document& doc);

// Shortest representation that round-trips a double through strtod.
std::string format_double(double v);

}  // namespace hetdecomp::csv
