#ifndef KDICT_IO_HPP_INCLUDED
#define KDICT_IO_HPP_INCLUDED

#include <filesystem>
#include <string>

namespace kdict {

std::string read_text(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it into place.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

} // namespace kdict

#endif
