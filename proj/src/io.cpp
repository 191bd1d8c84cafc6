#include <kdict/error.hpp>
#include <kdict/io.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace kdict {

std::string read_text(const std::filesystem::path& path)
{
   std::ifstream in(path, std::ios::binary);
   if (!in) {
      throw ConfigError("cannot open " + path.string());
   }
   std::ostringstream ss;
   ss << in.rdbuf();
   return ss.str();
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text)
{
   if (path.has_parent_path()) {
      std::filesystem::create_directories(path.parent_path());
   }
   auto tmp = path;
   tmp += ".tmp";
   {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) {
         throw Error("cannot write " + tmp.string());
      }
      out << text;
      if (!out) {
         throw Error("write failed for " + tmp.string());
      }
   }
   std::filesystem::rename(tmp, path);
}

std::string format_double(double v)
{
   std::array<char, 64> buf{};
   const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
   return std::string(buf.data(), res.ptr);
}

} // namespace kdict
