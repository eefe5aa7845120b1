#include "varorder/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "varorder/errors.hpp"

namespace varorder {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ValidationError("IoError", "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path,
                            const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw SimulationError("IoError", "cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out)
      throw SimulationError("IoError", "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw SimulationError("IoError", "cannot move '" + tmp.string() + "' into place: " +
                                         ec.message());
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_double_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace varorder
