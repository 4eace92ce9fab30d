#include "gazenet/gaze_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gazenet/error.hpp"
#include "gazenet/kv.hpp"

namespace gazenet {

GazeTrace read_gaze_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,x,y,pupil_mm,valid", 0) != 0) {
    throw FormatError(path.string() + ": missing header t,x,y,pupil_mm,valid");
  }
  GazeTrace trace;
  int line_no = 1;
  double last_t = -INFINITY;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    GazeSample s;
    int valid = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%d", &s.t, &s.x, &s.y, &s.pupil_mm, &valid) != 5) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": malformed gaze row");
    }
    if (s.t < last_t) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": timestamps must be nondecreasing");
    }
    last_t = s.t;
    s.valid = valid != 0;
    trace.push_back(s);
  }
  return trace;
}

void write_gaze_csv(const std::filesystem::path& path, const GazeTrace& gaze) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw LoadError("cannot open for writing: " + path.string());
  out << "t,x,y,pupil_mm,valid\n";
  char buf[160];
  for (const auto& s : gaze) {
    std::snprintf(buf, sizeof buf, "%.6f,%.3f,%.3f,%.5f,%d\n", s.t, s.x, s.y, s.pupil_mm,
                  s.valid ? 1 : 0);
    out << buf;
  }
  if (!out) throw LoadError("write failed: " + path.string());
}

}  // namespace gazenet
