#include "cplab/json_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace cplab {

nlohmann::json to_json(const Rect& r) { return nlohmann::json::array({r.x0, r.y0, r.x1, r.y1}); }

Rect rect_from_json(const nlohmann::json& j) {
  return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

nlohmann::json to_json(const RateParams& p) {
  return {{"mode", to_string(p.mode())}, {"q", p.q()}, {"lambda", p.lambda()}};
}

RateParams params_from_json(const nlohmann::json& j) {
  const auto mode = j.at("mode").get<std::string>();
  if (mode == "q") return RateParams::from_q(j.at("q").get<double>());
  if (mode == "lambda") return RateParams::from_lambda(j.at("lambda").get<double>());
  throw std::invalid_argument("unknown rate mode: " + mode);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    os << contents;
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace cplab
