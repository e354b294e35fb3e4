#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "visiplan/env.hpp"

namespace visiplan {

using nlohmann::json;

namespace {

template <typename T>
T require(const json& j, const char* field) {
  if (!j.contains(field)) throw ConfigError(std::string("grid: missing field '") + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("grid: bad field '") + field + "': " + e.what());
  }
}

}  // namespace

OccupancyGrid parse_grid_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("grid: malformed JSON: ") + e.what());
  }
  const auto res = require<double>(j, "resolution");
  const auto origin = require<std::vector<double>>(j, "origin");
  const auto dims = require<std::vector<int>>(j, "dims");
  if (origin.size() != 3) throw ConfigError("grid: field 'origin' must have 3 entries");
  if (dims.size() != 3) throw ConfigError("grid: field 'dims' must have 3 entries");
  OccupancyGrid grid(res, Vec3(origin[0], origin[1], origin[2]), Vec3i(dims[0], dims[1], dims[2]));
  const auto occ = j.contains("occupied") ? require<std::vector<std::vector<int>>>(j, "occupied")
                                          : std::vector<std::vector<int>>{};
  for (const auto& c : occ) {
    if (c.size() != 3) throw ConfigError("grid: field 'occupied' entries must be [i,j,k]");
    Vec3i cell(c[0], c[1], c[2]);
    if (!grid.in_bounds(cell)) throw ConfigError("grid: field 'occupied' has an out-of-bounds cell");
    grid.set_occupied(cell);
  }
  return grid;
}

std::string grid_to_json(const OccupancyGrid& grid) {
  json j;
  j["resolution"] = grid.resolution();
  j["origin"] = {grid.origin().x(), grid.origin().y(), grid.origin().z()};
  j["dims"] = {grid.dims().x(), grid.dims().y(), grid.dims().z()};
  json occ = json::array();
  for (int k = 0; k < grid.dims().z(); ++k)
    for (int jy = 0; jy < grid.dims().y(); ++jy)
      for (int i = 0; i < grid.dims().x(); ++i)
        if (grid.occupied(Vec3i(i, jy, k))) occ.push_back({i, jy, k});
  j["occupied"] = std::move(occ);
  return j.dump();
}

OccupancyGrid parse_grid_ascii(const std::string& text, double resolution, const Vec3& origin) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  if (rows.empty()) throw ConfigError("grid: empty ASCII raster");
  const std::size_t width = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != width) throw ConfigError("grid: ASCII raster rows differ in length");
  const int ny = static_cast<int>(rows.size());
  OccupancyGrid grid(resolution, origin, Vec3i(static_cast<int>(width), ny, 1));
  for (int r = 0; r < ny; ++r) {
    const int y = ny - 1 - r;
    for (std::size_t x = 0; x < width; ++x) {
      const char ch = rows[r][x];
      if (ch == '#')
        grid.set_occupied(Vec3i(static_cast<int>(x), y, 0));
      else if (ch != '.')
        throw ConfigError(std::string("grid: unexpected character '") + ch + "' in ASCII raster");
    }
  }
  return grid;
}

OccupancyGrid load_grid(const std::string& path, double ascii_resolution, const Vec3& ascii_origin) {
  std::ifstream in(path);
  if (!in) throw ConfigError("grid: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0)
    return parse_grid_json(ss.str());
  return parse_grid_ascii(ss.str(), ascii_resolution, ascii_origin);
}

}  // namespace visiplan
