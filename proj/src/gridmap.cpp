#include "patrol/gridmap.hpp"

#include <fstream>
#include <queue>
#include <sstream>

namespace patrol {

int cell_code(CellKind kind) {
  switch (kind) {
    case CellKind::Vertex:
      return 0;
    case CellKind::Obstacle:
      return -1;
    case CellKind::ChargingStation:
      return 5;
  }
  return 0;
}

CellKind cell_from_code(int code) {
  switch (code) {
    case 0:
      return CellKind::Vertex;
    case -1:
      return CellKind::Obstacle;
    case 5:
      return CellKind::ChargingStation;
    default:
      throw MalformedMap("unknown cell code " + std::to_string(code));
  }
}

const char* action_name(Action a) {
  switch (a) {
    case Action::Up:
      return "Up";
    case Action::Down:
      return "Down";
    case Action::Left:
      return "Left";
    case Action::Right:
      return "Right";
  }
  return "?";
}

Loc neighbor(Loc loc, Action a) {
  switch (a) {
    case Action::Up:
      return {loc.row - 1, loc.col};
    case Action::Down:
      return {loc.row + 1, loc.col};
    case Action::Left:
      return {loc.row, loc.col - 1};
    case Action::Right:
      return {loc.row, loc.col + 1};
  }
  return loc;
}

GridMap GridMap::parse(const std::string& text) {
  GridMap map;
  std::istringstream stream(text);
  std::string line;
  std::vector<std::vector<int>> rows;
  while (std::getline(stream, line)) {
    std::istringstream ls(line);
    std::vector<int> row;
    int value;
    while (ls >> value) row.push_back(value);
    if (!ls.eof()) throw MalformedMap("non-integer token in map row");
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw MalformedMap("empty map");
  map.rows_ = static_cast<int>(rows.size());
  map.cols_ = static_cast<int>(rows[0].size());
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != map.cols_) throw MalformedMap("ragged map rows");
  }
  map.cells_.reserve(map.rows_ * map.cols_);
  for (int r = 0; r < map.rows_; ++r) {
    for (int c = 0; c < map.cols_; ++c) {
      CellKind kind = cell_from_code(rows[r][c]);
      map.cells_.push_back(kind);
      if (kind == CellKind::ChargingStation) map.stations_.push_back({r, c});
      if (kind == CellKind::Vertex) ++map.vertex_count_;
    }
  }
  if (map.stations_.empty()) throw NoStation("map has no charging station");

  // connectivity over non-obstacle cells, 4-neighbor
  std::vector<char> seen(map.cells_.size(), 0);
  std::queue<Loc> frontier;
  Loc start = map.stations_.front();
  frontier.push(start);
  seen[start.row * map.cols_ + start.col] = 1;
  int reached = 0;
  while (!frontier.empty()) {
    Loc cur = frontier.front();
    frontier.pop();
    ++reached;
    for (Action a : kActionOrder) {
      Loc next = neighbor(cur, a);
      if (!map.traversable(next)) continue;
      char& flag = seen[next.row * map.cols_ + next.col];
      if (!flag) {
        flag = 1;
        frontier.push(next);
      }
    }
  }
  int traversable_total = map.vertex_count_ + static_cast<int>(map.stations_.size());
  if (reached != traversable_total) throw DisconnectedMap("map has unreachable cells");
  return map;
}

GridMap GridMap::load_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw MapError("cannot open map file: " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse(buffer.str());
}

std::vector<Loc> GridMap::traversable_cells() const {
  std::vector<Loc> cells;
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c)
      if (cell({r, c}) != CellKind::Obstacle) cells.push_back({r, c});
  return cells;
}

std::array<int, 4> GridMap::valid_actions(Loc loc) const {
  if (!traversable(loc)) throw LocIsObstacle("location is an obstacle or out of bounds");
  std::array<int, 4> mask{};
  for (int i = 0; i < 4; ++i) mask[i] = traversable(neighbor(loc, kActionOrder[i])) ? 1 : 0;
  return mask;
}

std::vector<Action> GridMap::shortest_path(Loc from, Loc to) const {
  if (!traversable(from) || !traversable(to))
    throw LocIsObstacle("endpoint is an obstacle or out of bounds");
  if (from == to) return {};
  std::vector<int> prev(cells_.size(), -1);    // flat index of predecessor
  std::vector<Action> via(cells_.size(), Action::Up);
  std::vector<char> seen(cells_.size(), 0);
  std::queue<Loc> frontier;
  frontier.push(from);
  seen[from.row * cols_ + from.col] = 1;
  while (!frontier.empty()) {
    Loc cur = frontier.front();
    frontier.pop();
    if (cur == to) break;
    for (Action a : kActionOrder) {
      Loc next = neighbor(cur, a);
      if (!traversable(next)) continue;
      int idx = next.row * cols_ + next.col;
      if (seen[idx]) continue;
      seen[idx] = 1;
      prev[idx] = cur.row * cols_ + cur.col;
      via[idx] = a;
      frontier.push(next);
    }
  }
  int target = to.row * cols_ + to.col;
  if (!seen[target]) throw Unreachable("no path between cells");
  std::vector<Action> path;
  for (int idx = target; prev[idx] >= 0; idx = prev[idx]) path.push_back(via[idx]);
  return {path.rbegin(), path.rend()};
}

std::pair<Loc, std::vector<Action>> GridMap::nearest_station(Loc loc) const {
  if (!traversable(loc)) throw LocIsObstacle("location is an obstacle or out of bounds");
  Loc best{};
  std::vector<Action> best_path;
  bool found = false;
  for (const Loc& station : stations_) {  // stations_ is in (row, col) order
    std::vector<Action> path = shortest_path(loc, station);
    if (!found || path.size() < best_path.size()) {
      best = station;
      best_path = std::move(path);
      found = true;
    }
  }
  return {best, best_path};
}

}  // namespace patrol
