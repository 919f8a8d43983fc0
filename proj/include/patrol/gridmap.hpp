#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace patrol {

// Cell classification of the patrol area. File encoding is integer-exact:
// Vertex <-> 0, Obstacle <-> -1, ChargingStation <-> 5.
enum class CellKind { Vertex, Obstacle, ChargingStation };

int cell_code(CellKind kind);
CellKind cell_from_code(int code);

// Action index order is fixed everywhere (masks, BFS expansion): Up, Down,
// Left, Right.
enum class Action { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr std::array<Action, 4> kActionOrder{Action::Up, Action::Down,
                                                    Action::Left, Action::Right};

const char* action_name(Action a);

// (row, col), origin top-left; Up decreases row.
struct Loc {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Loc&, const Loc&) = default;
};

Loc neighbor(Loc loc, Action a);

struct MapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedMap : MapError {
  using MapError::MapError;
};
struct NoStation : MapError {
  using MapError::MapError;
};
struct DisconnectedMap : MapError {
  using MapError::MapError;
};
struct LocIsObstacle : MapError {
  using MapError::MapError;
};
struct Unreachable : MapError {
  using MapError::MapError;
};

// Immutable after load; safe to share read-only across concurrent episodes.
class GridMap {
 public:
  // Parses whitespace-separated integers, rows newline-separated. Verifies
  // that at least one station exists and that all non-obstacle cells form a
  // single 4-connected component.
  static GridMap parse(const std::string& text);
  static GridMap load_file(const std::string& path);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool in_bounds(Loc loc) const {
    return loc.row >= 0 && loc.row < rows_ && loc.col >= 0 && loc.col < cols_;
  }
  CellKind cell(Loc loc) const { return cells_[loc.row * cols_ + loc.col]; }
  bool traversable(Loc loc) const {
    return in_bounds(loc) && cell(loc) != CellKind::Obstacle;
  }
  const std::vector<Loc>& stations() const { return stations_; }
  // Vertex cells only (stations excluded).
  int vertex_count() const { return vertex_count_; }
  std::vector<Loc> traversable_cells() const;

  // mask[i] = 1 iff the neighbor in direction i is in bounds and not an
  // obstacle. Throws LocIsObstacle.
  std::array<int, 4> valid_actions(Loc loc) const;

  // Minimum-length action sequence under 4-neighbor moves, BFS with fixed
  // expansion order Up, Down, Left, Right.
  std::vector<Action> shortest_path(Loc from, Loc to) const;

  // Station minimizing shortest-path length; ties broken by (row, col).
  std::pair<Loc, std::vector<Action>> nearest_station(Loc loc) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int vertex_count_ = 0;
  std::vector<CellKind> cells_;
  std::vector<Loc> stations_;
};

}  // namespace patrol
