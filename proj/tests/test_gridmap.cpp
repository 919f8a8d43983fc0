#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <queue>

#include "patrol/rng.hpp"
#include "test_util.hpp"

using namespace patrol;

TEST_CASE("cell codes round-trip the file encoding") {
  CHECK(cell_code(CellKind::Vertex) == 0);
  CHECK(cell_code(CellKind::Obstacle) == -1);
  CHECK(cell_code(CellKind::ChargingStation) == 5);
  CHECK(cell_from_code(0) == CellKind::Vertex);
  CHECK(cell_from_code(-1) == CellKind::Obstacle);
  CHECK(cell_from_code(5) == CellKind::ChargingStation);
  CHECK_THROWS_AS(cell_from_code(3), MalformedMap);
}

TEST_CASE("parse accepts the 6x6 example matrix") {
  GridMap map = GridMap::parse(testutil::kCorridor6x6);
  CHECK(map.rows() == 6);
  CHECK(map.cols() == 6);
  CHECK(map.stations().size() == 1);
  CHECK(map.stations()[0] == Loc{3, 2});
  CHECK(map.vertex_count() == 31);
}

TEST_CASE("parse rejects bad inputs") {
  CHECK_THROWS_AS(GridMap::parse("0"), NoStation);
  CHECK_THROWS_AS(GridMap::parse("0 0\n0"), MalformedMap);
  CHECK_THROWS_AS(GridMap::parse("0 7\n0 5"), MalformedMap);
  CHECK_THROWS_AS(GridMap::parse("abc 5"), MalformedMap);
  CHECK_THROWS_AS(GridMap::parse(""), MalformedMap);
  // station sealed off by obstacles
  CHECK_THROWS_AS(GridMap::parse("0 -1 5\n0 -1 -1\n0 -1 -1"), DisconnectedMap);
}

TEST_CASE("obstacle-free map with center station") {
  GridMap map = GridMap::parse(testutil::kOpen3x3);
  CHECK(map.vertex_count() == 8);
  CHECK(map.stations().size() == 1);
}

TEST_CASE("valid_actions follows Up Down Left Right order") {
  GridMap corridor = GridMap::parse(testutil::kCorridor6x6);
  CHECK(corridor.valid_actions({1, 2}) == std::array<int, 4>{1, 1, 0, 0});

  GridMap open = GridMap::parse(testutil::kOpen3x3);
  CHECK(open.valid_actions({1, 1}) == std::array<int, 4>{1, 1, 1, 1});
  auto corner = open.valid_actions({0, 0});
  CHECK(corner[0] + corner[1] + corner[2] + corner[3] == 2);
  CHECK(corner == std::array<int, 4>{0, 1, 0, 1});

  CHECK_THROWS_AS(corridor.valid_actions({1, 1}), LocIsObstacle);
}

TEST_CASE("every traversable cell has at least one move") {
  for (const char* text : {testutil::kCorridor6x6, testutil::kOpen3x3}) {
    GridMap map = GridMap::parse(text);
    for (Loc loc : map.traversable_cells()) {
      auto mask = map.valid_actions(loc);
      CHECK(mask[0] + mask[1] + mask[2] + mask[3] >= 1);
    }
  }
}

TEST_CASE("shortest_path basics") {
  GridMap map = GridMap::parse(testutil::kCorridor6x6);
  CHECK(map.shortest_path({2, 2}, {2, 2}).empty());

  GridMap corridor = GridMap::parse("5 0 0 0 0");
  auto path = corridor.shortest_path({0, 0}, {0, 4});
  REQUIRE(path.size() == 4);
  for (Action a : path) CHECK(a == Action::Right);
}

namespace {

// independent distance-only BFS used as the length oracle
int bfs_distance(const GridMap& map, Loc from, Loc to) {
  std::vector<int> dist(map.rows() * map.cols(), -1);
  std::queue<Loc> q;
  q.push(from);
  dist[from.row * map.cols() + from.col] = 0;
  while (!q.empty()) {
    Loc cur = q.front();
    q.pop();
    int d = dist[cur.row * map.cols() + cur.col];
    for (Action a : kActionOrder) {
      Loc next = neighbor(cur, a);
      if (!map.traversable(next)) continue;
      int& slot = dist[next.row * map.cols() + next.col];
      if (slot < 0) {
        slot = d + 1;
        q.push(next);
      }
    }
  }
  return dist[to.row * map.cols() + to.col];
}

std::string random_map_text(Rng& rng, int rows, int cols, double obstacle_rate) {
  std::string text;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      int code = 0;
      if (r == 0 && c == 0)
        code = 5;
      else if (rng.next_double() < obstacle_rate)
        code = -1;
      text += std::to_string(code);
      text += c + 1 < cols ? ' ' : '\n';
    }
  }
  return text;
}

}  // namespace

TEST_CASE("shortest_path matches a brute-force BFS oracle on random 8x8 maps") {
  Rng rng(7);
  int tried = 0;
  while (tried < 20) {
    GridMap map = [&] {
      while (true) {
        try {
          return GridMap::parse(random_map_text(rng, 8, 8, 0.25));
        } catch (const MapError&) {
        }
      }
    }();
    ++tried;
    auto cells = map.traversable_cells();
    for (int pair = 0; pair < 10; ++pair) {
      Loc from = cells[rng.uniform_int(0, static_cast<int>(cells.size()) - 1)];
      Loc to = cells[rng.uniform_int(0, static_cast<int>(cells.size()) - 1)];
      auto path = map.shortest_path(from, to);
      CHECK(static_cast<int>(path.size()) == bfs_distance(map, from, to));
      // replaying the path lands exactly on the target without obstacles
      Loc cur = from;
      for (Action a : path) {
        cur = neighbor(cur, a);
        CHECK(map.traversable(cur));
      }
      CHECK(cur == to);
    }
  }
}

TEST_CASE("path length is symmetric on small maps") {
  GridMap map = GridMap::parse(testutil::kCorridor6x6);
  auto cells = map.traversable_cells();
  for (Loc a : cells)
    for (Loc b : cells)
      CHECK(map.shortest_path(a, b).size() == map.shortest_path(b, a).size());
}

TEST_CASE("nearest_station") {
  GridMap map = GridMap::parse(testutil::kCorridor6x6);
  auto [station, path] = map.nearest_station({3, 2});
  CHECK(station == Loc{3, 2});
  CHECK(path.empty());

  auto [far_station, far_path] = map.nearest_station({0, 5});
  CHECK(far_station == Loc{3, 2});
  CHECK(far_path.size() == bfs_distance(map, {0, 5}, {3, 2}));

  // two stations at equal distance: lexicographically smaller wins
  GridMap twin = GridMap::parse("5 0 5\n0 0 0");
  auto [chosen, chosen_path] = twin.nearest_station({0, 1});
  CHECK(chosen == Loc{0, 0});
  CHECK(chosen_path.size() == 1);
}

TEST_CASE("repository maps load and expose stations") {
  for (const char* name : {"map_a.txt", "map_b.txt", "map_c.txt", "map_d.txt", "desk_6x6.txt"}) {
    GridMap map = GridMap::load_file(testutil::data_path(std::string("maps/") + name));
    CHECK(map.stations().size() >= 1);
    CHECK(map.vertex_count() > 0);
  }
}
