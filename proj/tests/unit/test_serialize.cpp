#include <doctest.h>

#include <balayage/serialize.hpp>

#include <cmath>
#include <limits>
#include <random>

using namespace balayage;

TEST_SUITE("serialize") {
  TEST_CASE("space round trip") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> pts(3 * 25), w(25);
    for (double& x : pts) x = u(rng);
    for (double& x : w) x = 0.5 + 0.5 * u(rng);
    const DiscreteSpace s(3, pts, w);
    const DiscreteSpace back = space_from_json(space_to_json(s));
    CHECK(back.id() == s.id());
    CHECK(back.size() == s.size());
    for (Index i = 0; i < s.size(); ++i) {
      CHECK(back.point(i) == s.point(i));
      CHECK(back.cell_weight(i) == s.cell_weight(i));
    }
  }

  TEST_CASE("sphere spaces keep their intrinsic dimension") {
    const std::vector<double> c{0, 0, 0};
    const DiscreteSpace s = build_sphere(c, 1.0, 20);
    const std::string text = space_to_json(s);
    CHECK(text.find("\"intrinsic_dim\":2") != std::string::npos);
    CHECK(space_from_json(text).intrinsic_dim() == 2);
  }

  TEST_CASE("space document validation") {
    CHECK_THROWS_AS(space_from_json(R"({"version":2,"dim":1,"points":[[0]],"cell_weights":[1]})"), Error);
    CHECK_THROWS_AS(space_from_json(R"({"version":1,"dim":1,"points":[[0]],"cell_weights":[1],"extra":0})"), Error);
    CHECK_THROWS_AS(space_from_json(R"({"version":1,"dim":2,"points":[[0]],"cell_weights":[1]})"), Error);
    CHECK_THROWS_AS(space_from_json("not json"), Error);
    const DiscreteSpace s = space_from_json(R"({"version":1,"dim":1,"points":[[0],[1]],"cell_weights":[1,2]})");
    CHECK(s.size() == 2);
  }

  TEST_CASE("measure round trip and space check") {
    const DiscreteSpace s = build_grid(Box{{0}, {1}}, 3);
    const DiscreteMeasure m(s.id(), Eigen::Vector3d(0.1, 0.0, 1.0 / 3.0));
    const std::string text = measure_to_json(m);
    CHECK(text.find(s.id()) != std::string::npos);
    CHECK(measure_from_json(text, s).weights() == m.weights());
    const DiscreteSpace other = build_grid(Box{{0}, {2}}, 3);
    CHECK_THROWS_AS(measure_from_json(text, other), Error);
  }

  TEST_CASE("format_double round trips") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int k = 0; k < 1000; ++k) {
      const double x = u(rng) * std::pow(10.0, static_cast<double>(k % 40) - 20.0);
      CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(0.0) == "0.0");
    CHECK(std::stod(format_double(2.0 / 3.0)) == 2.0 / 3.0);
  }
}
