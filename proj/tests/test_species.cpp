#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "ionspam/species.hpp"

using namespace ionspam;

TEST_CASE("builtin table has seven distinct rows") {
  const auto all = builtin_species();
  REQUIRE(all.size() == 7);
  std::set<std::string> names;
  for (const auto& s : all) {
    s.validate();
    names.insert(s.name);
  }
  CHECK(names.size() == 7);
}

TEST_CASE("137Ba+ constants") {
  const auto ba = find_species(builtin_species(), "137Ba+");
  CHECK(ba.nuclear_spin == 1.5);
  CHECK(ba.eta_up == 0.5);
  CHECK(ba.eta_cross == Catch::Approx(5.0 / 6.0));
  CHECK(ba.linewidth_hz == Catch::Approx(20.1e6));
  CHECK(ba.hf_s_hz == Catch::Approx(8.03e9));
  CHECK(ba.hf_p_hz == Catch::Approx(1.49e9));
  REQUIRE(ba.d52_lifetime_s.has_value());
  CHECK(*ba.d52_lifetime_s == Catch::Approx(30.1));
  REQUIRE(ba.deshelve_branch_f1.has_value());
  CHECK(*ba.deshelve_branch_f1 == Catch::Approx(0.738));
}

TEST_CASE("9Be+ constants") {
  const auto be = find_species(builtin_species(), "9Be+");
  CHECK(be.linewidth_hz == Catch::Approx(22.4e6));
  CHECK(be.hf_s_hz == Catch::Approx(1.25e9));
  CHECK(be.hf_p_hz == Catch::Approx(0.194e9));
  CHECK_FALSE(be.d52_lifetime_s.has_value());
}

TEST_CASE("ground-state enumeration for I=3/2") {
  const auto ba = find_species(builtin_species(), "137Ba+");
  const auto s12 = enumerate_sublevels(ba, {Manifold::S12});
  REQUIRE(s12.size() == 8);
  // sorted: F=1 block then F=2 block, mF ascending
  CHECK(s12.front() == ZeemanState{Manifold::S12, 1, -1});
  CHECK(s12[2] == ZeemanState{Manifold::S12, 1, 1});
  CHECK(s12[3] == ZeemanState{Manifold::S12, 2, -2});
  CHECK(s12.back() == ZeemanState{Manifold::S12, 2, 2});

  const auto both = enumerate_sublevels(ba, {Manifold::S12, Manifold::D52});
  CHECK(both.size() == 32);  // 8 + (3+5+7+9)
}

TEST_CASE("empty manifold set rejected") {
  const auto ba = find_species(builtin_species(), "137Ba+");
  CHECK_THROWS_AS(enumerate_sublevels(ba, {}), std::invalid_argument);
}

TEST_CASE("S1/2 sublevel count is 4I+2 for every species") {
  for (const auto& s : builtin_species()) {
    const auto levels = enumerate_sublevels(s, {Manifold::S12});
    CHECK(levels.size() == static_cast<std::size_t>(std::lround(4 * s.nuclear_spin + 2)));
  }
}

TEST_CASE("config round-trip is lossless") {
  const auto all = builtin_species();
  std::istringstream in(species_list_to_config(all));
  const auto parsed = parse_species_config(in);
  REQUIRE(parsed.size() == all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(parsed[i].name == all[i].name);
    CHECK(parsed[i].nuclear_spin == all[i].nuclear_spin);
    CHECK(parsed[i].linewidth_hz == all[i].linewidth_hz);
    CHECK(parsed[i].hf_s_hz == all[i].hf_s_hz);
    CHECK(parsed[i].hf_p_hz == all[i].hf_p_hz);
    CHECK(parsed[i].eta_up == all[i].eta_up);
    CHECK(parsed[i].eta_cross == all[i].eta_cross);
    CHECK(parsed[i].eta_flush == all[i].eta_flush);
    CHECK(parsed[i].d52_lifetime_s == all[i].d52_lifetime_s);
    CHECK(parsed[i].deshelve_branch_f1 == all[i].deshelve_branch_f1);
  }
}

TEST_CASE("merge overrides by name and appends new entries") {
  auto base = builtin_species();
  SpeciesParams custom = find_species(base, "137Ba+");
  custom.linewidth_hz = 1e6;
  SpeciesParams fresh = custom;
  fresh.name = "TestIon+";
  const auto merged = merge_species(base, {custom, fresh});
  CHECK(merged.size() == 8);
  CHECK(find_species(merged, "137Ba+").linewidth_hz == 1e6);
  CHECK(find_species(merged, "TestIon+").name == "TestIon+");
}

TEST_CASE("invariant violations are rejected") {
  auto ba = find_species(builtin_species(), "137Ba+");
  SECTION("negative linewidth") {
    ba.linewidth_hz = -1.0;
    CHECK_THROWS_AS(ba.validate(), std::invalid_argument);
  }
  SECTION("hyperfine ordering") {
    ba.hf_p_hz = ba.hf_s_hz + 1.0;
    CHECK_THROWS_AS(ba.validate(), std::invalid_argument);
  }
  SECTION("branching fraction out of range") {
    ba.eta_cross = 1.5;
    CHECK_THROWS_AS(ba.validate(), std::invalid_argument);
  }
  SECTION("integer nuclear spin") {
    ba.nuclear_spin = 2.0;
    CHECK_THROWS_AS(ba.validate(), std::invalid_argument);
  }
}

TEST_CASE("malformed species files raise config errors") {
  SECTION("key outside a section") {
    std::istringstream in("linewidth_hz = 1\n");
    CHECK_THROWS_AS(parse_species_config(in), std::invalid_argument);
  }
  SECTION("unknown key") {
    std::istringstream in("[X+]\nnuclear_spin = 1.5\nbogus = 2\n");
    CHECK_THROWS_AS(parse_species_config(in), std::invalid_argument);
  }
  SECTION("bad number") {
    std::istringstream in("[X+]\nnuclear_spin = banana\n");
    CHECK_THROWS_AS(parse_species_config(in), std::invalid_argument);
  }
}
