#include "swipt/grouping.hpp"

#include <algorithm>
#include <random>

#include "doctest.h"

using namespace swipt;

namespace {

std::vector<TerminalState> terminals_with_ratios(
    const std::vector<double>& ratios) {
  std::vector<TerminalState> out;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    TerminalState t;
    t.user_id = static_cast<int>(i);
    t.capacity = 100.0;
    t.battery = 100.0 * ratios[i];
    out.push_back(t);
  }
  return out;
}

std::vector<int> sorted(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v;
}

CxMatrix unit_row_pair(int first_axis, int n_t) {
  CxMatrix h = CxMatrix::Zero(2, n_t);
  h(0, first_axis) = 1.0;
  h(1, first_axis + 1) = 1.0;
  return h;
}

}  // namespace

TEST_CASE("supergroup splits by battery ratio") {
  SUBCASE("threshold below the median ratio keeps the halves") {
    const auto sets =
        supergroup(terminals_with_ratios({0.05, 0.2, 0.6, 0.9}), 0.1);
    CHECK(sets.super_harvest == std::vector<int>{0, 1});
    CHECK(sets.super_info == std::vector<int>{2, 3});
  }

  SUBCASE("threshold above the median moves the split to the closest ratio") {
    const auto sets =
        supergroup(terminals_with_ratios({0.05, 0.2, 0.6, 0.9}), 0.5);
    CHECK(sets.super_harvest == std::vector<int>{0, 1, 2});
    CHECK(sets.super_info == std::vector<int>{3});
  }

  SUBCASE("equal ratios fall back to halves with id tie-break") {
    const auto sets =
        supergroup(terminals_with_ratios({0.5, 0.5, 0.5, 0.5}), 0.1);
    CHECK(sets.super_harvest == std::vector<int>{0, 1});
    CHECK(sets.super_info == std::vector<int>{2, 3});
  }

  SUBCASE("input order does not matter") {
    const auto sets =
        supergroup(terminals_with_ratios({0.6, 0.05, 0.9, 0.2}), 0.1);
    CHECK(sets.super_harvest == std::vector<int>{1, 3});
    CHECK(sets.super_info == std::vector<int>{0, 2});
  }

  SUBCASE("odd user counts round the half down") {
    const auto sets =
        supergroup(terminals_with_ratios({0.1, 0.2, 0.3, 0.4, 0.5}), 0.05);
    CHECK(sets.super_harvest == std::vector<int>{0, 1});
    CHECK(sets.super_info == std::vector<int>{2, 3, 4});
  }

  SUBCASE("a single terminal becomes an information candidate") {
    const auto sets = supergroup(terminals_with_ratios({0.3}), 0.1);
    CHECK(sets.super_info == std::vector<int>{0});
    CHECK(sets.super_harvest.empty());
  }
}

TEST_CASE("greedy info selection keeps orthogonal users") {
  ChannelSet channels;
  channels.users.push_back({0, unit_row_pair(0, 4)});
  channels.users.push_back({1, unit_row_pair(2, 4)});

  const GreedyResult r =
      select_info_greedy({0, 1}, channels, {1.0, 1.0}, 10.0, 2);
  CHECK(sorted(r.info) == std::vector<int>{0, 1});
  CHECK(r.allocation.objective ==
        doctest::Approx(7.229419688230417).epsilon(1e-8));
}

TEST_CASE("greedy info selection drops an identical second user") {
  ChannelSet channels;
  const CxMatrix h = unit_row_pair(0, 4);
  channels.users.push_back({0, h});
  channels.users.push_back({1, h});

  const GreedyResult r =
      select_info_greedy({0, 1}, channels, {1.0, 1.0}, 10.0, 2);
  CHECK(r.info == std::vector<int>{0});
  CHECK(r.allocation.objective ==
        doctest::Approx(5.169925001442312).epsilon(1e-8));
}

TEST_CASE("greedy info selection serves a lone candidate") {
  ChannelSet channels;
  channels.users.push_back({0, unit_row_pair(0, 4)});
  channels.users.push_back({1, unit_row_pair(1, 4)});
  channels.users.push_back({2, unit_row_pair(2, 4)});

  const GreedyResult r =
      select_info_greedy({2}, channels, {1.0, 1.0, 1.0}, 10.0, 2);
  CHECK(r.info == std::vector<int>{2});
  CHECK(r.allocation.feasible);
}

TEST_CASE("greedy info selection respects the slot cap") {
  ChannelSet channels;
  channels.users.push_back({0, unit_row_pair(0, 4)});
  channels.users.push_back({1, unit_row_pair(2, 4)});

  const GreedyResult r =
      select_info_greedy({0, 1}, channels, {1.0, 1.0}, 10.0, 1);
  CHECK(r.info.size() == 1);
}

TEST_CASE("larger slot caps never lower the greedy objective") {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> normal(0.0, 1.0);
  ChannelSet channels;
  for (int id = 0; id < 4; ++id) {
    CxMatrix h(2, 8);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 8; ++c) {
        h(r, c) = Complex(normal(rng), normal(rng)) / std::sqrt(2.0);
      }
    }
    channels.users.push_back({id, h});
  }
  const std::vector<double> w(4, 1.0);

  double prev = 0.0;
  for (int u = 1; u <= 4; ++u) {
    const GreedyResult r = select_info_greedy({0, 1, 2, 3}, channels, w, 10.0, u);
    CHECK(r.allocation.objective >= prev - 1e-9);
    prev = r.allocation.objective;
  }
}

TEST_CASE("decoupled harvest selection ranks by leaked power minus target") {
  ChannelSet channels;
  channels.users.push_back({0, unit_row_pair(0, 4)});
  CxMatrix low = CxMatrix::Zero(2, 4);
  low(0, 0) = 1.0;
  low(1, 1) = 1.0;
  CxMatrix high = CxMatrix::Zero(2, 4);
  high(0, 2) = 1.0;
  high(1, 3) = 1.0;
  channels.users.push_back({1, low});
  channels.users.push_back({2, high});

  Allocation info_alloc;
  CxMatrix s = CxMatrix::Zero(4, 4);
  s(0, 0) = 3.0;
  s(1, 1) = 3.0;
  info_alloc.covariances_lifted = {s};

  SUBCASE("higher leaked power wins") {
    const auto picked =
        select_harvest_decoupled({1, 2}, channels, info_alloc, {0, 0, 0}, 1);
    CHECK(picked == std::vector<int>{1});
  }

  SUBCASE("a large target demotes a candidate") {
    const auto picked =
        select_harvest_decoupled({1, 2}, channels, info_alloc, {0, 9.0, 0}, 1);
    CHECK(picked == std::vector<int>{2});
  }

  SUBCASE("zero allocation orders by smallest target") {
    Allocation zero_alloc;
    zero_alloc.covariances_lifted = {CxMatrix::Zero(4, 4)};
    const auto picked =
        select_harvest_decoupled({1, 2}, channels, zero_alloc, {0, 2.0, 1.0}, 1);
    CHECK(picked == std::vector<int>{2});
  }

  SUBCASE("equal scores break ties by id") {
    const auto picked = select_harvest_decoupled({1, 2}, channels, info_alloc,
                                                 {0, 6.0, 0.0}, 1);
    CHECK(picked == std::vector<int>{1});
  }

  SUBCASE("fewer candidates than slots returns everyone") {
    const auto picked =
        select_harvest_decoupled({1, 2}, channels, info_alloc, {0, 0, 0}, 5);
    CHECK(sorted(picked) == std::vector<int>{1, 2});
  }
}

TEST_CASE("joint selection with no harvest batches is plain greedy") {
  ChannelSet channels;
  channels.users.push_back({0, unit_row_pair(0, 4)});
  channels.users.push_back({1, unit_row_pair(2, 4)});
  channels.users.push_back({2, unit_row_pair(1, 4)});

  const GreedyResult greedy =
      select_info_greedy({0, 1}, channels, {1.0, 1.0, 1.0}, 10.0, 2);
  const ChsResult joint = select_joint_chs({0, 1}, {2}, channels,
                                           {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0},
                                           10.0, 2, 0, 0);
  CHECK(joint.harvest.empty());
  CHECK(sorted(joint.info) == sorted(greedy.info));
  CHECK(joint.allocation.objective ==
        doctest::Approx(greedy.allocation.objective).epsilon(1e-9));
}

TEST_CASE("joint selection with zero targets matches the decoupled info set") {
  std::mt19937_64 rng(88);
  std::normal_distribution<double> normal(0.0, 1.0);
  ChannelSet channels;
  for (int id = 0; id < 4; ++id) {
    CxMatrix h(2, 4);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 4; ++c) {
        h(r, c) = Complex(normal(rng), normal(rng)) / std::sqrt(2.0);
      }
    }
    channels.users.push_back({id, h});
  }
  const std::vector<double> w(4, 1.0);
  const std::vector<double> q(4, 0.0);

  const GreedyResult greedy = select_info_greedy({0, 1}, channels, w, 10.0, 2);
  const ChsResult joint =
      select_joint_chs({0, 1}, {2, 3}, channels, w, q, 10.0, 2, 1);
  CHECK(sorted(joint.info) == sorted(greedy.info));
}

TEST_CASE("joint selection batches the strongest harvesters") {
  ChannelSet channels;
  channels.users.push_back({0, unit_row_pair(0, 4)});
  CxMatrix aligned = CxMatrix::Zero(2, 4);
  aligned(0, 0) = 2.0;
  aligned(1, 1) = 1.0;
  CxMatrix weak = CxMatrix::Zero(2, 4);
  weak(0, 0) = 0.1;
  weak(1, 1) = 0.1;
  channels.users.push_back({1, aligned});
  channels.users.push_back({2, weak});

  const ChsResult joint = select_joint_chs(
      {0}, {1, 2}, channels, {1.0, 1.0, 1.0}, {0.0, 0.1, 0.1}, 10.0, 1, 2);
  CHECK(joint.info == std::vector<int>{0});
  REQUIRE(joint.harvest.size() == 2);
  CHECK(joint.harvest[0] == 1);
  CHECK(joint.harvest[1] == 2);
  CHECK_FALSE(joint.round_infeasible);
}

TEST_CASE("joint selection flags a round with no feasible candidate") {
  ChannelSet channels;
  channels.users.push_back({0, unit_row_pair(0, 4)});
  channels.users.push_back({1, unit_row_pair(2, 4)});
  CxMatrix h = CxMatrix::Zero(2, 4);
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  channels.users.push_back({2, h});

  const ChsResult joint =
      select_joint_chs({0, 1}, {2}, channels, {1.0, 1.0, 1.0},
                       {0.0, 0.0, 1e6}, 10.0, 2, 1);
  CHECK(joint.round_infeasible);
  CHECK(joint.info.size() == 1);
}

TEST_CASE("round robin rotates through the user list") {
  GroupingConfig cfg;
  cfg.max_info_users = 2;
  cfg.harvest_group_size = 2;
  RotationState st;

  const UserSets f1 = baseline_round_robin(st, 4, cfg);
  CHECK(sorted(f1.info) == std::vector<int>{0, 1});
  CHECK(sorted(f1.harvest) == std::vector<int>{2, 3});
  CHECK(sorted(f1.super_info) == sorted(f1.info));
  CHECK(sorted(f1.super_harvest) == sorted(f1.harvest));

  const UserSets f2 = baseline_round_robin(st, 4, cfg);
  CHECK(sorted(f2.info) == std::vector<int>{2, 3});
  CHECK(sorted(f2.harvest) == std::vector<int>{0, 1});

  const UserSets f3 = baseline_round_robin(st, 4, cfg);
  CHECK(sorted(f3.info) == std::vector<int>{0, 1});
}

TEST_CASE("round robin wraps mid-group") {
  GroupingConfig cfg;
  cfg.max_info_users = 2;
  cfg.harvest_group_size = 1;
  RotationState st;

  const UserSets f1 = baseline_round_robin(st, 3, cfg);
  CHECK(sorted(f1.info) == std::vector<int>{0, 1});
  CHECK(f1.harvest == std::vector<int>{2});

  const UserSets f2 = baseline_round_robin(st, 3, cfg);
  CHECK(sorted(f2.info) == std::vector<int>{0, 2});
  CHECK(f2.harvest == std::vector<int>{1});
}

TEST_CASE("random baseline is reproducible and disjoint") {
  GroupingConfig cfg;
  cfg.max_info_users = 2;
  cfg.harvest_group_size = 2;

  std::mt19937_64 rng_a(555), rng_b(555);
  const UserSets a = baseline_random(rng_a, 6, cfg);
  const UserSets b = baseline_random(rng_b, 6, cfg);
  CHECK(a.info == b.info);
  CHECK(a.harvest == b.harvest);
  CHECK(a.info.size() == 2);
  CHECK(a.harvest.size() == 2);

  for (int id : a.info) {
    CHECK(std::find(a.harvest.begin(), a.harvest.end(), id) ==
          a.harvest.end());
  }
}
