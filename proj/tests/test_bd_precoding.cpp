#include "swipt/bd_precoding.hpp"

#include <random>

#include "doctest.h"

using namespace swipt;

namespace {

CxMatrix random_channel(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CxMatrix h(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      h(r, c) = Complex(normal(rng), normal(rng)) / std::sqrt(2.0);
    }
  }
  return h;
}

ChannelSet three_user_set(std::mt19937_64& rng, int n_t) {
  ChannelSet set;
  for (int id = 0; id < 3; ++id) {
    set.users.push_back({id, random_channel(rng, 2, n_t)});
  }
  return set;
}

}  // namespace

TEST_CASE("null_space_basis spans the orthogonal complement") {
  std::mt19937_64 rng(7);
  const CxMatrix stacked = random_channel(rng, 2, 4);
  const CxMatrix basis = null_space_basis(stacked);

  CHECK(basis.rows() == 4);
  CHECK(basis.cols() == 2);
  CHECK((stacked * basis).norm() <= 1e-12);
  CHECK((basis.adjoint() * basis - CxMatrix::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("null_space_basis of an empty stack is the identity") {
  const CxMatrix basis = null_space_basis(CxMatrix::Zero(0, 4));
  CHECK((basis - CxMatrix::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("null_space_basis throws when no null space exists") {
  std::mt19937_64 rng(11);
  const CxMatrix stacked = random_channel(rng, 4, 4);
  CHECK_THROWS_AS(null_space_basis(stacked), std::runtime_error);
}

TEST_CASE("effective channels decouple the information users") {
  std::mt19937_64 rng(3);
  const ChannelSet channels = three_user_set(rng, 4);
  UserSets sets;
  sets.info = {0, 1};
  sets.harvest = {2};

  const EffectiveChannels eff = build_effective_channels(channels, sets);
  REQUIRE(eff.num_info() == 2);
  REQUIRE(eff.num_harvest() == 1);

  for (int i = 0; i < 2; ++i) {
    CHECK(eff.null_basis[i].rows() == 4);
    CHECK(eff.null_basis[i].cols() == 2);
    CHECK((eff.eff_info[i] -
           channels.of(sets.info[i]).entries * eff.null_basis[i])
              .norm() <= 1e-12);
    const int other = 1 - i;
    CHECK((channels.of(sets.info[other]).entries * eff.null_basis[i]).norm() <=
          1e-12);
    CHECK((eff.eff_cross[0][i] -
           channels.of(2).entries * eff.null_basis[i])
              .norm() <= 1e-12);
  }
}

TEST_CASE("identical info channels produce a vanishing effective channel") {
  std::mt19937_64 rng(5);
  const CxMatrix h = random_channel(rng, 2, 4);
  ChannelSet channels;
  channels.users.push_back({0, h});
  channels.users.push_back({1, h});
  UserSets sets;
  sets.info = {0, 1};

  const EffectiveChannels eff = build_effective_channels(channels, sets);
  CHECK(eff.eff_info[0].norm() <= 1e-10);
  CHECK(eff.eff_info[1].norm() <= 1e-10);
}

TEST_CASE("build_effective_channels rejects oversubscribed antenna budgets") {
  std::mt19937_64 rng(9);
  ChannelSet channels;
  for (int id = 0; id < 3; ++id) {
    channels.users.push_back({id, random_channel(rng, 2, 4)});
  }
  UserSets sets;
  sets.info = {0, 1, 2};

  CHECK_THROWS_AS(build_effective_channels(channels, sets),
                  std::runtime_error);
}

TEST_CASE("lift conjugates a reduced covariance by the basis") {
  std::mt19937_64 rng(13);
  ChannelSet channels = three_user_set(rng, 4);
  UserSets sets;
  sets.info = {0, 1};
  const EffectiveChannels eff = build_effective_channels(channels, sets);

  const CxMatrix reduced = CxMatrix::Identity(2, 2) * 0.7;
  const CxMatrix lifted = eff.lift(0, reduced);
  CHECK((lifted - eff.null_basis[0] * reduced * eff.null_basis[0].adjoint())
            .norm() <= 1e-15);
  CHECK(lifted.rows() == 4);
  CHECK(std::abs(lifted.trace().real() - 1.4) <= 1e-12);
}

TEST_CASE("assemble_precoder reproduces the water-filled covariance") {
  const CxMatrix eye = CxMatrix::Identity(2, 2);
  Eigen::VectorXd d(2);
  d << 0.25, 0.04;

  const CxMatrix b = assemble_precoder(eye, eye, d, eye);
  const CxMatrix cov = b * b.adjoint();
  CHECK(std::abs(cov(0, 0).real() - 0.25) <= 1e-14);
  CHECK(std::abs(cov(1, 1).real() - 0.04) <= 1e-14);
  CHECK(std::abs(cov(0, 1)) <= 1e-14);
}

TEST_CASE("assemble_precoder rejects an indefinite dual matrix") {
  CxMatrix a = CxMatrix::Identity(2, 2);
  a(1, 1) = -1.0;
  Eigen::VectorXd d(2);
  d << 1.0, 1.0;
  CHECK_THROWS_AS(
      assemble_precoder(a, CxMatrix::Identity(2, 2), d, CxMatrix::Identity(2, 2)),
      std::runtime_error);
}
