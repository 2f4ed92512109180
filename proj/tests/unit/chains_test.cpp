#include "doctest.h"

#include <random>
#include <sstream>

#include "gks/chains.hpp"
#include "gks/engine.hpp"
#include "gks/harmonic.hpp"
#include "random_models.hpp"

using namespace gks;

namespace {

Rational pow2(unsigned k) { return Rational(BigNat(1UL << k)); }

}  // namespace

TEST_SUITE("chains") {
  TEST_CASE("construction rejects bad chains") {
    CHECK_THROWS_AS(BirthDeathChain({Rational(1, 2)}, {Rational(1, 2)}), std::invalid_argument);  // up_k != 0
    CHECK_THROWS_AS(BirthDeathChain({Rational(0)}, {Rational(0)}), std::invalid_argument);        // no way down
    CHECK_THROWS_AS(BirthDeathChain({Rational(2, 3), Rational(0)}, {Rational(1, 2), Rational(1)}),
                    std::invalid_argument);
    CHECK_THROWS_AS(harmonic_chain(0), std::invalid_argument);
    const auto h = harmonic_chain(4);
    CHECK(h.up(1) == Rational(3, 4));
    CHECK(h.down(3) == Rational(1, 4));
    CHECK(h.stay(3) == Rational(1, 2));
    CHECK(binary_chain(4).down(3) == Rational(3, 4));
  }

  TEST_CASE("harmonic hitting times against sympy") {
    // tests/oracles/chain_oracle.py harmonic K
    CHECK(eet_oracle_table(harmonic_chain(2)) == std::vector<Rational>{0, 4, 6});
    CHECK(eet_oracle_table(harmonic_chain(3)) == std::vector<Rational>{0, 15, 21, 24});
    CHECK(eet_oracle_table(harmonic_chain(5)) == std::vector<Rational>{0, 325, 405, 430, 440, 445});
    const std::vector<unsigned long> k12{0,          1302061344, 1420430556, 1432267476, 1433582688,
                                         1433747088, 1433770572, 1433774484, 1433775264, 1433775456,
                                         1433775516, 1433775540, 1433775552};
    const auto t = harmonic_eet_table(12);
    for (unsigned l = 0; l <= 12; ++l) CHECK(t[l] == BigNat(k12[l]));
  }

  TEST_CASE("harmonic closed form") {
    CHECK(harmonic_eet(2, 1) == BigNat(4));
    CHECK(harmonic_eet(2, 2) == BigNat(6));
    CHECK(harmonic_eet(3, 3) == BigNat(24));
    CHECK_THROWS_AS(harmonic_eet(3, 0), std::invalid_argument);
    CHECK_THROWS_AS(harmonic_eet(3, 4), std::invalid_argument);
    for (unsigned k = 1; k <= 12; ++k) {
      const auto chain = harmonic_chain(k);
      const auto oracle = eet_oracle_table(chain);
      CHECK(harmonic_eet(k, 1) == BigNat(k) * alpha(k));
      for (unsigned l = 1; l <= k; ++l) {
        CHECK(Rational(harmonic_eet(k, l)) == oracle[l]);
        CHECK(eet_closed_form(chain, l) == oracle[l]);
      }
    }
  }

  TEST_CASE("binary chain") {
    CHECK(eet_oracle_table(binary_chain(2)) == std::vector<Rational>{0, 3, 4});
    CHECK(binary_eet(3, 1) == Rational(7));
    CHECK(binary_eet(4, 2) == Rational(56, 3));
    CHECK(binary_eet(8, 8) == Rational(32768, 105));
    CHECK(binary_eet(12, 12) == Rational(5300224, 1155));
    for (unsigned k = 1; k <= 12; ++k) {
      const auto oracle = eet_oracle_table(binary_chain(k));
      for (unsigned l = 1; l <= k; ++l) CHECK(binary_eet(k, l) == oracle[l]);
    }
    for (unsigned k = 1; k <= 20; ++k) {
      for (unsigned l = 1; l <= k; ++l) {
        const Rational h = binary_eet(k, l);
        CHECK(h >= pow2(k) - Rational(1));
        CHECK(h <= Rational(5) * pow2(k));
      }
    }
  }

  TEST_CASE("closed form on random chains") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
      const unsigned k = 1 + trial % 10;
      const auto chain = testing::random_chain(k, rng);
      const auto oracle = eet_oracle_table(chain);
      for (unsigned l = 1; l <= k; ++l) CHECK(eet_closed_form(chain, l) == oracle[l]);
      CHECK(stationary_and_return_check(chain));
    }
  }

  TEST_CASE("closed form needs positive up-rates below ell") {
    const BirthDeathChain stuck({Rational(0), Rational(0)}, {Rational(1, 2), Rational(1, 2)});
    CHECK(eet_closed_form(stuck, 1) == Rational(2));
    CHECK_THROWS_AS(eet_closed_form(stuck, 2), std::invalid_argument);
    CHECK(eet_oracle(stuck, 2) == Rational(4));
  }

  TEST_CASE("stationary law and mean return time") {
    for (unsigned k = 1; k <= 10; ++k) {
      const auto s = stationary_and_return(harmonic_chain(k));
      CHECK(s.ok());
      CHECK(s.h1 == Rational(BigNat(k) * alpha(k)));
      CHECK(stationary_and_return_check(binary_chain(k)));
    }
  }

  TEST_CASE("csv export") {
    std::ostringstream os;
    const auto c = binary_chain(2);
    write_eet_csv(os, c, eet_oracle_table(c));
    CHECK(os.str() == "k,ell,h_num,h_den,chain_kind\n2,0,0,1,binary\n2,1,3,1,binary\n2,2,4,1,binary\n");
  }

  TEST_CASE("monte carlo absorption agrees") {
    const auto [mean, se] = simulate_absorption(harmonic_chain(3), 1, 40000, 5);
    CHECK(std::abs(mean - 15.0) < 4 * se);
    const auto [bmean, bse] = simulate_absorption(binary_chain(4), 2, 40000, 6);
    CHECK(std::abs(bmean - 56.0 / 3.0) < 4 * bse);
  }
}
