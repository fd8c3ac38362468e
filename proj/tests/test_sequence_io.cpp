#include "umaxent/sequence_io.hpp"

#include <doctest.h>

#include <sstream>

using namespace umaxent;

TEST_CASE("observation sequences round-trip") {
  const std::vector<ObservationSequence> seqs{{0, 3, kMissing, 11}, {kMissing}, {7, 7}};
  std::ostringstream out;
  write_sequences(out, seqs);
  CHECK(out.str() == "0 3 _ 11\n_\n7 7\n");
  std::istringstream in(out.str());
  CHECK(read_sequences(in) == seqs);
}

TEST_CASE("trajectories round-trip") {
  const std::vector<Trajectory> paths{{{0, 1}, {kMissing, kMissing}, {4, 0}}, {{2, 3}}};
  std::ostringstream out;
  write_trajectories(out, paths);
  CHECK(out.str() == "0,1 _ 4,0\n2,3\n");
  std::istringstream in(out.str());
  CHECK(read_trajectories(in) == paths);
}

TEST_CASE("comments and blank lines are skipped") {
  std::istringstream in("# header\n\n1 2  # trailing\n   \n_ 0\n");
  const std::vector<ObservationSequence> expected{{1, 2}, {kMissing, 0}};
  CHECK(read_sequences(in) == expected);
}

TEST_CASE("malformed steps name their line") {
  std::istringstream bad_symbol("0 1\n2 x\n");
  CHECK_THROWS_WITH(read_sequences(bad_symbol), doctest::Contains("line 2"));
  std::istringstream negative("-1\n");
  CHECK_THROWS(read_sequences(negative));
  std::istringstream no_action("0,1 3\n");
  CHECK_THROWS_WITH(read_trajectories(no_action), doctest::Contains("line 1"));
}
