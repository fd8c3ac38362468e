#pragma once

// Line-oriented dataset files: one sequence per line, steps separated by
// spaces, `_` for a missing step. Observation steps are symbol indices;
// trajectory steps are `state,action`. Blank lines and `#` comments are
// skipped.

#include "umaxent/irl.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace umaxent {

void write_sequences(std::ostream& out, const std::vector<ObservationSequence>& sequences);
std::vector<ObservationSequence> read_sequences(std::istream& in);

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectories(std::istream& in);

}  // namespace umaxent
