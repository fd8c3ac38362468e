#pragma once

// Plain-text tabular MDP format.
//
//   # comment
//   states 3
//   actions 2
//   discount 0.95
//   initial 0.5 0.5 0
//   reward <s> <a> <r>          (omitted entries are 0)
//   transition <s> <a> <s'> <p> (omitted entries are 0)
//
// Numbers are written with enough digits to round-trip exactly.

#include "umaxent/mdp.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace umaxent {

class MdpFormatError : public std::runtime_error {
 public:
  MdpFormatError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

void write_mdp(std::ostream& out, const Mdp& mdp);
Mdp read_mdp(std::istream& in);

void save_mdp(const std::string& path, const Mdp& mdp);
Mdp load_mdp(const std::string& path);

}  // namespace umaxent
