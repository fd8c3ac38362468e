#include "umaxent/sequence_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace umaxent {

namespace {

int parse_index(std::string_view tok, int line) {
  int v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size() || v < 0) {
    throw std::runtime_error("sequence line " + std::to_string(line) + ": bad index '" +
                             std::string(tok) + "'");
  }
  return v;
}

template <typename Step, typename Parse>
std::vector<std::vector<Step>> read_lines(std::istream& in, Parse parse) {
  std::vector<std::vector<Step>> out;
  std::string text;
  int number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (const auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
    std::istringstream words(text);
    std::vector<Step> seq;
    for (std::string tok; words >> tok;) seq.push_back(parse(tok, number));
    if (!seq.empty()) out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace

void write_sequences(std::ostream& out, const std::vector<ObservationSequence>& sequences) {
  for (const auto& seq : sequences) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      if (t) out << ' ';
      if (seq[t] == kMissing) out << '_';
      else out << seq[t];
    }
    out << '\n';
  }
}

std::vector<ObservationSequence> read_sequences(std::istream& in) {
  return read_lines<int>(in, [](const std::string& tok, int line) {
    return tok == "_" ? kMissing : parse_index(tok, line);
  });
}

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  for (const auto& path : trajectories) {
    for (std::size_t t = 0; t < path.size(); ++t) {
      if (t) out << ' ';
      if (path[t].state == kMissing) out << '_';
      else out << path[t].state << ',' << path[t].action;
    }
    out << '\n';
  }
}

std::vector<Trajectory> read_trajectories(std::istream& in) {
  return read_lines<StateAction>(in, [](const std::string& tok, int line) -> StateAction {
    if (tok == "_") return {kMissing, kMissing};
    const auto comma = tok.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("sequence line " + std::to_string(line) +
                               ": expected state,action but got '" + tok + "'");
    }
    const std::string_view view(tok);
    return {parse_index(view.substr(0, comma), line), parse_index(view.substr(comma + 1), line)};
  });
}

}  // namespace umaxent
