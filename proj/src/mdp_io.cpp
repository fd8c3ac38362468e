#include "umaxent/mdp_io.hpp"

#include "umaxent/experiment.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

namespace umaxent {

MdpFormatError::MdpFormatError(int line, const std::string& message)
    : std::runtime_error("mdp line " + std::to_string(line) + ": " + message), line_(line) {}

void write_mdp(std::ostream& out, const Mdp& mdp) {
  const int ns = mdp.num_states();
  const int na = mdp.num_actions();
  out << "states " << ns << '\n' << "actions " << na << '\n';
  out << "discount " << format_double(mdp.discount()) << '\n';
  out << "initial";
  for (int s = 0; s < ns; ++s) out << ' ' << format_double(mdp.initial()[s]);
  out << '\n';
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      if (mdp.reward()(s, a) != 0.0) {
        out << "reward " << s << ' ' << a << ' ' << format_double(mdp.reward()(s, a)) << '\n';
      }
    }
  }
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      for (int n = 0; n < ns; ++n) {
        const double p = mdp.transition(s, a, n);
        if (p != 0.0) {
          out << "transition " << s << ' ' << a << ' ' << n << ' ' << format_double(p) << '\n';
        }
      }
    }
  }
}

namespace {

class LineReader {
 public:
  LineReader(std::vector<std::string> tokens, int line) : tokens_(std::move(tokens)), line_(line) {}

  std::size_t size() const { return tokens_.size(); }

  int integer(std::size_t i, int lo, int hi) const {
    int v = 0;
    const auto& tok = tokens_[i];
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) fail("expected an integer, got '" + tok + "'");
    if (v < lo || v > hi) fail("index " + tok + " out of range");
    return v;
  }

  double real(std::size_t i) const {
    double v = 0.0;
    const auto& tok = tokens_[i];
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) fail("expected a number, got '" + tok + "'");
    return v;
  }

  void expect_count(std::size_t n) const {
    if (tokens_.size() != n) {
      fail("'" + tokens_[0] + "' takes " + std::to_string(n - 1) + " values");
    }
  }

  [[noreturn]] void fail(const std::string& message) const { throw MdpFormatError(line_, message); }

 private:
  std::vector<std::string> tokens_;
  int line_;
};

}  // namespace

Mdp read_mdp(std::istream& in) {
  std::optional<int> ns, na;
  std::optional<double> discount;
  std::optional<Eigen::VectorXd> initial;
  Eigen::MatrixXd reward;
  std::vector<Eigen::MatrixXd> transitions;

  auto allocate = [&](const LineReader& line) {
    if (!ns || !na) line.fail("'states' and 'actions' must come first");
    if (transitions.empty()) {
      reward = Eigen::MatrixXd::Zero(*ns, *na);
      transitions.assign(static_cast<std::size_t>(*na), Eigen::MatrixXd::Zero(*ns, *ns));
    }
  };

  std::string text;
  int number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (const auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
    std::istringstream words(text);
    std::vector<std::string> tokens;
    for (std::string w; words >> w;) tokens.push_back(w);
    if (tokens.empty()) continue;
    const LineReader line(tokens, number);
    const std::string& key = tokens[0];

    if (key == "states" || key == "actions") {
      line.expect_count(2);
      if (!transitions.empty()) line.fail("'" + key + "' after table entries");
      (key == "states" ? ns : na) = line.integer(1, 1, 1 << 20);
    } else if (key == "discount") {
      line.expect_count(2);
      discount = line.real(1);
    } else if (key == "initial") {
      if (!ns) line.fail("'states' must come before 'initial'");
      line.expect_count(static_cast<std::size_t>(*ns) + 1);
      Eigen::VectorXd p(*ns);
      for (int s = 0; s < *ns; ++s) p[s] = line.real(static_cast<std::size_t>(s) + 1);
      initial = std::move(p);
    } else if (key == "reward") {
      allocate(line);
      line.expect_count(4);
      reward(line.integer(1, 0, *ns - 1), line.integer(2, 0, *na - 1)) = line.real(3);
    } else if (key == "transition") {
      allocate(line);
      line.expect_count(5);
      const int s = line.integer(1, 0, *ns - 1);
      const int a = line.integer(2, 0, *na - 1);
      const int n = line.integer(3, 0, *ns - 1);
      transitions[static_cast<std::size_t>(a)](s, n) = line.real(4);
    } else {
      line.fail("unknown keyword '" + key + "'");
    }
  }
  if (!ns || !na || !discount || !initial) {
    throw MdpFormatError(number, "missing one of 'states', 'actions', 'discount', 'initial'");
  }
  if (transitions.empty()) throw MdpFormatError(number, "no transition entries");
  try {
    return Mdp(std::move(transitions), std::move(reward), *discount, Distribution(std::move(*initial)));
  } catch (const std::invalid_argument& e) {
    throw MdpFormatError(number, e.what());
  }
}

void save_mdp(const std::string& path, const Mdp& mdp) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_mdp(out, mdp);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

Mdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_mdp(in);
}

}  // namespace umaxent
