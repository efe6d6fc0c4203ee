#include "mafw/rng.hpp"

#include <iomanip>
#include <sstream>

namespace mafw {

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_ << ' ' << has_spare_ << ' ' << std::hexfloat << spare_;
  return os.str();
}

void Rng::restore(const std::string& text) {
  std::istringstream is(text);
  is >> engine_ >> has_spare_;
  std::string spare;
  is >> spare;
  spare_ = std::strtod(spare.c_str(), nullptr);
  if (!is && !is.eof()) throw std::runtime_error("malformed rng state");
}

}  // namespace mafw
