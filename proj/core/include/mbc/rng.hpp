#ifndef MBC_RNG_HPP_
#define MBC_RNG_HPP_

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace mbc {

// Deterministic random source. Wraps mt19937_64 but converts draws to
// doubles/ints by hand so results do not depend on the standard library's
// distribution implementations (byte-identical output across platforms).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 bits of randomness.
  double next_unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform integer in [0, n). Modulo bias is negligible for desk-scale n.
  std::uint64_t uniform_int(std::uint64_t n) { return eng_() % n; }

  bool bernoulli(double p) { return next_unit() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_int(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string serialize() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace mbc

#endif  // MBC_RNG_HPP_
