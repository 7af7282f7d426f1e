#include "qsearch/rng.hpp"

#include "qsearch/normal.hpp"

namespace qsearch {

Rng Rng::derive(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t a = mix64(master);
  const std::uint64_t b = mix64(a ^ mix64(stream + 0x632BE59BD9B4E019ULL));
  return Rng(mix64(b + mix64(index ^ 0xD1B54A32D192ED03ULL)));
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection keeps the result exactly uniform.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = engine_();
    if (x >= threshold) return x % n;
  }
}

double Rng::standard_normal() { return standard_normal_quantile(uniform_open()); }

}  // namespace qsearch
