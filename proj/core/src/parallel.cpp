#include "balayage/parallel.hpp"

#include <cstdlib>
#include <string>

namespace balayage {

int worker_count() {
  if (const char* env = std::getenv("BALAYAGE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min<long>(v, 1024));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace balayage
