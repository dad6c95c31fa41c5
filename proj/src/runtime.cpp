#include "zpt/runtime.hpp"

#include <Eigen/Core>

#include <cstdlib>
#include <malloc.h>
#include <string>

namespace zpt {

void configure_runtime() {
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
  if (const char* env = std::getenv("ZPT_NUM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) Eigen::setNbThreads(n);
    } catch (const std::exception&) {
      // Unparseable values leave the default in place.
    }
  }
}

}  // namespace zpt
