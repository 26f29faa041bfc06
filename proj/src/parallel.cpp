#include "wrgsim/parallel.hpp"

#include <cstdlib>
#include <string>

namespace wrgsim {

int default_threads() {
  const char* env = std::getenv("WRGSIM_THREADS");
  if (!env || !*env) return 1;
  try {
    int t = std::stoi(env);
    return t > 0 ? t : 1;
  } catch (...) {
    return 1;
  }
}

}  // namespace wrgsim
