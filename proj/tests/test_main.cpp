#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>

#include "doctest.h"

namespace {

// Lets tests locate the bundled tools when run directly (outside ctest).
struct BinDirEnv {
  BinDirEnv() { ::setenv("TEXSAN_BIN_DIR", TEXSAN_BIN_DIR, 0); }
} bin_dir_env;

}  // namespace
