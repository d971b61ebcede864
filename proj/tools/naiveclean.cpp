// naiveclean: reference cleaner used by the benchmark harness to show the
// test suite discriminates. It copies a source tree and deletes every line
// of every .tex file that contains a '%' anywhere — the classic regex-style
// mistake: it cannot tell \% or verbatim text from a real comment.
//
// usage: naiveclean INPUT_DIR OUTPUT_DIR

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: naiveclean INPUT_DIR OUTPUT_DIR\n";
    return 2;
  }
  fs::path in = argv[1], out = argv[2];
  if (!fs::is_directory(in)) {
    std::cerr << "naiveclean: not a directory: " << in << "\n";
    return 1;
  }
  fs::create_directories(out);
  for (auto it = fs::recursive_directory_iterator(in);
       it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file()) continue;
    fs::path rel = fs::relative(it->path(), in);
    fs::path dst = out / rel;
    fs::create_directories(dst.parent_path());
    if (it->path().extension() == ".tex") {
      std::ifstream src(it->path());
      std::ostringstream cleaned;
      std::string line;
      while (std::getline(src, line)) {
        if (line.find('%') != std::string::npos) continue;
        cleaned << line << "\n";
      }
      std::ofstream dstf(dst, std::ios::trunc);
      dstf << cleaned.str();
    } else {
      fs::copy_file(it->path(), dst, fs::copy_options::overwrite_existing);
    }
  }
  return 0;
}
