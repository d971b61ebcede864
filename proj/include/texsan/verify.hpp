#ifndef TEXSAN_VERIFY_HPP
#define TEXSAN_VERIFY_HPP

#include <string>
#include <vector>

#include "texsan/build.hpp"
#include "texsan/bundle.hpp"
#include "texsan/config.hpp"
#include "texsan/util.hpp"

namespace texsan {

struct PixBuf {
  int width = 0;
  int height = 0;
  Bytes rgb;  // 3 bytes per pixel
};

struct PageDiff {
  int page = 0;  // 0-based
  long differing_pixels = 0;
  int bbox_x0 = 0, bbox_y0 = 0, bbox_x1 = 0, bbox_y1 = 0;  // inclusive-exclusive
  bool dimension_mismatch = false;
};

struct VisualDiff {
  enum class V { identical, different, incomparable };
  V verdict = V::incomparable;
  bool page_count_match = false;
  std::vector<PageDiff> mismatched_pages;
  int dpi = 150;
  std::string reason;  // for incomparable
};

struct CleanOutcome {
  enum class V { beneficial, neutral, breaks, unverified };
  V verdict = V::breaks;
  bool changed_sources = false;
  bool compiles_after = false;
  VisualDiff visual;
  std::string detail;
};

const char* visual_verdict_name(VisualDiff::V v);
const char* outcome_name(CleanOutcome::V v);

class Verifier {
 public:
  Verifier(const Config& config, int dpi = 150, long fuzz = 0)
      : config_(config), dpi_(dpi), fuzz_(fuzz) {
    if (dpi_ < 72 || dpi_ > 600)
      throw Error(Errc::usage_error, "dpi must be within [72, 600]");
  }

  /// Rasterizes every page via the configured backend. Deterministic for a
  /// fixed backend and dpi. Throws RenderFailure.
  std::vector<PixBuf> rasterize(const fs::path& pdf) const;

  /// Exact per-pixel comparison (fuzz allows up to N differing pixels per
  /// page before calling it different; default 0).
  VisualDiff compare(const fs::path& pdf_a, const fs::path& pdf_b) const;

  /// Compiles both bundles and compares the outputs. The original must
  /// compile (otherwise Incomparable is thrown); every failure after that
  /// point yields verdict=breaks, never beneficial.
  CleanOutcome judge(const SubmissionBundle& original,
                     const SubmissionBundle& sanitized, BuildRunner& runner) const;

  int dpi() const { return dpi_; }

 private:
  const Config& config_;
  int dpi_;
  long fuzz_;
};

}  // namespace texsan

#endif
