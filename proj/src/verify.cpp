#include "texsan/verify.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>

#include "texsan/subprocess.hpp"

namespace texsan {

const char* visual_verdict_name(VisualDiff::V v) {
  switch (v) {
    case VisualDiff::V::identical: return "identical";
    case VisualDiff::V::different: return "different";
    case VisualDiff::V::incomparable: return "incomparable";
  }
  return "?";
}

const char* outcome_name(CleanOutcome::V v) {
  switch (v) {
    case CleanOutcome::V::beneficial: return "beneficial";
    case CleanOutcome::V::neutral: return "neutral";
    case CleanOutcome::V::breaks: return "breaks";
    case CleanOutcome::V::unverified: return "unverified";
  }
  return "?";
}

namespace {

// Parses a concatenated stream of binary P6 images.
std::vector<PixBuf> parse_ppm_stream(const std::string& data) {
  std::vector<PixBuf> pages;
  std::size_t i = 0;
  auto skip_ws_comments = [&] {
    while (i < data.size()) {
      if (std::isspace(std::uint8_t(data[i]))) {
        ++i;
      } else if (data[i] == '#') {
        while (i < data.size() && data[i] != '\n') ++i;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_ws_comments();
    long v = 0;
    bool any = false;
    while (i < data.size() && std::isdigit(std::uint8_t(data[i]))) {
      v = v * 10 + (data[i++] - '0');
      any = true;
    }
    if (!any) throw Error(Errc::render_failure, "malformed pixmap header");
    return v;
  };

  while (i < data.size()) {
    skip_ws_comments();
    if (i >= data.size()) break;
    if (data.compare(i, 2, "P6") != 0)
      throw Error(Errc::render_failure, "expected P6 pixmap");
    i += 2;
    long w = read_int();
    long h = read_int();
    long maxval = read_int();
    if (maxval != 255) throw Error(Errc::render_failure, "unsupported maxval");
    ++i;  // single whitespace after maxval
    std::size_t need = std::size_t(w) * std::size_t(h) * 3;
    if (i + need > data.size())
      throw Error(Errc::render_failure, "truncated pixmap data");
    PixBuf p;
    p.width = int(w);
    p.height = int(h);
    p.rgb.assign(data.begin() + long(i), data.begin() + long(i + need));
    pages.push_back(std::move(p));
    i += need;
  }
  return pages;
}

}  // namespace

std::vector<PixBuf> Verifier::rasterize(const fs::path& pdf) const {
  std::error_code ec;
  if (!fs::exists(pdf, ec))
    throw Error(Errc::render_failure, "missing PDF: " + pdf.string());
  auto cmd = expand_placeholders(
      config_.raster_cmd(),
      {{"pdf", pdf.string()}, {"dpi", std::to_string(dpi_)}});
  auto argv = split_command(cmd);
  RunOptions opts;
  opts.timeout_seconds = 120;
  opts.stdout_limit_bytes = 4ull << 30;
  auto res = run_process(argv, opts);
  if (res.exit_code != 0)
    throw Error(Errc::render_failure,
                "raster backend exited " + std::to_string(res.exit_code) + " on " +
                    pdf.string());
  auto pages = parse_ppm_stream(res.out);
  if (pages.empty())
    throw Error(Errc::render_failure, "raster backend produced no pages");
  return pages;
}

VisualDiff Verifier::compare(const fs::path& pdf_a, const fs::path& pdf_b) const {
  VisualDiff d;
  d.dpi = dpi_;
  std::vector<PixBuf> a, b;
  try {
    a = rasterize(pdf_a);
    b = rasterize(pdf_b);
  } catch (const Error& e) {
    d.verdict = VisualDiff::V::incomparable;
    d.reason = e.what();
    return d;
  }

  d.page_count_match = a.size() == b.size();
  std::size_t pages = std::min(a.size(), b.size());
  for (std::size_t p = 0; p < pages; ++p) {
    const PixBuf& pa = a[p];
    const PixBuf& pb = b[p];
    if (pa.width != pb.width || pa.height != pb.height) {
      PageDiff pd;
      pd.page = int(p);
      pd.dimension_mismatch = true;
      d.mismatched_pages.push_back(pd);
      continue;
    }
    long differing = 0;
    int x0 = pa.width, y0 = pa.height, x1 = 0, y1 = 0;
    for (int y = 0; y < pa.height; ++y) {
      std::size_t row = std::size_t(y) * std::size_t(pa.width) * 3;
      if (std::memcmp(pa.rgb.data() + row, pb.rgb.data() + row,
                      std::size_t(pa.width) * 3) == 0)
        continue;
      for (int x = 0; x < pa.width; ++x) {
        std::size_t off = row + std::size_t(x) * 3;
        if (pa.rgb[off] != pb.rgb[off] || pa.rgb[off + 1] != pb.rgb[off + 1] ||
            pa.rgb[off + 2] != pb.rgb[off + 2]) {
          ++differing;
          x0 = std::min(x0, x);
          y0 = std::min(y0, y);
          x1 = std::max(x1, x + 1);
          y1 = std::max(y1, y + 1);
        }
      }
    }
    if (differing > fuzz_) {
      PageDiff pd;
      pd.page = int(p);
      pd.differing_pixels = differing;
      pd.bbox_x0 = x0;
      pd.bbox_y0 = y0;
      pd.bbox_x1 = x1;
      pd.bbox_y1 = y1;
      d.mismatched_pages.push_back(pd);
    }
  }
  d.verdict = (d.page_count_match && d.mismatched_pages.empty())
                  ? VisualDiff::V::identical
                  : VisualDiff::V::different;
  return d;
}

CleanOutcome Verifier::judge(const SubmissionBundle& original,
                             const SubmissionBundle& sanitized,
                             BuildRunner& runner) const {
  CleanOutcome out;
  out.changed_sources = original.content_hash() != sanitized.content_hash();

  if (original.roots.empty())
    throw Error(Errc::incomparable, "original bundle has no root");

  // The original must compile; otherwise there is nothing to compare.
  TempDir scratch_a("judge-orig");
  CompileOutcome orig;
  try {
    orig = runner.compile_all(original, original.roots.front(),
                              scratch_a.path() / "b");
  } catch (const Error& e) {
    throw Error(Errc::incomparable,
                std::string("original bundle does not compile: ") + e.what());
  }

  // From here on, every failure is a breaks verdict.
  try {
    std::string root = original.roots.front();
    if (!sanitized.has(root)) {
      out.verdict = CleanOutcome::V::breaks;
      out.detail = "root file missing after sanitization";
      return out;
    }
    TempDir scratch_b("judge-clean");
    CompileOutcome after =
        runner.compile_all(sanitized, root, scratch_b.path() / "b");
    out.compiles_after = true;
    out.visual = compare(orig.pdf, after.pdf);
    if (out.visual.verdict == VisualDiff::V::identical) {
      out.verdict = out.changed_sources ? CleanOutcome::V::beneficial
                                        : CleanOutcome::V::neutral;
    } else {
      out.verdict = CleanOutcome::V::breaks;
      out.detail = "visual mismatch";
    }
  } catch (const std::exception& e) {
    out.verdict = CleanOutcome::V::breaks;
    out.detail = e.what();
  }
  return out;
}

}  // namespace texsan
