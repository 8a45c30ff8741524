#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evade/errors.hpp"
#include "evade/rng.hpp"
#include "evade/textio.hpp"

namespace evade {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double midpoint() const { return 0.5 * (lo + hi); }
  double span() const { return hi - lo; }
  bool operator==(const Interval& o) const { return lo == o.lo && hi == o.hi; }
};

struct Sample {
  std::vector<double> features;
  int label = 0;
};

// Uniform in-memory representation shared by all loaders. Immutable once
// built; safe to read from any number of threads.
struct Dataset {
  std::vector<Sample> samples;
  std::size_t feature_count = 0;
  std::vector<int> classes;  // ordered, no duplicates
  Interval feature_range{0.0, 255.0};

  std::size_t size() const { return samples.size(); }

  bool has_class(int c) const {
    return std::find(classes.begin(), classes.end(), c) != classes.end();
  }

  std::size_t count_label(int c) const {
    std::size_t n = 0;
    for (const auto& s : samples) n += (s.label == c) ? 1 : 0;
    return n;
  }
};

namespace detail {

inline std::vector<int> sorted_distinct_labels(const std::vector<Sample>& samples) {
  std::set<int> seen;
  for (const auto& s : samples) seen.insert(s.label);
  return {seen.begin(), seen.end()};
}

inline std::uint32_t read_be_u32(std::istream& in, const std::string& field) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw FormatError("truncated " + field);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

inline void write_be_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

// --- IDX container (big-endian magic + dims + raw bytes) -------------------

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Images become samples with features in raw [0,255] row-major order.
inline Dataset load_idx(const std::filesystem::path& image_path,
                        const std::filesystem::path& label_path) {
  std::ifstream img(image_path, std::ios::binary);
  if (!img) throw IoError("cannot open image file " + image_path.string());
  std::ifstream lab(label_path, std::ios::binary);
  if (!lab) throw IoError("cannot open label file " + label_path.string());

  const std::uint32_t img_magic = detail::read_be_u32(img, "image magic");
  if (img_magic != kIdxImageMagic)
    throw FormatError("bad image magic: expected 0x00000803");
  const std::uint32_t n_images = detail::read_be_u32(img, "image count");
  const std::uint32_t rows = detail::read_be_u32(img, "image rows");
  const std::uint32_t cols = detail::read_be_u32(img, "image cols");

  const std::uint32_t lab_magic = detail::read_be_u32(lab, "label magic");
  if (lab_magic != kIdxLabelMagic)
    throw FormatError("bad label magic: expected 0x00000801");
  const std::uint32_t n_labels = detail::read_be_u32(lab, "label count");

  if (n_images != n_labels)
    throw FormatError("count mismatch: " + std::to_string(n_images) + " images vs " +
                      std::to_string(n_labels) + " labels");
  if (n_images == 0) throw FormatError("image count is zero");

  const std::size_t d = std::size_t(rows) * std::size_t(cols);
  Dataset ds;
  ds.feature_count = d;
  ds.feature_range = Interval{0.0, 255.0};
  ds.samples.resize(n_images);

  std::vector<unsigned char> buf(d);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(d));
    if (!img) throw FormatError("truncated image payload at sample " + std::to_string(i));
    char label_byte = 0;
    lab.read(&label_byte, 1);
    if (!lab) throw FormatError("truncated label payload at sample " + std::to_string(i));
    auto& s = ds.samples[i];
    s.label = static_cast<unsigned char>(label_byte);
    s.features.resize(d);
    for (std::size_t k = 0; k < d; ++k) s.features[k] = static_cast<double>(buf[k]);
  }
  ds.classes = detail::sorted_distinct_labels(ds.samples);
  return ds;
}

// Serializer counterpart, used for fixtures and by the synth subcommand.
// Features are rounded and clamped to bytes; rows/cols inferred from d when
// it is a perfect square, else written as 1 x d.
inline void write_idx(const Dataset& ds, const std::filesystem::path& image_path,
                      const std::filesystem::path& label_path) {
  std::uint32_t rows = 1, cols = static_cast<std::uint32_t>(ds.feature_count);
  const auto side = static_cast<std::uint32_t>(std::lround(std::sqrt(double(ds.feature_count))));
  if (std::size_t(side) * side == ds.feature_count) rows = cols = side;

  std::ostringstream img, lab;
  detail::write_be_u32(img, kIdxImageMagic);
  detail::write_be_u32(img, static_cast<std::uint32_t>(ds.size()));
  detail::write_be_u32(img, rows);
  detail::write_be_u32(img, cols);
  detail::write_be_u32(lab, kIdxLabelMagic);
  detail::write_be_u32(lab, static_cast<std::uint32_t>(ds.size()));
  for (const auto& s : ds.samples) {
    for (double v : s.features) {
      const long q = std::lround(std::min(255.0, std::max(0.0, v)));
      img.put(static_cast<char>(static_cast<unsigned char>(q)));
    }
    lab.put(static_cast<char>(static_cast<unsigned char>(s.label)));
  }
  write_file_atomic(image_path, img.str());
  write_file_atomic(label_path, lab.str());
}

// --- sparse "label idx:val ..." text (1-based, strictly increasing) --------

inline Dataset load_sparse_text(const std::filesystem::path& path, std::size_t feature_count) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Dataset ds;
  ds.feature_count = feature_count;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok))
      throw FormatError("line " + std::to_string(line_no) + ": missing label");
    Sample s;
    s.label = static_cast<int>(parse_int(tok, "label at line " + std::to_string(line_no)));
    s.features.assign(feature_count, 0.0);
    long long prev_index = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw FormatError("line " + std::to_string(line_no) + ": token '" + tok +
                          "' is not idx:val");
      const long long idx =
          parse_int(tok.substr(0, colon), "index at line " + std::to_string(line_no));
      const double val =
          parse_double(tok.substr(colon + 1), "value at line " + std::to_string(line_no));
      if (idx < 1 || static_cast<std::size_t>(idx) > feature_count)
        throw FormatError("line " + std::to_string(line_no) + ": index " +
                          std::to_string(idx) + " out of range 1.." +
                          std::to_string(feature_count));
      if (idx <= prev_index)
        throw FormatError("line " + std::to_string(line_no) + ": index " +
                          std::to_string(idx) + " not strictly increasing");
      prev_index = idx;
      s.features[static_cast<std::size_t>(idx - 1)] = val;
    }
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw FormatError("no samples in " + path.string());
  ds.classes = detail::sorted_distinct_labels(ds.samples);

  double lo = ds.samples[0].features[0], hi = lo;
  for (const auto& s : ds.samples)
    for (double v : s.features) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  ds.feature_range = Interval{lo, hi};
  return ds;
}

// Zeros are omitted on write, which is what the round-trip tests expect:
// missing indices are defined to read back as zero.
inline void write_sparse_text(const Dataset& ds, const std::filesystem::path& path) {
  std::ostringstream out;
  for (const auto& s : ds.samples) {
    out << s.label;
    for (std::size_t k = 0; k < s.features.size(); ++k)
      if (s.features[k] != 0.0) out << ' ' << (k + 1) << ':' << fmt_double(s.features[k]);
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

// --- headerless numeric CSV with a designated label column -----------------

inline Dataset load_csv_labeled(const std::filesystem::path& path, std::size_t label_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Dataset ds;

  std::string line;
  std::size_t row = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ls(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      ++col;
      cells.push_back(parse_double(cell, "cell at row " + std::to_string(row) + " col " +
                                             std::to_string(col)));
    }
    if (width == 0) {
      width = cells.size();
      if (label_column >= width)
        throw FormatError("label column " + std::to_string(label_column) +
                          " out of range for " + std::to_string(width) + " columns");
    } else if (cells.size() != width) {
      throw FormatError("ragged row " + std::to_string(row) + ": expected " +
                        std::to_string(width) + " cells, got " +
                        std::to_string(cells.size()));
    }
    Sample s;
    const double label_value = cells[label_column];
    s.label = static_cast<int>(std::llround(label_value));
    s.features.reserve(width - 1);
    for (std::size_t k = 0; k < width; ++k)
      if (k != label_column) s.features.push_back(cells[k]);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw FormatError("no rows in " + path.string());
  ds.feature_count = width - 1;
  ds.classes = detail::sorted_distinct_labels(ds.samples);

  double lo = ds.samples[0].features.empty() ? 0.0 : ds.samples[0].features[0];
  double hi = lo;
  for (const auto& s : ds.samples)
    for (double v : s.features) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  ds.feature_range = Interval{lo, hi};
  return ds;
}

inline void write_csv_labeled(const Dataset& ds, const std::filesystem::path& path,
                              std::size_t label_column) {
  std::ostringstream out;
  for (const auto& s : ds.samples) {
    std::size_t fi = 0;
    for (std::size_t k = 0; k < ds.feature_count + 1; ++k) {
      if (k) out << ',';
      if (k == label_column)
        out << s.label;
      else
        out << fmt_double(s.features[fi++]);
    }
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

// --- scaling ----------------------------------------------------------------

// Per-feature min/max learned on one split so the same map can be reused on
// held-out data without leakage.
struct ScaleParams {
  std::vector<double> lo, hi;  // observed per-feature extrema
  Interval target{0.0, 1.0};
};

inline ScaleParams fit_scaling(const Dataset& ds, Interval target) {
  if (ds.samples.empty()) throw EmptyWorkError("cannot fit scaling on an empty dataset");
  ScaleParams p;
  p.target = target;
  p.lo.assign(ds.feature_count, std::numeric_limits<double>::infinity());
  p.hi.assign(ds.feature_count, -std::numeric_limits<double>::infinity());
  for (const auto& s : ds.samples)
    for (std::size_t k = 0; k < ds.feature_count; ++k) {
      p.lo[k] = std::min(p.lo[k], s.features[k]);
      p.hi[k] = std::max(p.hi[k], s.features[k]);
    }
  return p;
}

// Affine map onto the target interval. Constant features go to the target
// midpoint. Values outside the fitted extrema (possible when params come from
// a different split) are clamped so the range invariant holds for every
// dataset we hand out.
inline Dataset apply_scaling(const Dataset& ds, const ScaleParams& p) {
  if (p.lo.size() != ds.feature_count)
    throw FormatError("scaling params fitted for d=" + std::to_string(p.lo.size()) +
                      " but dataset has d=" + std::to_string(ds.feature_count));
  Dataset out = ds;
  out.feature_range = p.target;
  const double mid = p.target.midpoint();
  for (auto& s : out.samples)
    for (std::size_t k = 0; k < ds.feature_count; ++k) {
      const double w = p.hi[k] - p.lo[k];
      double v;
      if (w <= 0.0) {
        v = mid;
      } else {
        v = p.target.lo + (s.features[k] - p.lo[k]) / w * p.target.span();
        v = std::min(p.target.hi, std::max(p.target.lo, v));
      }
      s.features[k] = v;
    }
  return out;
}

inline Dataset scale_features(const Dataset& ds, Interval target) {
  return apply_scaling(ds, fit_scaling(ds, target));
}

// --- class filtering and partitioning ---------------------------------------

// Keeps the requested classes; their order defines the +1/-1 mapping
// downstream, so "keep {a,b}" pins the meaning of an a->b attack direction.
inline Dataset filter_classes(const Dataset& ds, const std::vector<int>& keep) {
  if (keep.size() < 2) throw FormatError("class filter needs at least two classes");
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t j = i + 1; j < keep.size(); ++j)
      if (keep[i] == keep[j])
        throw FormatError("duplicate class in filter: " + std::to_string(keep[i]));
  for (int c : keep)
    if (!ds.has_class(c))
      throw EmptyWorkError("class " + std::to_string(c) + " not present");
  Dataset out;
  out.feature_count = ds.feature_count;
  out.feature_range = ds.feature_range;
  out.classes = keep;
  for (const auto& s : ds.samples)
    if (std::find(keep.begin(), keep.end(), s.label) != keep.end())
      out.samples.push_back(s);
  return out;
}

inline Dataset filter_classes(const Dataset& ds, int keep_a, int keep_b) {
  return filter_classes(ds, std::vector<int>{keep_a, keep_b});
}

// Seeded Fisher-Yates shuffle, then contiguous slices. Parts inherit the
// parent class list and range.
inline std::vector<Dataset> partition(const Dataset& ds,
                                      const std::vector<std::size_t>& part_sizes,
                                      std::uint64_t seed) {
  std::size_t total = 0;
  for (std::size_t s : part_sizes) {
    if (s == 0) throw FormatError("partition sizes must be positive");
    total += s;
  }
  if (total > ds.size())
    throw FormatError("partition oversubscribed: requested " + std::to_string(total) +
                      " of " + std::to_string(ds.size()) + " samples");

  const auto order = shuffled_indices(ds.size(), seed);
  std::vector<Dataset> parts;
  parts.reserve(part_sizes.size());
  std::size_t cursor = 0;
  for (std::size_t want : part_sizes) {
    Dataset part;
    part.feature_count = ds.feature_count;
    part.feature_range = ds.feature_range;
    part.classes = ds.classes;
    part.samples.reserve(want);
    for (std::size_t i = 0; i < want; ++i) part.samples.push_back(ds.samples[order[cursor++]]);
    parts.push_back(std::move(part));
  }
  return parts;
}

}  // namespace evade
