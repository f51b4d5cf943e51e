#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dote/dataset.hpp"
#include "dote/errors.hpp"
#include "dote/tensor.hpp"
#include "dote/tensor_io.hpp"

namespace dote {

enum class ImageFormat { pgm, dote_tensor };

/// Loaded image plus the affine map back to stored intensities:
/// stored = offset + scale * normalized.
struct ImageRecord {
  std::string id;
  std::string modality;
  Tensor tensor;
  std::string source_path;
  ImageFormat format = ImageFormat::dote_tensor;
  double offset = 0.0;
  double scale = 1.0;
  bool constant = false;
  unsigned pgm_maxval = 0;  // 0 unless loaded from PGM
};

inline ImageFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".pgm" ? ImageFormat::pgm : ImageFormat::dote_tensor;
}

namespace detail {

inline std::string next_pgm_token(std::istream& is) {
  std::string token;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  if (token.empty()) throw FormatError("PGM: truncated header");
  return token;
}

inline unsigned long parse_pgm_number(const std::string& token, const char* what) {
  if (token.empty() || !std::all_of(token.begin(), token.end(),
                                    [](unsigned char c) { return std::isdigit(c); }))
    throw FormatError(std::string("PGM: malformed ") + what + " '" + token + "'");
  return std::stoul(token);
}

// Min-max normalization in place; returns (offset, scale, constant).
inline void normalize_record(ImageRecord& rec) {
  const double lo = rec.tensor.min();
  const double hi = rec.tensor.max();
  if (hi == lo) {
    rec.constant = true;
    rec.offset = lo;
    rec.scale = 0.0;
    std::fill(rec.tensor.values().begin(), rec.tensor.values().end(), 0.0);
    return;
  }
  rec.offset = lo;
  rec.scale = hi - lo;
  for (double& v : rec.tensor.values()) v = (v - lo) / (hi - lo);
}

}  // namespace detail

/// Raw P5 payload as doubles in stored units; sets maxval.
inline Tensor read_pgm(std::istream& is, unsigned& maxval) {
  if (detail::next_pgm_token(is) != "P5") throw FormatError("PGM: expected P5 magic");
  const auto width = detail::parse_pgm_number(detail::next_pgm_token(is), "width");
  const auto height = detail::parse_pgm_number(detail::next_pgm_token(is), "height");
  const auto mv = detail::parse_pgm_number(detail::next_pgm_token(is), "maxval");
  if (width == 0 || height == 0) throw FormatError("PGM: zero extent");
  if (mv == 0 || mv > 65535) throw FormatError("PGM: maxval out of range");
  maxval = static_cast<unsigned>(mv);

  const std::size_t n = width * height;
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(n * bytes_per);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size())
    throw FormatError("PGM: truncated payload");

  Tensor t(Dims{height, width});
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned v = bytes_per == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
    if (v > maxval) throw FormatError("PGM: sample exceeds maxval");
    t[i] = static_cast<double>(v);
  }
  return t;
}

/// Writes a 2D tensor with values in [0, 1] as binary PGM, scaled by maxval.
inline void write_pgm(std::ostream& os, const Tensor& t, unsigned maxval = 255) {
  if (t.rank() != 2) throw DimensionError("PGM output needs a 2D tensor");
  if (maxval == 0 || maxval > 65535) throw InvalidInput("PGM: maxval out of range");
  os << "P5\n" << t.dims()[1] << ' ' << t.dims()[0] << '\n' << maxval << '\n';
  for (double v : t.values()) {
    const auto q = static_cast<unsigned>(
        std::lround(std::clamp(v, 0.0, 1.0) * static_cast<double>(maxval)));
    if (maxval > 255) {
      os.put(static_cast<char>(q >> 8));
      os.put(static_cast<char>(q & 0xFF));
    } else {
      os.put(static_cast<char>(q));
    }
  }
  if (!os) throw FormatError("PGM: write failed");
}

/// Loads a PGM or native tensor and normalizes it to [0, 1]. PGM data is
/// always min-max normalized. Native tensors already inside [0, 1] are kept
/// bitwise; otherwise they are min-max normalized as well. A constant image
/// is flagged and mapped to 0.
inline ImageRecord load_image(const std::filesystem::path& path, ImageFormat format,
                              std::string id = {}, std::string modality = {}) {
  ImageRecord rec;
  rec.id = id.empty() ? path.stem().string() : std::move(id);
  rec.modality = std::move(modality);
  rec.source_path = path.string();
  rec.format = format;

  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  if (format == ImageFormat::pgm) {
    rec.tensor = read_pgm(is, rec.pgm_maxval);
    detail::normalize_record(rec);
  } else {
    rec.tensor = read_tensor(is);
    if (!rec.tensor.is_finite()) throw FormatError(path.string() + ": non-finite payload");
    if (rec.tensor.min() < 0.0 || rec.tensor.max() > 1.0) detail::normalize_record(rec);
  }
  return rec;
}

inline ImageRecord load_image(const std::filesystem::path& path) {
  return load_image(path, format_from_path(path));
}

/// Stored intensities without min-max normalization: PGM samples divided by
/// maxval, native tensors as stored. Used where two images must be compared
/// on a common scale. `maxval` receives the PGM maxval, or 0.
inline Tensor load_intensities(const std::filesystem::path& path,
                               unsigned* maxval = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  if (format_from_path(path) == ImageFormat::pgm) {
    unsigned mv = 0;
    Tensor t = read_pgm(is, mv);
    t *= 1.0 / static_cast<double>(mv);
    if (maxval) *maxval = mv;
    return t;
  }
  if (maxval) *maxval = 0;
  Tensor t = read_tensor(is);
  if (!t.is_finite()) throw FormatError(path.string() + ": non-finite payload");
  return t;
}

inline void save_image(const std::filesystem::path& path, const Tensor& t,
                       ImageFormat format, unsigned pgm_maxval = 255) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  if (format == ImageFormat::pgm)
    write_pgm(os, t, pgm_maxval);
  else
    write_tensor(os, t);
}

struct ManifestEntry {
  std::string id;
  std::filesystem::path source;
  std::filesystem::path target;
};

/// Parses "id<TAB>source_path<TAB>target_path" lines. Relative paths are
/// resolved against `base`. Blank lines and lines starting with '#' are
/// ignored.
inline std::vector<ManifestEntry> parse_manifest(std::istream& is,
                                                 const std::filesystem::path& base = {}) {
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 3 || fields[0].empty())
      throw FormatError("manifest line " + std::to_string(lineno) +
                        ": expected id<TAB>source<TAB>target");
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base.empty() ? base / path : path;
    };
    out.push_back({fields[0], resolve(fields[1]), resolve(fields[2])});
  }
  return out;
}

inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open manifest " + path.string());
  return parse_manifest(is, path.parent_path());
}

/// Pairs records by id, in the order of `sources`.
inline PairedDataset build_paired_dataset(const std::vector<ImageRecord>& sources,
                                          const std::vector<ImageRecord>& targets) {
  if (sources.size() != targets.size())
    throw InvalidInput("paired dataset: " + std::to_string(sources.size()) +
                       " sources vs " + std::to_string(targets.size()) + " targets");
  std::map<std::string, const ImageRecord*> by_id;
  for (const auto& t : targets)
    if (!by_id.emplace(t.id, &t).second)
      throw InvalidInput("paired dataset: duplicate target id '" + t.id + "'");

  PairedDataset ds;
  for (const auto& s : sources) {
    auto it = by_id.find(s.id);
    if (it == by_id.end())
      throw InvalidInput("paired dataset: no target for id '" + s.id + "'");
    const ImageRecord& t = *it->second;
    if (s.tensor.dims() != t.tensor.dims())
      throw DimensionError("paired dataset: id '" + s.id + "' has source dims " +
                           dims_to_string(s.tensor.dims()) + " but target dims " +
                           dims_to_string(t.tensor.dims()));
    if (ds.pairs.empty()) {
      ds.source_modality = s.modality;
      ds.target_modality = t.modality;
    }
    ds.pairs.push_back({s.id, s.tensor, t.tensor});
    by_id.erase(it);
  }
  return ds;
}

/// Loads every pair named in a manifest.
inline PairedDataset load_paired_dataset(const std::filesystem::path& manifest) {
  const auto entries = load_manifest(manifest);
  std::vector<ImageRecord> sources, targets;
  for (const auto& e : entries) {
    sources.push_back(load_image(e.source, format_from_path(e.source), e.id, "source"));
    targets.push_back(load_image(e.target, format_from_path(e.target), e.id, "target"));
  }
  return build_paired_dataset(sources, targets);
}

}  // namespace dote
