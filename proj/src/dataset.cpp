#include "camoseg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "camoseg/errors.hpp"
#include "camoseg/imageops.hpp"
#include "camoseg/rng.hpp"

namespace fs = std::filesystem;

namespace camoseg {

namespace {

constexpr std::uint64_t kStreamGen = 0x67656eULL;    // generator
constexpr std::uint64_t kStreamSplit = 0x73706cULL;  // labeled split
constexpr double kTextureAmplitude = 0.22;

// Largest 4-connected component of a binary grid; returns its pixel count
// and rewrites the grid to that component only.
std::size_t keep_largest_component(std::vector<std::uint8_t>& grid, int h, int w) {
  std::vector<int> label(grid.size(), -1);
  int best_label = -1;
  std::size_t best_size = 0;
  int next = 0;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < grid.size(); ++start) {
    if (!grid[start] || label[start] != -1) continue;
    const int cur = next++;
    std::size_t size = 0;
    label[start] = cur;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      ++size;
      const int y = static_cast<int>(p) / w, x = static_cast<int>(p) % w;
      const int ny[4] = {y - 1, y + 1, y, y};
      const int nx[4] = {x, x, x - 1, x + 1};
      for (int i = 0; i < 4; ++i) {
        if (ny[i] < 0 || ny[i] >= h || nx[i] < 0 || nx[i] >= w) continue;
        const std::size_t q = static_cast<std::size_t>(ny[i]) * w + nx[i];
        if (grid[q] && label[q] == -1) {
          label[q] = cur;
          queue.push_back(q);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best_label = cur;
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = (grid[i] && label[i] == best_label) ? 1 : 0;
  return best_size;
}

// Metaball field thresholded at 1, retried with rescaled radii until the
// largest component occupies 5-40% of the canvas.
std::vector<std::uint8_t> synth_blob(int size, int max_balls, Rng& rng) {
  const double lo_frac = 0.05, hi_frac = 0.40;
  double radius_scale = 1.0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const int k = rng.uniform_int(1, std::max(1, max_balls));
    std::vector<double> cy(k), cx(k), r2(k);
    for (int i = 0; i < k; ++i) {
      cy[i] = rng.uniform(0.30, 0.70) * size;
      cx[i] = rng.uniform(0.30, 0.70) * size;
      const double r = rng.uniform(0.10, 0.24) * size * radius_scale;
      r2[i] = r * r;
    }
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(size) * size, 0);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        double f = 0.0;
        for (int i = 0; i < k; ++i) {
          const double dy = y - cy[i], dx = x - cx[i];
          const double d2 = dy * dy + dx * dx;
          f += r2[i] / (d2 + 1e-9);
        }
        grid[static_cast<std::size_t>(y) * size + x] = f >= 1.0 ? 1 : 0;
      }
    const std::size_t area = keep_largest_component(grid, size, size);
    const double frac = static_cast<double>(area) / static_cast<double>(size * size);
    if (frac >= lo_frac && frac <= hi_frac) return grid;
    radius_scale *= frac < lo_frac ? 1.15 : 0.85;
  }
  throw std::runtime_error("generate_sample: could not synthesize a blob in range");
}

// Band-limited noise per channel, min-max rescaled to mean +- amplitude.
std::vector<double> synth_texture(int size, double sigma, double mean_level, Rng& rng) {
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  std::vector<double> tex(3 * plane);
  for (double& v : tex) v = rng.uniform();
  const int ksize = 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
  Tensor blurred = gaussian_blur(Tensor::from_data({3, size, size}, std::move(tex), false),
                                 sigma, ksize);
  std::vector<double> out = blurred.data();
  for (int c = 0; c < 3; ++c) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < plane; ++i) {
      lo = std::min(lo, out[c * plane + i]);
      hi = std::max(hi, out[c * plane + i]);
    }
    if (hi <= lo) {
      for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = mean_level;
      continue;
    }
    const double s = 2.0 * kTextureAmplitude / (hi - lo);
    for (std::size_t i = 0; i < plane; ++i)
      out[c * plane + i] = mean_level - kTextureAmplitude + (out[c * plane + i] - lo) * s;
  }
  return out;
}

}  // namespace

Sample generate_sample(const CamoGenConfig& cfg, int index) {
  if (cfg.size < 8) throw ConfigError("generate_sample: size must be >= 8");
  if (cfg.contrast_delta < 0.0 || cfg.contrast_delta > 0.5)
    throw ConfigError("generate_sample: contrast_delta must be in [0, 0.5], got " +
                      std::to_string(cfg.contrast_delta));
  if (cfg.blob_complexity < 1 || cfg.blob_complexity > 5)
    throw ConfigError("generate_sample: blob_complexity must be in [1, 5]");
  if (!(cfg.texture_scale > 0.0))
    throw ConfigError("generate_sample: texture_scale must be > 0");

  Rng rng(mix_seed(cfg.seed, kStreamGen, static_cast<std::uint64_t>(index)));
  const int n = cfg.size;
  const std::size_t plane = static_cast<std::size_t>(n) * n;

  const auto blob = synth_blob(n, cfg.blob_complexity, rng);
  // Background sits at (1-delta)/2, foreground at (1+delta)/2: symmetric
  // around 0.5 so both fit in [0,1] with the fixed texture amplitude.
  const double bg_mean = (1.0 - cfg.contrast_delta) * 0.5;
  const auto bg = synth_texture(n, cfg.texture_scale, bg_mean, rng);
  auto fg = synth_texture(n, cfg.texture_scale, bg_mean, rng);
  for (double& v : fg) v += cfg.contrast_delta;

  std::vector<double> img(3 * plane);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i)
      img[c * plane + i] = blob[i] ? fg[c * plane + i] : bg[c * plane + i];
  for (double& v : img) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);

  std::vector<double> mask(plane);
  for (std::size_t i = 0; i < plane; ++i) mask[i] = blob[i] ? 1.0 : 0.0;

  Sample s;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%06d", index);
  s.id = buf;
  s.image = Tensor::from_data({3, n, n}, std::move(img), false);
  s.mask = Tensor::from_data({n, n}, std::move(mask), false);
  s.labeled = true;
  return s;
}

std::vector<Sample> generate_dataset(const CamoGenConfig& cfg, int count) {
  if (count < 1) throw ConfigError("generate_dataset: count must be >= 1");
  std::vector<Sample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(generate_sample(cfg, i));
  return out;
}

std::vector<char> choose_labeled(std::size_t count, double fraction, std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw ConfigError("split_labeled: fraction must be in (0, 1], got " +
                      std::to_string(fraction));
  const std::size_t k =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(count)));
  if (k == 0)
    throw ConfigError("split_labeled: fraction " + std::to_string(fraction) + " of " +
                      std::to_string(count) + " samples yields 0 labeled");
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(mix_seed(seed, kStreamSplit));
  for (std::size_t i = count; i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_int(0, static_cast<int>(i) - 1)]);
  std::vector<char> labeled(count, 0);
  for (std::size_t i = 0; i < k; ++i) labeled[order[i]] = 1;
  return labeled;
}

void split_labeled(std::vector<Sample>& samples, double fraction, std::uint64_t seed) {
  const std::vector<char> flags = choose_labeled(samples.size(), fraction, seed);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].labeled = flags[i] != 0;
    if (!samples[i].labeled) samples[i].mask = Tensor();
  }
}

// ---- NetPBM ----

namespace {

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ConfigError("short write to " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::uint8_t to_byte(double v) {
  const double x = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<std::uint8_t>(std::lround(x * 255.0));
}

struct PnmHeader {
  int width = 0, height = 0, maxval = 0;
  std::size_t payload_offset = 0;
};

// Parses "P6"/"P5" headers with whitespace and '#' comments; errors carry
// the byte offset of the offending character.
PnmHeader parse_pnm_header(const std::string& bytes, const std::string& path,
                           const char* magic) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& what, std::size_t at) -> PnmHeader {
    throw ConfigError(path + ": " + what + " at byte " + std::to_string(at));
  };
  if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1])
    return fail(std::string("expected magic ") + magic, 0);
  pos = 2;
  auto skip_space = [&]() {
    bool progressed = false;
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
      progressed = true;
    }
    return progressed;
  };
  auto read_int = [&](const char* field) {
    if (!skip_space()) fail(std::string("malformed header: missing separator before ") + field, pos);
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9')
      fail(std::string("malformed header: non-numeric ") + field, pos);
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1000000) fail(std::string("malformed header: oversized ") + field, pos);
      ++pos;
    }
    return static_cast<int>(v);
  };
  PnmHeader h;
  h.width = read_int("width");
  h.height = read_int("height");
  h.maxval = read_int("maxval");
  if (h.width < 1 || h.height < 1) fail("malformed header: zero dimension", pos);
  if (h.maxval != 255)
    throw ConfigError(path + ": unsupported maxval " + std::to_string(h.maxval) +
                      " (only 255)");
  // exactly one whitespace byte separates maxval from the payload
  if (pos >= bytes.size() ||
      !(bytes[pos] == ' ' || bytes[pos] == '\t' || bytes[pos] == '\r' || bytes[pos] == '\n'))
    fail("malformed header: missing whitespace after maxval", pos);
  ++pos;
  h.payload_offset = pos;
  return h;
}

void check_payload(const std::string& bytes, const PnmHeader& h, std::size_t expected,
                   const std::string& path) {
  if (bytes.size() < h.payload_offset + expected)
    // reported offset = required file size in 1-based bytes
    throw ConfigError(path + ": truncated payload at byte " +
                      std::to_string(h.payload_offset + expected));
}

}  // namespace

void write_ppm(const std::string& path, const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != 3)
    throw std::invalid_argument("write_ppm: expected [3,H,W], got " + shape_str(image.shape()));
  const int h = image.dim(1), w = image.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const auto& v = image.data();
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + 3 * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    out.push_back(static_cast<char>(to_byte(v[i])));
    out.push_back(static_cast<char>(to_byte(v[plane + i])));
    out.push_back(static_cast<char>(to_byte(v[2 * plane + i])));
  }
  write_file(path, out);
}

void write_pgm(const std::string& path, const Tensor& mask) {
  if (mask.ndim() != 2)
    throw std::invalid_argument("write_pgm: expected [H,W], got " + shape_str(mask.shape()));
  const int h = mask.dim(0), w = mask.dim(1);
  const auto& v = mask.data();
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + v.size());
  for (double x : v) out.push_back(static_cast<char>(x >= 0.5 ? 255 : 0));
  write_file(path, out);
}

Tensor read_ppm(const std::string& path) {
  const std::string bytes = read_file(path);
  const PnmHeader h = parse_pnm_header(bytes, path, "P6");
  const std::size_t plane = static_cast<std::size_t>(h.width) * h.height;
  check_payload(bytes, h, 3 * plane, path);
  std::vector<double> img(3 * plane);
  const unsigned char* p =
      reinterpret_cast<const unsigned char*>(bytes.data()) + h.payload_offset;
  for (std::size_t i = 0; i < plane; ++i) {
    img[i] = p[3 * i] / 255.0;
    img[plane + i] = p[3 * i + 1] / 255.0;
    img[2 * plane + i] = p[3 * i + 2] / 255.0;
  }
  return Tensor::from_data({3, h.height, h.width}, std::move(img), false);
}

Tensor read_pgm_mask(const std::string& path) {
  const std::string bytes = read_file(path);
  const PnmHeader h = parse_pnm_header(bytes, path, "P5");
  const std::size_t plane = static_cast<std::size_t>(h.width) * h.height;
  check_payload(bytes, h, plane, path);
  std::vector<double> mask(plane);
  const unsigned char* p =
      reinterpret_cast<const unsigned char*>(bytes.data()) + h.payload_offset;
  for (std::size_t i = 0; i < plane; ++i) mask[i] = p[i] >= 128 ? 1.0 : 0.0;
  return Tensor::from_data({h.height, h.width}, std::move(mask), false);
}

Sample load_pair(const std::string& image_path, const std::string& mask_path, int size) {
  Sample s;
  s.image = read_ppm(image_path);
  if (!mask_path.empty()) {
    s.mask = read_pgm_mask(mask_path);
    if (s.mask.dim(0) != s.image.dim(1) || s.mask.dim(1) != s.image.dim(2))
      throw ConfigError(mask_path + ": mask " + shape_str(s.mask.shape()) +
                        " does not match image " + shape_str(s.image.shape()));
    s.labeled = true;
  }
  if (size > 0 && (s.image.dim(1) != size || s.image.dim(2) != size)) {
    s.image = resize_bilinear(s.image, size, size);
    if (s.mask.defined()) s.mask = resize_nearest(s.mask, size, size);
  }
  return s;
}

void write_dataset(const std::string& root, const std::vector<Sample>& samples) {
  std::error_code ec;
  fs::create_directories(fs::path(root) / "images", ec);
  fs::create_directories(fs::path(root) / "masks", ec);
  if (ec) throw ConfigError("cannot create dataset directories under " + root);
  std::string manifest = "id,labeled\n";
  for (const auto& s : samples) {
    write_ppm((fs::path(root) / "images" / (s.id + ".ppm")).string(), s.image);
    if (s.mask.defined()) write_pgm((fs::path(root) / "masks" / (s.id + ".pgm")).string(), s.mask);
    manifest += s.id + "," + (s.labeled ? "1" : "0") + "\n";
  }
  write_file((fs::path(root) / "manifest.csv").string(), manifest);
}

std::vector<Sample> load_dataset(const std::string& root, int size, bool attach_all_masks) {
  const std::string manifest_path = (fs::path(root) / "manifest.csv").string();
  std::ifstream f(manifest_path);
  if (!f) throw ConfigError("missing manifest.csv in " + root);
  std::vector<Sample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "id,labeled")
        throw ConfigError(manifest_path + ": line 1: expected header 'id,labeled', got '" +
                          line + "'");
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ConfigError(manifest_path + ": line " + std::to_string(lineno) + ": missing comma");
    const std::string id = line.substr(0, comma);
    const std::string flag = line.substr(comma + 1);
    if (id.empty() || (flag != "0" && flag != "1"))
      throw ConfigError(manifest_path + ": line " + std::to_string(lineno) +
                        ": labeled flag must be 0 or 1, got '" + flag + "'");
    const bool labeled = flag == "1";
    const std::string img = (fs::path(root) / "images" / (id + ".ppm")).string();
    const std::string msk = (fs::path(root) / "masks" / (id + ".pgm")).string();
    const bool want_mask = labeled || attach_all_masks;
    Sample s = load_pair(img, want_mask ? msk : std::string(), size);
    s.id = id;
    s.labeled = labeled;
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ConfigError(manifest_path + ": no samples listed");
  return out;
}

}  // namespace camoseg
