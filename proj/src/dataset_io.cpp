#include "ici/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "ici/rng.hpp"

namespace ici {

namespace {

constexpr char kMagic[4] = {'I', 'C', 'I', 'F'};
constexpr std::uint32_t kVersion = 1;

// Little-endian scalar codecs; the format is defined little-endian regardless
// of host order.
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::string raw(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) {
      throw ParseError(path_ + ": truncated while reading " + what + " at byte " +
                       std::to_string(pos_) + " (need " + std::to_string(n) + " more, have " +
                       std::to_string(bytes_.size() - pos_) + ")");
    }
  }

 private:
  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

// Groups flat (label, vector) records into a validated store.
FeatureStore assemble(std::vector<std::pair<std::uint32_t, Vector>>&& records, Index dim,
                      const std::string& path) {
  std::uint32_t max_label = 0;
  for (const auto& r : records) max_label = std::max(max_label, r.first);
  FeatureStore store;
  store.dim = dim;
  store.classes.resize(max_label + 1);
  for (auto& r : records) store.classes[r.first].push_back(std::move(r.second));
  for (std::size_t c = 0; c < store.classes.size(); ++c) {
    if (store.classes[c].empty()) {
      throw ParseError(path + ": class ids not dense, class " + std::to_string(c) +
                       " has no instances");
    }
  }
  return store;
}

FeatureStore load_icif(const std::string& path) {
  const std::string bytes = read_file(path);
  Reader r(bytes, path);

  const std::string magic = r.raw(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw ParseError(path + ": bad magic at byte 0 (not an ICIF file)");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kVersion) {
    throw ParseError(path + ": unsupported version " + std::to_string(version) + " at byte 4");
  }
  const std::uint64_t n = r.u64("instance count");
  const std::uint64_t dim = r.u64("dimension");
  if (n == 0 || dim == 0) {
    throw ParseError(path + ": degenerate store (n=" + std::to_string(n) +
                     ", dim=" + std::to_string(dim) + ")");
  }

  // Up-front payload size check so truncation errors can name the shortfall.
  const std::size_t record_bytes = 4 + 4 * static_cast<std::size_t>(dim);
  const std::size_t payload = static_cast<std::size_t>(n) * record_bytes;
  if (r.pos() + payload > r.size()) {
    throw ParseError(path + ": truncated payload, expected " + std::to_string(payload) +
                     " record bytes from byte " + std::to_string(r.pos()) + ", file has " +
                     std::to_string(r.size() - r.pos()));
  }

  std::vector<std::pair<std::uint32_t, Vector>> records;
  records.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::size_t record_at = r.pos();
    const std::uint32_t label = r.u32("record label");
    Vector v(static_cast<Index>(dim));
    for (std::uint64_t j = 0; j < dim; ++j) {
      const float f = r.f32("record feature");
      if (!std::isfinite(f)) {
        throw ParseError(path + ": non-finite feature in record " + std::to_string(i) +
                         " at byte " + std::to_string(record_at));
      }
      v(static_cast<Index>(j)) = static_cast<double>(f);
    }
    records.emplace_back(label, std::move(v));
  }

  FeatureStore store = assemble(std::move(records), static_cast<Index>(dim), path);

  const std::uint32_t num_names = r.u32("name table count");
  for (std::uint32_t i = 0; i < num_names; ++i) {
    const std::uint32_t class_id = r.u32("name table class id");
    const std::uint32_t len = r.u32("name table entry length");
    store.class_names[class_id] = r.raw(len, "name table entry");
  }
  return store;
}

void save_icif(const FeatureStore& store, const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, static_cast<std::uint64_t>(store.total_instances()));
  put_u64(out, static_cast<std::uint64_t>(store.dim));
  for (std::size_t c = 0; c < store.classes.size(); ++c) {
    for (const Vector& v : store.classes[c]) {
      put_u32(out, static_cast<std::uint32_t>(c));
      for (Index j = 0; j < v.size(); ++j) put_f32(out, static_cast<float>(v(j)));
    }
  }
  put_u32(out, static_cast<std::uint32_t>(store.class_names.size()));
  for (const auto& [class_id, name] : store.class_names) {
    put_u32(out, class_id);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
  }
  write_file(path, out);
}

FeatureStore load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file, missing header at line 1");
  if (line.rfind("label", 0) != 0) {
    throw ParseError(path + ": bad header at line 1, expected 'label,f0,...'");
  }
  const Index dim = static_cast<Index>(std::count(line.begin(), line.end(), ','));
  if (dim == 0) throw ParseError(path + ": header at line 1 declares no feature columns");

  std::vector<std::pair<std::uint32_t, Vector>> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    if (!std::getline(ss, field, ',')) {
      throw ParseError(path + ": malformed row at line " + std::to_string(line_no));
    }
    std::uint32_t label = 0;
    try {
      label = static_cast<std::uint32_t>(std::stoul(field));
    } catch (const std::exception&) {
      throw ParseError(path + ": bad label '" + field + "' at line " + std::to_string(line_no));
    }
    Vector v(dim);
    for (Index j = 0; j < dim; ++j) {
      if (!std::getline(ss, field, ',')) {
        throw ParseError(path + ": ragged row at line " + std::to_string(line_no) + ", expected " +
                         std::to_string(dim) + " features, got " + std::to_string(j));
      }
      char* end = nullptr;
      const double value = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || !std::isfinite(value)) {
        throw ParseError(path + ": non-finite or unparsable feature '" + field + "' at line " +
                         std::to_string(line_no));
      }
      v(j) = value;
    }
    if (std::getline(ss, field, ',')) {
      throw ParseError(path + ": ragged row at line " + std::to_string(line_no) +
                       ", extra fields beyond " + std::to_string(dim));
    }
    records.emplace_back(label, std::move(v));
  }
  if (records.empty()) throw ParseError(path + ": no data rows");
  return assemble(std::move(records), dim, path);
}

void save_csv(const FeatureStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "label";
  for (Index j = 0; j < store.dim; ++j) out << ",f" << j;
  out << "\n";
  char buf[64];
  for (std::size_t c = 0; c < store.classes.size(); ++c) {
    for (const Vector& v : store.classes[c]) {
      out << c;
      for (Index j = 0; j < v.size(); ++j) {
        // 9 significant digits round-trip any f32-origin value.
        std::snprintf(buf, sizeof(buf), "%.9g", v(j));
        out << ',' << buf;
      }
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

void validate_store(const FeatureStore& store) {
  if (store.classes.empty() || store.dim == 0) {
    throw std::invalid_argument("save_store: store must have classes and a positive dim");
  }
  for (std::size_t c = 0; c < store.classes.size(); ++c) {
    if (store.classes[c].empty()) {
      throw std::invalid_argument("save_store: class " + std::to_string(c) + " is empty");
    }
    for (const Vector& v : store.classes[c]) {
      if (v.size() != store.dim) {
        throw std::invalid_argument("save_store: class " + std::to_string(c) +
                                    " holds a vector of length " + std::to_string(v.size()) +
                                    ", store dim is " + std::to_string(store.dim));
      }
    }
  }
}

}  // namespace

FeatureStore load_store(const std::string& path, StoreFormat format) {
  return format == StoreFormat::icif ? load_icif(path) : load_csv(path);
}

void save_store(const FeatureStore& store, const std::string& path, StoreFormat format) {
  validate_store(store);
  if (format == StoreFormat::icif) {
    save_icif(store, path);
  } else {
    save_csv(store, path);
  }
}

FeatureStore generate_synthetic(const SynthSpec& spec) {
  if (spec.num_classes < 1 || spec.dim < 1 || spec.per_class < 1 || spec.noise_scale <= 0.0) {
    throw std::invalid_argument("generate_synthetic: counts must be >= 1 and noise_scale > 0");
  }
  Rng rng(spec.seed);
  FeatureStore store;
  store.dim = spec.dim;
  store.classes.resize(spec.num_classes);
  for (Index c = 0; c < spec.num_classes; ++c) {
    Vector center(spec.dim);
    do {
      for (Index j = 0; j < spec.dim; ++j) center(j) = rng.normal();
    } while (center.norm() == 0.0);
    center *= spec.cluster_separation / center.norm();

    store.classes[c].reserve(spec.per_class);
    for (Index i = 0; i < spec.per_class; ++i) {
      Vector v(spec.dim);
      for (Index j = 0; j < spec.dim; ++j) {
        const double value = center(j) + spec.noise_scale * rng.normal();
        // f32 quantization keeps in-memory stores identical to their ICIF
        // file round-trip.
        v(j) = static_cast<double>(static_cast<float>(value));
      }
      store.classes[c].push_back(std::move(v));
    }
  }
  return store;
}

}  // namespace ici
