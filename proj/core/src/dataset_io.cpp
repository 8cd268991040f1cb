#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "evofs/data.hpp"
#include "evofs/error.hpp"

namespace evofs::data {

namespace {

constexpr std::array<char, 8> kMagic = {'E', 'V', 'O', 'F', 'S', 'D', 'S', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagScaled = 1;

static_assert(std::endian::native == std::endian::little,
              "dataset cache I/O assumes a little-endian host");

class Writer {
 public:
  template <class T>
  void put(T v) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    out_.write(bytes, sizeof(T));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void put_raw(const char* data, std::size_t n) {
    out_.write(data, static_cast<std::streamsize>(n));
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

class Reader {
 public:
  Reader(std::string bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void get_raw(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorKind::kParse, name_ + ": truncated dataset cache");
    }
  }
  std::string bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::kIo, "cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds, bool scaled) {
  ds.validate();
  Writer w;
  w.put_raw(kMagic.data(), kMagic.size());
  w.put(kVersion);
  w.put(scaled ? kFlagScaled : std::uint32_t{0});
  w.put(static_cast<std::uint64_t>(ds.rows()));
  w.put(static_cast<std::uint64_t>(ds.cols()));
  w.put(static_cast<std::uint64_t>(ds.n_classes()));
  for (const auto& name : ds.feature_names) w.put_string(name);
  for (const auto& name : ds.class_names) w.put_string(name);
  for (Label y : ds.labels) w.put(static_cast<std::int32_t>(y));
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    for (std::size_t r = 0; r < ds.rows(); ++r) w.put(ds.features(r, c));
  }
  write_file_atomic(path, w.str());
}

CachedDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  Reader r(buffer.str(), path.string());

  std::array<char, 8> magic{};
  r.get_raw(magic.data(), magic.size());
  if (magic != kMagic) throw Error(ErrorKind::kParse, path.string() + ": not a dataset cache");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw Error(ErrorKind::kParse, path.string() + ": unsupported cache version " +
                                       std::to_string(version));
  }
  CachedDataset out;
  out.scaled = (r.get<std::uint32_t>() & kFlagScaled) != 0;
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  const auto classes = r.get<std::uint64_t>();
  Dataset& ds = out.dataset;
  for (std::uint64_t c = 0; c < cols; ++c) ds.feature_names.push_back(r.get_string());
  for (std::uint64_t c = 0; c < classes; ++c) ds.class_names.push_back(r.get_string());
  ds.labels.resize(rows);
  for (auto& y : ds.labels) y = r.get<std::int32_t>();
  ds.features = Matrix(rows, cols);
  for (std::uint64_t c = 0; c < cols; ++c) {
    for (std::uint64_t row = 0; row < rows; ++row) ds.features(row, c) = r.get<double>();
  }
  if (!r.at_end()) throw Error(ErrorKind::kParse, path.string() + ": trailing bytes");
  ds.validate();
  return out;
}

}  // namespace evofs::data
