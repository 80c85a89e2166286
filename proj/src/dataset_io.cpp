#include "skgcl/dataset_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "skgcl/error.hpp"

namespace skgcl {

namespace {

constexpr char kMagic[4] = {'S', 'K', 'G', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated file while reading ") + what, pos_);
    }
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  void skip(std::size_t n) { pos_ += n; }

  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_dataset(const Dataset& data) {
  data.validate();
  const Shape& shape = data.sequences.front().frames.shape();
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(data.class_count));
  put_u32(out, static_cast<std::uint32_t>(data.sequences.size()));
  for (std::size_t d : shape) put_u32(out, static_cast<std::uint32_t>(d));
  for (const auto& s : data.sequences) {
    put_u32(out, s.label);
    out.push_back(static_cast<char>(s.modality));
    for (double v : s.frames.data()) put_f32(out, static_cast<float>(v));
  }
  return out;
}

Dataset decode_dataset(const std::string& bytes) {
  Reader in(bytes);
  in.need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic", 0);
  in.skip(4);
  const std::uint64_t version_at = in.offset();
  if (in.u32("version") != kVersion) throw FormatError("unsupported version", version_at);

  const std::uint64_t classes_at = in.offset();
  const std::uint32_t classes = in.u32("class count");
  if (classes < 1) throw FormatError("class count must be positive", classes_at);
  const std::uint64_t count_at = in.offset();
  const std::uint32_t count = in.u32("sequence count");
  if (count < 1) throw FormatError("dataset must hold at least one sequence", count_at);
  const std::uint64_t t_at = in.offset();
  const std::uint32_t T = in.u32("T");
  if (T < 2) throw FormatError("T must be at least 2", t_at);
  const std::uint64_t n_at = in.offset();
  const std::uint32_t N = in.u32("N");
  if (N < 2) throw FormatError("N must be at least 2", n_at);
  const std::uint64_t c_at = in.offset();
  const std::uint32_t C = in.u32("C");
  if (C < 1) throw FormatError("C must be at least 1", c_at);

  const std::size_t values = static_cast<std::size_t>(T) * N * C;
  Dataset out;
  out.class_count = classes;
  out.sequences.reserve(count);
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::uint64_t label_at = in.offset();
    const std::uint32_t label = in.u32("label");
    if (label >= classes) throw FormatError("label outside class range", label_at);
    const std::uint64_t mod_at = in.offset();
    const std::uint8_t code = in.u8("modality");
    if (code > 3) throw FormatError("unknown modality code", mod_at);
    in.need(values * 4, "frame values");
    DenseArray frames({T, N, C});
    for (std::size_t i = 0; i < values; ++i) {
      const std::uint64_t at = in.offset();
      const float f = in.f32("frame value");
      if (!std::isfinite(f)) throw FormatError("non-finite frame value", at);
      frames[i] = static_cast<double>(f);
    }
    out.sequences.push_back({std::move(frames), label, static_cast<Modality>(code)});
  }
  if (!in.at_end()) throw FormatError("trailing bytes after last sequence", in.offset());
  return out;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  const std::string bytes = encode_dataset(data);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("read failed for " + path.string());
  return decode_dataset(bytes);
}

}  // namespace skgcl
