#include "xmodal/io.hpp"

#include <cstring>
#include <vector>

namespace xmodal {

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path.string()) {
  if (!out_) throw Error("cannot open '" + path_ + "' for writing");
}

void BinaryWriter::put(const void* p, std::size_t n) {
  out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out_) throw Error("write failed on '" + path_ + "'");
  offset_ += n;
}

void BinaryWriter::magic(std::string_view tag) {
  if (tag.size() != 4) throw ContractError("magic tag must be 4 bytes");
  put(tag.data(), 4);
}

void BinaryWriter::u32(std::uint32_t v) { put(&v, sizeof v); }
void BinaryWriter::u64(std::uint64_t v) { put(&v, sizeof v); }
void BinaryWriter::f64(double v) { put(&v, sizeof v); }

void BinaryWriter::f64_array(std::span<const double> v) {
  if (!v.empty()) put(v.data(), v.size_bytes());
}

void BinaryWriter::bytes(std::span<const char> v) {
  if (!v.empty()) put(v.data(), v.size());
}

void BinaryWriter::close() {
  out_.flush();
  if (!out_) throw Error("flush failed on '" + path_ + "'");
  out_.close();
}

BinaryReader::BinaryReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary), path_(path.string()) {
  if (!in_) throw Error("cannot open '" + path_ + "' for reading");
}

void BinaryReader::get(void* p, std::size_t n) {
  in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n)
    throw FormatError("'" + path_ + "': truncated file", offset_);
  offset_ += n;
}

void BinaryReader::magic(std::string_view expect) {
  char got[4];
  std::uint64_t at = offset_;
  get(got, 4);
  if (std::memcmp(got, expect.data(), 4) != 0)
    throw FormatError("'" + path_ + "': bad magic, expected \"" +
                          std::string(expect) + "\" got \"" +
                          std::string(got, 4) + "\"",
                      at);
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v;
  get(&v, sizeof v);
  return v;
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  get(&v, sizeof v);
  return v;
}

double BinaryReader::f64() {
  double v;
  get(&v, sizeof v);
  return v;
}

void BinaryReader::f64_array(std::span<double> out) {
  if (!out.empty()) get(out.data(), out.size_bytes());
}

void BinaryReader::bytes(std::span<char> out) {
  if (!out.empty()) get(out.data(), out.size());
}

void BinaryReader::version(std::uint32_t expect, std::string_view what) {
  std::uint64_t at = offset_;
  std::uint32_t got = u32();
  if (got != expect)
    throw FormatError("'" + path_ + "': unsupported " + std::string(what) +
                          " version " + std::to_string(got) + ", expected " +
                          std::to_string(expect),
                      at);
}

void BinaryReader::expect_eof() {
  char c;
  in_.read(&c, 1);
  if (in_.gcount() != 0)
    throw FormatError("'" + path_ + "': trailing bytes after payload", offset_);
}

std::uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for hashing");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

}  // namespace xmodal
