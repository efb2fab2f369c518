#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>

#include "xmodal/errors.hpp"

namespace xmodal {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

// Little-endian binary stream writer for the project's file formats.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path);

  void magic(std::string_view tag);  // exactly 4 bytes
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void f64_array(std::span<const double> v);
  void bytes(std::span<const char> v);

  std::uint64_t offset() const noexcept { return offset_; }
  void close();

 private:
  void put(const void* p, std::size_t n);

  std::ofstream out_;
  std::string path_;
  std::uint64_t offset_ = 0;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);

  void magic(std::string_view expect);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void f64_array(std::span<double> out);
  void bytes(std::span<char> out);

  // Reads a u32 version field and rejects anything but `expect`.
  void version(std::uint32_t expect, std::string_view what);

  std::uint64_t offset() const noexcept { return offset_; }
  void expect_eof();

 private:
  void get(void* p, std::size_t n);

  std::ifstream in_;
  std::string path_;
  std::uint64_t offset_ = 0;
};

// FNV-1a over a whole file, used for dataset fingerprints in run manifests.
std::uint64_t fnv1a_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

}  // namespace xmodal
