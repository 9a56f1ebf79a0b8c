#pragma once

// Little-endian primitives for the dataset and checkpoint containers.

#include <bit>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nicon {

static_assert(std::endian::native == std::endian::little, "containers assume a little-endian host");

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}
  void bytes(const void* p, std::size_t n);
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u16(std::uint16_t v) { bytes(&v, 2); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void f64s(std::span<const double> v) { bytes(v.data(), v.size() * sizeof(double)); }

 private:
  std::ostream& os_;
};

// Every read throws DataError when the stream ends early.
class BinaryReader {
 public:
  explicit BinaryReader(std::istream& is) : is_(is) {}
  void bytes(void* p, std::size_t n);
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void f64s(std::span<double> out) { bytes(out.data(), out.size() * sizeof(double)); }
  bool at_end();

 private:
  std::istream& is_;
};

// FNV-1a 64-bit hash, used for manifest content hashes.
std::uint64_t fnv1a(std::span<const std::uint8_t> data, std::uint64_t h = 0xcbf29ce484222325ULL);
// Hash of a file's bytes; throws DataError when it cannot be read.
std::uint64_t hash_file(const std::string& path);
std::string hex64(std::uint64_t v);

}  // namespace nicon
