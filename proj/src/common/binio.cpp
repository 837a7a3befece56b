#include "tgvcrn/common/binio.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::io {
namespace {

void write_bytes(const std::filesystem::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractError("cannot open for writing: " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw ContractError("write failed: " + path.string());
}

std::vector<char> read_bytes(const std::filesystem::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw ContractError("cannot open for reading: " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size != expected) {
    throw ContractError(path.string() + ": expected " + std::to_string(expected) +
                        " bytes, found " + std::to_string(size));
  }
  std::vector<char> bytes(size);
  in.seekg(0);
  in.read(bytes.data(), static_cast<std::streamsize>(size));
  return bytes;
}

}  // namespace

void write_f64(const std::filesystem::path& path, std::span<const double> values) {
  write_bytes(path, values.data(), values.size_bytes());
}

void write_f32(const std::filesystem::path& path, std::span<const double> values) {
  std::vector<float> narrow(values.begin(), values.end());
  write_bytes(path, narrow.data(), narrow.size() * sizeof(float));
}

void write_u8(const std::filesystem::path& path, std::span<const std::uint8_t> values) {
  write_bytes(path, values.data(), values.size_bytes());
}

void write_i32(const std::filesystem::path& path, std::span<const std::int32_t> values) {
  write_bytes(path, values.data(), values.size_bytes());
}

std::vector<double> read_f64(const std::filesystem::path& path, std::size_t count) {
  const auto bytes = read_bytes(path, count * sizeof(double));
  std::vector<double> out(count);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::vector<double> read_f32(const std::filesystem::path& path, std::size_t count) {
  const auto bytes = read_bytes(path, count * sizeof(float));
  std::vector<float> narrow(count);
  std::memcpy(narrow.data(), bytes.data(), bytes.size());
  return {narrow.begin(), narrow.end()};
}

std::vector<std::uint8_t> read_u8(const std::filesystem::path& path, std::size_t count) {
  const auto bytes = read_bytes(path, count);
  return {bytes.begin(), bytes.end()};
}

std::vector<std::int32_t> read_i32(const std::filesystem::path& path, std::size_t count) {
  const auto bytes = read_bytes(path, count * sizeof(std::int32_t));
  std::vector<std::int32_t> out(count);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, text.data(), text.size());
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot open for hashing: " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 15];
  }
  return hex;
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), end};
}

}  // namespace tgvcrn::io
