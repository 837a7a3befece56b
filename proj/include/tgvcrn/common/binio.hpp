#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tgvcrn::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

// Raw little-endian blobs. Writers overwrite; readers check the byte count.
void write_f64(const std::filesystem::path& path, std::span<const double> values);
void write_f32(const std::filesystem::path& path, std::span<const double> values);
void write_u8(const std::filesystem::path& path, std::span<const std::uint8_t> values);
void write_i32(const std::filesystem::path& path, std::span<const std::int32_t> values);

std::vector<double> read_f64(const std::filesystem::path& path, std::size_t count);
std::vector<double> read_f32(const std::filesystem::path& path, std::size_t count);
std::vector<std::uint8_t> read_u8(const std::filesystem::path& path, std::size_t count);
std::vector<std::int32_t> read_i32(const std::filesystem::path& path, std::size_t count);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// Shortest decimal text that round-trips a double.
std::string format_double(double v);

}  // namespace tgvcrn::io
