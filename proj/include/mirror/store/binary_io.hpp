#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "mirror/core/error.hpp"

namespace mirror::store {

/// Little-endian native layout; every file starts with an 8-byte magic
/// and a u32 format version.
class BinaryWriter {
 public:
  BinaryWriter(const std::filesystem::path& path, std::string_view magic, std::uint32_t version);

  template <typename T>
  void put(const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  template <typename T>
  void put_array(const T* data, std::size_t count) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  }
  void put_string(std::string_view s);
  template <typename T>
  void put_vector(const std::vector<T>& v) {
    put<std::uint64_t>(v.size());
    put_array(v.data(), v.size());
  }
  /// Flushes and throws Error{IoError} if any write failed.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  /// Throws Error{IoError} when unreadable, Error{UnknownVersion} on a
  /// foreign magic or a version other than `version`.
  BinaryReader(const std::filesystem::path& path, std::string_view magic, std::uint32_t version);

  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    read(&value, sizeof(T));
    return value;
  }
  template <typename T>
  void get_array(T* data, std::size_t count) {
    static_assert(std::is_trivially_copyable_v<T>);
    read(data, count * sizeof(T));
  }
  std::string get_string();
  template <typename T>
  std::vector<T> get_vector() {
    const auto n = get<std::uint64_t>();
    check_remaining(n * sizeof(T));
    std::vector<T> v(n);
    get_array(v.data(), v.size());
    return v;
  }

 private:
  void read(void* data, std::size_t bytes);
  void check_remaining(std::uint64_t bytes);

  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
};

/// Matrix file: magic, version, u32 scalar width, u64 rows, u64 cols,
/// row-major data.
template <typename Scalar, int Cols, int Options>
void write_matrix(const std::filesystem::path& path, std::string_view magic, std::uint32_t version,
                  const Eigen::Matrix<Scalar, Eigen::Dynamic, Cols, Options>& m) {
  BinaryWriter w(path, magic, version);
  w.put<std::uint32_t>(sizeof(Scalar));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  w.put_array(rm.data(), static_cast<std::size_t>(rm.size()));
  w.close();
}

template <typename MatrixType>
MatrixType read_matrix(const std::filesystem::path& path, std::string_view magic, std::uint32_t version) {
  using Scalar = typename MatrixType::Scalar;
  BinaryReader r(path, magic, version);
  if (r.get<std::uint32_t>() != sizeof(Scalar))
    throw Error(ErrorCode::UnknownVersion, path.string() + ": unexpected scalar width");
  const auto rows = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  const auto cols = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  if (MatrixType::ColsAtCompileTime != Eigen::Dynamic && cols != MatrixType::ColsAtCompileTime)
    throw Error(ErrorCode::UnknownVersion, path.string() + ": unexpected column count");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  r.get_array(rm.data(), static_cast<std::size_t>(rm.size()));
  return rm;
}

/// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
/// Writes via a sibling temporary and rename.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace mirror::store
